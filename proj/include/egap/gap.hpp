/* Copyright 2026 the egap authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef EGAP_GAP_HPP
#define EGAP_GAP_HPP

#include <span>
#include <string>
#include <vector>

#include "egap/pmf.hpp"

namespace egap {

/// Per-table symbol counts, each aligned with its table's support.
struct HistogramSet {
  std::vector<std::vector<int64_t>> counts;
  std::vector<int64_t> totals;
  int64_t grand_total = 0;
};

HistogramSet histogram(const SymbolStream& stream, std::span<const PmfTable> tables);

struct TableGap {
  double learned_bits = 0.0; // ideal cost under the learned table
  double optimal_bits = 0.0; // cost under the empirical pmf of this stream
  double gap() const { return learned_bits - optimal_bits; }
};

struct GapBits {
  std::vector<TableGap> tables;
  double learned_total = 0.0;
  double optimal_total = 0.0;
  double gap_total() const { return learned_total - optimal_total; }
};

/// learned_bits is sum count * -log2 p; optimal_bits is sum over occupied
/// bins of count * log2(n / count), i.e. the empirical entropy times n.
/// Empty bins contribute nothing. The per-table gap is never negative.
GapBits gap_bits(const HistogramSet& hist, std::span<const PmfTable> tables);
GapBits gap_bits(const SymbolStream& stream, std::span<const PmfTable> tables);

/// n * H(empirical) in bits for one count vector.
double empirical_entropy_bits(std::span<const int64_t> counts);

/// One entropy model's ideal-bits ledger, before and after adaptation.
/// adapted_bits equals learned_bits when nothing was replaced.
struct ModelStats {
  std::string name;
  double learned_bits = 0.0;
  double optimal_bits = 0.0;
  double adapted_bits = 0.0;
  double param_bits = 0.0;  // transmitted parameter payload
  double signal_bits = 0.0; // one bit per targeted table
};

struct ReportRow {
  std::string name;
  double share_percent = 0.0; // of the baseline total
  double gap_percent = 0.0;   // gap / learned
  double gain_percent = 0.0;  // (learned - adapted - params - signal) / learned
  double learned_bits = 0.0;
  double gap_bits = 0.0;
  double gain_bits = 0.0;
};

struct GapReport {
  std::vector<ReportRow> rows;
  double total_learned_bits = 0.0;
  double total_gap_bits = 0.0;
  double total_gain_bits = 0.0;
  double total_gap_percent = 0.0;
  double total_gain_percent = 0.0;
};

/// Combines per-model ledgers into shares and percentages. Throws
/// ConfigError when the total learned bits are zero.
GapReport build_report(std::span<const ModelStats> models);

/// Fixed-width human table; percentages at 0.01 resolution.
std::string render_table(const GapReport& report);
/// One CSV row per model plus a total row.
std::string render_csv(const GapReport& report);

} // namespace egap

#endif
