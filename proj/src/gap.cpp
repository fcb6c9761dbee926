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

#include "egap/gap.hpp"

#include <cmath>
#include <cstdio>

namespace egap {

HistogramSet histogram(const SymbolStream& stream, std::span<const PmfTable> tables) {
  HistogramSet hist;
  hist.counts.resize(tables.size());
  hist.totals.assign(tables.size(), 0);
  for (size_t t = 0; t < tables.size(); ++t) hist.counts[t].assign(tables[t].size(), 0);
  for (size_t i = 0; i < stream.symbols.size(); ++i) {
    uint32_t t = stream.table_of[i];
    if (t >= tables.size())
      throw ConfigError("histogram: table index " + std::to_string(t) + " out of range");
    int32_t sym = stream.symbols[i];
    if (!tables[t].contains(sym))
      throw CodingError("histogram: symbol " + std::to_string(sym) + " outside support of table " +
                        to_string(tables[t].label()));
    ++hist.counts[t][static_cast<size_t>(int64_t(sym) - tables[t].support_min())];
    ++hist.totals[t];
    ++hist.grand_total;
  }
  return hist;
}

double empirical_entropy_bits(std::span<const int64_t> counts) {
  int64_t n = 0;
  for (int64_t c : counts) {
    if (c < 0) throw ConfigError("entropy: negative count");
    n += c;
  }
  if (n == 0) return 0.0;
  double bits = 0.0;
  for (int64_t c : counts)
    if (c > 0)
      bits += static_cast<double>(c) *
              std::log2(static_cast<double>(n) / static_cast<double>(c));
  return bits;
}

GapBits gap_bits(const HistogramSet& hist, std::span<const PmfTable> tables) {
  if (hist.counts.size() != tables.size())
    throw ConfigError("gap_bits: histogram not aligned with tables");
  GapBits out;
  out.tables.resize(tables.size());
  for (size_t t = 0; t < tables.size(); ++t) {
    TableGap& g = out.tables[t];
    g.learned_bits = ideal_bits_for_counts(tables[t], hist.counts[t]);
    g.optimal_bits = empirical_entropy_bits(hist.counts[t]);
    out.learned_total += g.learned_bits;
    out.optimal_total += g.optimal_bits;
  }
  return out;
}

GapBits gap_bits(const SymbolStream& stream, std::span<const PmfTable> tables) {
  return gap_bits(histogram(stream, tables), tables);
}

GapReport build_report(std::span<const ModelStats> models) {
  if (models.empty()) throw ConfigError("report: no models");
  GapReport report;
  double total = 0.0;
  for (const auto& m : models) {
    if (m.learned_bits < 0 || m.optimal_bits < 0)
      throw ConfigError("report: negative bit count for model " + m.name);
    total += m.learned_bits;
  }
  if (!(total > 0.0)) throw ConfigError("report: zero total bits");
  report.total_learned_bits = total;
  for (const auto& m : models) {
    ReportRow row;
    row.name = m.name;
    row.learned_bits = m.learned_bits;
    row.gap_bits = m.learned_bits - m.optimal_bits;
    row.gain_bits = m.learned_bits - m.adapted_bits - m.param_bits - m.signal_bits;
    row.share_percent = 100.0 * m.learned_bits / total;
    row.gap_percent = m.learned_bits > 0.0 ? 100.0 * row.gap_bits / m.learned_bits : 0.0;
    row.gain_percent = m.learned_bits > 0.0 ? 100.0 * row.gain_bits / m.learned_bits : 0.0;
    report.total_gap_bits += row.gap_bits;
    report.total_gain_bits += row.gain_bits;
    report.rows.push_back(std::move(row));
  }
  report.total_gap_percent = 100.0 * report.total_gap_bits / total;
  report.total_gain_percent = 100.0 * report.total_gain_bits / total;
  return report;
}

namespace {

std::string row_text(const std::string& name, double share, double gap, double gain,
                     double learned, double gap_b, double gain_b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %7.2f %7.2f %7.2f %16.1f %14.1f %14.1f\n", name.c_str(),
                share, gap, gain, learned, gap_b, gain_b);
  return buf;
}

} // namespace

std::string render_table(const GapReport& report) {
  std::string out;
  char head[160];
  std::snprintf(head, sizeof head, "%-12s %7s %7s %7s %16s %14s %14s\n", "model", "share%",
                "gap%", "gain%", "learned-bits", "gap-bits", "gain-bits");
  out += head;
  for (const auto& r : report.rows)
    out += row_text(r.name, r.share_percent, r.gap_percent, r.gain_percent, r.learned_bits,
                    r.gap_bits, r.gain_bits);
  out += row_text("total", 100.0, report.total_gap_percent, report.total_gain_percent,
                  report.total_learned_bits, report.total_gap_bits, report.total_gain_bits);
  return out;
}

std::string render_csv(const GapReport& report) {
  std::string out = "model,share_percent,gap_percent,gain_percent,learned_bits,gap_bits,gain_bits\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.4f,%.6f,%.6f,%.6f\n", r.name.c_str(),
                  r.share_percent, r.gap_percent, r.gain_percent, r.learned_bits, r.gap_bits,
                  r.gain_bits);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "total,%.4f,%.4f,%.4f,%.6f,%.6f,%.6f\n", 100.0,
                report.total_gap_percent, report.total_gain_percent, report.total_learned_bits,
                report.total_gap_bits, report.total_gain_bits);
  out += buf;
  return out;
}

} // namespace egap
