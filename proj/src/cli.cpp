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

#include "egap/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "egap/adapt.hpp"
#include "egap/container.hpp"
#include "egap/gap.hpp"
#include "egap/pmf.hpp"

namespace egap {
namespace {

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << text;
  if (!out) throw IoError("write failed on " + path.string());
}

double to_number(const std::string& token, const std::string& what) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &pos);
  } catch (const std::exception&) {
    throw ConfigError(what + ": bad number '" + token + "'");
  }
  if (pos != token.size()) throw ConfigError(what + ": bad number '" + token + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(item);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

struct Field {
  double lo = 0.0, hi = 0.0;
  bool spread = false;
};

Field parse_field(const std::string& token, const std::string& what) {
  Field f;
  const auto dots = token.find("..");
  if (dots == std::string::npos) {
    f.lo = f.hi = to_number(token, what);
  } else {
    f.lo = to_number(token.substr(0, dots), what);
    f.hi = to_number(token.substr(dots + 2), what);
    f.spread = true;
  }
  return f;
}

double field_at(const Field& f, double t, bool geometric, const std::string& what) {
  if (!f.spread) return f.lo;
  if (!geometric) return f.lo + (f.hi - f.lo) * t;
  if (!(f.lo > 0.0) || !(f.hi > 0.0))
    throw ConfigError(what + ": geometric spread needs positive endpoints");
  return f.lo * std::pow(f.hi / f.lo, t);
}

AdaptMethod method_from(const std::string& name) {
  if (name == "none") return AdaptMethod::None;
  if (name == "gmm") return AdaptMethod::Gmm;
  if (name == "zero-mean") return AdaptMethod::ZeroMean;
  if (name == "center-bin") return AdaptMethod::CenterBin;
  throw ConfigError("unknown method '" + name + "' (none | gmm | zero-mean | center-bin)");
}

std::string shape_text(const Shape& s) {
  return std::to_string(s.h) + "x" + std::to_string(s.w) + "x" + std::to_string(s.c);
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  uint64_t seed = 1;
  std::string shape;
  std::string true_desc;
  std::string learned_desc;
  double mismatch_scale = 1.0;
  double mismatch_mean = 0.0;
  std::string main_path;
  std::string tables_path;
  bool hyper = false;
  std::string side_path;
  std::string side_shape;
  std::string side_true = "gauss:1.0";
  std::string side_learned;
  ScaleSpec scales;
};

SynthSpec make_spec(uint64_t seed, const Shape& shape, const std::string& true_desc,
                    const std::string& learned_desc, double mscale, double mmean) {
  SynthSpec spec;
  spec.seed = seed;
  spec.shape = shape;
  spec.true_dist = parse_dists(true_desc, shape.c);
  if (!learned_desc.empty()) spec.learned_dist = parse_dists(learned_desc, shape.c);
  spec.mismatch_scale = mscale;
  spec.mismatch_mean = mmean;
  return spec;
}

void run_synth(const SynthArgs& a, std::ostream& out) {
  const Shape shape = parse_shape(a.shape);
  const SynthSpec spec = make_spec(a.seed, shape, a.true_desc, a.learned_desc,
                                   a.mismatch_scale, a.mismatch_mean);
  if (!a.hyper) {
    FactorizedSynth synth = synthesize_factorized(spec, Role::Main);
    save_latents(synth.tensor, nullptr, a.main_path);
    save_tables(synth.tables, a.tables_path);
    out << "wrote " << a.main_path << ": " << shape_text(shape) << " main latents ("
        << synth.tensor.symbols.size() << " symbols)\n";
    out << "wrote " << a.tables_path << ": " << synth.tables.size() << " channel tables\n";
    return;
  }

  if (a.side_path.empty()) throw ConfigError("--hyper needs --side for the side latents");
  const ScaleTable scale_table = a.scales.build();
  const HyperSynth hyper = synthesize_hyperprior_main(spec, scale_table);
  save_latents(hyper.main, &hyper.side_info, a.main_path);

  Shape side_shape;
  if (a.side_shape.empty()) {
    side_shape = Shape{(shape.h + 3) / 4, (shape.w + 3) / 4, shape.c};
  } else {
    side_shape = parse_shape(a.side_shape);
  }
  // The side stream gets its own seed so its draws never alias the main
  // stream's.
  const SynthSpec side_spec =
      make_spec(a.seed + 1, side_shape, a.side_true, a.side_learned, 1.0, 0.0);
  FactorizedSynth side = synthesize_factorized(side_spec, Role::Side);
  save_latents(side.tensor, nullptr, a.side_path);
  save_tables(side.tables, a.tables_path);

  out << "wrote " << a.main_path << ": " << shape_text(shape) << " main latents ("
      << hyper.main.symbols.size() << " symbols, with side info)\n";
  out << "wrote " << a.side_path << ": " << shape_text(side_shape) << " side latents ("
      << side.tensor.symbols.size() << " symbols)\n";
  out << "wrote " << a.tables_path << ": " << side.tables.size() << " channel tables\n";
}

// ------------------------------------------------------------ gap/encode

struct MethodArgs {
  std::string method = "auto";
  uint32_t k = 0;
  uint32_t top = uint32_t(-1);
};

MethodConfig resolve_method(const MethodArgs& a, uint32_t bits, const MethodConfig& fallback,
                            size_t table_count) {
  MethodConfig cfg = fallback;
  cfg.param_bits = bits;
  if (a.method != "auto") cfg.method = method_from(a.method);
  if (a.k != 0) cfg.k = a.k;
  if (a.top != uint32_t(-1)) cfg.top_tables = a.top;
  // A default T larger than the table set just means "every table".
  cfg.top_tables = std::min<uint32_t>(cfg.top_tables, static_cast<uint32_t>(table_count));
  return cfg;
}

struct GapArgs {
  std::string latents_path;
  std::string tables_path;
  std::string side_path;
  ScaleSpec scales;
  MethodArgs fact;
  MethodArgs main;
  uint32_t bits = 8;
  std::string csv_path;
};

struct Instance {
  LatentFile main_file;
  std::optional<LatentFile> side_file;
  std::vector<PmfTable> tables;
  bool hyper = false;
};

Instance load_instance(const std::string& latents_path, const std::string& tables_path,
                       const std::string& side_path) {
  Instance inst;
  inst.main_file = load_latents(latents_path);
  inst.tables = load_tables(tables_path);
  inst.hyper = inst.main_file.side.has_value();
  if (inst.hyper) {
    if (side_path.empty())
      throw ConfigError(latents_path + " carries side info; pass the side latents via --side");
    inst.side_file = load_latents(side_path);
  } else if (!side_path.empty()) {
    throw ConfigError(latents_path + " has no side info; --side does not apply");
  }
  return inst;
}

void run_gap(const GapArgs& a, std::ostream& out) {
  const Instance inst = load_instance(a.latents_path, a.tables_path, a.side_path);
  std::vector<ModelStats> stats;
  if (!inst.hyper) {
    const MethodConfig cfg = resolve_method(a.fact, a.bits, MethodConfig{}, inst.tables.size());
    const SymbolStream stream = factorized_stream(inst.main_file.tensor, inst.tables.size());
    const HistogramSet hist = histogram(stream, inst.tables);
    const AdaptationRecord record = select_tables(hist, inst.tables, cfg);
    stats.push_back(model_stats("factorized", hist, inst.tables, record));
  } else {
    const MethodConfig side_cfg = resolve_method(a.fact, a.bits, MethodConfig{}, inst.tables.size());
    const MethodConfig main_cfg = resolve_method(a.main, a.bits, MethodConfig{}, a.scales.count);
    const SymbolStream side_stream =
        factorized_stream(inst.side_file->tensor, inst.tables.size());
    const HistogramSet side_hist = histogram(side_stream, inst.tables);
    const AdaptationRecord side_record = select_tables(side_hist, inst.tables, side_cfg);
    stats.push_back(model_stats("side", side_hist, inst.tables, side_record));

    const ScaleTable scale_table = a.scales.build();
    const SymbolStream main_stream =
        hyperprior_stream(inst.main_file.tensor, *inst.main_file.side, scale_table);
    const HistogramSet main_hist = histogram(main_stream, scale_table.tables());
    const AdaptationRecord main_record =
        select_tables(main_hist, scale_table.tables(), main_cfg);
    stats.push_back(model_stats("main", main_hist, scale_table.tables(), main_record));
  }
  const GapReport report = build_report(stats);
  out << render_table(report);
  if (!a.csv_path.empty()) {
    write_text(a.csv_path, render_csv(report));
    out << "wrote " << a.csv_path << "\n";
  }
}

struct EncodeArgs {
  GapArgs common; // same inputs and method flags
  std::string out_path;
};

void run_encode(const EncodeArgs& e, std::ostream& out) {
  const GapArgs& a = e.common;
  const Instance inst = load_instance(a.latents_path, a.tables_path, a.side_path);
  Encoded enc;
  std::vector<ModelStats> stats;
  if (!inst.hyper) {
    const MethodConfig cfg =
        resolve_method(a.fact, a.bits, MethodConfig{AdaptMethod::Gmm, 2, 64, 8},
                       inst.tables.size());
    enc = encode_factorized_container(inst.main_file.tensor, inst.tables, cfg);
    stats.push_back(enc.stats.factorized_stats);
  } else {
    const MethodConfig side_cfg = resolve_method(
        a.fact, a.bits, MethodConfig{AdaptMethod::Gmm, 1, 32, 8}, inst.tables.size());
    const MethodConfig main_cfg = resolve_method(
        a.main, a.bits, MethodConfig{AdaptMethod::ZeroMean, 1, 32, 8}, a.scales.count);
    enc = encode_hyper_container(inst.main_file.tensor, *inst.main_file.side,
                                 inst.side_file->tensor, inst.tables, a.scales, side_cfg,
                                 main_cfg);
    stats.push_back(enc.stats.factorized_stats);
    stats.push_back(enc.stats.hyper_stats);
  }
  write_file(e.out_path, enc.bytes);
  const SectionSizes& sz = enc.stats.sizes;
  out << "wrote " << e.out_path << ": " << enc.bytes.size() << " bytes\n";
  out << "header bits: " << sz.header_bits << "\n";
  out << "signaling bits: " << sz.signal_bits << "\n";
  out << "parameter bits: " << sz.param_bits << "\n";
  out << "padding bits: " << sz.padding_bits << "\n";
  out << "side payload bits: " << sz.side_payload_bits << "\n";
  out << "main payload bits: " << sz.main_payload_bits << "\n";
  out << "ideal-bits ledger:\n" << render_table(build_report(stats));
}

// ---------------------------------------------------------------- decode

struct DecodeArgs {
  std::string in_path;
  std::string tables_path;
  std::string out_path;
  std::string side_info_path;
  std::string side_out_path;
  std::string verify_path;
  std::string verify_side_path;
};

int run_decode(const DecodeArgs& a, std::ostream& out, std::ostream& err) {
  const auto bytes = read_file(a.in_path);
  const auto tables = load_tables(a.tables_path);
  SideInfo side_store;
  const SideInfo* side_info = nullptr;
  if (!a.side_info_path.empty()) {
    LatentFile f = load_latents(a.side_info_path);
    if (!f.side) throw ConfigError(a.side_info_path + " carries no side info");
    side_store = std::move(*f.side);
    side_info = &side_store;
  }
  const Decoded dec = decode_container(bytes, tables, side_info);
  if (!a.out_path.empty()) {
    save_latents(dec.main, side_info, a.out_path);
    out << "wrote " << a.out_path << ": " << shape_text(dec.main.shape) << " main latents ("
        << dec.main.symbols.size() << " symbols)\n";
  }
  if (!a.side_out_path.empty()) {
    if (!dec.side) throw ConfigError("container has no side stream for --side-out");
    save_latents(*dec.side, nullptr, a.side_out_path);
    out << "wrote " << a.side_out_path << ": " << shape_text(dec.side->shape)
        << " side latents (" << dec.side->symbols.size() << " symbols)\n";
  }
  if (!a.verify_path.empty()) {
    const LatentFile orig = load_latents(a.verify_path);
    if (orig.tensor.shape != dec.main.shape || orig.tensor.symbols != dec.main.symbols) {
      err << "verify failed: main symbols differ from " << a.verify_path << "\n";
      return 1;
    }
  }
  if (!a.verify_side_path.empty()) {
    if (!dec.side) {
      err << "verify failed: container has no side stream\n";
      return 1;
    }
    const LatentFile orig = load_latents(a.verify_side_path);
    if (orig.tensor.shape != dec.side->shape || orig.tensor.symbols != dec.side->symbols) {
      err << "verify failed: side symbols differ from " << a.verify_side_path << "\n";
      return 1;
    }
  }
  if (!a.verify_path.empty() || !a.verify_side_path.empty()) out << "OK, lossless\n";
  return 0;
}

// ----------------------------------------------------------------- bench

struct BenchArgs {
  uint64_t seed = 1;
  std::string shape = "32x32x16";
  std::string true_desc = "gauss:0.5..4.0";
  std::vector<double> mismatch = {1.0, 1.25, 1.5, 2.0};
  std::vector<std::string> methods = {"none", "gmm:2", "zero-mean", "center-bin"};
  uint32_t top = 0;
  uint32_t bits = 8;
  std::string csv_path;
};

void run_bench(const BenchArgs& a, std::ostream& out) {
  const Shape shape = parse_shape(a.shape);
  std::string csv =
      "mismatch,method,k,top,bits,learned_bits,gap_percent,gain_percent,"
      "param_bits,signal_bits,runtime_ms\n";
  for (double m : a.mismatch) {
    SynthSpec spec;
    spec.seed = a.seed;
    spec.shape = shape;
    spec.true_dist = parse_dists(a.true_desc, shape.c);
    spec.mismatch_scale = m;
    const FactorizedSynth synth = synthesize_factorized(spec, Role::Main);
    const SymbolStream stream = factorized_stream(synth.tensor, synth.tables.size());
    const HistogramSet hist = histogram(stream, synth.tables);
    for (const std::string& entry : a.methods) {
      MethodConfig cfg;
      const auto colon = entry.find(':');
      const std::string name = entry.substr(0, colon);
      cfg.method = method_from(name);
      cfg.k = cfg.method == AdaptMethod::Gmm ? 2 : 1;
      if (colon != std::string::npos)
        cfg.k = static_cast<uint32_t>(to_number(entry.substr(colon + 1), "--methods k"));
      cfg.top_tables = std::min<uint32_t>(a.top == 0 ? uint32_t(synth.tables.size())
                                               : a.top,
                                    uint32_t(synth.tables.size()));
      cfg.param_bits = a.bits;
      const auto t0 = std::chrono::steady_clock::now();
      const AdaptationRecord record = select_tables(hist, synth.tables, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      const ModelStats st = model_stats(name, hist, synth.tables, record);
      const double gap_pct =
          st.learned_bits > 0.0 ? (st.learned_bits - st.optimal_bits) / st.learned_bits * 100.0
                                : 0.0;
      const double gain_bits =
          st.learned_bits - st.adapted_bits - st.param_bits - st.signal_bits;
      const double gain_pct = st.learned_bits > 0.0 ? gain_bits / st.learned_bits * 100.0 : 0.0;
      csv += fmt("%.6g", m);
      csv += "," + name + "," + std::to_string(cfg.k) + "," + std::to_string(cfg.top_tables) +
             "," + std::to_string(cfg.param_bits);
      csv += "," + fmt("%.6f", st.learned_bits);
      csv += "," + fmt("%.4f", gap_pct);
      csv += "," + fmt("%.4f", gain_pct);
      csv += "," + fmt("%.0f", st.param_bits);
      csv += "," + fmt("%.0f", st.signal_bits);
      csv += "," + fmt("%.3f", ms);
      csv += "\n";
    }
  }
  if (a.csv_path.empty()) {
    out << csv;
  } else {
    write_text(a.csv_path, csv);
    out << "wrote " << a.csv_path << "\n";
  }
}

void add_method_flags(CLI::App* cmd, MethodArgs& fact, MethodArgs* main, uint32_t& bits) {
  cmd->add_option("--method", fact.method,
                  "factorized-stream method: none | gmm | zero-mean | center-bin");
  cmd->add_option("--k", fact.k, "mixture components for --method gmm");
  cmd->add_option("--top", fact.top, "targeted table count T (0 = every table)");
  if (main != nullptr) {
    cmd->add_option("--main-method", main->method, "conditional-stream method");
    cmd->add_option("--main-k", main->k, "mixture components for --main-method gmm");
    cmd->add_option("--main-top", main->top, "targeted tables for the conditional stream");
  }
  cmd->add_option("--bits", bits, "parameter grid bit depth b")->check(CLI::Range(1, 16));
}

void add_scale_flags(CLI::App* cmd, ScaleSpec& scales) {
  cmd->add_option("--scales", scales.count, "conditional scale count");
  cmd->add_option("--sigma-min", scales.sigma_min, "smallest conditional scale");
  cmd->add_option("--sigma-max", scales.sigma_max, "largest conditional scale");
}

} // namespace

Shape parse_shape(const std::string& text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 3) throw ConfigError("shape '" + text + "' is not HxWxC");
  uint32_t dims[3];
  for (int i = 0; i < 3; ++i) {
    const double v = to_number(parts[i], "shape");
    if (v < 1 || v > 65536 || v != std::floor(v))
      throw ConfigError("shape '" + text + "' needs integer fields in [1, 65536]");
    dims[i] = static_cast<uint32_t>(v);
  }
  return Shape{dims[0], dims[1], dims[2]};
}

std::vector<ChannelDist> parse_dists(const std::string& text, uint32_t channels) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("distribution '" + text + "' is missing the family prefix");
  const std::string family = text.substr(0, colon);
  const auto fields = split(text.substr(colon + 1), ',');

  DistFamily fam;
  size_t want_lo = 0, want_hi = 0;
  if (family == "gauss") {
    fam = DistFamily::Gaussian;
    want_lo = 1;
    want_hi = 2;
  } else if (family == "laplace") {
    fam = DistFamily::Laplacian;
    want_lo = 1;
    want_hi = 2;
  } else if (family == "mix2") {
    fam = DistFamily::Mixture2;
    want_lo = 5;
    want_hi = 5;
  } else {
    throw ConfigError("unknown family '" + family + "' (gauss | laplace | mix2)");
  }
  if (fields.size() < want_lo || fields.size() > want_hi)
    throw ConfigError("distribution '" + text + "' has the wrong field count");

  std::vector<Field> parsed;
  parsed.reserve(fields.size());
  bool any_spread = false;
  for (const auto& f : fields) {
    parsed.push_back(parse_field(f, "distribution '" + text + "'"));
    any_spread = any_spread || parsed.back().spread;
  }
  const uint32_t n = any_spread ? channels : 1;
  if (n == 0) throw ConfigError("channel count is zero");

  std::vector<ChannelDist> dists;
  dists.reserve(n);
  const std::string what = "distribution '" + text + "'";
  for (uint32_t ch = 0; ch < n; ++ch) {
    const double t = n <= 1 ? 0.0 : double(ch) / double(n - 1);
    ChannelDist d;
    d.family = fam;
    if (fam == DistFamily::Mixture2) {
      d.mean = field_at(parsed[0], t, false, what);
      d.sigma = field_at(parsed[1], t, true, what);
      d.mean2 = field_at(parsed[2], t, false, what);
      d.sigma2 = field_at(parsed[3], t, true, what);
      d.weight2 = field_at(parsed[4], t, false, what);
    } else if (parsed.size() == 2) {
      d.mean = field_at(parsed[0], t, false, what);
      d.sigma = field_at(parsed[1], t, true, what);
    } else {
      d.sigma = field_at(parsed[0], t, true, what);
    }
    d.validate();
    dists.push_back(d);
  }
  return dists;
}

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"amortization-gap toolkit for learned-compression entropy models"};
  app.require_subcommand(1);
  int rc = 0;

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "synthesize latents and learned tables");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--shape", synth.shape, "main tensor HxWxC")->required();
  synth_cmd->add_option("--true", synth.true_desc, "true per-channel distribution")->required();
  synth_cmd->add_option("--learned", synth.learned_desc,
                        "learned prior (defaults to true adjusted by the mismatch knobs)");
  synth_cmd->add_option("--mismatch-scale", synth.mismatch_scale,
                        "learned sigma = true sigma * this");
  synth_cmd->add_option("--mismatch-mean", synth.mismatch_mean,
                        "learned mean = true mean + this");
  synth_cmd->add_option("--main", synth.main_path, "output main latent file")->required();
  synth_cmd->add_option("--tables", synth.tables_path, "output channel-table file")->required();
  synth_cmd->add_flag("--hyper", synth.hyper, "two-stream instance with side info");
  synth_cmd->add_option("--side", synth.side_path, "output side latent file (with --hyper)");
  synth_cmd->add_option("--side-shape", synth.side_shape,
                        "side tensor HxWxC (default ceil(H/4) x ceil(W/4) x C)");
  synth_cmd->add_option("--side-true", synth.side_true, "side true distribution");
  synth_cmd->add_option("--side-learned", synth.side_learned, "side learned prior");
  add_scale_flags(synth_cmd, synth.scales);
  synth_cmd->callback([&] { run_synth(synth, out); });

  GapArgs gap;
  auto* gap_cmd = app.add_subcommand("gap", "measure amortization gaps and report");
  gap_cmd->add_option("--latents", gap.latents_path, "main latent file")->required();
  gap_cmd->add_option("--tables", gap.tables_path, "channel-table file")->required();
  gap_cmd->add_option("--side", gap.side_path, "side latent file (two-stream instances)");
  add_scale_flags(gap_cmd, gap.scales);
  gap.fact.method = "none";
  gap.main.method = "none";
  add_method_flags(gap_cmd, gap.fact, &gap.main, gap.bits);
  gap_cmd->add_option("--csv", gap.csv_path, "also write the report as CSV");
  gap_cmd->callback([&] { run_gap(gap, out); });

  EncodeArgs enc;
  auto* enc_cmd = app.add_subcommand("encode", "entropy-code latents into a container");
  enc_cmd->add_option("--latents", enc.common.latents_path, "main latent file")->required();
  enc_cmd->add_option("--tables", enc.common.tables_path, "channel-table file")->required();
  enc_cmd->add_option("--side", enc.common.side_path, "side latent file");
  enc_cmd->add_option("--out", enc.out_path, "output container")->required();
  add_scale_flags(enc_cmd, enc.common.scales);
  add_method_flags(enc_cmd, enc.common.fact, &enc.common.main, enc.common.bits);
  enc_cmd->callback([&] { run_encode(enc, out); });

  DecodeArgs dec;
  auto* dec_cmd = app.add_subcommand("decode", "decode a container back to latents");
  dec_cmd->add_option("--in", dec.in_path, "container file")->required();
  dec_cmd->add_option("--tables", dec.tables_path, "channel-table file")->required();
  dec_cmd->add_option("--out", dec.out_path, "output main latent file");
  dec_cmd->add_option("--side-info", dec.side_info_path,
                      "latent file whose side info feeds the conditional stream");
  dec_cmd->add_option("--side-out", dec.side_out_path, "output side latent file");
  dec_cmd->add_option("--verify", dec.verify_path, "compare decoded main latents to this file");
  dec_cmd->add_option("--verify-side", dec.verify_side_path,
                      "compare decoded side latents to this file");
  dec_cmd->callback([&] { rc = run_decode(dec, out, err); });

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "sweep mismatch levels and methods to CSV");
  bench_cmd->add_option("--seed", bench.seed, "RNG seed");
  bench_cmd->add_option("--shape", bench.shape, "tensor HxWxC");
  bench_cmd->add_option("--true", bench.true_desc, "true per-channel distribution");
  bench_cmd->add_option("--mismatch", bench.mismatch, "scale-mismatch factors")
      ->delimiter(',');
  bench_cmd->add_option("--methods", bench.methods, "method list, gmm takes :K")
      ->delimiter(',');
  bench_cmd->add_option("--top", bench.top, "targeted table count T (0 = every table)");
  bench_cmd->add_option("--bits", bench.bits, "parameter grid bit depth b")
      ->check(CLI::Range(1, 16));
  bench_cmd->add_option("--csv", bench.csv_path, "output CSV path (default: stdout)");
  bench_cmd->set_config("--config", "", "read sweep flags from a config file");
  bench_cmd->callback([&] { run_bench(bench, out); });

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

} // namespace egap
