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

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "egap/cli.hpp"
#include "egap/latent.hpp"
#include "egap/pmf.hpp"
#include "helpers.hpp"

using namespace egap;

namespace {

struct CliResult {
  int rc = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.rc = run_cli(std::move(args), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

} // namespace

TEST_CASE("synth is deterministic in its seed") {
  testing::TempDir dir;
  auto args = [&](const std::string& tag) {
    return std::vector<std::string>{
        "synth",           "--seed",   "5",
        "--shape",         "8x8x4",    "--true",
        "gauss:0.5..2.0",  "--mismatch-scale", "1.3",
        "--main",          dir.file("m" + tag + ".latb").string(),
        "--tables",        dir.file("t" + tag + ".pmft").string()};
  };
  CliResult a = run(args("a"));
  REQUIRE(a.rc == 0);
  CHECK(a.out.find("wrote") != std::string::npos);
  CliResult b = run(args("b"));
  REQUIRE(b.rc == 0);
  CHECK(testing::read_bytes(dir.file("ma.latb")) == testing::read_bytes(dir.file("mb.latb")));
  CHECK(testing::read_bytes(dir.file("ta.pmft")) == testing::read_bytes(dir.file("tb.pmft")));

  LatentFile f = load_latents(dir.file("ma.latb"));
  CHECK(f.tensor.shape == Shape{8, 8, 4});
  CHECK(!f.side.has_value());
  CHECK(load_tables(dir.file("ta.pmft")).size() == 4);
}

TEST_CASE("synth builds a two-stream instance") {
  testing::TempDir dir;
  CliResult r = run({"synth", "--seed", "3", "--shape", "8x8x2", "--true", "gauss:0.6..2.4",
                     "--mismatch-scale", "1.4", "--hyper",
                     "--main", dir.file("m.latb").string(),
                     "--side", dir.file("s.latb").string(),
                     "--tables", dir.file("t.pmft").string()});
  REQUIRE(r.rc == 0);
  LatentFile main = load_latents(dir.file("m.latb"));
  REQUIRE(main.side.has_value());
  CHECK(main.side->scales.size() == main.tensor.shape.volume());
  LatentFile side = load_latents(dir.file("s.latb"));
  CHECK(side.tensor.role == Role::Side);
  CHECK(side.tensor.shape == Shape{2, 2, 2}); // ceil(h/4) x ceil(w/4) x c
  CHECK(load_tables(dir.file("t.pmft")).size() == 2);
}

TEST_CASE("cli rejects malformed requests with a nonzero exit") {
  testing::TempDir dir;
  std::string m = dir.file("m.latb").string();
  std::string t = dir.file("t.pmft").string();
  CHECK(run({"frobnicate"}).rc != 0);
  CHECK(run({"synth", "--shape", "8x8x2"}).rc != 0); // missing required flags
  CHECK(run({"synth", "--shape", "0x8x2", "--true", "gauss:1", "--main", m, "--tables", t})
            .rc != 0);
  CHECK(run({"synth", "--shape", "8x8", "--true", "gauss:1", "--main", m, "--tables", t}).rc !=
        0);
  CHECK(run({"synth", "--shape", "8x8x2", "--true", "gauss:-1", "--main", m, "--tables", t})
            .rc != 0);
  CHECK(run({"synth", "--shape", "8x8x2", "--true", "mix2:1,2", "--main", m, "--tables", t})
            .rc != 0);
  CHECK(run({"synth", "--shape", "8x8x2", "--true", "gauss:1", "--hyper", "--main", m,
             "--tables", t})
            .rc != 0); // --hyper without --side
  CliResult bad = run({"synth", "--shape", "8x8x2", "--true", "pareto:1", "--main", m,
                       "--tables", t});
  CHECK(bad.rc != 0);
  CHECK(!bad.err.empty());
}

TEST_CASE("gap reports the factorized model and writes csv") {
  testing::TempDir dir;
  REQUIRE(run({"synth", "--seed", "7", "--shape", "12x12x3", "--true", "gauss:0.7..2.1",
               "--mismatch-scale", "1.5", "--main", dir.file("m.latb").string(), "--tables",
               dir.file("t.pmft").string()})
              .rc == 0);
  CliResult r = run({"gap", "--latents", dir.file("m.latb").string(), "--tables",
                     dir.file("t.pmft").string(), "--csv", dir.file("g.csv").string()});
  REQUIRE(r.rc == 0);
  CHECK(r.out.find("factorized") != std::string::npos);
  CHECK(r.out.find("total") != std::string::npos);

  auto rows = parse_csv(dir.file("g.csv").string());
  REQUIRE(rows.size() == 3); // header, factorized, total
  CHECK(rows[0][0] == "model");
  CHECK(rows[1][0] == "factorized");
  CHECK(rows[2][0] == "total");
  double gap_pct = std::stod(rows[1][2]);
  CHECK(gap_pct >= 0.0);
  CHECK(gap_pct <= 100.0);
}

TEST_CASE("gap on a two-stream instance needs and uses the side file") {
  testing::TempDir dir;
  REQUIRE(run({"synth", "--seed", "9", "--shape", "8x8x2", "--true", "gauss:0.8..1.6",
               "--mismatch-scale", "1.3", "--hyper", "--main", dir.file("m.latb").string(),
               "--side", dir.file("s.latb").string(), "--tables",
               dir.file("t.pmft").string()})
              .rc == 0);
  CHECK(run({"gap", "--latents", dir.file("m.latb").string(), "--tables",
             dir.file("t.pmft").string()})
            .rc != 0);
  CliResult r = run({"gap", "--latents", dir.file("m.latb").string(), "--side",
                     dir.file("s.latb").string(), "--tables", dir.file("t.pmft").string()});
  REQUIRE(r.rc == 0);
  CHECK(r.out.find("side") != std::string::npos);
  CHECK(r.out.find("main") != std::string::npos);
}

TEST_CASE("encode and decode round trip through the container file") {
  testing::TempDir dir;
  std::string m = dir.file("m.latb").string();
  std::string t = dir.file("t.pmft").string();
  REQUIRE(run({"synth", "--seed", "11", "--shape", "12x12x3", "--true", "gauss:0.6..2.0",
               "--mismatch-scale", "1.4", "--main", m, "--tables", t})
              .rc == 0);
  CliResult enc = run({"encode", "--latents", m, "--tables", t, "--method", "gmm", "--k", "1",
                       "--out", dir.file("c.egap").string()});
  REQUIRE(enc.rc == 0);
  CHECK(enc.out.find("wrote") != std::string::npos);
  CHECK(enc.out.find("ideal-bits ledger") != std::string::npos);

  CliResult dec = run({"decode", "--in", dir.file("c.egap").string(), "--tables", t, "--out",
                       dir.file("d.latb").string(), "--verify", m});
  REQUIRE(dec.rc == 0);
  CHECK(dec.out.find("OK, lossless") != std::string::npos);
  LatentFile round = load_latents(dir.file("d.latb"));
  LatentFile orig = load_latents(m);
  CHECK(round.tensor.symbols == orig.tensor.symbols);
}

TEST_CASE("two-stream encode and decode round trip") {
  testing::TempDir dir;
  std::string m = dir.file("m.latb").string();
  std::string s = dir.file("s.latb").string();
  std::string t = dir.file("t.pmft").string();
  REQUIRE(run({"synth", "--seed", "13", "--shape", "12x12x2", "--true", "gauss:0.7..2.2",
               "--mismatch-scale", "1.4", "--hyper", "--main", m, "--side", s, "--tables", t})
              .rc == 0);
  CliResult enc = run({"encode", "--latents", m, "--side", s, "--tables", t, "--out",
                       dir.file("c.egap").string()});
  REQUIRE(enc.rc == 0);
  CliResult dec = run({"decode", "--in", dir.file("c.egap").string(), "--tables", t,
                       "--side-info", m, "--verify", m, "--verify-side", s});
  CHECK(dec.rc == 0);
  CHECK(dec.out.find("OK, lossless") != std::string::npos);
}

TEST_CASE("verification failures and wrong inputs exit nonzero") {
  testing::TempDir dir;
  std::string m = dir.file("m.latb").string();
  std::string t = dir.file("t.pmft").string();
  REQUIRE(run({"synth", "--seed", "15", "--shape", "10x10x2", "--true", "gauss:0.9",
               "--mismatch-scale", "1.2", "--main", m, "--tables", t})
              .rc == 0);
  // same spec, different seed: same tables, different symbols
  std::string m2 = dir.file("m2.latb").string();
  REQUIRE(run({"synth", "--seed", "16", "--shape", "10x10x2", "--true", "gauss:0.9",
               "--mismatch-scale", "1.2", "--main", m2, "--tables",
               dir.file("t_same.pmft").string()})
              .rc == 0);
  // different true dist: tables with different supports
  std::string t2 = dir.file("t2.pmft").string();
  REQUIRE(run({"synth", "--seed", "15", "--shape", "10x10x2", "--true", "gauss:2.3",
               "--mismatch-scale", "1.2", "--main", dir.file("m3.latb").string(), "--tables",
               t2})
              .rc == 0);
  REQUIRE(run({"encode", "--latents", m, "--tables", t, "--out",
               dir.file("c.egap").string()})
              .rc == 0);

  CliResult wrong = run({"decode", "--in", dir.file("c.egap").string(), "--tables", t,
                         "--verify", m2});
  CHECK(wrong.rc != 0);
  CHECK(wrong.err.find("verify failed") != std::string::npos);

  // decoding against unrelated tables must not silently succeed
  CliResult badt = run({"decode", "--in", dir.file("c.egap").string(), "--tables", t2,
                        "--verify", m});
  CHECK(badt.rc != 0);
}

TEST_CASE("an empty latent file is rejected cleanly") {
  testing::TempDir dir;
  std::ofstream(dir.file("empty.latb")).close();
  std::string t = dir.file("t.pmft").string();
  REQUIRE(run({"synth", "--seed", "17", "--shape", "4x4x2", "--true", "gauss:1", "--main",
               dir.file("m.latb").string(), "--tables", t})
              .rc == 0);
  CliResult r = run({"gap", "--latents", dir.file("empty.latb").string(), "--tables", t});
  CHECK(r.rc != 0);
  CHECK(!r.err.empty());
}

TEST_CASE("bench sweeps mismatch levels into a csv") {
  testing::TempDir dir;
  std::string csv = dir.file("bench.csv").string();
  CliResult r = run({"bench", "--seed", "3", "--shape", "8x8x4", "--mismatch", "1.0,1.5",
                     "--methods", "none,zero-mean,gmm:1", "--csv", csv});
  REQUIRE(r.rc == 0);
  auto rows = parse_csv(csv);
  REQUIRE(rows.size() == 1 + 2 * 3); // header + mismatches x methods
  REQUIRE(rows[0].size() == 11);
  CHECK(rows[0][0] == "mismatch");
  CHECK(rows[0][5] == "learned_bits");
  for (size_t i = 1; i < rows.size(); ++i) {
    double learned = std::stod(rows[i][5]);
    double gap_pct = std::stod(rows[i][6]);
    double gain_pct = std::stod(rows[i][7]);
    double runtime = std::stod(rows[i][10]);
    CHECK(learned > 0.0);
    CHECK(gap_pct >= 0.0);
    CHECK(gain_pct <= gap_pct + 2e-4); // both printed at 4 decimals
    CHECK(runtime >= 0.0);
  }
  // without adaptation there is nothing to gain or spend
  CHECK(std::stod(rows[1][7]) == 0.0);
  CHECK(std::stod(rows[1][8]) == 0.0);
}

TEST_CASE("shape parsing") {
  Shape s = parse_shape("12x8x160");
  CHECK(s.h == 12);
  CHECK(s.w == 8);
  CHECK(s.c == 160);
  CHECK_THROWS_AS(parse_shape("12x8"), ConfigError);
  CHECK_THROWS_AS(parse_shape("12x8x0"), ConfigError);
  CHECK_THROWS_AS(parse_shape("axbxc"), ConfigError);
  CHECK_THROWS_AS(parse_shape("12x8x4x2"), ConfigError);
  CHECK_THROWS_AS(parse_shape("-2x8x4"), ConfigError);
}

TEST_CASE("distribution descriptors broadcast or spread per channel") {
  auto one = parse_dists("gauss:1.5", 8);
  REQUIRE(one.size() == 1);
  CHECK(one[0].sigma == 1.5);
  CHECK(one[0].mean == 0.0);

  auto two = parse_dists("gauss:0.25,1.5", 8);
  REQUIRE(two.size() == 1);
  CHECK(two[0].mean == 0.25);
  CHECK(two[0].sigma == 1.5);

  auto spread = parse_dists("gauss:0.5..2.0", 4);
  REQUIRE(spread.size() == 4);
  CHECK(spread[0].sigma == 0.5);
  CHECK(spread[3].sigma == 2.0);
  // log-even interior points
  CHECK(spread[1].sigma == doctest::Approx(0.5 * std::pow(4.0, 1.0 / 3.0)).epsilon(1e-12));
  CHECK(spread[2].sigma > spread[1].sigma);

  auto lap = parse_dists("laplace:2.0", 2);
  CHECK(lap[0].family == DistFamily::Laplacian);

  auto mix = parse_dists("mix2:-3,0.5,3,0.75,0.5", 2);
  REQUIRE(mix.size() == 1);
  CHECK(mix[0].family == DistFamily::Mixture2);
  CHECK(mix[0].mean == -3.0);
  CHECK(mix[0].sigma == 0.5);
  CHECK(mix[0].mean2 == 3.0);
  CHECK(mix[0].sigma2 == 0.75);
  CHECK(mix[0].weight2 == 0.5);

  CHECK_THROWS_AS(parse_dists("gauss", 2), ConfigError);
  CHECK_THROWS_AS(parse_dists("gauss:", 2), ConfigError);
  CHECK_THROWS_AS(parse_dists("gauss:1,2,3", 2), ConfigError);
  CHECK_THROWS_AS(parse_dists("mix2:1,2,3", 2), ConfigError);
  CHECK_THROWS_AS(parse_dists("gauss:0", 2), ConfigError);
  CHECK_THROWS_AS(parse_dists("gauss:0.1..-2", 2), ConfigError);
}
