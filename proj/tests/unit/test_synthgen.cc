// tests/unit/test_synthgen.cc

// Copyright 2026  The Nebula Authors

// See COPYING at the top of the tree for authorship details
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nebula/error.h"
#include "nebula/synthgen.h"
#include "test_util.h"

using namespace nebula;

TEST_CASE("f0 prior: range and log-uniform law") {
  GeneratorConfig cfg;
  Rng rng = make_stream(21, 0);
  const int n = 10000;
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    PriorDraw d = sample_prior(cfg, rng);
    REQUIRE(d.f0 >= 40.0);
    REQUIRE(d.f0 <= 1000.0);
    u[i] = (std::log(d.f0) - std::log(40.0)) / (std::log(1000.0) - std::log(40.0));
  }
  // Kolmogorov-Smirnov distance to U(0, 1).
  std::sort(u.begin(), u.end());
  double ks = 0;
  for (int i = 0; i < n; ++i)
    ks = std::max({ks, std::abs((i + 1.0) / n - u[i]), std::abs(u[i] - static_cast<double>(i) / n)});
  CHECK(ks < 0.02);
}

TEST_CASE("draw invariants") {
  GeneratorConfig cfg;
  Rng rng = make_stream(22, 0);
  for (int i = 0; i < 2000; ++i) {
    PriorDraw d = sample_prior(cfg, rng);
    REQUIRE(d.a_k.size() == static_cast<std::size_t>(cfg.k_max));
    REQUIRE(d.theta_k.size() == d.a_k.size());
    CHECK(d.a_t > 0);
    CHECK(d.snr_db >= -50);
    CHECK(d.snr_db <= 50);
    for (std::size_t k = 0; k < d.a_k.size(); ++k) {
      const double fk = (k + 1) * d.f0;
      if (fk > cfg.harmonic_cutoff * cfg.fs) {
        CHECK(d.a_k[k] == 0.0);
      } else {
        // +/-10 dB shape before any rescaling of the noise gain.
        CHECK(d.a_k[k] >= std::pow(10.0, -0.5) * (1 - 1e-12));
        CHECK(d.a_k[k] <= std::pow(10.0, 0.5) * (1 + 1e-12));
      }
      CHECK(d.theta_k[k] >= -std::numbers::pi);
      CHECK(d.theta_k[k] < std::numbers::pi);
    }
    // Noise gain reproduces the drawn SNR.
    double hp = 0;
    for (double a : d.a_k) hp += a * a / 2;
    CHECK(std::abs(10 * std::log10(hp / (d.a_t * d.a_t)) - d.snr_db) < 1e-9);
  }
}

TEST_CASE("fixed seed gives identical draws and signals") {
  GeneratorConfig cfg;
  Rng a = make_stream(5, 1), b = make_stream(5, 1);
  PriorDraw da = sample_prior(cfg, a), db = sample_prior(cfg, b);
  CHECK(da.f0 == db.f0);
  CHECK(da.a_k == db.a_k);
  CHECK(da.theta_k == db.theta_k);
  CHECK(render(da, cfg, a).samples == render(db, cfg, b).samples);
}

TEST_CASE("render closed form") {
  GeneratorConfig cfg;
  cfg.fs = 8000;
  cfg.k_max = 3;
  cfg.f0_hz = {40, 1000};
  PriorDraw d;
  d.f0 = 100;
  d.a_t = 0;
  d.a_k = {1, 0, 0};
  d.theta_k = {0, 0, 0};
  Rng rng = make_stream(1, 0);
  Waveform w = render(d, cfg, rng);
  CHECK(w.size() == 4000);
  CHECK(w.fs == 8000);
  CHECK(w.samples[20] == doctest::Approx(1.0).epsilon(1e-12));
  for (int n : {0, 1, 7, 333, 3999})
    CHECK(std::abs(w.samples[n] - std::sin(2 * std::numbers::pi * 0.0125 * n)) < 1e-9);

  d.a_k = {0, 0, 0};
  for (double v : render(d, cfg, rng).samples) CHECK(v == 0.0);
}

TEST_CASE("rendered harmonic power matches sum a_k^2 / 2") {
  GeneratorConfig cfg;
  cfg.duration = 10;
  Rng rng = make_stream(23, 0);
  PriorDraw d = sample_prior(cfg, rng);
  d.a_t = 0;
  Waveform w = render(d, cfg, rng);
  double ms = 0;
  for (double v : w.samples) ms += v * v;
  ms /= static_cast<double>(w.size());
  double expect = 0;
  for (double a : d.a_k) expect += a * a / 2;
  CHECK(harmonic_power(d) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(std::abs(ms / expect - 1) < 0.01);
}

TEST_CASE("segments agree with the full render on the harmonic part") {
  GeneratorConfig cfg;
  Rng rng = make_stream(24, 0);
  PriorDraw d = sample_prior(cfg, rng);
  d.a_t = 0;
  Waveform full = render(d, cfg, rng);
  Waveform seg = render_segment(d, cfg, 5000, 300, rng);
  REQUIRE(seg.size() == 300);
  for (std::size_t i = 0; i < seg.size(); ++i) CHECK(std::abs(seg.samples[i] - full.samples[5000 + i]) < 1e-9);
}

TEST_CASE("training set") {
  GeneratorConfig cfg;
  auto bank = make_filterbank(40, 1000, 36);
  Rng rng = make_stream(25, 0);
  CHECK(generate_training_set(cfg, bank[3], 0, rng).empty());
  CHECK(generate_training_set(cfg, bank[3], 17, rng).size() == 17);

  // Finite entries and full target coverage over 10^5 draws for one channel.
  const ChannelSpec &ch = bank[20];
  auto set = generate_training_set(cfg, ch, 100000, rng);
  REQUIRE(set.size() == 100000);
  double lo = 1e9, hi = -1e9;
  for (const TrainingPair &p : set) {
    for (double v : p.features.as_array()) REQUIRE(std::isfinite(v));
    REQUIRE(std::isfinite(p.target));
    lo = std::min(lo, p.target);
    hi = std::max(hi, p.target);
  }
  const double resolution = std::log2(400.0 / 55.0) / 127;
  CHECK(lo <= std::log2(40 / ch.fc) + resolution);
  CHECK(hi >= std::log2(1000 / ch.fc) - resolution);
  CHECK(lo >= std::log2(40 / ch.fc) - 1e-12);
  CHECK(hi <= std::log2(1000 / ch.fc) + 1e-12);
}

TEST_CASE("shared-draw sets match single-channel sets") {
  GeneratorConfig cfg;
  auto bank = make_filterbank(40, 1000, 6);
  Rng a = make_stream(26, 0);
  auto sets = generate_training_sets(cfg, bank, 50, a);
  REQUIRE(sets.size() == 6);
  for (const auto &s : sets) CHECK(s.size() == 50);
  // Same draw for every channel: targets differ by the channel offsets.
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t k = 1; k < 6; ++k)
      CHECK(sets[k][i].target - sets[0][i].target ==
            doctest::Approx(std::log2(bank[0].fc / bank[k].fc)).epsilon(1e-12));
}

TEST_CASE("config validation") {
  GeneratorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.fs = 1500;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.snr_db = {10, -10};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.duration = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
