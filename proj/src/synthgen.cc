// src/synthgen.cc

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

#include "nebula/synthgen.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <complex>
#include <numbers>
#include <random>

#include "nebula/error.h"
#include "nebula/parallel.h"

namespace nebula {

void GeneratorConfig::validate() const {
  if (fs <= 0 || !(duration > 0) || k_max < 1)
    throw InvalidArgument("generator needs fs > 0, duration > 0, k_max >= 1");
  if (!(snr_db.lo < snr_db.hi) || !(harm_db.lo < harm_db.hi) || !(f0_hz.lo < f0_hz.hi))
    throw InvalidArgument("generator prior ranges must satisfy lo < hi");
  if (!(f0_hz.lo > 0) || !(fs > 2 * f0_hz.hi))
    throw InvalidArgument("generator needs 0 < f0_lo and fs > 2 f0_hi");
}

PriorDraw sample_prior(const GeneratorConfig &cfg, Rng &rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](const Range &r) { return r.lo + (r.hi - r.lo) * unit(rng); };

  PriorDraw d;
  d.f0 = std::exp(uniform({std::log(cfg.f0_hz.lo), std::log(cfg.f0_hz.hi)}));
  d.snr_db = uniform(cfg.snr_db);
  d.a_k.resize(cfg.k_max);
  d.theta_k.resize(cfg.k_max);
  const double cutoff = cfg.harmonic_cutoff * cfg.fs;
  for (int k = 0; k < cfg.k_max; ++k) {
    double gain = std::pow(10.0, uniform(cfg.harm_db) / 20.0);
    d.a_k[k] = (k + 1) * d.f0 > cutoff ? 0.0 : gain;
    d.theta_k[k] = -std::numbers::pi + 2 * std::numbers::pi * unit(rng);
  }
  d.a_t = std::sqrt(harmonic_power(d) / std::pow(10.0, d.snr_db / 10.0));
  return d;
}

double harmonic_power(const PriorDraw &draw) {
  double p = 0;
  for (double a : draw.a_k) p += 0.5 * a * a;
  return p;
}

Waveform render_segment(const PriorDraw &draw, const GeneratorConfig &cfg, long begin,
                        std::size_t length, Rng &rng) {
  Waveform w{std::vector<double>(length, 0.0), cfg.fs};
  if (draw.a_t > 0) {
    std::normal_distribution<double> u;
    for (double &v : w.samples) v = draw.a_t * u(rng);
  }
  // Phasor recurrence per harmonic; drift over a few seconds stays < 1e-10.
  for (std::size_t k = 0; k < draw.a_k.size(); ++k) {
    if (draw.a_k[k] == 0) continue;
    const double omega = 2 * std::numbers::pi * (k + 1) * draw.f0 / cfg.fs;
    std::complex<double> ph = std::polar(draw.a_k[k], omega * begin + draw.theta_k[k]);
    const std::complex<double> rot = std::polar(1.0, omega);
    for (std::size_t n = 0; n < length; ++n) {
      if (n % 4096 == 0)
        ph = std::polar(draw.a_k[k], omega * (begin + static_cast<long>(n)) + draw.theta_k[k]);
      w.samples[n] += ph.imag();
      ph *= rot;
    }
  }
  return w;
}

Waveform render(const PriorDraw &draw, const GeneratorConfig &cfg, Rng &rng) {
  auto n = static_cast<std::size_t>(std::lround(cfg.duration * cfg.fs));
  return render_segment(draw, cfg, 0, n, rng);
}

namespace {

// Renders only the span the longest channel window can reach around the
// mid-signal frame; features are time-local so this equals a full render.
struct MidFrame {
  Waveform excerpt;
  double t = 0;  // frame time within the excerpt
};

MidFrame render_mid_frame(const PriorDraw &draw, const GeneratorConfig &cfg,
                          double max_window, Rng &rng) {
  const long total = std::lround(cfg.duration * cfg.fs);
  const double t_mid = 0.5 * cfg.duration;
  const long centre = std::lround(t_mid * cfg.fs);
  const long reach = static_cast<long>(std::ceil(0.5 * max_window * cfg.fs)) + 2;
  const long begin = std::max(0L, centre - reach);
  const long end = std::min(total, centre + reach + 1);
  MidFrame m;
  m.excerpt = render_segment(draw, cfg, begin, static_cast<std::size_t>(end - begin), rng);
  m.t = static_cast<double>(centre - begin) / cfg.fs;
  return m;
}

}  // namespace

std::vector<std::vector<TrainingPair>> generate_training_sets(
    const GeneratorConfig &cfg, const std::vector<ChannelSpec> &bank,
    std::size_t n_samples, Rng &rng) {
  cfg.validate();
  double max_window = 0;
  for (const auto &ch : bank) max_window = std::max(max_window, ch.window_len);
  std::vector<std::vector<TrainingPair>> sets(bank.size(),
                                              std::vector<TrainingPair>(n_samples));
  // Each draw gets its own stream so the result is independent of threading.
  const std::uint64_t base = rng();
  parallel_for(n_samples, [&](std::size_t i) {
    Rng local = make_stream(base, i);
    PriorDraw draw = sample_prior(cfg, local);
    MidFrame m = render_mid_frame(draw, cfg, max_window, local);
    for (std::size_t c = 0; c < bank.size(); ++c) {
      sets[c][i].features = extract_frame(m.excerpt, m.t, bank[c]);
      sets[c][i].target = std::log2(draw.f0 / bank[c].fc);
    }
  });
  return sets;
}

std::vector<TrainingPair> generate_training_set(const GeneratorConfig &cfg,
                                                const ChannelSpec &channel,
                                                std::size_t n_samples, Rng &rng) {
  return std::move(generate_training_sets(cfg, {channel}, n_samples, rng).front());
}

}  // namespace nebula
