// src/voicing.cc

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

#include "nebula/voicing.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "nebula/error.h"
#include "nebula/model.h"
#include "nebula/parallel.h"
#include "nebula/pipeline.h"

namespace nebula {

namespace {

double log_normal(double x, const NormalParams &n) {
  const double z = x - n.mean;
  return -0.5 * (std::log(2 * std::numbers::pi * n.var) + z * z / n.var);
}

// Forward-backward with per-frame rescaling. State 0 is unvoiced, 1 voiced.
// Returns the data log-likelihood and fills the voiced posteriors.
double forward_backward(const std::vector<double> &x, const VoicingHmm &hmm,
                        std::vector<double> *voiced_post) {
  const std::size_t n = x.size();
  const double stay = 1 - hmm.p_switch, sw = hmm.p_switch;
  std::vector<std::array<double, 2>> e(n), alpha(n);
  std::vector<double> scale(n);
  double loglik = 0;
  for (std::size_t t = 0; t < n; ++t) {
    double lu = log_normal(x[t], hmm.unvoiced), lv = log_normal(x[t], hmm.voiced);
    double m = std::max(lu, lv);
    e[t] = {std::exp(lu - m), std::exp(lv - m)};
    std::array<double, 2> a;
    if (t == 0) {
      a = {0.5 * e[t][0], 0.5 * e[t][1]};
    } else {
      const auto &p = alpha[t - 1];
      a = {(p[0] * stay + p[1] * sw) * e[t][0], (p[0] * sw + p[1] * stay) * e[t][1]};
    }
    scale[t] = a[0] + a[1];
    alpha[t] = {a[0] / scale[t], a[1] / scale[t]};
    loglik += std::log(scale[t]) + m;
  }
  if (voiced_post) {
    voiced_post->assign(n, 0.0);
    std::array<double, 2> beta{1.0, 1.0};
    for (std::size_t t = n; t-- > 0;) {
      if (t + 1 < n) {
        const auto &en = e[t + 1];
        std::array<double, 2> b{(stay * en[0] * beta[0] + sw * en[1] * beta[1]) / scale[t + 1],
                                (sw * en[0] * beta[0] + stay * en[1] * beta[1]) / scale[t + 1]};
        beta = b;
      }
      double g0 = alpha[t][0] * beta[0], g1 = alpha[t][1] * beta[1];
      (*voiced_post)[t] = g1 / (g0 + g1);
    }
  }
  return loglik;
}

}  // namespace

double switch_probability(double t_hop) { return t_hop / 0.2; }

VoicingHmm VoicingHmm::for_hop(double t_hop, NormalParams unvoiced) {
  VoicingHmm h;
  h.unvoiced = unvoiced;
  h.p_switch = switch_probability(t_hop);
  h.validate();
  return h;
}

void VoicingHmm::validate() const {
  if (!(unvoiced.var > 0) || !(voiced.var > 0))
    throw InvalidArgument("voicing observation variances must be positive");
  // 0.5 is admitted: it reduces decoding to frame-wise classification.
  if (!(p_switch > 0) || !(p_switch <= 0.5))
    throw InvalidArgument("voicing switch probability must lie in (0, 0.5]");
}

VoicedFit fit_voiced_obs(const std::vector<double> &peaks, const VoicingHmm &hmm,
                         const BaumWelchOptions &opts) {
  if (peaks.size() < 2) throw InvalidArgument("voicing fit needs at least two frames");
  hmm.validate();
  VoicedFit fit;
  fit.hmm = hmm;
  if (std::all_of(peaks.begin(), peaks.end(), [&](double v) { return v == peaks.front(); })) {
    fit.degenerate = true;
    return fit;
  }
  const double floor = hmm.unvoiced.mean + opts.mean_floor_sd * std::sqrt(hmm.unvoiced.var);
  std::vector<double> post;
  double ll = forward_backward(peaks, fit.hmm, &post);
  fit.loglik.push_back(ll);
  for (int it = 0; it < opts.max_iterations; ++it) {
    double mass = 0, sum = 0;
    for (std::size_t t = 0; t < peaks.size(); ++t) {
      mass += post[t];
      sum += post[t] * peaks[t];
    }
    if (!(mass > 1e-12)) break;
    // The voiced state may not sink below the noise floor; clamping the mean
    // keeps the update a maximiser over the allowed set.
    const double mean = std::max(sum / mass, floor);
    double var = 0;
    for (std::size_t t = 0; t < peaks.size(); ++t) var += post[t] * (peaks[t] - mean) * (peaks[t] - mean);
    var = std::max(var / mass, opts.var_floor);
    VoicingHmm candidate = fit.hmm;
    candidate.voiced = {mean, var};
    std::vector<double> next_post;
    double next = forward_backward(peaks, candidate, &next_post);
    // A floored variance is still the constrained maximiser, so this only
    // guards against rounding.
    if (next < ll) break;
    fit.hmm = candidate;
    fit.loglik.push_back(next);
    post.swap(next_post);
    const bool done = next - ll < opts.tolerance;
    ll = next;
    if (done) break;
  }
  return fit;
}

std::vector<bool> decode(const std::vector<double> &peaks, const VoicingHmm &hmm) {
  hmm.validate();
  const std::size_t n = peaks.size();
  if (n == 0) return {};
  const double ls = std::log(1 - hmm.p_switch), lw = std::log(hmm.p_switch);
  std::vector<std::array<int, 2>> back(n);
  std::array<double, 2> score{std::log(0.5) + log_normal(peaks[0], hmm.unvoiced),
                              std::log(0.5) + log_normal(peaks[0], hmm.voiced)};
  for (std::size_t t = 1; t < n; ++t) {
    std::array<double, 2> next;
    // Predecessor ties resolve to the unvoiced state.
    double to_u_from_u = score[0] + ls, to_u_from_v = score[1] + lw;
    double to_v_from_u = score[0] + lw, to_v_from_v = score[1] + ls;
    back[t][0] = to_u_from_v > to_u_from_u ? 1 : 0;
    back[t][1] = to_v_from_v > to_v_from_u ? 1 : 0;
    next[0] = std::max(to_u_from_u, to_u_from_v) + log_normal(peaks[t], hmm.unvoiced);
    next[1] = std::max(to_v_from_u, to_v_from_v) + log_normal(peaks[t], hmm.voiced);
    score = next;
  }
  std::vector<bool> voiced(n);
  int state = score[1] > score[0] ? 1 : 0;
  for (std::size_t t = n; t-- > 0;) {
    voiced[t] = state == 1;
    if (t > 0) state = back[t][state];
  }
  return voiced;
}

NormalParams simulate_unvoiced_stats(const ModelBank &bank, const FrequencyGrid &grid,
                                     std::size_t n_frames, Rng &rng) {
  if (!bank.calibrated() || !(bank.grid == grid))
    throw ModelError("unvoiced simulation needs a bank calibrated for this grid");
  if (n_frames < 2) throw InvalidArgument("unvoiced simulation needs at least two frames");
  const BankConditioner conditioner(bank);
  const int fs = bank.generator.fs;
  const double t_hop = kDefaultHop;
  constexpr std::size_t kFramesPerSignal = 200;
  const std::size_t n_signals = (n_frames + kFramesPerSignal - 1) / kFramesPerSignal;

  std::vector<std::vector<double>> peaks(n_signals);
  const std::uint64_t base = rng();
  parallel_for(n_signals, [&](std::size_t s) {
    Rng local = make_stream(base, s);
    const std::size_t frames = std::min(kFramesPerSignal, n_frames - s * kFramesPerSignal);
    // Length chosen so that the clock yields exactly `frames` frames.
    const auto len = static_cast<std::size_t>(std::llround((frames - 1) * t_hop * fs)) + 1;
    std::normal_distribution<double> noise;
    Waveform w{std::vector<double>(len), fs};
    for (double &v : w.samples) v = noise(local);
    w = dither(remove_dc(w), local);
    TrackResult tr = track_waveform(conditioner, w, t_hop, grid, bank.calibration);
    for (const auto &pt : tr.trajectory) peaks[s].push_back(pt.peak_loglik);
  });
  double sum = 0, sum2 = 0;
  std::size_t count = 0;
  for (const auto &p : peaks)
    for (double v : p) {
      sum += v;
      ++count;
    }
  const double mean = sum / static_cast<double>(count);
  for (const auto &p : peaks)
    for (double v : p) sum2 += (v - mean) * (v - mean);
  return {mean, std::max(sum2 / static_cast<double>(count), 1e-6)};
}

}  // namespace nebula
