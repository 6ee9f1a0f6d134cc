// src/fusion.cc

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

#include "nebula/fusion.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "nebula/error.h"
#include "nebula/model.h"
#include "nebula/parallel.h"

namespace nebula {

FrequencyGrid::FrequencyGrid(double f_min, double f_max, int n_bins)
    : f_min_(f_min), f_max_(f_max), n_bins_(n_bins) {
  if (!(f_min > 0) || !(f_max > f_min) || n_bins < 2)
    throw InvalidArgument("grid needs 0 < f_min < f_max and at least two bins");
  bin_octaves_ = std::log2(f_max / f_min) / (n_bins - 1);
  centres_.resize(n_bins);
  for (int b = 0; b < n_bins; ++b) centres_[b] = f_min * std::exp2(b * bin_octaves_);
  centres_.back() = f_max;
}

namespace {

const double kLog2Pi = std::log(2 * std::numbers::pi);

// log_density_1d with the per-component constants hoisted out of the bin loop.
struct PreparedConditional {
  std::vector<double> offset;  // log w - 0.5 (log 2 pi + log var)
  std::vector<double> mean;
  std::vector<double> inv_var;

  explicit PreparedConditional(const Conditional1D &c) {
    for (std::size_t m = 0; m < c.weights.size(); ++m) {
      if (c.weights[m] <= 0) continue;
      offset.push_back(std::log(c.weights[m]) - 0.5 * (kLog2Pi + std::log(c.variances[m])));
      mean.push_back(c.means[m]);
      inv_var.push_back(1.0 / c.variances[m]);
    }
  }

  double operator()(double f) const {
    double mx = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> terms;
    terms.resize(offset.size());
    for (std::size_t m = 0; m < offset.size(); ++m) {
      double z = f - mean[m];
      terms[m] = offset[m] - 0.5 * z * z * inv_var[m];
      mx = std::max(mx, terms[m]);
    }
    if (!std::isfinite(mx)) return mx;
    double s = 0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
  }
};

}  // namespace

std::vector<double> fuse(const std::vector<Conditional1D> &conditionals,
                         const std::vector<ChannelSpec> &channels, const FrequencyGrid &grid) {
  if (conditionals.size() != channels.size() || channels.empty())
    throw InvalidArgument("fuse needs one conditional per channel");
  std::vector<double> row(grid.size(), 0.0);
  const double inv_k = 1.0 / static_cast<double>(channels.size());
  for (std::size_t k = 0; k < channels.size(); ++k) {
    PreparedConditional p(conditionals[k]);
    const double log2_fc = std::log2(channels[k].fc);
    for (int b = 0; b < grid.size(); ++b)
      row[b] += inv_k * p(std::log2(grid.centre(b)) - log2_fc);
  }
  return row;
}

std::vector<double> estimate_calibration(const ModelBank &bank, const FrequencyGrid &grid,
                                         std::size_t n_frames, Rng &rng) {
  if (n_frames == 0) throw InvalidArgument("calibration needs at least one frame");
  const BankConditioner conditioner(bank);
  const int fs = bank.generator.fs;
  double max_window = 0;
  for (const auto &ch : bank.channels) max_window = std::max(max_window, ch.spec.window_len);
  const std::size_t len = static_cast<std::size_t>(std::ceil(max_window * fs)) + 5;

  std::vector<std::vector<double>> rows(n_frames);
  const std::uint64_t base = rng();
  parallel_for(n_frames, [&](std::size_t i) {
    Rng local = make_stream(base, i);
    std::normal_distribution<double> noise;
    Waveform w{std::vector<double>(len), fs};
    for (double &v : w.samples) v = noise(local);
    const double t = static_cast<double>(len / 2) / fs;
    std::vector<ChannelFeatureVector> frame;
    for (const auto &spec : conditioner.specs()) frame.push_back(extract_frame(w, t, spec));
    rows[i] = fuse(conditioner.condition(frame), conditioner.specs(), grid);
  });
  std::vector<double> mean(grid.size(), 0.0);
  for (const auto &r : rows)
    for (int b = 0; b < grid.size(); ++b) mean[b] += r[b];
  for (double &v : mean) v /= static_cast<double>(n_frames);
  return mean;
}

std::vector<double> normalize(const std::vector<double> &row,
                              const std::vector<double> &calibration,
                              const FrequencyGrid &grid) {
  const std::size_t n = static_cast<std::size_t>(grid.size());
  if (row.size() != n || calibration.size() != n)
    throw InvalidArgument("row and calibration must match the grid");
  std::vector<double> out(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < n; ++b) {
    out[b] = row[b] - calibration[b];
    mx = std::max(mx, out[b]);
  }
  double s = 0;
  for (double v : out) s += std::exp(v - mx) * grid.measure();
  const double log_z = mx + std::log(s);
  for (double &v : out) v -= log_z;
  return out;
}

int smoothing_window(double f, double t_hop) {
  return std::max(1, static_cast<int>(std::lround(3.0 / (f * t_hop))));
}

LikelihoodMap smooth(const LikelihoodMap &map) {
  LikelihoodMap out = map;
  const Eigen::Index frames = map.frames();
  if (frames == 0) return out;
  std::vector<double> prefix(frames + 1);
  for (int b = 0; b < map.grid.size(); ++b) {
    prefix[0] = 0;
    for (Eigen::Index t = 0; t < frames; ++t) prefix[t + 1] = prefix[t] + map.values(t, b);
    const int w = smoothing_window(map.grid.centre(b), map.t_hop);
    for (Eigen::Index t = 0; t < frames; ++t) {
      Eigen::Index lo = std::max<Eigen::Index>(0, t - w / 2);
      Eigen::Index hi = std::min<Eigen::Index>(frames - 1, t - w / 2 + w - 1);
      out.values(t, b) = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
  }
  return out;
}

}  // namespace nebula
