// src/tracking.cc

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

#include "nebula/tracking.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nebula/error.h"

namespace nebula {

double TransitionModel::log_prob(double delta_octaves) const {
  const double rate = delta_octaves / t_hop;
  return -0.5 * (rate / sigma) * (rate / sigma) - std::log(sigma * std::sqrt(2 * std::numbers::pi));
}

std::vector<int> viterbi_track(const LikelihoodMap &map, const TransitionModel &tm) {
  if (!(tm.sigma > 0)) throw InvalidArgument("transition sigma must be positive");
  const Eigen::Index frames = map.frames();
  const int bins = map.grid.size();
  if (frames == 0) return {};
  if (map.values.cols() != bins) throw InvalidArgument("map width differs from grid size");

  // Transition log-probabilities depend only on the bin distance.
  std::vector<double> trans(bins);
  for (int d = 0; d < bins; ++d) trans[d] = tm.log_prob(d * map.grid.bin_octaves());

  std::vector<double> score(bins), next(bins);
  std::vector<std::vector<int>> back(frames, std::vector<int>(bins, 0));
  for (int b = 0; b < bins; ++b) score[b] = map.values(0, b);
  for (Eigen::Index t = 1; t < frames; ++t) {
    for (int b = 0; b < bins; ++b) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int p = 0; p < bins; ++p) {
        double s = score[p] + trans[std::abs(b - p)];
        if (s > best) {
          best = s;
          arg = p;
        }
      }
      next[b] = best + map.values(t, b);
      back[t][b] = arg;
    }
    score.swap(next);
  }
  std::vector<int> path(frames);
  path[frames - 1] = static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
  for (Eigen::Index t = frames - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
  return path;
}

double path_score(const LikelihoodMap &map, const TransitionModel &tm, const std::vector<int> &path) {
  double s = 0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    s += map.values(static_cast<Eigen::Index>(t), path[t]);
    if (t > 0) s += tm.log_prob((path[t] - path[t - 1]) * map.grid.bin_octaves());
  }
  return s;
}

double parabolic_offset(double l_minus, double l_0, double l_plus) {
  const double curvature = l_minus - 2 * l_0 + l_plus;
  if (!(curvature < 0)) return 0.0;
  return std::clamp(0.5 * (l_minus - l_plus) / curvature, -0.5, 0.5);
}

F0Trajectory refine_quadratic(const LikelihoodMap &map, const std::vector<int> &path) {
  if (static_cast<Eigen::Index>(path.size()) != map.frames())
    throw InvalidArgument("path length differs from map frame count");
  const int bins = map.grid.size();
  F0Trajectory out(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) {
    const int b = path[t];
    const auto row = static_cast<Eigen::Index>(t);
    TrackPoint &pt = out[t];
    pt.bin = b;
    pt.peak_loglik = map.values(row, b);
    if (b > 0 && b + 1 < bins) {
      const double lm = map.values(row, b - 1), l0 = map.values(row, b), lp = map.values(row, b + 1);
      pt.offset = parabolic_offset(lm, l0, lp);
      pt.peak_loglik = l0 - 0.25 * (lm - lp) * pt.offset;
    }
    pt.f0 = map.grid.centre(b) * std::exp2(pt.offset * map.grid.bin_octaves());
  }
  return out;
}

}  // namespace nebula
