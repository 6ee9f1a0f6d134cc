// include/nebula/tracking.h

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

#ifndef NEBULA_TRACKING_H_
#define NEBULA_TRACKING_H_

#include <vector>

#include "nebula/fusion.h"

namespace nebula {

/// Gaussian prior on the log-F0 slew rate between consecutive frames.
struct TransitionModel {
  double sigma = 2.0;  // octaves per second
  double t_hop = 0.005;

  // log N(delta_oct / t_hop | 0, sigma).
  double log_prob(double delta_octaves) const;
};

/// Bin path maximising sum_t L(b_t, t) + sum_t log N((oct(b_t) - oct(b_{t-1})) / t_hop | 0, sigma).
/// Ties resolve to the lower bin index.
std::vector<int> viterbi_track(const LikelihoodMap &map, const TransitionModel &tm);

/// Score of a bin path under the same objective as viterbi_track.
double path_score(const LikelihoodMap &map, const TransitionModel &tm, const std::vector<int> &path);

struct TrackPoint {
  double f0 = 0;  // Hz
  int bin = 0;
  double offset = 0;  // refinement in bins, within [-0.5, 0.5]
  double peak_loglik = 0;
};

using F0Trajectory = std::vector<TrackPoint>;

/// Parabolic vertex offset 0.5 (l_minus - l_plus) / (l_minus - 2 l_0 + l_plus),
/// clamped to [-0.5, 0.5]; zero for non-concave triples.
double parabolic_offset(double l_minus, double l_0, double l_plus);

/// Per frame, fits a parabola through the path bin and its neighbours in
/// log-frequency and moves f0 to the vertex. Edge bins are left unrefined.
F0Trajectory refine_quadratic(const LikelihoodMap &map, const std::vector<int> &path);

}  // namespace nebula

#endif  // NEBULA_TRACKING_H_
