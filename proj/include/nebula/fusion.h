// include/nebula/fusion.h

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

#ifndef NEBULA_FUSION_H_
#define NEBULA_FUSION_H_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "nebula/features.h"
#include "nebula/gmm.h"
#include "nebula/random.h"

namespace nebula {

struct ModelBank;

/// Log-spaced frequency bins; centre b is f_min (f_max / f_min)^(b / (n - 1)).
/// Each bin carries unit measure, so a normalised row is a probability mass
/// function over bins.
class FrequencyGrid {
 public:
  FrequencyGrid() = default;
  FrequencyGrid(double f_min, double f_max, int n_bins = 128);

  int size() const { return n_bins_; }
  double f_min() const { return f_min_; }
  double f_max() const { return f_max_; }
  double centre(int b) const { return centres_[b]; }
  const std::vector<double> &centres() const { return centres_; }
  double bin_octaves() const { return bin_octaves_; }  // log2 spacing of centres
  double measure() const { return 1.0; }

  bool operator==(const FrequencyGrid &o) const {
    return f_min_ == o.f_min_ && f_max_ == o.f_max_ && n_bins_ == o.n_bins_;
  }

 private:
  double f_min_ = 0, f_max_ = 0;
  int n_bins_ = 0;
  double bin_octaves_ = 0;
  std::vector<double> centres_;
};

/// Log-likelihood over frames (rows) and grid bins (columns), in nats.
struct LikelihoodMap {
  Eigen::MatrixXd values;
  FrequencyGrid grid;
  double t_hop = 0.005;

  Eigen::Index frames() const { return values.rows(); }
};

/// Average over channels of log p_k(log2(f / fc_k) | x_k) at each bin centre.
std::vector<double> fuse(const std::vector<Conditional1D> &conditionals,
                         const std::vector<ChannelSpec> &channels, const FrequencyGrid &grid);

/// Mean fused row over n_frames independent white-noise frames.
std::vector<double> estimate_calibration(const ModelBank &bank, const FrequencyGrid &grid,
                                         std::size_t n_frames, Rng &rng);

/// Subtracts the calibration and renormalises so that sum_b exp(L_b) = 1.
std::vector<double> normalize(const std::vector<double> &row,
                              const std::vector<double> &calibration,
                              const FrequencyGrid &grid);

/// Moving average along time with a window of max(1, round(3 / (f t_hop)))
/// frames per bin, truncated at the edges.
LikelihoodMap smooth(const LikelihoodMap &map);

/// Window length used by smooth() for a bin at frequency f.
int smoothing_window(double f, double t_hop);

}  // namespace nebula

#endif  // NEBULA_FUSION_H_
