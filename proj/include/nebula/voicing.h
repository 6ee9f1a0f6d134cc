// include/nebula/voicing.h

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

#ifndef NEBULA_VOICING_H_
#define NEBULA_VOICING_H_

#include <cstddef>
#include <vector>

#include "nebula/random.h"

namespace nebula {

struct ModelBank;
class FrequencyGrid;

struct NormalParams {
  double mean = 0;
  double var = 1;
};

// Peak log-likelihood of white noise on a 128-bin grid, as reported for the
// reference front end; used when a model carries no simulated statistics.
inline constexpr NormalParams kDefaultUnvoiced{-4.78, 0.02};
inline constexpr NormalParams kInitialVoiced{-2.0, 1.0};

/// Two-state voiced/unvoiced HMM over the per-frame peak log-likelihood.
struct VoicingHmm {
  NormalParams unvoiced = kDefaultUnvoiced;
  NormalParams voiced = kInitialVoiced;
  double p_switch = 0.025;

  static VoicingHmm for_hop(double t_hop, NormalParams unvoiced = kDefaultUnvoiced);
  void validate() const;
};

/// p_switch = t_hop / 0.2.
double switch_probability(double t_hop);

struct VoicedFit {
  VoicingHmm hmm;
  std::vector<double> loglik;  // data log-likelihood before each update, then final
  bool degenerate = false;     // constant input; parameters left at their start values
};

struct BaumWelchOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;
  double var_floor = 1e-4;
  // Lower bound on the voiced mean, in unvoiced standard deviations above the
  // unvoiced mean.
  double mean_floor_sd = 3.0;
};

/// Baum-Welch restricted to the voiced observation Normal; the unvoiced Normal
/// and transitions stay fixed. The voiced mean is held at or above
/// unvoiced.mean + mean_floor_sd * sd. Needs at least two frames.
VoicedFit fit_voiced_obs(const std::vector<double> &peaks, const VoicingHmm &hmm,
                         const BaumWelchOptions &opts = {});

/// Viterbi decision with a uniform initial distribution. Ties go to unvoiced.
std::vector<bool> decode(const std::vector<double> &peaks, const VoicingHmm &hmm);

/// Normal fitted to the tracked peak log-likelihood on white-noise input run
/// through the full front end (features to tracking) of a calibrated bank.
NormalParams simulate_unvoiced_stats(const ModelBank &bank, const FrequencyGrid &grid,
                                     std::size_t n_frames, Rng &rng);

}  // namespace nebula

#endif  // NEBULA_VOICING_H_
