// include/nebula/synthgen.h

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

#ifndef NEBULA_SYNTHGEN_H_
#define NEBULA_SYNTHGEN_H_

#include <cstddef>
#include <utility>
#include <vector>

#include "nebula/features.h"
#include "nebula/random.h"
#include "nebula/signal.h"

namespace nebula {

struct Range {
  double lo = 0, hi = 0;
};

/// Fixed settings of the harmonic-plus-noise Monte-Carlo generator.
struct GeneratorConfig {
  int fs = 16000;
  double duration = 0.5;        // seconds per rendered signal
  int k_max = 64;               // harmonic count before the cutoff applies
  double harmonic_cutoff = 0.45;  // harmonics above this fraction of fs are silent
  Range snr_db{-50, 50};
  Range harm_db{-10, 10};
  Range f0_hz{40, 1000};

  void validate() const;
};

/// One draw from the generator priors.
struct PriorDraw {
  double a_t = 0;  // noise gain
  std::vector<double> a_k;
  std::vector<double> theta_k;
  double f0 = 0;
  double snr_db = 0;  // drawn overall SNR that fixed a_t
};

PriorDraw sample_prior(const GeneratorConfig &cfg, Rng &rng);

/// Harmonic power sum_k a_k^2 / 2 of a draw.
double harmonic_power(const PriorDraw &draw);

/// x[n] = a_t u[n] + sum_k a_k sin(2 pi n k f0 / fs + theta_k), u ~ N(0, 1),
/// over round(duration fs) samples.
Waveform render(const PriorDraw &draw, const GeneratorConfig &cfg, Rng &rng);

/// Samples [begin, begin + length) of the same signal. Sample indices keep
/// their absolute meaning; noise is drawn only for the rendered span.
Waveform render_segment(const PriorDraw &draw, const GeneratorConfig &cfg, long begin,
                        std::size_t length, Rng &rng);

struct TrainingPair {
  ChannelFeatureVector features;
  double target = 0;  // log2(f0 / fc)
};

/// Feature vector at the mid-signal frame paired with log2(f0 / fc). Draws are
/// never rejected, even when f0 is far from the channel.
std::vector<TrainingPair> generate_training_set(const GeneratorConfig &cfg,
                                                const ChannelSpec &channel,
                                                std::size_t n_samples, Rng &rng);

/// Same as generate_training_set for every channel of a bank, rendering each
/// draw once and sharing it across channels. Result is indexed [channel][sample].
std::vector<std::vector<TrainingPair>> generate_training_sets(
    const GeneratorConfig &cfg, const std::vector<ChannelSpec> &bank,
    std::size_t n_samples, Rng &rng);

}  // namespace nebula

#endif  // NEBULA_SYNTHGEN_H_
