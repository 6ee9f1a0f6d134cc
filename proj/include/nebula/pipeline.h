// include/nebula/pipeline.h

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

#ifndef NEBULA_PIPELINE_H_
#define NEBULA_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nebula/fusion.h"
#include "nebula/gmm.h"
#include "nebula/model.h"
#include "nebula/signal.h"
#include "nebula/tracking.h"
#include "nebula/voicing.h"

namespace nebula {

inline constexpr double kDefaultHop = 0.005;

/// Front end shared by analysis and the white-noise simulations: features,
/// per-channel conditioning, fusion and normalisation for every frame.
LikelihoodMap compute_likelihood_map(const BankConditioner &conditioner, const Waveform &w,
                                     const FrameClock &clock, const FrequencyGrid &grid,
                                     const std::vector<double> &calibration);

struct TrackResult {
  LikelihoodMap map;       // normalised log posterior
  LikelihoodMap smoothed;  // time-smoothed map that tracking and voicing read
  std::vector<int> path;
  F0Trajectory trajectory;
};

/// compute_likelihood_map, smooth, Viterbi and quadratic refinement on an
/// already preprocessed waveform.
TrackResult track_waveform(const BankConditioner &conditioner, const Waveform &w, double t_hop,
                           const FrequencyGrid &grid, const std::vector<double> &calibration,
                           double sigma = 2.0);

struct AnalyzeOptions {
  double f_min = 55;
  double f_max = 400;
  double t_hop = kDefaultHop;
  double sigma = 2.0;  // octaves per second
  bool dither = true;
  std::uint64_t seed = 1;
};

struct AnalysisResult {
  FrameClock clock;
  TrackResult track;
  VoicedFit voicing_fit;
  std::vector<bool> voiced;
};

/// Full inference: DC removal, optional dither, tracking and voicing. Throws
/// ModelError if the bank is uncalibrated or calibrated for another range.
AnalysisResult analyze(const ModelBank &bank, const Waveform &w, const AnalyzeOptions &opts);

struct TrainOptions {
  std::uint64_t seed = 1;
  std::size_t n_samples = 100000;
  int components = 16;
  int n_channels = 36;
  double channel_f_lo = 40;
  double channel_f_hi = 1000;
  GeneratorConfig generator;
  EmOptions em;
  FrequencyGrid grid{55, 400, 128};
  std::size_t calibration_frames = 2000;
  std::size_t unvoiced_frames = 2000;
  // Sees the synthetic training sets ([channel][sample]) before EM.
  std::function<void(const std::vector<ChannelSpec> &,
                     const std::vector<std::vector<TrainingPair>> &)>
      on_training_data;
};

using ProgressFn = std::function<void(const std::string &)>;

/// Synthesises training data, fits one mixture per channel, then calibrates
/// for opts.grid. EM reports are returned through `reports` when non-null.
/// Throws InvalidArgument when n_samples < 10 components and TrainingError
/// naming the channel when EM fails.
ModelBank train_model(const TrainOptions &opts, const ProgressFn &progress = {},
                      std::vector<EmReport> *reports = nullptr);

/// Recomputes the calibration table and unvoiced statistics for `grid`.
void calibrate_bank(ModelBank &bank, const FrequencyGrid &grid, std::size_t calibration_frames,
                    std::size_t unvoiced_frames, std::uint64_t seed);

/// True when every step of the sequence is >= the previous one, allowing a
/// relative rounding slack of 1e-12.
bool is_monotone(const std::vector<double> &loglik);

}  // namespace nebula

#endif  // NEBULA_PIPELINE_H_
