// src/pipeline.cc

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

#include "nebula/pipeline.h"

#include <cmath>
#include <sstream>

#include "nebula/error.h"
#include "nebula/features.h"
#include "nebula/parallel.h"
#include "nebula/synthgen.h"

namespace nebula {

LikelihoodMap compute_likelihood_map(const BankConditioner &conditioner, const Waveform &w,
                                     const FrameClock &clock, const FrequencyGrid &grid,
                                     const std::vector<double> &calibration) {
  LikelihoodMap map;
  map.grid = grid;
  map.t_hop = clock.t_hop;
  map.values.resize(static_cast<Eigen::Index>(clock.n_frames), grid.size());
  const auto &specs = conditioner.specs();
  parallel_for(clock.n_frames, [&](std::size_t i) {
    std::vector<ChannelFeatureVector> frame(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k) frame[k] = extract_frame(w, clock.time(i), specs[k]);
    std::vector<double> row = normalize(fuse(conditioner.condition(frame), specs, grid), calibration, grid);
    for (int b = 0; b < grid.size(); ++b) map.values(static_cast<Eigen::Index>(i), b) = row[b];
  });
  return map;
}

TrackResult track_waveform(const BankConditioner &conditioner, const Waveform &w, double t_hop,
                           const FrequencyGrid &grid, const std::vector<double> &calibration,
                           double sigma) {
  TrackResult r;
  const FrameClock clock = FrameClock::for_waveform(w, t_hop);
  r.map = compute_likelihood_map(conditioner, w, clock, grid, calibration);
  r.smoothed = smooth(r.map);
  r.path = viterbi_track(r.smoothed, TransitionModel{sigma, t_hop});
  r.trajectory = refine_quadratic(r.smoothed, r.path);
  return r;
}

AnalysisResult analyze(const ModelBank &bank, const Waveform &input, const AnalyzeOptions &opts) {
  validate(input);
  if (!bank.calibrated()) throw ModelError("model has no calibration table");
  const FrequencyGrid grid(opts.f_min, opts.f_max, bank.grid.size());
  if (!(grid == bank.grid)) {
    std::ostringstream msg;
    msg << "model is calibrated for [" << bank.grid.f_min() << ", " << bank.grid.f_max()
        << "] Hz but analysis requested [" << opts.f_min << ", " << opts.f_max
        << "] Hz; recalibrate the model for this range";
    throw ModelError(msg.str());
  }
  if (opts.f_min < bank.generator.f0_hz.lo || opts.f_max > bank.generator.f0_hz.hi)
    throw ModelError("search range lies outside the trained F0 prior");

  Waveform w = remove_dc(input);
  if (opts.dither) {
    Rng rng = make_stream(opts.seed, 0);
    w = dither(w, rng);
  }
  const BankConditioner conditioner(bank);
  AnalysisResult out;
  out.clock = FrameClock::for_waveform(w, opts.t_hop);
  out.track = track_waveform(conditioner, w, opts.t_hop, grid, bank.calibration, opts.sigma);

  std::vector<double> peaks;
  for (const auto &pt : out.track.trajectory) peaks.push_back(pt.peak_loglik);
  VoicingHmm hmm = VoicingHmm::for_hop(opts.t_hop, bank.unvoiced);
  if (peaks.size() >= 2) {
    out.voicing_fit = fit_voiced_obs(peaks, hmm);
  } else {
    out.voicing_fit.hmm = hmm;
    out.voicing_fit.degenerate = true;
  }
  out.voiced = decode(peaks, out.voicing_fit.hmm);
  return out;
}

bool is_monotone(const std::vector<double> &loglik) {
  for (std::size_t i = 1; i < loglik.size(); ++i)
    if (loglik[i] < loglik[i - 1] - 1e-12 * std::max(1.0, std::abs(loglik[i - 1]))) return false;
  return true;
}

ModelBank train_model(const TrainOptions &opts, const ProgressFn &progress,
                      std::vector<EmReport> *reports) {
  if (opts.components < 1) throw InvalidArgument("need at least one mixture component");
  if (opts.n_samples < 10 * static_cast<std::size_t>(opts.components))
    throw InvalidArgument("n_samples (" + std::to_string(opts.n_samples) +
                          ") must be at least 10 x components (" +
                          std::to_string(10 * opts.components) + ")");
  opts.generator.validate();
  auto say = [&](const std::string &s) {
    if (progress) progress(s);
  };

  ModelBank bank;
  bank.generator = opts.generator;
  bank.training.seed = opts.seed;
  bank.training.n_samples = opts.n_samples;
  bank.training.components = opts.components;
  const auto specs = make_filterbank(opts.channel_f_lo, opts.channel_f_hi, opts.n_channels);

  say("synthesising " + std::to_string(opts.n_samples) + " training signals");
  Rng data_rng = make_stream(opts.seed, 1);
  auto sets = generate_training_sets(opts.generator, specs, opts.n_samples, data_rng);
  if (opts.on_training_data) opts.on_training_data(specs, sets);

  std::vector<ChannelModel> channels(specs.size());
  std::vector<EmReport> local_reports(specs.size());
  parallel_for(specs.size(), [&](std::size_t k) {
    const auto &set = sets[k];
    Eigen::MatrixXd data(static_cast<Eigen::Index>(set.size()), kFeatureDim + 1);
    for (std::size_t i = 0; i < set.size(); ++i) {
      auto f = set[i].features.as_array();
      for (int j = 0; j < kFeatureDim; ++j) data(static_cast<Eigen::Index>(i), j) = f[j];
      data(static_cast<Eigen::Index>(i), kFeatureDim) = set[i].target;
    }
    ChannelModel &ch = channels[k];
    ch.spec = specs[k];
    ch.standardizer = Standardizer::fit(data);
    Rng em_rng = make_stream(opts.seed, 1000 + k);
    try {
      ch.mixture = fit_em(ch.standardizer.apply(data), opts.components, em_rng, opts.em,
                          &local_reports[k]);
    } catch (const DegenerateData &e) {
      throw TrainingError(static_cast<int>(k), e.what());
    }
  });
  sets.clear();
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const EmReport &r = local_reports[k];
    ChannelTrainingSummary s{r.iterations, r.converged, r.loglik.back(), is_monotone(r.loglik)};
    bank.training.channels.push_back(s);
    std::ostringstream line;
    line << "channel " << k << " fc=" << specs[k].fc << " Hz: " << r.iterations
         << " EM iterations, loglik/sample " << r.loglik.back()
         << (r.converged ? "" : " (iteration cap)") << (s.monotone ? "" : " NON-MONOTONE");
    say(line.str());
  }
  bank.channels = std::move(channels);
  if (reports) *reports = std::move(local_reports);

  say("calibrating on white noise");
  calibrate_bank(bank, opts.grid, opts.calibration_frames, opts.unvoiced_frames, opts.seed);
  std::ostringstream line;
  line << "unvoiced peak log-likelihood: mean " << bank.unvoiced.mean << ", var " << bank.unvoiced.var;
  say(line.str());
  return bank;
}

void calibrate_bank(ModelBank &bank, const FrequencyGrid &grid, std::size_t calibration_frames,
                    std::size_t unvoiced_frames, std::uint64_t seed) {
  Rng cal_rng = make_stream(seed, 2);
  bank.calibration = estimate_calibration(bank, grid, calibration_frames, cal_rng);
  bank.grid = grid;
  Rng uv_rng = make_stream(seed, 3);
  bank.unvoiced = simulate_unvoiced_stats(bank, grid, unvoiced_frames, uv_rng);
}

}  // namespace nebula
