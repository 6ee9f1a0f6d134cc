// include/nebula/model.h

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

#ifndef NEBULA_MODEL_H_
#define NEBULA_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nebula/features.h"
#include "nebula/fusion.h"
#include "nebula/gmm.h"
#include "nebula/synthgen.h"
#include "nebula/voicing.h"

namespace nebula {

inline constexpr int kModelVersion = 1;

struct ChannelModel {
  ChannelSpec spec;
  Standardizer standardizer;  // over [snr0, snr1, snr2, if1, if2, target]
  GaussianMixture mixture;    // in standardised coordinates
};

struct ChannelTrainingSummary {
  int iterations = 0;
  bool converged = false;
  double final_loglik = 0;
  bool monotone = true;
};

struct TrainingInfo {
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  int components = 0;
  std::vector<ChannelTrainingSummary> channels;
};

/// Everything analysis needs: per-channel mixtures plus the calibration table
/// and unvoiced statistics for one frequency grid.
struct ModelBank {
  GeneratorConfig generator;
  TrainingInfo training;
  std::vector<ChannelModel> channels;
  FrequencyGrid grid;
  std::vector<double> calibration;  // one entry per grid bin
  NormalParams unvoiced = kDefaultUnvoiced;

  std::vector<ChannelSpec> specs() const;
  bool calibrated() const { return grid.size() > 0 && calibration.size() == std::size_t(grid.size()); }
};

/// Conditions every channel of a bank on one frame of features. Targets are
/// returned in octaves relative to each channel centre.
class BankConditioner {
 public:
  explicit BankConditioner(const ModelBank &bank);

  std::vector<Conditional1D> condition(const std::vector<ChannelFeatureVector> &frame) const;
  const std::vector<ChannelSpec> &specs() const { return specs_; }

 private:
  struct Channel {
    MixtureConditioner conditioner;
    Eigen::VectorXd feature_mean, feature_scale;
    double target_mean = 0, target_scale = 1;
  };
  std::vector<Channel> channels_;
  std::vector<ChannelSpec> specs_;
};

/// Writes the bank as a JSON document with a CRC-32 over its payload.
void save_bank(const ModelBank &bank, const std::string &path);
std::string serialize_bank(const ModelBank &bank);

/// Reads and validates a bank. Throws IoError if unreadable and ModelError on
/// a version mismatch, checksum failure, truncation or invalid parameters.
ModelBank load_bank(const std::string &path);
ModelBank deserialize_bank(const std::string &text);

}  // namespace nebula

#endif  // NEBULA_MODEL_H_
