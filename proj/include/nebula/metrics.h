// include/nebula/metrics.h

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

#ifndef NEBULA_METRICS_H_
#define NEBULA_METRICS_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace nebula {

struct PitchFrame {
  double time = 0;  // seconds
  double f0 = 0;    // Hz; 0 when unknown
  bool voiced = false;
  double peak_loglik = 0;  // written by analysis, ignored by evaluation

  bool is_voiced() const { return voiced && f0 > 0; }
};

/// Uniformly sampled pitch track.
struct PitchTrack {
  std::vector<PitchFrame> frames;

  // Step between frames, 0 for fewer than two frames. Throws InvalidArgument
  // if the time axis is not uniform.
  double hop() const;
};

/// Resamples onto t = start + i * target_hop within the span of `track`.
/// F0 is interpolated linearly in log-Hz between two voiced neighbours;
/// voicing (and F0 otherwise) comes from the nearest frame. `start` defaults
/// to the first frame time.
PitchTrack resample_track(const PitchTrack &track, double target_hop,
                          std::optional<double> start = std::nullopt);

struct EvalReport {
  double ffe = 0, gpe = 0, vde = 0, vde_v = 0, vde_u = 0;  // percent
  std::size_t total = 0;
  std::size_t both_voiced = 0;
  std::size_t gross_errors = 0;
  std::size_t voicing_errors = 0;
  std::size_t ref_voiced = 0, ref_unvoiced = 0;
  std::size_t voiced_missed = 0;  // reference voiced, estimate unvoiced
  std::size_t false_voiced = 0;   // reference unvoiced, estimate voiced
};

inline constexpr double kGrossErrorRatio = 0.20;

/// Scores `est` against the reference `ref` over frames present in both
/// (matched by time). Both tracks must share the same hop.
EvalReport evaluate(const PitchTrack &est, const PitchTrack &ref);

/// CSV with a header naming time_s (or time), f0_hz (or f0) and optionally
/// voiced. Rows with f0 <= 0 are unvoiced. Throws IoError / FormatError; parse
/// errors name the offending line.
PitchTrack read_track_csv(const std::string &path);
PitchTrack parse_track_csv(const std::string &text);

/// time_s,f0_hz,voiced[,peak_loglik] with 9 significant digits.
std::string format_track_csv(const PitchTrack &track, bool with_peaks);
void write_track_csv(const std::string &path, const PitchTrack &track, bool with_peaks);

}  // namespace nebula

#endif  // NEBULA_METRICS_H_
