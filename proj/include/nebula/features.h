// include/nebula/features.h

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

#ifndef NEBULA_FEATURES_H_
#define NEBULA_FEATURES_H_

#include <array>
#include <cstddef>
#include <vector>

#include "nebula/signal.h"

namespace nebula {

struct ChannelSpec {
  int index = 0;
  double fc = 0;          // Hz
  double window_len = 0;  // seconds
};

inline constexpr double kSnrClampDb = 60.0;
inline constexpr int kFeatureDim = 5;

/// Per-channel feature vector: SNR (dB) at fc/2, fc and 2 fc, and the
/// instantaneous frequency near fc and 2 fc as octave offsets from the probe.
struct ChannelFeatureVector {
  double snr0 = -kSnrClampDb;
  double snr1 = -kSnrClampDb;
  double snr2 = -kSnrClampDb;
  double if1 = 0;
  double if2 = 0;

  std::array<double, kFeatureDim> as_array() const {
    return {snr0, snr1, snr2, if1, if2};
  }
};

// fc_i = f_lo (f_hi / f_lo)^(i / (n - 1)), window_len_i = max(4 / fc_i, 10 ms).
std::vector<ChannelSpec> make_filterbank(double f_lo, double f_hi, int n);

struct SnrIf {
  double snr_db = -kSnrClampDb;
  double if_hz = 0;
};

/// SNR and instantaneous frequency of the dominant sinusoid near f_probe in a
/// Hann window of length window_len centred at t.
///
/// The IF is first taken from the phase advance of the heterodyned window
/// between two instants one sample apart, then refined by Gauss-Newton steps
/// on a weighted least-squares sinusoid fit; it is kept within half an octave
/// of f_probe. The SNR compares the power of the fitted sinusoid with the
/// residual power midway between harmonics of the IF (0.5, 1.5, 2.5 and 3.5
/// times the IF, below Nyquist).
/// Samples outside the signal read as zero.
SnrIf estimate_snr_if(const Waveform &w, double t, double f_probe, double window_len);

/// Probes fc / 2, fc and 2 fc. Probes at or above Nyquist report the clamp
/// floor and a zero IF offset.
ChannelFeatureVector extract_frame(const Waveform &w, double t, const ChannelSpec &ch);

/// features[frame][channel].
using FeatureMatrix = std::vector<std::vector<ChannelFeatureVector>>;

FeatureMatrix extract_all(const Waveform &w, const FrameClock &clock,
                          const std::vector<ChannelSpec> &bank);

}  // namespace nebula

#endif  // NEBULA_FEATURES_H_
