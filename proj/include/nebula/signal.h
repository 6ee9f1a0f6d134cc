// include/nebula/signal.h

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

#ifndef NEBULA_SIGNAL_H_
#define NEBULA_SIGNAL_H_

#include <cstddef>
#include <string>
#include <vector>

#include "nebula/random.h"

namespace nebula {

/// Mono sample buffer with its sample rate. Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int fs = 0;

  std::size_t size() const { return samples.size(); }
  double duration() const {
    return static_cast<double>(samples.size()) / static_cast<double>(fs);
  }
};

// Throws InvalidArgument unless fs > 0, the buffer is non-empty and finite.
void validate(const Waveform &w);

/// Analysis instants t_i = i * t_hop, i < n_frames.
struct FrameClock {
  double t_hop = 0.005;
  std::size_t n_frames = 0;

  double time(std::size_t i) const { return static_cast<double>(i) * t_hop; }

  // n_frames = floor(duration / t_hop) + 1.
  static FrameClock for_waveform(const Waveform &w, double t_hop);
};

/// Reads a RIFF/WAVE file. Integer PCM (8/16/24/32 bit) is scaled by
/// 2^(bits-1); IEEE float (32/64 bit) is taken as is. Multichannel audio is
/// averaged to mono. Throws IoError when the file cannot be read and
/// FormatError for unsupported codecs, malformed headers or empty audio.
Waveform load_wav(const std::string &path);

enum class WavEncoding { kPcm16, kFloat32 };

void write_wav(const std::string &path, const Waveform &w,
               WavEncoding encoding = WavEncoding::kFloat32);

/// Subtracts the global sample mean.
Waveform remove_dc(const Waveform &w);

/// Adds i.i.d. uniform noise on [-0.02 A, 0.02 A], A = max |x[n]|.
Waveform dither(const Waveform &w, Rng &rng);

inline constexpr double kDitherLevel = 0.02;

}  // namespace nebula

#endif  // NEBULA_SIGNAL_H_
