// src/signal.cc

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

#include "nebula/signal.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "nebula/error.h"

namespace nebula {

void validate(const Waveform &w) {
  if (w.fs <= 0) throw InvalidArgument("sample rate must be positive");
  if (w.samples.empty()) throw InvalidArgument("waveform is empty");
  for (double v : w.samples)
    if (!std::isfinite(v)) throw InvalidArgument("waveform has non-finite samples");
}

FrameClock FrameClock::for_waveform(const Waveform &w, double t_hop) {
  if (!(t_hop > 0)) throw InvalidArgument("t_hop must be positive");
  // Counted in samples so that exact multiples do not lose a frame to rounding.
  double hop_samples = t_hop * w.fs;
  auto n = static_cast<std::size_t>(
      std::floor(static_cast<double>(w.size()) / hop_samples + 1e-9));
  return FrameClock{t_hop, n + 1};
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

double decode_sample(const unsigned char *p, std::uint16_t format, int bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      std::uint32_t u = read_u32(p);
      float f;
      std::memcpy(&f, &u, sizeof f);
      return f;
    }
    std::uint64_t u = static_cast<std::uint64_t>(read_u32(p)) |
                      (static_cast<std::uint64_t>(read_u32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &u, sizeof d);
    return d;
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default:
      return static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
  }
}

void put_u32(std::vector<unsigned char> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u16(std::vector<unsigned char> &out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace

Waveform load_wav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (is.bad()) throw IoError("read error on " + path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError(path + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t fs = 0;
  bool have_fmt = false;
  const unsigned char *data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = bytes.data() + pos;
    std::size_t size = read_u32(chunk + 4);
    std::size_t avail = bytes.size() - pos - 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) throw FormatError(path + ": bad fmt chunk");
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      fs = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError(path + ": bad extensible fmt chunk");
        format = read_u16(chunk + 32);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      // Streams written without a final size leave 0xFFFFFFFF here.
      data_size = std::min(size, avail);
      break;
    }
    pos += 8 + size + (size & 1);
  }
  if (!have_fmt) throw FormatError(path + ": missing fmt chunk");
  if (!data) throw FormatError(path + ": missing data chunk");

  bool ok = (format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32)) ||
            (format == kFormatFloat && (bits == 32 || bits == 64));
  if (!ok)
    throw FormatError(path + ": unsupported codec (format " + std::to_string(format) +
                      ", " + std::to_string(bits) + " bits)");
  if (channels == 0 || fs == 0) throw FormatError(path + ": bad channel count or rate");

  std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  std::size_t n = data_size / frame_bytes;
  if (n == 0) throw FormatError(path + ": zero-length audio");

  Waveform w;
  w.fs = static_cast<int>(fs);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char *frame = data + i * frame_bytes;
    double acc = 0;
    for (int c = 0; c < channels; ++c) acc += decode_sample(frame + c * (bits / 8), format, bits);
    w.samples[i] = acc / channels;
  }
  return w;
}

void write_wav(const std::string &path, const Waveform &w, WavEncoding encoding) {
  const bool is_float = encoding == WavEncoding::kFloat32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.size() * (bits / 8));
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, is_float ? kFormatFloat : kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.fs));
  put_u32(out, static_cast<std::uint32_t>(w.fs) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (double v : w.samples) {
    if (is_float) {
      float f = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put_u32(out, u);
    } else {
      double c = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(c)));
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(reinterpret_cast<const char *>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write error on " + path);
}

Waveform remove_dc(const Waveform &w) {
  Waveform out = w;
  if (w.samples.empty()) return out;
  double mean = std::accumulate(w.samples.begin(), w.samples.end(), 0.0) /
                static_cast<double>(w.size());
  for (double &v : out.samples) v -= mean;
  return out;
}

Waveform dither(const Waveform &w, Rng &rng) {
  Waveform out = w;
  double peak = 0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak == 0) return out;
  const double level = kDitherLevel * peak;
  std::uniform_real_distribution<double> noise(-level, level);
  for (double &v : out.samples) v += noise(rng);
  return out;
}

}  // namespace nebula
