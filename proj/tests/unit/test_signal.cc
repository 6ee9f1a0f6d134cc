// tests/unit/test_signal.cc

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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "nebula/error.h"
#include "nebula/random.h"
#include "nebula/signal.h"
#include "test_util.h"

using namespace nebula;
using nebula_test::WavBytes;

namespace {

std::string tmp(const std::string &name) {
  return (nebula_test::scratch_dir("signal") / name).string();
}

}  // namespace

TEST_CASE("16-bit full-scale positive sample scales by 2^15") {
  WavBytes wb(1, 1, 16000, 16);
  wb.push_int(32767);
  wb.write(tmp("one.wav"));
  Waveform w = load_wav(tmp("one.wav"));
  REQUIRE(w.size() == 1);
  CHECK(w.samples[0] == 32767.0 / 32768.0);
  CHECK(w.fs == 16000);
}

TEST_CASE("stereo frames are averaged to mono") {
  WavBytes wb(3, 2, 16000, 32);
  wb.push_f32(1.0f);
  wb.push_f32(-1.0f);
  wb.push_f32(0.5f);
  wb.push_f32(0.25f);
  wb.write(tmp("stereo.wav"));
  Waveform w = load_wav(tmp("stereo.wav"));
  REQUIRE(w.size() == 2);
  CHECK(w.samples[0] == 0.0);
  CHECK(w.samples[1] == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("one second at 48 kHz") {
  WavBytes wb(1, 1, 48000, 16);
  for (int i = 0; i < 48000; ++i) wb.push_int(i % 100);
  wb.write(tmp("48k.wav"));
  Waveform w = load_wav(tmp("48k.wav"));
  CHECK(w.fs == 48000);
  CHECK(w.size() == 48000);
  CHECK(w.duration() == doctest::Approx(1.0));
}

TEST_CASE("integer and float sample formats decode to [-1, 1]") {
  SUBCASE("8-bit unsigned") {
    WavBytes wb(1, 1, 8000, 8);
    wb.push_int(0);
    wb.push_int(128);
    wb.push_int(255);
    wb.write(tmp("u8.wav"));
    Waveform w = load_wav(tmp("u8.wav"));
    CHECK(w.samples[0] == -1.0);
    CHECK(w.samples[1] == 0.0);
    CHECK(w.samples[2] == 127.0 / 128.0);
  }
  SUBCASE("24-bit") {
    WavBytes wb(1, 1, 8000, 24);
    wb.push_int(-8388608);
    wb.push_int(4194304);
    wb.write(tmp("s24.wav"));
    Waveform w = load_wav(tmp("s24.wav"));
    CHECK(w.samples[0] == -1.0);
    CHECK(w.samples[1] == 0.5);
  }
  SUBCASE("32-bit") {
    WavBytes wb(1, 1, 8000, 32);
    wb.push_int(-1073741824);
    wb.write(tmp("s32.wav"));
    CHECK(load_wav(tmp("s32.wav")).samples[0] == -0.5);
  }
  SUBCASE("64-bit float") {
    WavBytes wb(3, 1, 8000, 64);
    wb.push_f64(0.123456789012345);
    wb.write(tmp("f64.wav"));
    CHECK(load_wav(tmp("f64.wav")).samples[0] == 0.123456789012345);
  }
}

TEST_CASE("load_wav failures are distinct") {
  CHECK_THROWS_AS(load_wav(tmp("does_not_exist.wav")), IoError);

  WavBytes adpcm(2, 1, 8000, 4);
  adpcm.push_int(0);
  adpcm.write(tmp("adpcm.wav"));
  CHECK_THROWS_AS(load_wav(tmp("adpcm.wav")), FormatError);

  WavBytes empty(1, 1, 8000, 16);
  empty.write(tmp("empty.wav"));
  CHECK_THROWS_WITH_AS(load_wav(tmp("empty.wav")), doctest::Contains("zero-length"), FormatError);

  WavBytes nofmt(1, 1, 8000, 16);
  nofmt.push_int(1);
  nofmt.write(tmp("nofmt.wav"), false, true);
  CHECK_THROWS_AS(load_wav(tmp("nofmt.wav")), FormatError);

  std::ofstream(tmp("text.wav")) << "hello";
  CHECK_THROWS_AS(load_wav(tmp("text.wav")), FormatError);
}

TEST_CASE("write_wav round trip") {
  Waveform w{{0.0, 0.5, -0.25, 0.999}, 22050};
  write_wav(tmp("rt32.wav"), w, WavEncoding::kFloat32);
  Waveform r = load_wav(tmp("rt32.wav"));
  CHECK(r.fs == 22050);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(r.samples[i] == static_cast<float>(w.samples[i]));
  write_wav(tmp("rt16.wav"), w, WavEncoding::kPcm16);
  Waveform r16 = load_wav(tmp("rt16.wav"));
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(r16.samples[i] - w.samples[i]) <= 0.5 / 32768);
}

TEST_CASE("remove_dc") {
  SUBCASE("constant becomes zero") {
    Waveform w{std::vector<double>(100, 0.5), 8000};
    for (double v : remove_dc(w).samples) CHECK(v == 0.0);
  }
  SUBCASE("zero-mean sinusoid unchanged") {
    // 20 whole periods: the mean is zero up to rounding.
    Waveform w{nebula_test::tone(8000, 8000, 20, 1.0, 0.0), 8000};
    Waveform r = remove_dc(w);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(r.samples[i] - w.samples[i]) < 1e-12);
  }
  SUBCASE("offset sinusoid recovers the sinusoid") {
    auto s = nebula_test::tone(8000, 8000, 20, 1.0, 0.0);
    Waveform w{s, 8000};
    for (double &v : w.samples) v += 0.3;
    Waveform r = remove_dc(w);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(r.samples[i] - s[i]) < 1e-9);
  }
  SUBCASE("idempotent") {
    Rng rng = make_stream(3, 0);
    std::normal_distribution<double> nd(0.2, 1.0);
    Waveform w{std::vector<double>(1000), 8000};
    for (double &v : w.samples) v = nd(rng);
    Waveform a = remove_dc(w), b = remove_dc(a);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.samples[i] - b.samples[i]) < 1e-12);
    double mean = std::accumulate(a.samples.begin(), a.samples.end(), 0.0) / a.size();
    CHECK(std::abs(mean) < 1e-9);
  }
}

TEST_CASE("dither") {
  SUBCASE("silence stays silent") {
    Rng rng = make_stream(1, 0);
    Waveform w{std::vector<double>(500, 0.0), 8000};
    for (double v : dither(w, rng).samples) CHECK(v == 0.0);
  }
  SUBCASE("added values bounded by 2% of the peak") {
    Rng rng = make_stream(1, 0);
    Waveform w{nebula_test::tone(4000, 8000, 100, 1.0, std::numbers::pi / 2), 8000};
    double peak = 0;
    for (double v : w.samples) peak = std::max(peak, std::abs(v));
    Waveform d = dither(w, rng);
    for (std::size_t i = 0; i < w.size(); ++i)
      CHECK(std::abs(d.samples[i] - w.samples[i]) <= 0.02 * peak);
  }
  SUBCASE("fixed seed is bit-reproducible") {
    Waveform w{nebula_test::tone(1000, 8000, 100), 8000};
    Rng a = make_stream(9, 4), b = make_stream(9, 4);
    CHECK(dither(w, a).samples == dither(w, b).samples);
  }
  SUBCASE("noise std matches the uniform law") {
    Rng rng = make_stream(2, 0);
    const std::size_t n = 200000;
    Waveform w{std::vector<double>(n, 0.0), 8000};
    w.samples[0] = 0.8;  // sets A
    Waveform d = dither(w, rng);
    double s = 0, s2 = 0;
    for (std::size_t i = 1; i < n; ++i) {
      s += d.samples[i];
      s2 += d.samples[i] * d.samples[i];
    }
    double m = s / (n - 1);
    double sd = std::sqrt(s2 / (n - 1) - m * m);
    double expect = 0.8 * 0.02 / std::sqrt(3.0);
    CHECK(std::abs(sd - expect) < 0.05 * expect);
  }
}

TEST_CASE("preprocessing keeps length and rate") {
  WavBytes wb(1, 1, 11025, 16);
  for (int i = 0; i < 777; ++i) wb.push_int((i * 37) % 2000 - 1000);
  wb.write(tmp("pp.wav"));
  Rng rng = make_stream(1, 0);
  Waveform w = dither(remove_dc(load_wav(tmp("pp.wav"))), rng);
  CHECK(w.size() == 777);
  CHECK(w.fs == 11025);
}

TEST_CASE("frame clock") {
  Waveform one_second{std::vector<double>(16000), 16000};
  FrameClock c = FrameClock::for_waveform(one_second, 0.005);
  CHECK(c.n_frames == 201);
  CHECK(c.time(200) == doctest::Approx(1.0));
  Waveform tiny{std::vector<double>(10), 16000};
  CHECK(FrameClock::for_waveform(tiny, 0.005).n_frames == 1);
  CHECK_THROWS_AS(FrameClock::for_waveform(one_second, 0.0), InvalidArgument);
}

TEST_CASE("waveform validation") {
  CHECK_THROWS_AS(validate(Waveform{{}, 8000}), InvalidArgument);
  CHECK_THROWS_AS(validate(Waveform{{0.0}, 0}), InvalidArgument);
  CHECK_THROWS_AS(validate(Waveform{{NAN}, 8000}), InvalidArgument);
  CHECK_NOTHROW(validate(Waveform{{0.0}, 8000}));
}
