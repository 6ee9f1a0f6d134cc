// src/metrics.cc

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

#include "nebula/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "nebula/error.h"

namespace nebula {

double PitchTrack::hop() const {
  if (frames.size() < 2) return 0;
  const double h = frames[1].time - frames[0].time;
  if (!(h > 0)) throw InvalidArgument("track times must increase");
  for (std::size_t i = 2; i < frames.size(); ++i) {
    double d = frames[i].time - frames[i - 1].time;
    if (std::abs(d - h) > 1e-6 * h + 1e-9) throw InvalidArgument("track is not uniformly sampled");
  }
  return h;
}

PitchTrack resample_track(const PitchTrack &track, double target_hop, std::optional<double> start) {
  if (track.frames.empty()) throw InvalidArgument("cannot resample an empty track");
  if (!(target_hop > 0)) throw InvalidArgument("target hop must be positive");
  const double hop = track.hop();
  const double t0 = track.frames.front().time;
  const double t_end = track.frames.back().time;
  const double first = start.value_or(t0);
  const double eps = 1e-9 * std::max(1.0, std::abs(t_end));

  PitchTrack out;
  if (hop == 0) {
    if (std::abs(first - t0) <= eps) out.frames.push_back(track.frames.front());
    return out;
  }
  const std::size_t n = track.frames.size();
  for (long i = 0;; ++i) {
    const double t = first + static_cast<double>(i) * target_hop;
    if (t > t_end + eps) break;
    if (t < t0 - eps) continue;
    const double u = std::clamp((t - t0) / hop, 0.0, static_cast<double>(n - 1));
    const std::size_t lo = std::min(static_cast<std::size_t>(std::floor(u)), n - 1);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = u - static_cast<double>(lo);
    const PitchFrame &nearest = track.frames[frac < 0.5 ? lo : hi];
    PitchFrame f;
    f.time = t;
    f.voiced = nearest.is_voiced();
    f.f0 = nearest.f0;
    f.peak_loglik = nearest.peak_loglik;
    const PitchFrame &a = track.frames[lo], &b = track.frames[hi];
    if (f.voiced && a.is_voiced() && b.is_voiced())
      f.f0 = std::exp((1 - frac) * std::log(a.f0) + frac * std::log(b.f0));
    out.frames.push_back(f);
  }
  return out;
}

EvalReport evaluate(const PitchTrack &est, const PitchTrack &ref) {
  if (est.frames.empty() || ref.frames.empty()) throw InvalidArgument("cannot evaluate empty tracks");
  const double he = est.hop(), hr = ref.hop();
  if (he > 0 && hr > 0 && std::abs(he - hr) > 1e-6 * hr)
    throw InvalidArgument("estimate and reference hops differ; resample first");
  const double hop = hr > 0 ? hr : he;
  const double t0 = est.frames.front().time;

  EvalReport r;
  for (const PitchFrame &rf : ref.frames) {
    std::size_t j = 0;
    if (hop > 0) {
      const double u = std::round((rf.time - t0) / hop);
      if (u < 0 || u >= static_cast<double>(est.frames.size())) continue;
      j = static_cast<std::size_t>(u);
    }
    const PitchFrame &ef = est.frames[j];
    if (std::abs(ef.time - rf.time) > 0.25 * (hop > 0 ? hop : 1e-9) + 1e-9) continue;
    ++r.total;
    const bool rv = rf.is_voiced(), ev = ef.is_voiced();
    if (rv) ++r.ref_voiced; else ++r.ref_unvoiced;
    if (rv && ev) {
      ++r.both_voiced;
      if (std::abs(ef.f0 - rf.f0) / rf.f0 > kGrossErrorRatio) ++r.gross_errors;
    } else if (rv != ev) {
      ++r.voicing_errors;
      if (rv) ++r.voiced_missed; else ++r.false_voiced;
    }
  }
  if (r.total == 0) throw InvalidArgument("estimate and reference do not overlap in time");
  auto pct = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
  };
  r.gpe = pct(r.gross_errors, r.both_voiced);
  r.vde = pct(r.voicing_errors, r.total);
  r.vde_v = pct(r.voiced_missed, r.ref_voiced);
  r.vde_u = pct(r.false_voiced, r.ref_unvoiced);
  r.ffe = pct(r.gross_errors + r.voicing_errors, r.total);
  return r;
}

namespace {

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string &cell, std::size_t line_no, const char *what) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception &) {
    throw FormatError("line " + std::to_string(line_no) + ": bad " + what + " value '" + cell + "'");
  }
}

}  // namespace

PitchTrack parse_track_csv(const std::string &text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  int col_time = -1, col_f0 = -1, col_voiced = -1, col_peak = -1;
  PitchTrack track;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      auto cells = split_csv(line);
      for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
        const std::string &c = cells[i];
        if (c == "time_s" || c == "time") col_time = i;
        else if (c == "f0_hz" || c == "f0") col_f0 = i;
        else if (c == "voiced") col_voiced = i;
        else if (c == "peak_loglik") col_peak = i;
      }
      if (col_time < 0 || col_f0 < 0)
        throw FormatError("line 1: missing header with time_s and f0_hz columns");
      header = true;
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_csv(line);
    const int need = std::max({col_time, col_f0, col_voiced, col_peak});
    if (static_cast<int>(cells.size()) <= need)
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(need + 1) + " columns");
    PitchFrame f;
    f.time = parse_number(cells[col_time], line_no, "time");
    f.f0 = parse_number(cells[col_f0], line_no, "f0");
    f.voiced = f.f0 > 0;
    if (col_voiced >= 0) {
      const std::string &v = cells[col_voiced];
      if (v == "1") f.voiced = f.f0 > 0;
      else if (v == "0") f.voiced = false;
      else throw FormatError("line " + std::to_string(line_no) + ": voiced must be 0 or 1");
    }
    if (col_peak >= 0) f.peak_loglik = parse_number(cells[col_peak], line_no, "peak_loglik");
    track.frames.push_back(f);
  }
  if (!header) throw FormatError("line 1: missing header with time_s and f0_hz columns");
  return track;
}

PitchTrack read_track_csv(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return parse_track_csv(text);
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string format_track_csv(const PitchTrack &track, bool with_peaks) {
  std::string out = with_peaks ? "time_s,f0_hz,voiced,peak_loglik\n" : "time_s,f0_hz,voiced\n";
  char buf[128];
  for (const auto &f : track.frames) {
    if (with_peaks)
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%d,%.9g\n", f.time, f.f0, f.voiced ? 1 : 0, f.peak_loglik);
    else
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%d\n", f.time, f.f0, f.voiced ? 1 : 0);
    out += buf;
  }
  return out;
}

void write_track_csv(const std::string &path, const PitchTrack &track, bool with_peaks) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << format_track_csv(track, with_peaks);
  if (!os) throw IoError("write error on " + path);
}

}  // namespace nebula
