// src/features.cc

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

#include "nebula/features.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <unordered_map>

#include <Eigen/Dense>

#include "nebula/error.h"
#include "nebula/parallel.h"

namespace nebula {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 2 * std::numbers::pi;

// Window extent in samples: largest odd length within window_len.
int window_samples(double window_len, int fs) {
  int n = static_cast<int>(std::floor(window_len * fs));
  if (n % 2 == 0) --n;
  return std::max(n, 5);
}

// Signal excerpt x[c - half .. c + half] with zero padding, and its Hann
// window (period n + 1, endpoints excluded).
struct Frame {
  std::vector<double> x;
  const std::vector<double> &hann;
  int half = 0;
};

// Hann window of length n with period n + 1 (both zero endpoints dropped).
const std::vector<double> &hann_window(int n) {
  thread_local std::unordered_map<int, std::vector<double>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> h(n);
  for (int i = 0; i < n; ++i) h[i] = 0.5 - 0.5 * std::cos(kTwoPi * (i + 1) / (n + 1));
  return cache.emplace(n, std::move(h)).first->second;
}

Frame cut_frame(const Waveform &w, double t, int n) {
  Frame f{std::vector<double>(n, 0.0), hann_window(n), n / 2};
  const long centre = std::lround(t * w.fs);
  const long size = static_cast<long>(w.size());
  for (int i = 0; i < n; ++i) {
    long k = centre - f.half + i;
    if (k >= 0 && k < size) f.x[i] = w.samples[k];
  }
  return f;
}

// Weighted least-squares fit x ~ a cos(wn) + b sin(wn), n relative to centre.
struct SineFit {
  double a = 0, b = 0;
};

SineFit fit_sine(const Frame &f, double omega) {
  double cc = 0, ss = 0, cs = 0, xc = 0, xs = 0;
  const int n = static_cast<int>(f.x.size());
  cd rot = std::polar(1.0, omega);
  cd ph = std::polar(1.0, -omega * f.half);
  for (int i = 0; i < n; ++i, ph *= rot) {
    double h = f.hann[i], c = ph.real(), s = ph.imag();
    cc += h * c * c;
    ss += h * s * s;
    cs += h * c * s;
    xc += h * f.x[i] * c;
    xs += h * f.x[i] * s;
  }
  double det = cc * ss - cs * cs;
  if (!(std::abs(det) > 1e-300)) return {};
  return {(xc * ss - xs * cs) / det, (xs * cc - xc * cs) / det};
}

// One Gauss-Newton step on the frequency of a weighted sinusoid fit, using
// the linearisation A cos((w + d) n + p) ~ A cos(w n + p) - A d n sin(w n + p).
// Returns false when the fit is degenerate.
bool gauss_newton_step(const Frame &f, double omega, double *delta) {
  Eigen::Matrix4d normal = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  const int n = static_cast<int>(f.x.size());
  cd rot = std::polar(1.0, omega);
  cd ph = std::polar(1.0, -omega * f.half);
  for (int i = 0; i < n; ++i, ph *= rot) {
    double m = i - f.half;
    Eigen::Vector4d basis(ph.real(), ph.imag(), m * ph.real(), m * ph.imag());
    normal.selfadjointView<Eigen::Upper>().rankUpdate(basis, f.hann[i]);
    rhs += (f.hann[i] * f.x[i]) * basis;
  }
  Eigen::Matrix4d full = normal.selfadjointView<Eigen::Upper>();
  Eigen::LDLT<Eigen::Matrix4d> ldlt(full);
  if (ldlt.info() != Eigen::Success) return false;
  Eigen::Vector4d coef = ldlt.solve(rhs);
  double amp2 = coef[0] * coef[0] + coef[1] * coef[1];
  if (!(amp2 > 0) || !coef.allFinite()) return false;
  *delta = (coef[2] * coef[1] - coef[3] * coef[0]) / amp2;
  return std::isfinite(*delta);
}

double clamp_snr(double db) { return std::clamp(db, -kSnrClampDb, kSnrClampDb); }

}  // namespace

std::vector<ChannelSpec> make_filterbank(double f_lo, double f_hi, int n) {
  if (!(f_lo > 0) || !(f_hi > f_lo) || n < 2)
    throw InvalidArgument("filterbank needs 0 < f_lo < f_hi and n >= 2");
  std::vector<ChannelSpec> bank(n);
  for (int i = 0; i < n; ++i) {
    double fc = f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / (n - 1));
    if (i == n - 1) fc = f_hi;
    bank[i] = {i, fc, std::max(4.0 / fc, 0.01)};
  }
  return bank;
}

SnrIf estimate_snr_if(const Waveform &w, double t, double f_probe, double window_len) {
  if (!(f_probe > 0) || !(f_probe < 0.5 * w.fs))
    throw InvalidArgument("probe frequency must lie in (0, fs/2)");
  const int n = window_samples(window_len, w.fs);
  Frame f = cut_frame(w, t, n);

  double energy = 0;
  for (int i = 0; i < n; ++i) energy += f.hann[i] * f.x[i] * f.x[i];
  SnrIf out;
  out.if_hz = f_probe;
  if (!(energy > 0)) return out;

  const double w_probe = kTwoPi * f_probe / w.fs;
  const double w_lo = w_probe * std::numbers::sqrt2 / 2;
  const double w_hi = std::min(w_probe * std::numbers::sqrt2, 0.98 * std::numbers::pi);

  // Heterodyne at two instants one sample apart (windows of length n - 1).
  cd z1 = 0, z2 = 0;
  {
    const std::vector<double> &stagger = hann_window(n - 1);
    cd rot = std::polar(1.0, -w_probe);
    cd ph = 1.0;
    for (int i = 0; i + 1 < n; ++i, ph *= rot) {
      double h = stagger[i];
      z1 += h * f.x[i] * ph;
      z2 += h * f.x[i + 1] * ph * rot;
    }
  }
  double omega = w_probe;
  if (std::abs(z1) > 0 && std::abs(z2) > 0)
    omega = std::clamp(w_probe + std::arg(z2 * std::conj(z1)), w_lo, w_hi);

  for (int iter = 0; iter < 3; ++iter) {
    double delta = 0;
    if (!gauss_newton_step(f, omega, &delta)) break;
    double next = omega + delta;
    if (!(next >= w_lo && next <= w_hi)) break;
    omega = next;
    if (std::abs(delta) < 1e-12 * omega) break;
  }
  out.if_hz = omega * w.fs / kTwoPi;

  SineFit fit = fit_sine(f, omega);
  double sum_h = 0;
  for (double h : f.hann) sum_h += h;
  const double p_sine = 0.5 * (fit.a * fit.a + fit.b * fit.b);

  // Residual spectrum at (1 + k / 2) w, k = -1, 1, 3, 5: midway between
  // harmonics of the IF. Only one spot below w, the next one down would
  // mirror it.
  std::vector<double> resid(n);
  {
    cd rot = std::polar(1.0, omega);
    cd ph = std::polar(1.0, -omega * f.half);
    for (int i = 0; i < n; ++i, ph *= rot)
      resid[i] = f.hann[i] * (f.x[i] - fit.a * ph.real() - fit.b * ph.imag());
  }
  const double spacing = 0.5 * omega;
  double p_resid = 0;
  int spots = 0;
  for (double k : {-1.0, 1.0, 3.0, 5.0}) {
    const double wk = omega + k * spacing;
    if (wk >= std::numbers::pi) break;
    cd acc = 0, rot = std::polar(1.0, -wk), ph = 1.0;
    for (int i = 0; i < n; ++i, ph *= rot) acc += resid[i] * ph;
    p_resid += 2.0 * std::norm(acc) / (sum_h * sum_h);
    ++spots;
  }
  p_resid /= spots;

  if (!(p_sine > 0))
    out.snr_db = -kSnrClampDb;
  else if (!(p_resid > 0))
    out.snr_db = kSnrClampDb;
  else
    out.snr_db = clamp_snr(10.0 * std::log10(p_sine / p_resid));
  return out;
}

ChannelFeatureVector extract_frame(const Waveform &w, double t, const ChannelSpec &ch) {
  const double nyquist = 0.5 * w.fs;
  ChannelFeatureVector v;
  auto probe = [&](double f) -> SnrIf {
    if (!(f < nyquist)) return {};
    return estimate_snr_if(w, t, f, ch.window_len);
  };
  SnrIf half = probe(0.5 * ch.fc);
  SnrIf base = probe(ch.fc);
  SnrIf twice = probe(2.0 * ch.fc);
  v.snr0 = half.snr_db;
  v.snr1 = base.snr_db;
  v.snr2 = twice.snr_db;
  if (ch.fc < nyquist) v.if1 = std::log2(base.if_hz / ch.fc);
  if (2.0 * ch.fc < nyquist) v.if2 = std::log2(twice.if_hz / (2.0 * ch.fc));
  return v;
}

FeatureMatrix extract_all(const Waveform &w, const FrameClock &clock,
                          const std::vector<ChannelSpec> &bank) {
  FeatureMatrix out(clock.n_frames, std::vector<ChannelFeatureVector>(bank.size()));
  parallel_for(clock.n_frames, [&](std::size_t i) {
    for (std::size_t k = 0; k < bank.size(); ++k)
      out[i][k] = extract_frame(w, clock.time(i), bank[k]);
  });
  return out;
}

}  // namespace nebula
