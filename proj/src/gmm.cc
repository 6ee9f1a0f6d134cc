// src/gmm.cc

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

#include "nebula/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace nebula {

namespace {

const double kLog2Pi = std::log(2 * std::numbers::pi);

double log_sum_exp(const double *v, int n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd &cov, double floor) {
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) return sym;
  if (es.eigenvalues().minCoeff() >= floor) return sym;
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// Column-major samples (D x n).
struct EmState {
  const Eigen::MatrixXd &x;
  GaussianMixture g;
  Eigen::MatrixXd resp;  // M x n
};

// Fills resp with responsibilities and returns the mean log-likelihood.
double e_step(EmState &s) {
  const int m_count = s.g.components();
  const Eigen::Index n = s.x.cols();
  const int d = static_cast<int>(s.x.rows());
  Eigen::MatrixXd logp(m_count, n);
  for (int m = 0; m < m_count; ++m) {
    if (s.g.weights[m] <= 0) {
      logp.row(m).setConstant(-std::numeric_limits<double>::infinity());
      continue;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(s.g.covariances[m]);
    if (llt.info() != Eigen::Success) throw DegenerateData("covariance lost definiteness");
    Eigen::MatrixXd centred = s.x.colwise() - s.g.means[m];
    llt.matrixL().solveInPlace(centred);
    double log_det = 2 * llt.matrixLLT().diagonal().array().log().sum();
    double c = std::log(s.g.weights[m]) - 0.5 * (d * kLog2Pi + log_det);
    logp.row(m) = (c - 0.5 * centred.colwise().squaredNorm().array()).matrix();
  }
  s.resp.resize(m_count, n);
  double total = 0;
  std::vector<double> col(m_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int m = 0; m < m_count; ++m) col[m] = logp(m, i);
    double lse = log_sum_exp(col.data(), m_count);
    if (!std::isfinite(lse)) throw DegenerateData("sample has zero likelihood");
    total += lse;
    for (int m = 0; m < m_count; ++m) s.resp(m, i) = std::exp(col[m] - lse);
  }
  return total / static_cast<double>(n);
}

void m_step(EmState &s, double eigen_floor) {
  const int m_count = s.g.components();
  const double n = static_cast<double>(s.x.cols());
  const double d = static_cast<double>(s.x.rows());
  for (int m = 0; m < m_count; ++m) {
    const double nm = s.resp.row(m).sum();
    s.g.weights[m] = nm / n;
    // Too little mass to re-estimate: keep the previous parameters, which
    // leaves this component's share of the EM objective unchanged.
    if (nm <= d) continue;
    Eigen::VectorXd mu = s.x * s.resp.row(m).transpose() / nm;
    Eigen::MatrixXd centred = s.x.colwise() - mu;
    Eigen::MatrixXd weighted = centred.array().rowwise() * s.resp.row(m).array();
    Eigen::MatrixXd cov = weighted * centred.transpose() / nm;
    s.g.means[m] = mu;
    s.g.covariances[m] = floor_eigenvalues(cov, eigen_floor);
  }
  double sum = 0;
  for (double w : s.g.weights) sum += w;
  for (double &w : s.g.weights) w /= sum;
}

GaussianMixture kmeans_init(const Eigen::MatrixXd &x, int m_count, Rng &rng,
                            const EmOptions &opts) {
  const Eigen::Index n = x.cols();
  const int d = static_cast<int>(x.rows());
  std::vector<Eigen::VectorXd> centres;
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centres.push_back(x.col(pick(rng)));
  Eigen::VectorXd dist2 = (x.colwise() - centres[0]).colwise().squaredNorm().transpose();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(centres.size()) < m_count) {
    double total = dist2.sum();
    Eigen::Index chosen = pick(rng);
    if (total > 0) {
      double target = unit(rng) * total, acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    }
    centres.push_back(x.col(chosen));
    dist2 = dist2.cwiseMin((x.colwise() - centres.back()).colwise().squaredNorm().transpose());
  }

  std::vector<int> label(n, 0);
  auto assign = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int m = 0; m < m_count; ++m) {
        double dd = (x.col(i) - centres[m]).squaredNorm();
        if (dd < best) {
          best = dd;
          label[i] = m;
        }
      }
    }
  };
  for (int it = 0; it < opts.kmeans_iterations; ++it) {
    assign();
    std::vector<Eigen::VectorXd> sums(m_count, Eigen::VectorXd::Zero(d));
    std::vector<int> counts(m_count, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums[label[i]] += x.col(i);
      ++counts[label[i]];
    }
    for (int m = 0; m < m_count; ++m)
      if (counts[m] > 0) centres[m] = sums[m] / counts[m];
  }
  assign();

  Eigen::VectorXd global_mean = x.rowwise().mean();
  Eigen::MatrixXd gc = x.colwise() - global_mean;
  Eigen::MatrixXd global_cov = gc * gc.transpose() / static_cast<double>(n);

  GaussianMixture g;
  for (int m = 0; m < m_count; ++m) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i)
      if (label[i] == m) members.push_back(i);
    Eigen::MatrixXd cov = global_cov;
    Eigen::VectorXd mean = centres[m];
    if (static_cast<int>(members.size()) > d) {
      Eigen::MatrixXd sub(d, static_cast<Eigen::Index>(members.size()));
      for (std::size_t j = 0; j < members.size(); ++j) sub.col(j) = x.col(members[j]);
      mean = sub.rowwise().mean();
      Eigen::MatrixXd c = sub.colwise() - mean;
      cov = c * c.transpose() / static_cast<double>(members.size());
    }
    g.weights.push_back(std::max<double>(members.size(), 1.0));
    g.means.push_back(mean);
    g.covariances.push_back(floor_eigenvalues(cov, opts.eigen_floor));
  }
  double sum = 0;
  for (double w : g.weights) sum += w;
  for (double &w : g.weights) w /= sum;
  return g;
}

}  // namespace

void GaussianMixture::validate() const {
  const int m = components();
  if (m == 0) throw ModelError("mixture has no components");
  if (static_cast<int>(means.size()) != m || static_cast<int>(covariances.size()) != m)
    throw ModelError("mixture parameter counts disagree");
  const int d = dim();
  double sum = 0;
  for (int i = 0; i < m; ++i) {
    if (!(weights[i] >= 0)) throw ModelError("negative mixture weight");
    sum += weights[i];
    if (means[i].size() != d || covariances[i].rows() != d || covariances[i].cols() != d)
      throw ModelError("mixture component has inconsistent dimensions");
    if (!covariances[i].isApprox(covariances[i].transpose(), 1e-12))
      throw ModelError("covariance is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(covariances[i]);
    if (llt.info() != Eigen::Success) throw ModelError("covariance is not positive definite");
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ModelError("mixture weights do not sum to 1");
}

double GaussianMixture::log_density(const Eigen::VectorXd &y) const {
  std::vector<double> terms;
  for (int m = 0; m < components(); ++m) {
    if (weights[m] <= 0) continue;
    Eigen::LLT<Eigen::MatrixXd> llt(covariances[m]);
    Eigen::VectorXd z = llt.matrixL().solve(y - means[m]);
    double log_det = 2 * llt.matrixLLT().diagonal().array().log().sum();
    terms.push_back(std::log(weights[m]) - 0.5 * (dim() * kLog2Pi + log_det + z.squaredNorm()));
  }
  return log_sum_exp(terms.data(), static_cast<int>(terms.size()));
}

GaussianMixture fit_em(const Eigen::MatrixXd &data, int components, Rng &rng,
                       const EmOptions &opts, EmReport *report) {
  if (components < 1) throw InvalidArgument("need at least one component");
  if (data.rows() < 10 * static_cast<Eigen::Index>(components))
    throw InvalidArgument("EM needs at least 10 samples per component (" +
                          std::to_string(data.rows()) + " for " +
                          std::to_string(components) + ")");
  if (!data.allFinite()) throw InvalidArgument("EM data contains non-finite values");

  const Eigen::MatrixXd x = data.transpose();
  EmState s{x, kmeans_init(x, components, rng, opts), {}};
  EmReport local;
  EmReport &rep = report ? *report : local;
  rep = EmReport{};

  double ll = e_step(s);
  rep.loglik.push_back(ll);
  int stalled = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    m_step(s, opts.eigen_floor);
    double next = e_step(s);
    rep.loglik.push_back(next);
    rep.iterations = it + 1;
    stalled = (next - ll < opts.tolerance) ? stalled + 1 : 0;
    ll = next;
    if (stalled >= opts.patience) {
      rep.converged = true;
      break;
    }
  }
  if (!std::isfinite(ll)) throw DegenerateData("log-likelihood is not finite");
  s.g.validate();
  return s.g;
}

MixtureConditioner::MixtureConditioner(const GaussianMixture &g) {
  const int d = g.dim() - 1;
  if (d < 1) throw InvalidArgument("conditioning needs at least one feature");
  feature_dim_ = d;
  for (int m = 0; m < g.components(); ++m) {
    prior_.push_back(g.weights[m]);
    Component c;
    c.log_weight = g.weights[m] > 0 ? std::log(g.weights[m])
                                    : -std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd &cov = g.covariances[m];
    Eigen::MatrixXd sxx = cov.topLeftCorner(d, d);
    Eigen::VectorXd sxt = cov.topRightCorner(d, 1);
    Eigen::LLT<Eigen::MatrixXd> llt(sxx);
    if (llt.info() != Eigen::Success) throw ModelError("feature covariance is not positive definite");
    c.chol_x = llt.matrixL();
    c.mean_x = g.means[m].head(d);
    c.mean_t = g.means[m][d];
    c.gain = llt.solve(sxt).transpose();
    c.variance = cov(d, d) - (c.gain * sxt)(0, 0);
    if (!(c.variance > 0)) throw ModelError("conditional variance is not positive");
    double log_det = 2 * c.chol_x.diagonal().array().log().sum();
    c.log_norm = -0.5 * (d * kLog2Pi + log_det);
    comps_.push_back(std::move(c));
  }
}

Conditional1D MixtureConditioner::condition(const Eigen::Ref<const Eigen::VectorXd> &x) const {
  const int m_count = static_cast<int>(comps_.size());
  Conditional1D out;
  out.weights.resize(m_count);
  out.means.resize(m_count);
  out.variances.resize(m_count);
  std::vector<double> logw(m_count);
  for (int m = 0; m < m_count; ++m) {
    const Component &c = comps_[m];
    Eigen::VectorXd diff = x - c.mean_x;
    out.means[m] = c.mean_t + c.gain.dot(diff);
    out.variances[m] = c.variance;
    c.chol_x.triangularView<Eigen::Lower>().solveInPlace(diff);
    logw[m] = c.log_weight + c.log_norm - 0.5 * diff.squaredNorm();
  }
  double lse = log_sum_exp(logw.data(), m_count);
  if (std::isfinite(lse)) {
    for (int m = 0; m < m_count; ++m) out.weights[m] = std::exp(logw[m] - lse);
  } else {
    out.weights = prior_;
  }
  return out;
}

Conditional1D condition(const GaussianMixture &g, const Eigen::VectorXd &x) {
  return MixtureConditioner(g).condition(x);
}

double log_density_1d(const Conditional1D &c, double f) {
  const int m_count = static_cast<int>(c.weights.size());
  std::vector<double> terms;
  terms.reserve(m_count);
  for (int m = 0; m < m_count; ++m) {
    if (c.weights[m] <= 0) continue;
    double z = f - c.means[m];
    terms.push_back(std::log(c.weights[m]) -
                    0.5 * (kLog2Pi + std::log(c.variances[m]) + z * z / c.variances[m]));
  }
  return log_sum_exp(terms.data(), static_cast<int>(terms.size()));
}

Standardizer Standardizer::fit(const Eigen::MatrixXd &data) {
  Standardizer s;
  s.mean = data.colwise().mean().transpose();
  Eigen::MatrixXd centred = data.rowwise() - s.mean.transpose();
  s.scale = (centred.colwise().squaredNorm() / static_cast<double>(data.rows()))
                .cwiseSqrt()
                .transpose();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i)
    if (!(s.scale[i] > 1e-12)) s.scale[i] = 1.0;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd &data) const {
  return (data.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace nebula
