// include/nebula/gmm.h

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

#ifndef NEBULA_GMM_H_
#define NEBULA_GMM_H_

#include <vector>

#include <Eigen/Dense>

#include "nebula/error.h"
#include "nebula/random.h"

namespace nebula {

/// Full-covariance Gaussian mixture over a joint vector whose last element is
/// the target and whose leading elements are the observed features.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }

  // Throws ModelError unless sizes agree, weights sum to 1 and every
  // covariance is symmetric positive definite.
  void validate() const;

  // log p(y) of the joint density.
  double log_density(const Eigen::VectorXd &y) const;
};

/// One-dimensional mixture over the target given the features.
struct Conditional1D {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;
};

struct EmOptions {
  int max_iterations = 500;
  double tolerance = 1e-6;  // per-sample log-likelihood improvement
  int patience = 3;         // consecutive iterations below tolerance
  double eigen_floor = 1e-6;
  int kmeans_iterations = 10;
};

struct EmReport {
  std::vector<double> loglik;  // per-sample mean, one entry per E-step
  int iterations = 0;
  bool converged = false;
};

/// EM failed to produce a usable mixture (e.g. rank-deficient data).
class DegenerateData : public Error {
 public:
  using Error::Error;
};

/// Fits an M-component mixture to the rows of `data` (n x D). Starts from
/// k-means++ seeding refined by a few Lloyd passes. Covariance eigenvalues are
/// floored at opts.eigen_floor, which is the constrained M-step maximiser, so
/// the log-likelihood never decreases. Requires n >= 10 M and finite data.
GaussianMixture fit_em(const Eigen::MatrixXd &data, int components, Rng &rng,
                       const EmOptions &opts = {}, EmReport *report = nullptr);

/// Precomputed conditioning of a mixture on its leading D - 1 coordinates.
class MixtureConditioner {
 public:
  MixtureConditioner() = default;
  explicit MixtureConditioner(const GaussianMixture &g);

  Conditional1D condition(const Eigen::Ref<const Eigen::VectorXd> &x) const;
  int feature_dim() const { return feature_dim_; }

 private:
  struct Component {
    double log_weight = 0;
    double log_norm = 0;  // -0.5 (d log 2 pi + log det Sigma_x)
    Eigen::VectorXd mean_x;
    double mean_t = 0;
    Eigen::MatrixXd chol_x;    // lower Cholesky factor of Sigma_x
    Eigen::RowVectorXd gain;   // Sigma_tx Sigma_x^-1
    double variance = 0;       // sigma_t - Sigma_tx Sigma_x^-1 Sigma_xt
  };
  std::vector<Component> comps_;
  std::vector<double> prior_;
  int feature_dim_ = 0;
};

/// Closed-form conditional of the target given features x. Falls back to the
/// prior weights if every responsibility underflows.
Conditional1D condition(const GaussianMixture &g, const Eigen::VectorXd &x);

/// log sum_m w_m N(f | mu_m, var_m), evaluated with log-sum-exp.
double log_density_1d(const Conditional1D &c, double f);

/// Per-dimension affine z-scoring fitted on training data.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd &data);
  Eigen::MatrixXd apply(const Eigen::MatrixXd &data) const;
};

}  // namespace nebula

#endif  // NEBULA_GMM_H_
