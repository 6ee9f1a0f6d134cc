// tests/unit/test_gmm.cc

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
#include "gmm_oracle.h"
#include "nebula/error.h"
#include "nebula/gmm.h"
#include "nebula/random.h"

using namespace nebula;

namespace {

Eigen::MatrixXd gaussian_sample(int n, const Eigen::VectorXd &mu, const Eigen::MatrixXd &cov, Rng &rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd l = cov.llt().matrixL();
  Eigen::MatrixXd out(n, mu.size());
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z(mu.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = nd(rng);
    out.row(i) = (mu + l * z).transpose();
  }
  return out;
}

}  // namespace

TEST_CASE("single Gaussian, one component: EM lands on the sample moments") {
  Rng rng = make_stream(31, 0);
  Eigen::VectorXd mu(6);
  mu << 1, -2, 0.5, 3, 0, -1;
  Eigen::MatrixXd cov = nebula_test::random_spd(6, rng, 0.3);
  const int n = 4000;
  Eigen::MatrixXd data = gaussian_sample(n, mu, cov, rng);
  Rng em_rng = make_stream(31, 1);
  GaussianMixture g = fit_em(data, 1, em_rng);
  REQUIRE(g.components() == 1);

  Eigen::VectorXd mean = data.colwise().mean().transpose();
  Eigen::MatrixXd centred = data.rowwise() - mean.transpose();
  Eigen::MatrixXd sample_cov = centred.transpose() * centred / n;
  CHECK((g.means[0] - mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((g.covariances[0] - sample_cov).cwiseAbs().maxCoeff() < 1e-10);
  // Within three standard errors of the generating mean.
  for (int j = 0; j < 6; ++j) CHECK(std::abs(g.means[0][j] - mu[j]) < 3 * std::sqrt(cov(j, j) / n));
  CHECK(g.weights[0] == 1.0);
}

TEST_CASE("EM log-likelihood never decreases") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    Rng rng = make_stream(32, seed);
    GaussianMixture truth = nebula_test::random_mixture(3, 4, rng);
    std::discrete_distribution<int> pick(truth.weights.begin(), truth.weights.end());
    Eigen::MatrixXd data(1500, 4);
    for (int i = 0; i < 1500; ++i) {
      int m = pick(rng);
      data.row(i) = gaussian_sample(1, truth.means[m], truth.covariances[m], rng);
    }
    // A heavy-tailed column on top.
    std::cauchy_distribution<double> cd;
    for (int i = 0; i < 1500; i += 7) data(i, 2) += cd(rng);
    EmReport rep;
    Rng em_rng = make_stream(32, 100 + seed);
    GaussianMixture g = fit_em(data, 5, em_rng, {}, &rep);
    CHECK_NOTHROW(g.validate());
    REQUIRE(rep.loglik.size() >= 2);
    for (std::size_t i = 1; i < rep.loglik.size(); ++i)
      CHECK(rep.loglik[i] >= rep.loglik[i - 1] - 1e-12 * std::abs(rep.loglik[i - 1]));
    CHECK(rep.iterations <= 500);
  }
}

TEST_CASE("EM is deterministic under a fixed seed") {
  Rng rng = make_stream(33, 0);
  GaussianMixture truth = nebula_test::random_mixture(2, 3, rng);
  Eigen::MatrixXd data(600, 3);
  for (int i = 0; i < 600; ++i) data.row(i) = gaussian_sample(1, truth.means[i % 2], truth.covariances[i % 2], rng);
  Rng a = make_stream(7, 7), b = make_stream(7, 7);
  GaussianMixture ga = fit_em(data, 3, a), gb = fit_em(data, 3, b);
  CHECK(ga.weights == gb.weights);
  for (int m = 0; m < 3; ++m) {
    CHECK(ga.means[m] == gb.means[m]);
    CHECK(ga.covariances[m] == gb.covariances[m]);
  }
}

TEST_CASE("EM floors covariance eigenvalues and checks preconditions") {
  Rng rng = make_stream(34, 0);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd data(200, 3);
  for (int i = 0; i < 200; ++i) data.row(i) << nd(rng), 2.0, nd(rng);  // constant column
  GaussianMixture g = fit_em(data, 2, rng);
  for (const auto &c : g.covariances) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    CHECK(es.eigenvalues().minCoeff() >= 1e-6 * (1 - 1e-9));
  }
  CHECK_THROWS_AS(fit_em(data.topRows(19), 2, rng), InvalidArgument);
  Eigen::MatrixXd bad = data;
  bad(3, 1) = NAN;
  CHECK_THROWS_AS(fit_em(bad, 2, rng), InvalidArgument);
}

TEST_CASE("conditioning with zero cross-covariance returns the target marginal") {
  GaussianMixture g;
  g.weights = {1.0};
  Eigen::VectorXd mu(3);
  mu << 0.3, -1, 2.5;
  g.means = {mu};
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  cov.topLeftCorner(2, 2) << 2, 0.4, 0.4, 1;
  cov(2, 2) = 0.7;
  g.covariances = {cov};
  Rng rng = make_stream(35, 0);
  std::normal_distribution<double> nd(0, 3);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd x(2);
    x << nd(rng), nd(rng);
    Conditional1D c = condition(g, x);
    CHECK(c.weights[0] == 1.0);
    CHECK(c.means[0] == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(c.variances[0] == doctest::Approx(0.7).epsilon(1e-14));
  }
}

TEST_CASE("two-component 2-D conditional matches the normalised joint slice") {
  GaussianMixture g;
  g.weights = {0.35, 0.65};
  Eigen::VectorXd m0(2), m1(2);
  m0 << -1, 0.5;
  m1 << 1.5, -0.8;
  g.means = {m0, m1};
  Eigen::MatrixXd c0(2, 2), c1(2, 2);
  c0 << 1.0, 0.6, 0.6, 0.9;
  c1 << 0.5, -0.2, -0.2, 0.3;
  g.covariances = {c0, c1};
  for (double xv : {-2.0, 0.0, 0.7, 2.5}) {
    Eigen::VectorXd x(1);
    x << xv;
    std::vector<double> ts;
    for (int i = 0; i < 50; ++i) ts.push_back(-4 + 8.0 * i / 49);
    auto ref = nebula_test::slice_conditional(g, x, ts, -30, 30);
    Conditional1D c = condition(g, x);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      double p = std::exp(log_density_1d(c, ts[i]));
      INFO("x = " << xv << " t = " << ts[i]);
      CHECK(std::abs(p - ref[i]) <= 1e-6 * ref[i] + 1e-300);
    }
  }
}

TEST_CASE("conditional weights sum to one") {
  Rng rng = make_stream(36, 0);
  GaussianMixture g = nebula_test::random_mixture(6, 6, rng);
  MixtureConditioner mc(g);
  std::normal_distribution<double> nd(0, 2);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd x(5);
    for (int j = 0; j < 5; ++j) x[j] = nd(rng);
    Conditional1D c = mc.condition(x);
    double s = std::accumulate(c.weights.begin(), c.weights.end(), 0.0);
    CHECK(std::abs(s - 1) < 1e-10);
    for (double v : c.variances) CHECK(v > 0);
  }
}

TEST_CASE("underflowing responsibilities fall back to the prior weights") {
  Rng rng = make_stream(37, 0);
  GaussianMixture g = nebula_test::random_mixture(3, 3, rng);
  Eigen::VectorXd x(2);
  x << 1e200, -1e200;
  Conditional1D c = condition(g, x);
  for (int m = 0; m < 3; ++m) CHECK(c.weights[m] == g.weights[m]);
}

TEST_CASE("KL between conditioning and a discretised conditional") {
  Rng rng = make_stream(38, 0);
  for (int trial = 0; trial < 5; ++trial) {
    GaussianMixture g = nebula_test::random_mixture(3, 3, rng);
    Eigen::VectorXd x = g.means[trial % 3].head(2);
    Conditional1D c = condition(g, x);
    const double lo = -25, hi = 25;
    const int n = 20001;
    std::vector<double> ts(n);
    for (int i = 0; i < n; ++i) ts[i] = lo + (hi - lo) * i / (n - 1);
    auto ref = nebula_test::slice_conditional(g, x, ts, lo, hi);
    const double h = (hi - lo) / (n - 1);
    double kl = 0;
    for (int i = 0; i < n; ++i) {
      double p = ref[i];
      if (p <= 0) continue;
      double q = std::exp(log_density_1d(c, ts[i]));
      kl += p * std::log(p / q) * h;
    }
    CHECK(std::abs(kl) < 1e-8);
  }
}

TEST_CASE("1-D mixture log density") {
  Conditional1D unit{{1.0}, {0.0}, {1.0}};
  CHECK(log_density_1d(unit, 0.0) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));
  CHECK(log_density_1d(unit, 0.0) == doctest::Approx(-0.9189).epsilon(1e-4));
  double far = log_density_1d(unit, 1e6);
  CHECK(std::isfinite(far));
  CHECK(far < -1e11);

  Conditional1D c{{0.2, 0.5, 0.3}, {-1.0, 0.4, 2.0}, {0.3, 1.2, 0.05}};
  for (double f : {-3.0, -1.0, 0.0, 0.4, 1.9, 2.2, 5.0}) {
    double naive = 0;
    for (int m = 0; m < 3; ++m)
      naive += c.weights[m] * std::exp(-0.5 * (f - c.means[m]) * (f - c.means[m]) / c.variances[m]) /
               std::sqrt(2 * std::numbers::pi * c.variances[m]);
    CHECK(std::abs(log_density_1d(c, f) - std::log(naive)) < 1e-10);
  }
}

TEST_CASE("joint log density agrees with a direct evaluation") {
  Rng rng = make_stream(39, 0);
  GaussianMixture g = nebula_test::random_mixture(4, 5, rng);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd y(5);
    for (int j = 0; j < 5; ++j) y[j] = nd(rng);
    CHECK(std::abs(g.log_density(y) - std::log(nebula_test::joint_pdf(g, y))) < 1e-10);
  }
}

TEST_CASE("mixture validation") {
  Rng rng = make_stream(40, 0);
  GaussianMixture g = nebula_test::random_mixture(2, 3, rng);
  CHECK_NOTHROW(g.validate());
  GaussianMixture w = g;
  w.weights[0] += 1e-9;
  CHECK_THROWS_AS(w.validate(), ModelError);
  GaussianMixture asym = g;
  asym.covariances[1](0, 2) += 0.1;
  CHECK_THROWS_AS(asym.validate(), ModelError);
  GaussianMixture indefinite = g;
  indefinite.covariances[0] = -indefinite.covariances[0];
  CHECK_THROWS_AS(indefinite.validate(), ModelError);
}

TEST_CASE("standardiser") {
  Eigen::MatrixXd d(4, 2);
  d << 1, 5, 2, 5, 3, 5, 6, 5;
  Standardizer s = Standardizer::fit(d);
  CHECK(s.mean[0] == 3.0);
  CHECK(s.scale[0] == doctest::Approx(std::sqrt(3.5)));
  CHECK(s.scale[1] == 1.0);  // constant column keeps unit scale
  Eigen::MatrixXd z = s.apply(d);
  CHECK(std::abs(z.col(0).mean()) < 1e-15);
  CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
}
