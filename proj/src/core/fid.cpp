// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/eval/fid.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sigan/error.hpp"

namespace sigan::eval {

namespace {

constexpr double kNegativeEigenTolerance = 1e-6;

/// Eigenvalues of a symmetric matrix with tiny negatives clamped to zero.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> checked_eigen(const Eigen::MatrixXd& m,
                                                            const char* what,
                                                            Eigen::VectorXd* clamped) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw NumericError(fmt::format("{}: eigendecomposition did not converge", what));
  }
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double top = std::max(1.0, ev.cwiseAbs().maxCoeff());
  const double low = ev.minCoeff();
  if (low < -kNegativeEigenTolerance * top) {
    throw NumericError(fmt::format(
        "{}: eigenvalue {:.3e} is too negative (largest magnitude {:.3e}); the covariance is "
        "ill-conditioned, use more samples or a lower feature dimension",
        what, low, top));
  }
  *clamped = ev.cwiseMax(0.0);
  return solver;
}

}  // namespace

FeatureStats feature_stats(const FeatureMatrix& features) {
  if (features.rows() < 2) {
    throw NumericError(fmt::format("feature statistics need at least 2 samples, got {}",
                                   features.rows()));
  }
  if (!features.allFinite()) throw NumericError("feature matrix has non-finite entries");
  FeatureStats s;
  s.n = features.rows();
  s.mu = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mu.transpose();
  s.phi = (centered.transpose() * centered) / static_cast<double>(s.n - 1);
  s.phi = 0.5 * (s.phi + s.phi.transpose());
  return s;
}

double fid_from_stats(const FeatureStats& x, const FeatureStats& g) {
  if (x.dim() != g.dim() || x.phi.rows() != x.dim() || g.phi.rows() != g.dim()) {
    throw NumericError(fmt::format("feature dimensions differ: {} vs {}", x.dim(), g.dim()));
  }
  if (!x.mu.allFinite() || !g.mu.allFinite() || !x.phi.allFinite() || !g.phi.allFinite()) {
    throw NumericError("feature statistics have non-finite entries");
  }
  Eigen::VectorXd lam;
  const auto eg = checked_eigen(0.5 * (g.phi + g.phi.transpose()), "covariance of group g", &lam);
  const Eigen::MatrixXd root_g =
      eg.eigenvectors() * lam.cwiseSqrt().asDiagonal() * eg.eigenvectors().transpose();
  Eigen::MatrixXd inner = root_g * x.phi * root_g;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::VectorXd mu_ev;
  checked_eigen(inner, "symmetrized covariance product", &mu_ev);
  const double tr_root = mu_ev.cwiseSqrt().sum();

  const double mean_term = (x.mu - g.mu).squaredNorm();
  double score = mean_term + x.phi.trace() + g.phi.trace() - 2.0 * tr_root;
  if (score < 0) {
    spdlog::info("fid: clamped negative score {:.3e} to 0", score);
    score = 0;
  }
  return score;
}

FidReport fid(const FeatureMatrix& real, const FeatureMatrix& fake, const std::string& extractor_id) {
  if (real.cols() != fake.cols()) {
    throw NumericError(fmt::format("feature dimensions differ: real {} vs fake {}", real.cols(),
                                   fake.cols()));
  }
  FidReport r;
  r.extractor_id = extractor_id;
  r.stats_real = feature_stats(real);
  r.stats_fake = feature_stats(fake);
  r.score = fid_from_stats(r.stats_real, r.stats_fake);
  const auto n = std::min(r.stats_real.n, r.stats_fake.n);
  if (n <= r.stats_real.dim()) {
    spdlog::warn("fid: {} samples per group for {} feature dimensions; the estimate is biased and "
                 "only comparable at equal sample counts",
                 n, r.stats_real.dim());
  }
  return r;
}

nlohmann::ordered_json FidReport::to_json() const {
  return {{"score", score},
          {"n_real", stats_real.n},
          {"n_fake", stats_fake.n},
          {"dim", stats_real.dim()},
          {"extractor_id", extractor_id}};
}

}  // namespace sigan::eval
