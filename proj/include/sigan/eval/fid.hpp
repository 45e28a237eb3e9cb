// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
//
// Frechet distance between Gaussian fits of two feature sets.
#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace sigan::eval {

using FeatureMatrix = Eigen::MatrixXd;  ///< one row per image

struct FeatureStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd phi;  ///< unbiased covariance (divides by n - 1)
  std::int64_t n = 0;

  int dim() const { return static_cast<int>(mu.size()); }
};

struct FidReport {
  double score = 0;
  FeatureStats stats_real;
  FeatureStats stats_fake;
  std::string extractor_id;

  /// score, group sizes, dimension, extractor id (statistics omitted).
  nlohmann::ordered_json to_json() const;
};

/// Requires n >= 2 rows and finite entries.
FeatureStats feature_stats(const FeatureMatrix& features);

/// ||mu_x - mu_g||^2 + tr(phi_x + phi_g - 2 (phi_x phi_g)^(1/2)). The root's
/// trace is taken from the eigenvalues of phi_g^(1/2) phi_x phi_g^(1/2).
/// Small negative eigenvalues are clamped; ones below -1e-6 relative to the
/// largest eigenvalue raise NumericError. A slightly negative score is
/// clamped to 0 and logged.
double fid_from_stats(const FeatureStats& x, const FeatureStats& g);

FidReport fid(const FeatureMatrix& real, const FeatureMatrix& fake,
              const std::string& extractor_id = "");

}  // namespace sigan::eval
