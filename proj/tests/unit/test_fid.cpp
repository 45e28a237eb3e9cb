// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include <cmath>
#include <cstdlib>
#include <random>

#include "doctest.h"
#include "sigan/eval/extractors.hpp"
#include "sigan/eval/fid.hpp"
#include "sigan/eval/inception.hpp"
#include "sigan/models/checkpoint.hpp"
#include "support/scratch.hpp"
#include "support/synthetic.hpp"

using namespace sigan;
using namespace sigan::eval;

namespace {

FeatureMatrix gaussian(int n, int d, std::mt19937_64& rng, double shift = 0.0) {
  std::normal_distribution<double> z(0.0, 1.0);
  FeatureMatrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = z(rng) + (j == 0 ? shift : 0.0);
  return m;
}

FeatureStats stats(Eigen::VectorXd mu, Eigen::MatrixXd phi) {
  FeatureStats s;
  s.mu = std::move(mu);
  s.phi = std::move(phi);
  s.n = 10;
  return s;
}

Eigen::MatrixXd random_spd(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = z(rng);
  return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

/// tr((AB)^(1/2)) for 2 x 2 SPD matrices: the eigenvalues l1, l2 of AB are
/// positive and sqrt(l1) + sqrt(l2) = sqrt(tr(AB) + 2 sqrt(det(AB))).
double fid_2x2(const Eigen::Vector2d& m1, const Eigen::Matrix2d& a, const Eigen::Vector2d& m2,
               const Eigen::Matrix2d& b) {
  const Eigen::Matrix2d p = a * b;
  const double tr_root = std::sqrt(p.trace() + 2.0 * std::sqrt(p.determinant()));
  return (m1 - m2).squaredNorm() + a.trace() + b.trace() - 2.0 * tr_root;
}

}  // namespace

TEST_CASE("identical feature sets score zero") {
  std::mt19937_64 rng(1);
  const auto x = gaussian(60, 8, rng);
  CHECK(fid(x, x).score <= 1e-5);
  const auto s = feature_stats(x);
  CHECK(fid_from_stats(s, s) <= 1e-5);
}

TEST_CASE("injected statistics give the analytic mean shift") {
  Eigen::Vector2d a(0, 0), b(3, 4);
  const auto x = stats(a, Eigen::Matrix2d::Identity());
  const auto g = stats(b, Eigen::Matrix2d::Identity());
  CHECK(std::abs(fid_from_stats(x, g) - 25.0) <= 1e-8);
  CHECK(std::abs(fid_from_stats(g, x) - 25.0) <= 1e-8);
}

TEST_CASE("diagonal and 2x2 closed forms") {
  // diagonal: sum (sqrt(a_i) - sqrt(b_i))^2 plus the mean term
  Eigen::Vector3d da(1.0, 4.0, 0.25), db(9.0, 1.0, 0.25);
  const double expected = std::pow(1 - 3, 2) + std::pow(2 - 1, 2) + 0.0 + 2.0;
  const auto x = stats(Eigen::Vector3d(1, 0, 0), da.asDiagonal().toDenseMatrix());
  const auto g = stats(Eigen::Vector3d(0, 1, 0), db.asDiagonal().toDenseMatrix());
  CHECK(fid_from_stats(x, g) == doctest::Approx(expected).epsilon(1e-12));

  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Matrix2d a = random_spd(2, rng), b = random_spd(2, rng);
    const Eigen::Vector2d m1(z(rng), z(rng)), m2(z(rng), z(rng));
    const double got = fid_from_stats(stats(m1, a), stats(m2, b));
    CHECK(got == doctest::Approx(fid_2x2(m1, a, m2, b)).epsilon(1e-9));
  }
}

TEST_CASE("large-sample mean shift matches the analytic value") {
  std::mt19937_64 rng(3);
  const int n = 100000;
  const auto x = gaussian(n, 4, rng);
  const auto g = gaussian(n, 4, rng, 1.0);
  const double score = fid(x, g).score;
  CHECK(std::abs(score - 1.0) <= 0.05);
}

TEST_CASE("symmetry and invariance under rotation") {
  std::mt19937_64 rng(4);
  const int d = 5;
  const auto x = stats(Eigen::VectorXd::Random(d), random_spd(d, rng));
  const auto g = stats(Eigen::VectorXd::Random(d), random_spd(d, rng));
  const double base = fid_from_stats(x, g);
  CHECK(base > 0);
  CHECK(fid_from_stats(g, x) == doctest::Approx(base).epsilon(1e-9));
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_spd(d, rng));
  const Eigen::MatrixXd q = qr.householderQ();
  const auto xr = stats(q * x.mu, q * x.phi * q.transpose());
  const auto gr = stats(q * g.mu, q * g.phi * q.transpose());
  CHECK(fid_from_stats(xr, gr) == doctest::Approx(base).epsilon(1e-9));
  // a common translation leaves the score unchanged
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(d, 2.5);
  CHECK(fid_from_stats(stats(x.mu + t, x.phi), stats(g.mu + t, g.phi)) ==
        doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("feature statistics use the unbiased covariance") {
  FeatureMatrix f(4, 2);
  f << 1, 2, 3, 6, 5, 4, 7, 8;
  const auto s = feature_stats(f);
  CHECK(s.n == 4);
  CHECK(s.mu(0) == 4.0);
  CHECK(s.mu(1) == 5.0);
  // deviations (-3,-1,1,3) and (-3,1,-1,3)
  CHECK(s.phi(0, 0) == doctest::Approx((9.0 + 1 + 1 + 9) / 3));
  CHECK(s.phi(1, 1) == doctest::Approx((9.0 + 1 + 1 + 9) / 3));
  CHECK(s.phi(0, 1) == doctest::Approx((9.0 - 1 - 1 + 9) / 3));
  CHECK(s.phi(0, 1) == s.phi(1, 0));
}

TEST_CASE("fid input errors") {
  CHECK_THROWS_AS(feature_stats(FeatureMatrix::Zero(1, 3)), NumericError);
  FeatureMatrix bad = FeatureMatrix::Zero(3, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(feature_stats(bad), NumericError);
  CHECK_THROWS_AS(fid(FeatureMatrix::Zero(3, 2), FeatureMatrix::Zero(3, 3)), NumericError);
  Eigen::Matrix2d indefinite;
  indefinite << 1, 0, 0, -1;
  const auto ok = stats(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  CHECK_THROWS_AS(fid_from_stats(ok, stats(Eigen::Vector2d::Zero(), indefinite)), NumericError);
  std::mt19937_64 rng(5);
  const auto r = fid(gaussian(10, 2, rng), gaussian(12, 2, rng), "mean_pixel");
  const auto j = r.to_json();
  CHECK(j["n_real"] == 10);
  CHECK(j["n_fake"] == 12);
  CHECK(j["dim"] == 2);
  CHECK(j["extractor_id"] == "mean_pixel");
}

TEST_CASE("simple extractors") {
  data::PixelGrid g(2, 2);
  g.values = {-1.0f, 0.0f, 0.5f, 1.0f};
  CHECK(MeanPixelExtractor().extract(g) == std::vector<double>{0.125});
  const auto h = HistogramExtractor(4).extract(g);
  CHECK(h == std::vector<double>{0.25, 0.0, 0.25, 0.5});
  CHECK_THROWS_AS(HistogramExtractor(0), ConfigError);

  std::vector<data::ImageSample> imgs;
  for (int i = 0; i < 3; ++i) {
    imgs.push_back(testing::as_sample("x/" + std::to_string(i), data::PixelGrid(4, 4, 0.25f * i),
                                      data::DefectClass::kDefectFree));
  }
  const auto f = extract_features(imgs, *make_extractor("mean_pixel"));
  CHECK(f.rows() == 3);
  CHECK(f(2, 0) == 0.5);
  CHECK(make_extractor("histogram")->dim() == 16);
  CHECK_THROWS_AS(make_extractor("vgg"), ConfigError);
  CHECK_THROWS_AS(extract_features({}, MeanPixelExtractor()), ConfigError);
}

TEST_CASE("inception network layout and forward pass") {
  const auto arrays = InceptionV3Extractor::expected_arrays();
  // 94 convolutions, each with a weight and four batch-norm arrays
  CHECK(arrays.size() == 94 * 5);
  CHECK(arrays.at("Conv2d_1a_3x3.conv.weight") == Shape{32, 3, 3, 3});
  CHECK(arrays.at("Mixed_5b.branch5x5_1.conv.weight") == Shape{48, 192, 1, 1});
  CHECK(arrays.at("Mixed_6e.branch7x7_2.conv.weight") == Shape{192, 192, 1, 7});
  CHECK(arrays.at("Mixed_7c.branch_pool.conv.weight") == Shape{192, 2048, 1, 1});

  testing::ScratchDir dir("inception");
  CHECK_THROWS_AS(InceptionV3Extractor(dir / "none"), IoError);

  std::mt19937_64 rng(6);
  std::map<std::string, Tensor<float>> owned;
  for (const auto& [name, shape] : arrays) {
    Tensor<float> t(shape, 0.0f);
    if (name.ends_with("conv.weight")) {
      const double fan_in = static_cast<double>(shape.c) * shape.h * shape.w;
      std::normal_distribution<double> z(0.0, std::sqrt(2.0 / fan_in));
      for (auto& v : t.vec()) v = static_cast<float>(z(rng));
    } else if (name.ends_with("bn.weight") || name.ends_with("running_var")) {
      t.vec().assign(t.size(), 1.0f);
    }
    owned.emplace(name, std::move(t));
  }
  models::NamedTensors named;
  for (const auto& [name, t] : owned) named.emplace_back(name, &t);
  models::write_tensor_dir(dir / "w", {{"kind", "inception_v3"}}, named);
  const InceptionV3Extractor net(dir / "w");
  CHECK(net.dim() == 2048);
  const auto f = net.extract(testing::cell_background(32, 7));
  REQUIRE(f.size() == 2048);
  int positive = 0;
  for (double v : f) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    positive += v > 0;
  }
  CHECK(positive > 100);
  CHECK(net.extract(testing::cell_background(32, 7)) == f);

  Tensor<float> gray({1, 1, 299, 299});
  CHECK_THROWS_AS(net.features(gray), ShapeError);
  owned.erase("Mixed_7c.branch_pool.conv.weight");
  named.clear();
  for (const auto& [name, t] : owned) named.emplace_back(name, &t);
  models::write_tensor_dir(dir / "partial", {{"kind", "inception_v3"}}, named);
  CHECK_THROWS_AS(InceptionV3Extractor(dir / "partial"), IoError);
}
