// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <Eigen/LU>
#include <Eigen/QR>

#include "doctest.h"
#include "mmrank/errors.hpp"
#include "mmrank/predict.hpp"
#include "mmrank/synthetic.hpp"
#include "mmrank/train.hpp"

using namespace mmrank;

namespace {

// Rank-mode model whose training data equal A Z exactly.
TrainedModel exact_model(int d, int K, int N, std::uint64_t seed, double scale) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  TrainedModel m;
  m.hyper.factors = K;
  m.engine = "gibbs";
  Eigen::MatrixXd G(d, K);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < K; ++k) G(i, k) = nd(gen);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  m.A = Eigen::MatrixXd(qr.householderQ()).leftCols(K) * scale;
  m.Z.resize(K, N);
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index k = 0; k < K; ++k) m.Z(k, n) = nd(gen);
  m.beta.push_back(Eigen::MatrixXd::Ones(K, 1));
  m.ranks = build_rank_index(m.A * m.Z);
  return m;
}

}  // namespace

TEST_CASE("zero coefficients give a zero decision labeled +1") {
  auto m = exact_model(10, 2, 20, 1, 5.0);
  m.beta[0].setZero();
  const Predictor p(m);
  const auto out = p.predict(m.A * m.Z.col(3));
  CHECK(out.decision[0] == 0.0);
  CHECK(out.label[0] == 1);
}

TEST_CASE("test scores fall strictly inside their rank gaps") {
  auto m = exact_model(40, 2, 30, 2, 100.0);
  const Predictor p(m);
  const Eigen::MatrixXd W = m.A * m.Z;
  const double eps = m.hyper.epsilon;
  auto gap = [&](Eigen::VectorXd const& x, Eigen::Index i) {
    double lo = -INFINITY, hi = INFINITY;
    for (Eigen::Index n = 0; n < W.cols(); ++n) {
      if (W(i, n) < x(i)) lo = std::max(lo, W(i, n));
      if (W(i, n) > x(i)) hi = std::min(hi, W(i, n));
    }
    return std::pair{lo, hi};
  };
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  int inside = 0, total = 0, points = 0;
  while (points < 20) {
    Eigen::VectorXd z(2);
    z << nd(gen), nd(gen);
    const Eigen::VectorXd x = m.A * z;
    // Mid-gap test points: every component clears both neighbors by 2 eps.
    bool mid = true;
    for (Eigen::Index i = 0; i < 40; ++i) {
      const auto [lo, hi] = gap(x, i);
      mid = mid && x(i) > lo + 2 * eps && x(i) < hi - 2 * eps;
    }
    if (!mid) continue;
    ++points;
    const Eigen::VectorXd w = m.A * p.infer_scores(x, 50);
    for (Eigen::Index i = 0; i < 40; ++i) {
      const auto [lo, hi] = gap(x, i);
      ++total;
      inside += w(i) > lo + eps && w(i) < hi - eps;
    }
  }
  CHECK(static_cast<double>(inside) / total >= 0.95);
}

TEST_CASE("a test point below every training value stays finite") {
  auto m = exact_model(10, 2, 20, 3, 5.0);
  const Predictor p(m);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(10, -1e6);
  for (int iters : {1, 50, 500}) CHECK(p.infer_scores(x, iters).allFinite());
}

TEST_CASE("a training column maps back near its own scores") {
  SyntheticSpec spec;
  spec.dims = 30;
  spec.samples = 150;
  spec.factors = 3;
  spec.seed = 12;
  auto syn = generate_synthetic(spec);
  syn.data.values = syn.truth.A * syn.truth.Z;
  TrainSettings s;
  s.hyper.factors = 5;
  const auto model = train(syn.data, s).model;
  const Predictor p(model);
  double worst = 1.0;
  for (Eigen::Index n = 0; n < 20; ++n) {
    const Eigen::VectorXd z = p.infer_scores(syn.data.values.col(n), 50);
    const Eigen::VectorXd t = model.Z.col(n);
    worst = std::min(worst, z.dot(t) / (z.norm() * t.norm()));
  }
  CHECK(worst > 0.9);
  // Training accuracy on a noiseless separable problem.
  const auto preds = p.predict_all(syn.data.values);
  int correct = 0;
  for (std::size_t n = 0; n < preds.size(); ++n) correct += preds[n].label[0] == syn.data.labels[0][n];
  CHECK(static_cast<double>(correct) / preds.size() >= 0.99);
}

TEST_CASE("Gaussian mode solves the ridge system") {
  TrainedModel m;
  m.hyper.factors = 2;
  m.hyper.likelihood = Likelihood::gaussian;
  m.A.resize(3, 2);
  m.A << 1.0, 0.5, -0.3, 2.0, 0.7, 0.0;
  m.Z = Eigen::MatrixXd::Zero(2, 4);
  m.beta.push_back(Eigen::MatrixXd(2, 1));
  m.beta[0] << 1.0, -2.0;
  m.standardization.mean = Eigen::Vector3d(1.0, 2.0, 3.0);
  m.standardization.sd = Eigen::Vector3d(2.0, 1.0, 0.5);
  const Eigen::Vector3d x(3.0, 1.0, 4.0);
  const Eigen::Vector3d xs(1.0, -1.0, 2.0);
  const Eigen::Matrix2d P = m.A.transpose() * m.A + Eigen::Matrix2d::Identity();
  const Eigen::Vector2d z = P.inverse() * (m.A.transpose() * xs);
  const auto out = predict(x, m);
  CHECK((out.z_star - z).norm() < 1e-12);
  CHECK(out.decision[0] == doctest::Approx(z(0) - 2.0 * z(1)));
}

TEST_CASE("a single-component mixture predicts like the linear model") {
  auto lin = exact_model(12, 2, 25, 4, 5.0);
  lin.beta[0] << 0.8, -0.4;
  TrainedModel mix = lin;
  mix.hyper.classifier = ClassifierKind::dpm;
  mix.hyper.truncation = 1;
  mix.mu = Eigen::MatrixXd::Zero(1, 2);
  mix.psi = Eigen::VectorXd::Ones(1);
  mix.weights = Eigen::VectorXd::Ones(1);
  const Predictor a(lin), b(mix);
  for (Eigen::Index n = 0; n < 5; ++n) {
    const Eigen::VectorXd x = lin.A * lin.Z.col(n) * 0.9;
    const auto pa = a.predict(x), pb = b.predict(x);
    CHECK((pa.z_star - pb.z_star).norm() < 1e-12);
    CHECK(pa.decision[0] == doctest::Approx(pb.decision[0]));
    CHECK(pb.responsibilities(0) == 1.0);
  }
}

TEST_CASE("mixture responsibilities and hard assignment") {
  auto m = exact_model(12, 2, 25, 4, 5.0);
  m.hyper.classifier = ClassifierKind::dpm;
  m.hyper.truncation = 2;
  m.mu.resize(2, 2);
  m.mu << 3.0, 0.0, -3.0, 0.0;
  m.psi = Eigen::VectorXd::Ones(2);
  m.weights = Eigen::Vector2d(0.5, 0.5);
  m.beta[0].resize(2, 2);
  m.beta[0] << 0.0, 0.0, 1.0, -1.0;
  const Predictor p(m);
  const Eigen::VectorXd r = p.responsibilities(Eigen::Vector2d(3.0, 0.0));
  CHECK(r.sum() == doctest::Approx(1.0));
  CHECK(r(0) == doctest::Approx(1.0 / (1.0 + std::exp(-18.0))));
  PredictOptions hard;
  hard.hard_assignment = true;
  const auto out = p.predict(m.A * Eigen::Vector2d(3.0, 1.0), hard);
  CHECK(out.responsibilities.sum() == 1.0);
  CHECK(out.decision[0] == doctest::Approx(out.z_star(1)));
}

TEST_CASE("dimension and value checks") {
  auto m = exact_model(6, 2, 10, 5, 5.0);
  const Predictor p(m);
  CHECK_THROWS_AS(p.predict(Eigen::VectorXd::Zero(5)), DataError);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
  x(2) = NAN;
  CHECK_THROWS_AS(p.predict(x), DataError);
  CHECK(p.predict_all(Eigen::MatrixXd(6, 0)).empty());
}

TEST_CASE("threaded prediction matches serial prediction") {
  auto m = exact_model(15, 3, 40, 6, 5.0);
  const Predictor p(m);
  const Eigen::MatrixXd X = m.A * m.Z * 1.1;
  PredictOptions serial, threaded;
  threaded.threads = 3;
  const auto a = p.predict_all(X, serial), b = p.predict_all(X, threaded);
  for (std::size_t n = 0; n < a.size(); ++n) CHECK(a[n].z_star == b[n].z_star);
}
