// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/model.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "mmrank/errors.hpp"
#include "mmrank/random.hpp"
#include "mmrank/special_math.hpp"

namespace mmrank {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * d * d / var;
}

double log_gamma_pdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

void require(bool ok, char const* what) {
  if (!ok) throw ConfigError(what);
}

void check_finite(Eigen::MatrixXd const& m, std::string const& name, std::string const& where) {
  if (!m.allFinite()) throw NumericError("non-finite " + name + " " + where);
}

void check_positive(Eigen::MatrixXd const& m, std::string const& name, std::string const& where) {
  check_finite(m, name, where);
  if (m.size() > 0 && !(m.minCoeff() > 0.0)) throw NumericError("non-positive " + name + " " + where);
}

void check_positive(double v, std::string const& name, std::string const& where) {
  if (!std::isfinite(v) || !(v > 0.0)) throw NumericError("non-positive " + name + " " + where);
}

}  // namespace

std::string to_string(Likelihood l) {
  return l == Likelihood::gaussian ? "gaussian" : "rank";
}

std::string to_string(ClassifierKind c) {
  return c == ClassifierKind::dpm ? "dpm" : "linear";
}

Likelihood parse_likelihood(std::string const& s) {
  if (s == "rank" || s == "R") return Likelihood::max_margin_rank;
  if (s == "gaussian" || s == "G") return Likelihood::gaussian;
  throw ConfigError("unknown likelihood '" + s + "' (expected rank or gaussian)");
}

std::string to_string(InitScheme i) {
  return i == InitScheme::random ? "random" : "spectral";
}

InitScheme parse_init(std::string const& s) {
  if (s == "random") return InitScheme::random;
  if (s == "spectral") return InitScheme::spectral;
  throw ConfigError("unknown init scheme '" + s + "' (expected spectral or random)");
}

ClassifierKind parse_classifier(std::string const& s) {
  if (s == "linear" || s == "L") return ClassifierKind::linear;
  if (s == "dpm" || s == "NL") return ClassifierKind::dpm;
  throw ConfigError("unknown classifier '" + s + "' (expected linear or dpm)");
}

void Hyperparams::validate() const {
  require(factors >= 1, "factors must be at least 1");
  require(truncation >= 1, "truncation level must be at least 1");
  require(std::isfinite(epsilon) && epsilon >= 0.0, "epsilon must be finite and non-negative");
  require(r_a > 0.0 && s_a > 0.0, "loading shrinkage shapes must be positive");
  require(r_beta > 0.0 && s_beta > 0.0, "classifier shrinkage shapes must be positive");
  require(psi_shape > 0.0 && psi_rate > 0.0, "psi prior parameters must be positive");
  require(alpha_shape > 0.0 && alpha_rate > 0.0, "alpha prior parameters must be positive");
}

void Dataset::validate() const {
  if (values.cols() < 2) throw DataError("dataset needs at least two samples");
  if (values.rows() < 1) throw DataError("dataset has no features");
  for (std::size_t m = 0; m < labels.size(); ++m) {
    if (labels[m].size() != samples())
      throw DataError("label task " + std::to_string(m + 1) + " has " +
                      std::to_string(labels[m].size()) + " entries, expected " +
                      std::to_string(samples()));
    for (auto y : labels[m])
      if (y != -1 && y != 0 && y != 1)
        throw DataError("label task " + std::to_string(m + 1) + " holds a value outside {-1,0,+1}");
  }
  if (!sample_ids.empty() && sample_ids.size() != samples())
    throw DataError("sample id count does not match the number of samples");
  if (!feature_names.empty() && feature_names.size() != dims())
    throw DataError("feature name count does not match the number of features");
}

Dataset Dataset::subset(std::vector<std::size_t> const& columns) const {
  Dataset out;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(columns.size()));
  out.labels.assign(labels.size(), LabelVector(columns.size(), 0));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const std::size_t n = columns[j];
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(n));
    for (std::size_t m = 0; m < labels.size(); ++m) out.labels[m][j] = labels[m][n];
    if (!sample_ids.empty()) out.sample_ids.push_back(sample_ids[n]);
  }
  out.feature_names = feature_names;
  return out;
}

Standardization Standardization::fit(Eigen::MatrixXd const& x) {
  Standardization s;
  const double n = static_cast<double>(x.cols());
  s.mean = x.rowwise().mean();
  s.sd.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double ss = (x.row(i).array() - s.mean(i)).square().sum();
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.sd(i) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(Eigen::MatrixXd const& x) const {
  if (x.rows() != mean.size()) throw DataError("standardization: feature count mismatch");
  return ((x.colwise() - mean).array().colwise() / sd.array()).matrix();
}

TrainingData TrainingData::from(Dataset const& data, Likelihood likelihood) {
  data.validate();
  TrainingData out;
  out.likelihood = likelihood;
  out.labels = data.labels;
  out.dims = data.dims();
  out.samples = data.samples();
  if (likelihood == Likelihood::max_margin_rank) {
    out.ranks = build_rank_index(data.values);
  } else {
    if (!data.values.allFinite()) throw DataError("non-finite value in training data");
    out.standardization = Standardization::fit(data.values);
    out.standardized = out.standardization.apply(data.values);
  }
  return out;
}

Eigen::VectorXd stick_weights(Eigen::VectorXd const& nu) {
  Eigen::VectorXd q(nu.size());
  double remaining = 1.0;
  for (Eigen::Index t = 0; t < nu.size(); ++t) {
    q(t) = nu(t) * remaining;
    remaining *= 1.0 - nu(t);
  }
  return q;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0, 1)");
  // Upper half by symmetry; 1 - p is exact there and keeps the tail accurate.
  if (p > 0.5) return -normal_quantile(1.0 - p);
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double e[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double tail = 0.02425;
  auto tail_value = [&](double q) {
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1.0);
  };
  double x;
  if (p < tail) {
    x = tail_value(std::sqrt(-2.0 * std::log(p)));
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // One Halley refinement against the exact CDF.
  const double err = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

Eigen::MatrixXd rank_normal_scores(RankIndex const& ranks, double epsilon) {
  const std::size_t N = ranks.samples();
  const double n = static_cast<double>(N);
  const double spacing = 2.0 * (epsilon > 0.0 ? epsilon : 0.05);
  const double scale = spacing * n / std::sqrt(2.0 * std::numbers::pi);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ranks.dims()), static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < ranks.dims(); ++i) {
    auto const& f = ranks.feature(i);
    auto const offsets = f.offsets();
    for (std::size_t g = 0; g < f.num_groups(); ++g) {
      const double mid = 0.5 * static_cast<double>(offsets[g] + 1 + offsets[g + 1]);
      const double score = scale * normal_quantile((mid - 0.5) / n);
      for (std::size_t s : f.group(g))
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = score;
    }
  }
  return out;
}

InitialFactors initial_factors(TrainingData const& data, Hyperparams const& hyper,
                               std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(data.dims);
  const auto N = static_cast<Eigen::Index>(data.samples);
  const Eigen::Index K = hyper.factors;
  InitialFactors out;
  if (hyper.init == InitScheme::random) {
    RandomStream loadings_rng(seed, {0, StreamKind::init, 0});
    out.A.resize(d, K);
    for (Eigen::Index c = 0; c < K; ++c)
      for (Eigen::Index i = 0; i < d; ++i) out.A(i, c) = loadings_rng.normal(0.0, 0.1);
    RandomStream scores_rng(seed, {0, StreamKind::init, 1});
    out.Z.resize(K, N);
    for (Eigen::Index c = 0; c < N; ++c)
      for (Eigen::Index r = 0; r < K; ++r) out.Z(r, c) = scores_rng.normal();
    return out;
  }

  const Eigen::MatrixXd M =
      data.rank_mode() ? rank_normal_scores(data.ranks, hyper.epsilon) : data.standardized;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Index r = std::min<Eigen::Index>(K, svd.singularValues().size());
  const double root_n = std::sqrt(static_cast<double>(N));
  out.A = Eigen::MatrixXd::Zero(d, K);
  out.Z = Eigen::MatrixXd::Zero(K, N);
  for (Eigen::Index k = 0; k < r; ++k) {
    Eigen::VectorXd u = svd.matrixU().col(k);
    Eigen::VectorXd v = svd.matrixV().col(k);
    Eigen::Index pivot = 0;
    u.cwiseAbs().maxCoeff(&pivot);
    if (u(pivot) < 0.0) {
      u = -u;
      v = -v;
    }
    out.A.col(k) = u * (svd.singularValues()(k) / root_n);
    out.Z.row(k) = v.transpose() * root_n;
  }
  return out;
}

ModelState init_state(TrainingData const& data, Hyperparams const& hyper, std::uint64_t seed) {
  hyper.validate();
  const auto d = static_cast<Eigen::Index>(data.dims);
  const auto n = static_cast<Eigen::Index>(data.samples);
  const Eigen::Index k = hyper.factors;
  ModelState s;

  InitialFactors factors = initial_factors(data, hyper, seed);
  s.loadings.A = std::move(factors.A);
  s.loadings.xi = Eigen::MatrixXd::Ones(d, k);
  s.loadings.eta = Eigen::MatrixXd::Ones(d, k);
  s.loadings.phi = Eigen::VectorXd::Ones(k);
  s.loadings.phi_tilde = 1.0;
  s.scores.Z = std::move(factors.Z);

  if (data.rank_mode()) {
    s.rank_aug.inv_lower = Eigen::MatrixXd::Zero(d, n);
    s.rank_aug.inv_upper = Eigen::MatrixXd::Zero(d, n);
    for (Eigen::Index i = 0; i < d; ++i) {
      auto const& f = data.ranks.feature(static_cast<std::size_t>(i));
      for (Eigen::Index c = 0; c < n; ++c) {
        if (f.has_lower(static_cast<std::size_t>(c))) s.rank_aug.inv_lower(i, c) = 1.0;
        if (f.has_upper(static_cast<std::size_t>(c))) s.rank_aug.inv_upper(i, c) = 1.0;
      }
    }
  }

  const int comps = hyper.components();
  for (auto const& labels : data.labels) {
    ClassifierState cs;
    cs.components.resize(static_cast<std::size_t>(comps));
    for (auto& c : cs.components) {
      c.beta = Eigen::VectorXd::Zero(k);
      c.b = Eigen::VectorXd::Ones(k);
      c.e = Eigen::VectorXd::Ones(k);
    }
    cs.inv_lambda_c = Eigen::VectorXd::Zero(n);
    for (Eigen::Index c = 0; c < n; ++c)
      if (labels[static_cast<std::size_t>(c)] != 0) cs.inv_lambda_c(c) = 1.0;
    s.classifiers.push_back(std::move(cs));
  }

  if (hyper.classifier == ClassifierKind::dpm) {
    DpmState dpm;
    const Eigen::Index t = hyper.truncation;
    RandomStream assign_rng(seed, {0, StreamKind::init, 2});
    dpm.assign.resize(data.samples);
    for (auto& a : dpm.assign)
      a = static_cast<int>(std::floor(assign_rng.uniform() * static_cast<double>(t)));
    dpm.mu = Eigen::MatrixXd::Zero(t, k);
    dpm.psi = Eigen::VectorXd::Ones(t);
    dpm.nu = Eigen::VectorXd::Constant(t, 0.5);
    dpm.nu(t - 1) = 1.0;
    dpm.alpha = 1.0;
    s.dpm = std::move(dpm);
  }
  return s;
}

void check_state(ModelState const& s, std::string const& where) {
  check_finite(s.loadings.A, "A", where);
  check_positive(s.loadings.xi, "xi", where);
  check_positive(s.loadings.eta, "eta", where);
  check_positive(s.loadings.phi, "Phi(a)", where);
  check_positive(s.loadings.phi_tilde, "Phi~(a)", where);
  check_finite(s.scores.Z, "Z", where);
  for (auto const& cs : s.classifiers) {
    for (auto const& c : cs.components) {
      check_finite(c.beta, "beta", where);
      check_positive(c.b, "b", where);
      check_positive(c.e, "e", where);
      check_positive(c.phi, "Phi(beta)", where);
      check_positive(c.phi_tilde, "Phi~(beta)", where);
    }
    check_finite(cs.inv_lambda_c, "lambda_c", where);
    if (cs.inv_lambda_c.size() > 0 && cs.inv_lambda_c.minCoeff() < 0.0)
      throw NumericError("negative lambda_c " + where);
  }
  check_finite(s.rank_aug.inv_lower, "lambda_l", where);
  check_finite(s.rank_aug.inv_upper, "lambda_u", where);
  if (s.rank_aug.inv_lower.size() > 0 &&
      (s.rank_aug.inv_lower.minCoeff() < 0.0 || s.rank_aug.inv_upper.minCoeff() < 0.0))
    throw NumericError("negative rank augmentation " + where);
  if (s.dpm) {
    check_finite(s.dpm->mu, "mu", where);
    check_positive(s.dpm->psi, "psi", where);
    check_positive(s.dpm->alpha, "alpha", where);
    if (!s.dpm->nu.allFinite() || s.dpm->nu.minCoeff() < 0.0 || s.dpm->nu.maxCoeff() > 1.0)
      throw NumericError("stick fraction outside [0,1] " + where);
  }
}

PseudoJoint log_pseudo_joint(ModelState const& s, TrainingData const& data,
                             Hyperparams const& hyper) {
  PseudoJoint out;
  const Eigen::MatrixXd W = s.loadings.A * s.scores.Z;
  const auto n = static_cast<std::size_t>(W.cols());

  if (data.rank_mode()) {
    std::vector<double> lower(n), upper(n);
    for (std::size_t i = 0; i < data.dims; ++i) {
      auto const& f = data.ranks.feature(i);
      const Eigen::VectorXd w = W.row(static_cast<Eigen::Index>(i)).transpose();
      f.neighbor_extrema({w.data(), n}, lower, upper);
      for (std::size_t c = 0; c < n; ++c) {
        if (f.has_lower(c)) out.rank_loss -= eps_loss(lower[c] - w(c), hyper.epsilon);
        if (f.has_upper(c)) out.rank_loss -= eps_loss(w(c) - upper[c], hyper.epsilon);
      }
    }
  } else {
    const double sq = (data.standardized - W).squaredNorm();
    out.gaussian_loglik = -0.5 * sq - 0.5 * static_cast<double>(W.size()) * kLog2Pi;
  }

  for (std::size_t m = 0; m < data.labels.size(); ++m) {
    auto const& cs = s.classifiers[m];
    for (std::size_t c = 0; c < n; ++c) {
      const int y = data.labels[m][c];
      if (y == 0) continue;
      auto const& beta = cs.components[static_cast<std::size_t>(s.component_of(c))].beta;
      const double margin = 1.0 - y * beta.dot(s.scores.Z.col(static_cast<Eigen::Index>(c)));
      out.hinge_loss -= 2.0 * std::max(0.0, margin);
    }
  }

  auto const& L = s.loadings;
  for (Eigen::Index k = 0; k < L.A.cols(); ++k) {
    for (Eigen::Index i = 0; i < L.A.rows(); ++i) {
      out.log_prior += log_normal(L.A(i, k), 0.0, L.xi(i, k));
      out.log_prior += log_gamma_pdf(L.xi(i, k), hyper.r_a, L.eta(i, k));
      out.log_prior += log_gamma_pdf(L.eta(i, k), hyper.s_a, L.phi(k));
    }
    out.log_prior += log_gamma_pdf(L.phi(k), 0.5, L.phi_tilde);
  }
  out.log_prior += log_gamma_pdf(L.phi_tilde, 0.5, 1.0);

  for (std::size_t c = 0; c < n; ++c) {
    const double prec = s.prior_precision(c);
    for (Eigen::Index k = 0; k < s.scores.Z.rows(); ++k)
      out.log_prior += log_normal(s.scores.Z(k, static_cast<Eigen::Index>(c)),
                                  s.prior_mean(c, k), 1.0 / prec);
  }

  for (auto const& cs : s.classifiers) {
    for (auto const& comp : cs.components) {
      for (Eigen::Index k = 0; k < comp.beta.size(); ++k) {
        out.log_prior += log_normal(comp.beta(k), 0.0, comp.b(k));
        out.log_prior += log_gamma_pdf(comp.b(k), hyper.r_beta, comp.e(k));
        out.log_prior += log_gamma_pdf(comp.e(k), hyper.s_beta, comp.phi);
      }
      out.log_prior += log_gamma_pdf(comp.phi, 0.5, comp.phi_tilde);
      out.log_prior += log_gamma_pdf(comp.phi_tilde, 0.5, 1.0);
    }
  }
  return out;
}

}  // namespace mmrank
