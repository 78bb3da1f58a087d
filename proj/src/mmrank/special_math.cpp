// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/special_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mmrank/errors.hpp"

namespace mmrank {

double clamped_magnitude(double residual) { return std::max(std::abs(residual), kResidualFloor); }

double eps_loss(double u, double eps) { return 2.0 * std::max(0.0, u + eps); }

//---------------------------------------------------------------------------//
// Inverse Gaussian
//---------------------------------------------------------------------------//

double sample_inverse_gaussian(double mu, double lam, RandomStream& rng) {
  if (!(mu > 0.0) || !(lam > 0.0) || !std::isfinite(mu) || !std::isfinite(lam))
    throw DomainError("inverse Gaussian: mu and lam must be positive and finite");
  const double nu = rng.normal();
  const double t = mu * nu * nu / (2.0 * lam);
  const double x = mu / (1.0 + t + std::sqrt(t * (2.0 + t)));
  if (rng.uniform() * (mu + x) <= mu) return x;
  return mu * mu / x;
}

//---------------------------------------------------------------------------//
// Generalized inverse Gaussian
//---------------------------------------------------------------------------//

namespace {

// Mode of the standardized density x^(lambda-1) exp(-omega/2 (x + 1/x)).
double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0)
    return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms without mode shift (Dagpunar 1988, Lehner 1989).
double gig_rou_noshift(double lambda, double omega, RandomStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym =
      ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Constant hat on the log-concave part; valid for 0 <= lambda < 1, omega <= 1.
double gig_constant_hat(double lambda, double omega, RandomStream& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  area[0] = k0 * x0;
  double k1, k2;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = (lambda == 0.0) ? k1 * std::log(2.0 / (omega * omega))
                              : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];
  for (;;) {
    double v = total * rng.uniform();
    double x, hx;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double lo = std::max(x0, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

// Ratio-of-uniforms with shift by the mode (Dagpunar 1989, Lehner 1989).
double gig_rou_shift(double lambda, double omega, RandomStream& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Roots of the cubic y^3 + a y^2 + b y + c bracketing the mode.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;

  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);
  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

std::string gig_params(double a, double b, double p) {
  return "(a=" + std::to_string(a) + ", b=" + std::to_string(b) + ", p=" + std::to_string(p) + ")";
}

}  // namespace

double sample_gig(double a, double b, double p, RandomStream& rng) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(p) || a < 0.0 || b < 0.0)
    throw DomainError("GIG: invalid parameters " + gig_params(a, b, p));
  if (b == 0.0) {
    if (p > 0.0 && a > 0.0) return rng.gamma(p, 0.5 * a);
    throw DomainError("GIG: b = 0 requires p > 0 and a > 0 " + gig_params(a, b, p));
  }
  if (a == 0.0) {
    if (p < 0.0) return 1.0 / rng.gamma(-p, 0.5 * b);
    throw DomainError("GIG: a = 0 requires p < 0 and b > 0 " + gig_params(a, b, p));
  }

  const double lambda = std::abs(p);
  const double omega = std::sqrt(a * b);
  const double alpha = std::sqrt(b / a);

  double x;
  if (lambda > 2.0 || omega > 3.0)
    x = gig_rou_shift(lambda, omega, rng);
  else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2)
    x = gig_rou_noshift(lambda, omega, rng);
  else
    x = gig_constant_hat(lambda, omega, rng);
  return p < 0.0 ? alpha / x : alpha * x;
}

//---------------------------------------------------------------------------//
// Bessel K
//---------------------------------------------------------------------------//

namespace {

constexpr double kBesselEps = 1e-16;
constexpr int kBesselMaxIter = 100000;

double chebyshev(double const* c, int m, double x) {
  double d = 0.0, dd = 0.0;
  const double y2 = 2.0 * x;
  for (int j = m - 1; j >= 1; --j) {
    const double sv = d;
    d = y2 * d - dd + c[j];
    dd = sv;
  }
  return x * d - dd + 0.5 * c[0];
}

// Gamma-function combinations used by Temme's series, |mu| <= 1/2:
//   gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
//   gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
struct TemmeGammas {
  double gam1, gam2, gampl, gammi;
};

TemmeGammas temme_gammas(double mu) {
  static constexpr double c1[] = {-1.142022680371168e0, 6.5165112670737e-3, 3.087090173086e-4,
                                  -3.4706269649e-6,     6.9437664e-9,       3.67795e-11,
                                  -1.356e-13};
  static constexpr double c2[] = {1.843740587300905e0, -7.68528408447867e-2, 1.2719271366546e-3,
                                  -4.9717367042e-6,    -3.31261198e-8,       2.423096e-10,
                                  -1.702e-13,          -1.49e-15};
  const double xx = 8.0 * mu * mu - 1.0;
  TemmeGammas g{};
  g.gam1 = chebyshev(c1, 7, xx);
  g.gam2 = chebyshev(c2, 8, xx);
  g.gampl = g.gam2 - mu * g.gam1;
  g.gammi = g.gam2 + mu * g.gam1;
  return g;
}

// log K_mu(x) and K_{mu+1}(x)/K_mu(x) for |mu| <= 1/2.
struct BaseOrder {
  double log_k;
  double ratio;
};

BaseOrder bessel_k_base(double mu, double x) {
  using std::numbers::pi;
  if (x < 2.0) {
    // Temme's series.
    const double x2 = 0.5 * x;
    const double pimu = pi * mu;
    const double fact = std::abs(pimu) < kBesselEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kBesselEps ? 1.0 : std::sinh(e) / e;
    const TemmeGammas g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i <= kBesselMaxIter; ++i) {
      ff = (i * ff + p + q) / (i * i - mu * mu);
      c *= d / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kBesselEps) break;
    }
    return {std::log(sum), sum1 * (2.0 / x) / sum};
  }

  // Steed's continued fraction CF2; K_mu carries exp(-x) analytically.
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1, c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= kBesselMaxIter; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kBesselEps) break;
  }
  h = a1 * h;
  const double log_k = 0.5 * std::log(pi / (2.0 * x)) - x - std::log(s);
  return {log_k, (mu + x + 0.5 - h) / x};
}

void check_bessel_argument(double p, double x) {
  if (!(x > 0.0) || !std::isfinite(x) || !std::isfinite(p))
    throw DomainError("Bessel K: argument must be positive and finite (x=" + std::to_string(x) + ")");
}

}  // namespace

double log_bessel_k(double p, double x) {
  check_bessel_argument(p, x);
  const double nu = std::abs(p);
  const int steps = static_cast<int>(nu + 0.5);
  const double mu = nu - steps;
  const BaseOrder base = bessel_k_base(mu, x);
  double log_k = base.log_k;
  double ratio = base.ratio;
  const double two_over_x = 2.0 / x;
  // Upward recurrence on r_j = K_{mu+j+1} / K_{mu+j}.
  for (int j = 0; j < steps; ++j) {
    log_k += std::log(ratio);
    ratio = (mu + j + 1) * two_over_x + 1.0 / ratio;
  }
  return log_k;
}

double bessel_k_ratio(double p, double q, double x) {
  check_bessel_argument(p, x);
  check_bessel_argument(q, x);
  if (std::abs(p) == std::abs(q)) return 1.0;
  return std::exp(log_bessel_k(p, x) - log_bessel_k(q, x));
}

double gig_moment(double a, double b, double p, double r) {
  if (!(a > 0.0) || !(b > 0.0))
    throw DomainError("GIG moment: a and b must be positive " + gig_params(a, b, p));
  const double omega = std::sqrt(a * b);
  return std::exp(0.5 * r * (std::log(b) - std::log(a))) * bessel_k_ratio(p + r, p, omega);
}

}  // namespace mmrank
