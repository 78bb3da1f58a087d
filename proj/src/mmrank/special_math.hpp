// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mmrank/random.hpp"

namespace mmrank {

/// Smallest residual magnitude fed into an |u|^-1 augmentation update.
inline constexpr double kResidualFloor = 1e-10;

/// |u| clamped from below at kResidualFloor.
double clamped_magnitude(double residual);

/// Draw from the inverse Gaussian with mean \p mu and shape \p lam.
///
/// Michael, Schucany & Haas transformation with root selection. The smaller
/// root is evaluated as mu / (1 + t + sqrt(t(2+t))) so large mu/lam ratios
/// (vanishing residuals) do not cancel.
double sample_inverse_gaussian(double mu, double lam, RandomStream& rng);

/*!
 * Draw from the generalized inverse Gaussian with density proportional to
 * x^(p-1) exp(-(a x + b / x) / 2).
 *
 * a > 0 and b > 0 use the Hoermann & Leydold (2014) family of rejection
 * samplers (ratio-of-uniforms with and without mode shift, plus the
 * constant-hat method for the log-concave corner 0 <= |p| < 1, sqrt(ab) small).
 * The boundary b = 0 with p > 0 is Ga(p, a/2); a = 0 with p < 0 is the
 * reciprocal of Ga(-p, b/2). Any other combination throws DomainError.
 */
double sample_gig(double a, double b, double p, RandomStream& rng);

/// log K_p(x), modified Bessel function of the second kind, x > 0.
double log_bessel_k(double p, double x);

/// K_p(x) / K_q(x) without forming either factor.
double bessel_k_ratio(double p, double q, double x);

/// E[X^r] for X ~ GIG(a, b, p) with a, b > 0.
double gig_moment(double a, double b, double p, double r);

/// One-sided epsilon-sensitive loss 2 max(0, u + eps).
double eps_loss(double u, double eps);

}  // namespace mmrank
