#pragma once

namespace pufsim::special {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
/// Series for x < a + 1 (complemented), modified-Lentz continued fraction
/// otherwise. Q(a, 0) = 1 for a > 0.
double igamc(double a, double x);

/// Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x).
double igam(double a, double x);

/// Complementary error function.
double erfc(double x);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace pufsim::special
