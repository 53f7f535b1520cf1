#pragma once

#include <cmath>

namespace mode::stats {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
/// Series expansion for x < a + 1, Lentz continued fraction otherwise.
double gamma_q(double a, double x);

/// Upper tail P(X > x) of a chi-square variable with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);

double normal_cdf(double z);

/// Two-sided standard normal tail 2 * P(Z > |z|).
double normal_two_sided_p(double z);

inline double sigmoid(double w) {
  return w >= 0.0 ? 1.0 / (1.0 + std::exp(-w))
                  : std::exp(w) / (1.0 + std::exp(w));
}

}  // namespace mode::stats
