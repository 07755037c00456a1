#pragma once

namespace percept {

/// Regularized incomplete beta function I_x(a, b), a,b > 0, x in [0,1].
/// Continued-fraction evaluation, absolute accuracy around 1e-14.
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t with dof degrees of freedom.
double student_t_cdf(double t, double dof);

/// Two-sided tail probability 2*(1 - F_t(|tstat|; dof)).
double two_sided_p_value(double tstat, int dof = 30);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace percept
