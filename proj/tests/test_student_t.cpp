#include <cmath>

#include "doctest.h"
#include "percept/student_t.hpp"
#include "support/test_util.hpp"

using namespace percept;

TEST_CASE("p_value matches the quadrature oracle to 1e-12") {
  for (double t : {0.0, 0.1, 0.5, 1.0, 2.042, 3.773, 10.0}) {
    for (int dof : {1, 2, 5, 30, 100}) {
      const double oracle = test::integrated_two_sided_p(t, dof);
      CHECK(std::fabs(two_sided_p_value(t, dof) - oracle) < 1e-12);
    }
  }
}

TEST_CASE("p_value at zero is exactly one") {
  CHECK(two_sided_p_value(0.0, 30) == 1.0);
}

TEST_CASE("p_value is symmetric in the sign of the statistic") {
  for (double t : {0.3, 1.7, 2.5, 6.0}) {
    CHECK(two_sided_p_value(t, 30) == two_sided_p_value(-t, 30));
  }
}

TEST_CASE("t(30) critical value 2.042 gives p close to 0.05") {
  const double p = two_sided_p_value(2.042, 30);
  CHECK(p == doctest::Approx(0.050).epsilon(0.02));  // 0.050 +- 0.001
  CHECK(std::fabs(p - 0.050) < 0.001);
}

TEST_CASE("tstat 3.773 with 30 dof is significant below 0.001") {
  const double p = two_sided_p_value(3.773, 30);
  CHECK(p < 0.001);
  CHECK(p > 0.0001);
}

TEST_CASE("p_value decreases monotonically in |t|") {
  double prev = two_sided_p_value(0.0, 30);
  for (double t = 0.25; t <= 8.0; t += 0.25) {
    const double p = two_sided_p_value(t, 30);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("large dof approaches the normal reference") {
  for (double t : {0.5, 1.0, 1.96, 3.0}) {
    const double p_t = two_sided_p_value(t, 1000);
    const double p_n = 2.0 * (1.0 - normal_cdf(t));
    CHECK(std::fabs(p_t - p_n) < 1e-4);
  }
}

TEST_CASE("t CDF basics") {
  CHECK(student_t_cdf(0.0, 30.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(student_t_cdf(100.0, 30.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(student_t_cdf(-100.0, 30.0) == doctest::Approx(0.0).epsilon(1e-9));
  // F(t) + F(-t) == 1
  for (double t : {0.2, 1.1, 2.7}) {
    CHECK(student_t_cdf(t, 7.0) + student_t_cdf(-t, 7.0) ==
          doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("incomplete beta edge cases") {
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1,1) = x
  for (double x : {0.1, 0.5, 0.9}) {
    CHECK(regularized_incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-13));
  }
  CHECK_THROWS(regularized_incomplete_beta(-1.0, 1.0, 0.5));
  CHECK_THROWS(regularized_incomplete_beta(1.0, 1.0, 1.5));
}
