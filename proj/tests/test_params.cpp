#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "mwave/params.hpp"

using namespace mwave;

TEST_CASE("cubic evaluation matches finite differences") {
  const double a = 0.25;
  const double h = 1e-6;
  for (double u = -0.4; u <= 1.4; u += 0.07) {
    const CubicEval e = cubic_eval(u, a);
    const double f_lo = cubic_eval(u - h, a).f;
    const double f_hi = cubic_eval(u + h, a).f;
    CHECK(e.fp == doctest::Approx((f_hi - f_lo) / (2 * h)).epsilon(1e-6));
    CHECK(e.fpp ==
          doctest::Approx((f_hi - 2 * e.f + f_lo) / (h * h)).epsilon(1e-3));
  }
  // hand values
  CHECK(cubic_eval(0.5, a).f == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(cubic_eval(0.0, a).f == 0.0);
  CHECK(cubic_eval(1.0, a).f == 0.0);
  CHECK(cubic_eval(a, a).f == 0.0);
  CHECK(cubic_eval(0.0, a).fp == -a);
  CHECK(cubic_eval(1.0, a).fp == doctest::Approx(a - 1.0));
}

TEST_CASE("cubic folds bracket the middle branch") {
  for (double a : {0.1, 0.25, 0.4}) {
    const CubicFolds folds = cubic_folds(a);
    CHECK(folds.lo < folds.hi);
    CHECK(std::abs(cubic_eval(folds.lo, a).fp) < 1e-12);
    CHECK(std::abs(cubic_eval(folds.hi, a).fp) < 1e-12);
    CHECK(cubic_eval(0.5 * (folds.lo + folds.hi), a).fp > 0.0);
    CHECK(cubic_eval(folds.lo - 0.1, a).fp < 0.0);
    CHECK(cubic_eval(folds.hi + 0.1, a).fp < 0.0);
  }
}

TEST_CASE("singular speed") {
  CHECK(singular_speed(0.25) == doctest::Approx(-0.25 * std::sqrt(2.0)));
  CHECK(singular_speed(0.25) < 0.0);
  // c*^2 + 4a = 2 (a + 1/2)^2, the identity behind several exact rates
  for (double a : {0.05, 0.2, 0.25, 0.45}) {
    const double c = singular_speed(a);
    CHECK(c * c + 4 * a ==
          doctest::Approx(2.0 * (a + 0.5) * (a + 0.5)).epsilon(1e-15));
  }
}

TEST_CASE("parameter validation") {
  Params p = Params::make(0.25, 1.0, 1e-3);
  CHECK_NOTHROW(p.validate());
  CHECK(p.c == doctest::Approx(singular_speed(0.25)));

  CHECK_THROWS_AS(Params::make(0.0, 1.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(Params::make(0.5, 1.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(Params::make(-0.1, 1.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(Params::make(0.25, -1.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(Params::make(0.25, 1.0, -1e-3), std::invalid_argument);

  Params bad = p;
  bad.c = 0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const Params s = Params::singular(0.3, 2.0);
  CHECK(s.eps == 0.0);
  CHECK(s.c == doctest::Approx(singular_speed(0.3)));
}

TEST_CASE("rest-state discriminant") {
  const Params p = Params::make(0.25, 1.0, 1e-3);
  CHECK(p.discriminant() == doctest::Approx(0.058001).epsilon(1e-12));
  CHECK(p.discriminant() > 0.0);
}
