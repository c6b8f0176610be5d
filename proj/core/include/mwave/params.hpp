#pragma once

#include <cmath>

namespace mwave {

/// Model parameters for the doubly-diffusive FitzHugh--Nagumo system
///
///   u_t = u_xx + f(u) - v,     f(u) = u(1-u)(u-a),  0 < a < 1/2,
///   v_t = v_xx + eps (u - gamma v),
///
/// together with the wave speed c of the co-moving frame z = x - c t.
/// Slow-fast constructions assume eps <= eps_max; solvers check this at
/// entry and refuse to run outside the regime they were built for.
struct Params {
  double a = 0.25;
  double gamma = 1.0;
  double eps = 1e-3;
  double c = -0.25 * std::sqrt(2.0);  // singular speed for a = 0.25
  double eps_max = 1e-3;

  /// (gamma*eps - a)^2 - 4*eps.  Nonnegative iff the rest-state spectral
  /// radicals are real (eigenvalues come in two real pairs).
  double discriminant() const {
    const double d = gamma * eps - a;
    return d * d - 4.0 * eps;
  }

  /// Throws std::invalid_argument when outside the admissible box.
  void validate() const;

  /// Params with eps = 0 and c = sqrt(2)(a - 1/2); the base point of every
  /// singular construction.
  static Params singular(double a, double gamma);

  /// Params at finite eps with the speed seeded at the singular value.
  static Params make(double a, double gamma, double eps);
};

/// Value and first two derivatives of the bistable cubic f(u) = u(1-u)(u-a).
struct CubicEval {
  double f;
  double fp;
  double fpp;
};

inline CubicEval cubic_eval(double u, double a) {
  return {u * (1.0 - u) * (u - a),
          -3.0 * u * u + 2.0 * (1.0 + a) * u - a,
          -6.0 * u + 2.0 * (1.0 + a)};
}

/// Fold points of the cubic: the two zeros of f', bracketing the middle
/// branch.  Left of fold_lo and right of fold_hi, f' < 0.
struct CubicFolds {
  double lo;
  double hi;
};

inline CubicFolds cubic_folds(double a) {
  const double s = std::sqrt(1.0 - a + a * a);
  return {((1.0 + a) - s) / 3.0, ((1.0 + a) + s) / 3.0};
}

/// Speed of the singular (eps = 0) pulse: c* = sqrt(2) (a - 1/2) < 0.
inline double singular_speed(double a) { return std::sqrt(2.0) * (a - 0.5); }

}  // namespace mwave
