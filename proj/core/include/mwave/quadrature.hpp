#pragma once

#include <cmath>
#include <functional>

namespace mwave::detail {

/// Recursive adaptive Simpson on [lo, hi].  Suited to the smooth,
/// exponentially decaying integrands of the singular-orbit quadratures;
/// callers pick truncation points from known decay rates.
template <class F>
double adaptive_simpson(const F& f, double lo, double hi, double abs_tol,
                        int max_depth = 48) {
  struct Rec {
    const F& f;
    int max_depth;
    double run(double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth >= max_depth || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
      return run(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
             run(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
  };
  if (lo == hi) return 0.0;
  const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  return Rec{f, max_depth}.run(lo, hi, fa, fm, fb, whole, abs_tol, 0);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// 1/(1 + e^{-x}) without overflow.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace mwave::detail
