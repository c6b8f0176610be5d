#pragma once

#include <array>
#include <string>
#include <vector>

#include "mwave/dynamics.hpp"
#include "mwave/params.hpp"

namespace mwave {

// ---------------------------------------------------------------------------
// Fast layers (travelling-front heteroclinics of the u-w subsystem at v = 0)
// ---------------------------------------------------------------------------

/// Front connecting u = 0 to u = 1 at speed c* = sqrt(2)(a - 1/2):
///   u(z) = 1 / (1 + exp(-sqrt(2) z / 2)),  w = u' = (sqrt(2)/2) u (1 - u).
/// Both evaluations are overflow-safe for any z.
struct FrontPoint {
  double u = 0.0;
  double w = 0.0;
};
FrontPoint front_point(double z, double a);

/// Bounded solution of y' = -c* y - u(z) along the front, i.e.
///   y(z) = integral_0^inf exp(c* t) u(z + t) dt,
/// which decays to 0 on the left (rate |c*|, coefficient front_k) and tends
/// to -1/c* on the right.  Evaluated by adaptive quadrature with truncation
/// chosen from the integrand's decay rate.
double front_y(double z, double a);

/// K = integral exp(c* s) u(s) ds over the whole line; equals
/// lim_{z -> -inf} exp(c* z) y(z).  Quadrature version.
double front_k(double a);

/// Closed form of the same integral: sqrt(2) pi / sin(2 pi a).
double front_k_closed_form(double a);

/// Back connecting u* to u* - 1, obtained from the front by
/// u_b = u* - u_f, w_b = -w_f.  The shifted transverse coordinate
/// ytilde = y - y_q solves ytilde' = -c* ytilde + u_f and runs from 0
/// (left) to 1/c* (right); here ytilde = -front_y.
struct BackPoint {
  double u = 0.0;
  double w = 0.0;
  double ytilde = 0.0;
};
BackPoint back_point(double z, double a);

/// Knot values of the cubic: u* = 2(a+1)/3 is the landing point of the slow
/// right branch's departure layer, v* = f(u*) the corresponding level.
double u_star(double a);
double v_star(double a);

/// Separation integrals controlling transversality of the two layers under
/// the v-forcing:
///   melnikov_front = integral exp(c* z) w_f(z)^2 dz   (> 0)
///   melnikov_back  = integral exp(c* z) w_b(z) dz = c* K   (< 0)
double melnikov_front(double a);
double melnikov_back(double a);

// ---------------------------------------------------------------------------
// Slow branches (critical manifold v = f(u) where f' < 0)
// ---------------------------------------------------------------------------

enum class BranchSide { Left, Right };

/// One monotone branch of { v = f(u) : f'(u) < 0 }.  The left branch covers
/// u below the lower fold, the right branch u above the upper fold; on both
/// f is strictly decreasing, so v -> u is invertible.
class CriticalBranch {
 public:
  CriticalBranch(BranchSide side, double a);

  BranchSide side() const { return side_; }
  double a() const { return a_; }
  /// u-interval on which the inverse is bracketed.
  double u_min() const { return u_min_; }
  double u_max() const { return u_max_; }
  /// Admissible v-range (f of the endpoints, decreasing).
  double v_min() const { return v_min_; }
  double v_max() const { return v_max_; }

  /// Solve f(u) = v on this branch.  Safeguarded Newton with bisection
  /// fallback; converges to ~1e-14 relative.  Throws std::domain_error if v
  /// lies outside [v_min, v_max].
  double inverse(double v) const;

  /// f'(u(v)) < 0 along the branch.
  double slope(double v) const;

 private:
  BranchSide side_;
  double a_;
  double u_min_, u_max_;
  double v_min_, v_max_;
};

/// Reduced flow on a branch in the travelling frame,
///   dv/dzeta = (gamma v - u(v)) / c,
/// with u(v) the branch inverse and zeta the slow scale.
double slow_flow_rhs(double v, const CriticalBranch& branch, const Params& p);

// ---------------------------------------------------------------------------
// Layer eigenstructure (frozen-u rest states of the eps = 0 linearisation)
// ---------------------------------------------------------------------------

/// Eigenpairs of the layer matrix at a frozen base point u with f'(u) < 0,
/// lambda = 0, eps = 0.  Rates mu = (mu1, 0, -c, mu4) with
///   mu_{1,4} = (-c -+ sqrt(c^2 - 4 f'(u))) / 2,  mu1 < 0 < mu4,
/// and eigenvector columns
///   eta1 = (f', 0, f' mu1, mu1),  eta2 = (1, f', 0, (gamma f' - 1)/c),
///   eta3 = e4,                    eta4 = (f', 0, f' mu4, mu4).
/// Throws std::domain_error unless f'(u) < 0.
struct LayerEigen {
  std::array<double, 4> mu{};
  Mat4 eta;
};
LayerEigen layer_eigenpairs(double u, const Params& p);

// ---------------------------------------------------------------------------
// Assembled orbit
// ---------------------------------------------------------------------------

enum class SegmentTag { Front, SlowRight, Back, SlowLeft };

std::string segment_name(SegmentTag tag);

/// One sample along the loop.  `param` is the layer variable z on fast
/// segments and the branch level v on slow ones.
struct OrbitSample {
  double param = 0.0;
  SegmentTag seg = SegmentTag::Front;
  Vec4 state = Vec4::Zero();
};

struct OrbitOptions {
  double z_half = 0.0;  ///< fast-segment half width; 0 = pick from decay rates
  int n_fast = 481;     ///< samples per fast segment
  int n_slow = 241;     ///< samples per slow segment
};

/// The singular (eps = 0) periodic loop: front at v = 0, slow drift up the
/// right branch to v*, back at v = v*, slow return down the left branch.
/// Corners are the transition states shared by consecutive segments.
struct SingularOrbit {
  Params p;  ///< eps = 0, c = c*

  double u_star = 0.0;
  double v_star = 0.0;
  double k = 0.0;    ///< front_k(a)
  double y_q = 0.0;  ///< y-level at the back's departure corner

  Vec4 corner_p = Vec4::Zero();     ///< front lands: (1, 0, 0, -1/c)
  Vec4 corner_q = Vec4::Zero();     ///< back departs: (u*, v*, 0, y_q)
  Vec4 corner_qhat = Vec4::Zero();  ///< back lands: (u*-1, v*, 0, y_q + 1/c)

  std::vector<OrbitSample> samples;
};

SingularOrbit assemble_singular_orbit(const Params& p,
                                      const OrbitOptions& opt = {});

/// CSV rows (param,u,v,w,y,segment), 17 significant digits.
std::string orbit_to_csv(const SingularOrbit& orbit);

}  // namespace mwave
