#pragma once

#include <string>
#include <vector>

#include "mwave/dynamics.hpp"
#include "mwave/params.hpp"
#include "mwave/singular_orbit.hpp"

namespace mwave {

/// Asymptotic splitting of the frozen coefficient matrix at the rest state:
/// bases for the two-dimensional unstable/stable subspaces of A at u = 0,
/// lambda = 0, plus the corresponding spectral projectors and the left
/// annihilator rows used as projection boundary conditions (the rows kill
/// the complementary subspace, so w·U = 0 pins U to the wanted one).
struct BoundaryProjectors {
  Mat42 unstable;  // columns span the unstable subspace (growth to the left)
  Mat42 stable;    // columns span the stable subspace (decay to the right)
  Mat4 projector_unstable;  // idempotent, range = unstable, kernel = stable
  Mat4 projector_stable;
  Eigen::Matrix<double, 2, 4> annihilator_left;   // rows kill `unstable`? no:
  // annihilator_left · U = 0  <=>  U in unstable (rows are the stable left
  // eigenrows); imposed at the left endpoint.
  Eigen::Matrix<double, 2, 4> annihilator_right;  // same role at the right
};

BoundaryProjectors boundary_projectors(const Params& p);

struct SolveOptions {
  // Fast windows: uniform z-spacing `fast_dz` over [-fast_halfwidth, +...]
  // around each layer, plus a coarser run of length `left_pad` ahead of the
  // front.
  double fast_halfwidth = 30.0;
  double fast_dz = 0.25;
  double left_pad = 30.0;
  double coarse_dz = 1.0;
  // Slow blocks are laid out in the branch level v and mapped to z through
  // the reduced flow; the return branch is geometrically graded down to
  // v_end_rel * v_star, which sets the effective right end of the domain.
  int n_slow = 150;
  int nodes_per_decade = 26;
  double v_end_rel = 2e-6;
  // Newton / continuation.
  double newton_tol = 1e-10;
  int max_newton_iters = 80;
  double seed_eps = 1e-5;  // first cold solve here, then walk eps to target
  double tol_bc = 1e-7;
  bool verbose = false;
};

/// A solved travelling-wave profile on a truncated domain: nodes z with
/// states (u,v,w,y), the speed c that the boundary-value solve produced,
/// and diagnostics of how well the discrete system was satisfied.
struct WaveProfile {
  Params p;        // parameters of the solve (p.c == c below)
  double c = 0.0;  // computed speed
  double eps = 0.0;

  std::vector<double> z;
  std::vector<Vec4> x;

  double residual = 0.0;         // final scaled Newton residual (inf norm)
  double endpoint_defect = 0.0;  // max boundary-projection violation
  int newton_iters = 0;
  int phase_index = 0;  // node where u = 1/2 (z = 0)

  // Window bookkeeping for segment labelling downstream.
  double z_front_lo = 0.0, z_front_hi = 0.0;
  double z_back_lo = 0.0, z_back_hi = 0.0;
  bool heteroclinic = false;  // true for the large-gamma front

  double z_min() const { return z.front(); }
  double z_max() const { return z.back(); }
};

/// Segment label for a position along a solved pulse, decided by the state
/// itself: points within `corner_radius` of a slow/fast transition point in
/// the (u,v) plane are "corner"; elsewhere |w| separates the fast layers
/// (|u'| = O(0.1), signed by the jump direction) from the slow passages
/// (|u'| = O(eps^{2/3}) at worst, next to the fold).
std::string profile_segment(const WaveProfile& prof, double z,
                            double corner_radius = 0.01);

/// Cubic-Hermite interpolant of a profile (nodes + exact ODE slopes), used
/// wherever the wave enters as a coefficient.
class ProfileInterpolant {
 public:
  explicit ProfileInterpolant(const WaveProfile& prof);

  Vec4 state(double z) const;
  double u(double z) const;
  double z_min() const { return z_.front(); }
  double z_max() const { return z_.back(); }

 private:
  int interval(double z) const;
  std::vector<double> z_;
  std::vector<Vec4> x_, f_;
};

/// Solve the homoclinic pulse at p.eps > 0 by collocation (Hermite–Simpson)
/// in (U, c) with projection boundary conditions and the phase condition
/// u(0) = 1/2.  Seeded from the singular orbit; when the target eps is not
/// directly reachable from the cold seed, an internal continuation walks
/// eps from opt.seed_eps to the target.
WaveProfile solve_pulse(const Params& p, const SingularOrbit& seed,
                        const SolveOptions& opt = {});

/// Warm-started family of solves along eps_list (each solve transfers the
/// previous solution onto the new mesh).  eps_list must be sorted strictly
/// monotone; the first entry is solved cold.
std::vector<WaveProfile> continue_in_eps(const Params& p,
                                         const std::vector<double>& eps_list,
                                         const SolveOptions& opt = {});

/// Heteroclinic front for large gamma: connects the origin to the far rest
/// state Q = (u3, u3/gamma, 0, 0), where u3 is the largest root of
/// u = gamma f(u).  Requires that root structure (three roots) to exist.
WaveProfile solve_front(const Params& p, const SolveOptions& opt = {});

/// Roots of u = gamma f(u) in increasing order (1 or 3 entries).
std::vector<double> nullcline_intersections(double a, double gamma);

/// CSV rows (z,u,v,w,y), 17 significant digits.
std::string profile_to_csv(const WaveProfile& prof);

}  // namespace mwave
