#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "mwave/plucker_flow.hpp"
#include "mwave/singular_orbit.hpp"
#include "mwave/wave_solver.hpp"

namespace mwave {

/// A stable or unstable bundle transported along the wave in Pluecker
/// coordinates.  Node states are unit representatives in the original
/// (u, v, w, y) coordinates with positive accumulated scale factors, so the
/// sign of any detection form along the path is continuous in z.
struct BundlePathMeta {
  OdePath<Vec6> path;
  double lambda = 0.0;
  /// max over nodes of |p13 - p24| / |p| (plane stays Lagrangian)
  double lagrangian_residual_max = 0.0;
  /// max over nodes of the quadric residual (stays on the Grassmannian)
  double relation_residual_max = 0.0;
};

/// Transport the unstable plane of the rest state from the left end of the
/// profile forward (resp. the stable plane from the right end backward).
/// lambda must be real and to the right of the essential spectrum.  The stiff
/// lambda/eps entry is handled internally by rescaling y, which keeps the
/// coefficient matrix O(1 + lambda); results are reported in the original
/// coordinates.
///
/// At lambda = 0 both planes contain the wave derivative, whose slow decay
/// makes the forward plane a saddle of the induced flow during slow passages
/// (a transverse direction gains e^{|c| z} on it, so a blind bivector
/// integration collapses onto the generic attracting plane within ~100 z).
/// Both bundles are therefore represented as span{phi'(z), x(z)} with phi'
/// taken exactly from the profile and x an auxiliary vector integrated modulo
/// multiples of phi' (a frame gauge), kept orthogonal to it so the pair never
/// degenerates inside the fast layers.  Using the same representation on both
/// sides also pins the detection form's structural zero exactly at the
/// endpoint, where it is counted by the crossing form rather than the
/// interior scan.
BundlePathMeta compute_unstable_bundle(const WaveProfile& prof, double lambda,
                                       const OdeOptions& opt = {});
BundlePathMeta compute_stable_bundle(const WaveProfile& prof, double lambda,
                                     const OdeOptions& opt = {});

struct ReferenceOptions {
  /// Minimum allowed |detection(V^u(rest), E^s(0,z))| over z >= tau.
  double margin_threshold = 0.02;
  /// Keep u(tau) away from both ends of the return segment by this fraction
  /// of the landing value.
  double interior_pad = 0.08;
  /// Skip this many admissible nodes before accepting tau (0 picks the
  /// largest admissible tau; larger values move tau left along the return).
  int skip_admissible = 0;
};

/// The fixed Lagrangian plane E^s(0, tau) against which conjugate points are
/// detected, with tau on the left-branch return, chosen so the plane stays
/// transverse to the rest state's unstable plane for all z >= tau.
struct ReferencePlane {
  double tau = 0.0;
  double u_tau = 0.0;
  PluckerPoint plane;
  Mat42 frame;
  double transversality_margin = 0.0;
};

ReferencePlane compute_reference_plane(const WaveProfile& prof,
                                       const BundlePathMeta& stable_bundle,
                                       const ReferenceOptions& opt = {});
/// Convenience overload computing the lambda = 0 stable bundle internally.
ReferencePlane compute_reference_plane(const WaveProfile& prof,
                                       const ReferenceOptions& opt = {});

/// Slow-manifold model of the reference plane at u_tau (eps = 0, c = c*):
/// columns (1, f'(u), 0, (gamma f'(u) - 1)/c) and (f'(u), 0, f'(u) mu1, mu1)
/// with mu1 the stable layer rate at u_tau.
Mat42 reference_plane_model(double u_tau, const Params& p);

/// Crossing form at a detected intersection: Gamma = omega(xi, A(0,z*) xi).
/// xi is rescaled to u-component 1 when the u-component carries at least a
/// quarter of its norm (matching the layer-tangent convention), and to unit
/// norm otherwise (slow crossings, where the u-component is O(eps)).
struct CrossingSign {
  double value = 0.0;
  int sign = 0;  // +1, -1, or 0 when |value| is below the regularity threshold
};

CrossingSign crossing_form_sign(const Vec4& xi, double z_star,
                                const WaveProfile& prof);

/// Regularity threshold under which a crossing is declared degenerate.
inline constexpr double kCrossingRegularityTol = 1e-6;

struct ConjugateEntry {
  double z = 0.0;
  double u_hat = 0.0;  // profile u at the crossing
  int dim = 0;
  Vec4 xi = Vec4::Zero();
  double gamma_value = 0.0;
  int sign = 0;
  std::string segment;
};

struct ConjugateLedger {
  std::vector<ConjugateEntry> entries;  // interior crossings, ascending z
  double tau = 0.0;
  double u_tau = 0.0;
  double endpoint_gamma = 0.0;
  int n_plus = 0;
  int total = 0;           // sum of interior signs + n_plus
  bool degenerate = false; // some |Gamma| fell below the regularity threshold
};

/// All zeros of z -> detection(E^u(0,z), E^s(0,tau)) on (z_min, tau),
/// bisected to |z| tolerance 1e-8, plus the endpoint crossing at tau (where
/// xi is parallel to the wave derivative).
ConjugateLedger locate_conjugate_points(const WaveProfile& prof,
                                        const BundlePathMeta& unstable_bundle,
                                        const ReferencePlane& ref);

inline int maslov_index(const ConjugateLedger& ledger) { return ledger.total; }

/// One-call driver: lambda = 0 bundles, reference plane, conjugate points.
/// If a crossing is degenerate, tau is moved left along the admissible set
/// and the count rerun (a few attempts) before the ledger is returned as-is.
ConjugateLedger maslov_ledger(const WaveProfile& prof,
                              const OdeOptions& ode_opt = {},
                              const ReferenceOptions& ref_opt = {});

// ---------------------------------------------------------------------------
// eps = 0 corner analyses
// ---------------------------------------------------------------------------

enum class Corner { P, Q, QHat };

/// Certificates that the corners of the singular orbit contribute no
/// conjugate points.
///
/// For corners P and QHat (fast-jump landings; identical numbers, since the
/// two landing u-values are f'-mirrors): the detection form along either
/// landing path equals h(z) = ha e^{-sqrt2 z/2} - hb + hc e^{sqrt2 z/2}, and
/// positivity is certified by h_min = 2 sqrt(ha hc) - hb > 0, with
///   h_min = 8a(1-a) sqrt((1-2a)(3-2a)) - 4a(1-2a)(3-2a).
///
/// For corner Q (jump-off): the slow tangent enters as a positive multiple of
/// the rescaled slow eigenvector, the exit happens along c*K times the
/// y-direction with c*K < 0 (selecting the lower link path), and the two
/// entry/exit determinants against the reference-plane model at u_tau are
/// both positive.
struct CornerReport {
  Corner which = Corner::P;
  double u_corner = 0.0;
  // P / QHat fields
  double k = 0.0;  // -omega(eta2, eta3)/omega(eta1, eta4) = sqrt2/(3-2a)
  double ha = 0.0, hb = 0.0, hc = 0.0;
  double h_min = 0.0;
  // Q fields
  double u_tau = 0.0;
  double det_in = 0.0, det_out = 0.0;
  double c_times_k = 0.0;
  bool entrance_positive = false;
  bool exit_lower_link = false;
  bool pass = false;
};

/// u_tau defaults to the midpoint of the admissible interval
/// (2/3 (a - 1/2), 0); it only affects the Corner::Q determinants.
CornerReport corner_diagnostics(
    Corner which, const Params& p,
    double u_tau = std::numeric_limits<double>::quiet_NaN());

/// det[eta1(u_tau), eta2(u_tau), eta2(u), eta4(u)] with the generic
/// eigenvector normalization: the eps = 0 model of the detection form along
/// the right branch, vanishing exactly at the f'-mirror point
/// u = 2(1+a)/3 - u_tau.
double slow_right_model_det(double u, double u_tau, const Params& p);

// ---------------------------------------------------------------------------
// Fixed points of the induced flow on the Lagrangian Grassmannian
// ---------------------------------------------------------------------------

/// One coordinate eigenplane span{eta_i, eta_j} of the frozen layer system.
struct ShaymanPlane {
  int i = 0, j = 0;      // 1-based eigenvector indices
  std::string name;      // "X12", ..., "X34"
  double omega_value = 0.0;
  bool lagrangian = false;
  bool hyperbolic = false;
  int unstable_dim = -1;              // on Lambda(2); -1 for non-Lagrangian
  std::array<double, 3> rates{};      // chart rates; the omega-paired pair of
                                      // directions merges into one on Lambda(2)
};

struct ShaymanReport {
  double u = 0.0;
  std::array<double, 4> mu{};
  std::vector<ShaymanPlane> planes;  // all six coordinate planes
  bool pass = false;  // Lagrangian dims come out {3, 2, 1, 0}, all hyperbolic
};

ShaymanReport shayman_classification(double u_corner, const Params& p);

// ---------------------------------------------------------------------------
// Direct spectral cross-checks
// ---------------------------------------------------------------------------

struct EigenvalueScanResult {
  std::vector<double> lambdas;
  std::vector<double> beta_values;  // detection(E^u(l,0), E^s(l,0)), aligned
  int sign_changes = 0;
  bool complete = true;       // all integrations finished
  int first_failed_index = -1;
  double lagrangian_residual_max = 0.0;
};

/// Evaluate the detection form between the two bundles at z = 0 over an
/// increasing grid of positive lambda (right of the essential spectrum) and
/// count sign changes.  Representative signs are aligned between consecutive
/// grid points so a sign change means an eigenvalue crossing, not a change of
/// Pluecker representative.
EigenvalueScanResult eigenvalue_scan(const WaveProfile& prof,
                                     const std::vector<double>& lambda_grid,
                                     const OdeOptions& opt = {});

struct OmegaWindowDrift {
  double z_lo = 0.0, z_hi = 0.0;
  double lambda = 0.0;
  double max_rel_drift = 0.0;  // |e^{cz} omega(x1,x2) / const - 1|
};

struct SymplecticCheck {
  std::vector<OmegaWindowDrift> windows;
  double omega_drift_max = 0.0;
  double lagrangian_residual_max = 0.0;
  double relation_residual_max = 0.0;
};

/// Verifies the two structural invariants of the linearized flow along the
/// computed wave: constancy of e^{cz} omega(x1, x2) for pairs of solutions
/// (checked on windows spread across all segments, sized so the bound on
/// floating-point cancellation stays below the reporting threshold) and the
/// Lagrangian/Grassmannian residuals of full bundle integrations.
SymplecticCheck check_symplectic_invariants(const WaveProfile& prof,
                                            const std::vector<double>& lambdas,
                                            const OdeOptions& opt = {});

}  // namespace mwave
