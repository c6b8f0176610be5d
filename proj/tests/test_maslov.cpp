#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "mwave/maslov.hpp"

using namespace mwave;

namespace {

const SingularOrbit& shared_orbit() {
  static const SingularOrbit orb =
      assemble_singular_orbit(Params::singular(0.25, 1.0));
  return orb;
}

const WaveProfile& pulse_5e4() {
  static const WaveProfile prof =
      solve_pulse(Params::make(0.25, 1.0, 5e-4), shared_orbit());
  return prof;
}

const WaveProfile& pulse_1e4() {
  static const WaveProfile prof =
      solve_pulse(Params::make(0.25, 1.0, 1e-4), shared_orbit());
  return prof;
}

const BundlePathMeta& unstable_1e4() {
  static const BundlePathMeta b = compute_unstable_bundle(pulse_1e4(), 0.0);
  return b;
}

const BundlePathMeta& stable_1e4() {
  static const BundlePathMeta b = compute_stable_bundle(pulse_1e4(), 0.0);
  return b;
}

const ReferencePlane& reference_1e4() {
  static const ReferencePlane ref =
      compute_reference_plane(pulse_1e4(), stable_1e4());
  return ref;
}

// distance of the unit vector v from the column span of F
double plane_residual(const Mat42& F, const Vec4& v) {
  Eigen::JacobiSVD<Mat42> svd(F, Eigen::ComputeFullU);
  const auto Q = svd.matrixU().leftCols<2>();
  const Vec4 n = v.normalized();
  return (n - Q * (Q.transpose() * n)).norm();
}

double angle_between(const Vec4& x, const Vec4& y) {
  const double c = std::abs(x.normalized().dot(y.normalized()));
  return std::acos(std::min(1.0, c));
}

const ShaymanPlane& plane_named(const ShaymanReport& rep,
                                const std::string& name) {
  for (const auto& pl : rep.planes)
    if (pl.name == name) return pl;
  throw std::logic_error("no plane named " + name);
}

}  // namespace

// --------------------------------------------------------------------------
// eps = 0 closed forms
// --------------------------------------------------------------------------

TEST_CASE("front crossing form has the closed-form value a^2 - 1/4") {
  const double a = 0.25;
  const Params ps = Params::singular(a, 1.0);
  // tangent direction of the fast front bundle at its detection point
  const Vec4 xi(1.0, 0.0, -a * std::sqrt(2.0), std::sqrt(2.0));
  const Mat4 A = linearization(a + 0.5, 0.0, ps);
  const double gamma = symplectic_form(xi, A * xi);

  CHECK(std::abs(gamma - (a * a - 0.25)) < 1e-14);
  CHECK(std::abs(gamma + 3.0 / 16.0) < 1e-14);
  CHECK(gamma < 0.0);
}

TEST_CASE("corner P: landing detection stays positive") {
  const CornerReport rep = corner_diagnostics(Corner::P, Params::singular(0.25, 1.0));

  CHECK(rep.u_corner == 1.0);
  // k = sqrt2/(3-2a); h-coefficients are rational at a = 1/4
  CHECK(std::abs(rep.k - std::sqrt(2.0) / 2.5) < 1e-14);
  CHECK(std::abs(rep.ha - 15.0 / 64.0) < 1e-12);
  CHECK(std::abs(rep.hb - 5.0 / 4.0) < 1e-12);
  CHECK(std::abs(rep.hc - 3.0) < 1e-12);

  // AM-GM floor of ha e^{-s} - hb + hc e^{s}
  const double floor = 2.0 * std::sqrt(rep.ha * rep.hc) - rep.hb;
  CHECK(std::abs(rep.h_min - floor) < 1e-12);
  CHECK(std::abs(rep.h_min - 0.42705098312484235) < 1e-12);
  CHECK(rep.h_min > 0.0);
  CHECK(rep.pass);
}

TEST_CASE("corner QHat carries the same certificate as corner P") {
  const Params ps = Params::singular(0.25, 1.0);
  const CornerReport p = corner_diagnostics(Corner::P, ps);
  const CornerReport qh = corner_diagnostics(Corner::QHat, ps);

  // the two landing points are f'-mirrors, so every number coincides
  CHECK(std::abs(qh.u_corner - (u_star(0.25) - 1.0)) < 1e-14);
  CHECK(std::abs(qh.k - p.k) < 1e-12);
  CHECK(std::abs(qh.ha - p.ha) < 1e-12);
  CHECK(std::abs(qh.hb - p.hb) < 1e-12);
  CHECK(std::abs(qh.hc - p.hc) < 1e-12);
  CHECK(std::abs(qh.h_min - p.h_min) < 1e-12);
  CHECK(qh.pass);
}

TEST_CASE("corner P floor matches its closed form across the a range") {
  for (double a = 0.05; a < 0.46; a += 0.05) {
    const CornerReport rep = corner_diagnostics(Corner::P, Params::singular(a, 1.0));
    const double closed = 8.0 * a * (1.0 - a) *
                              std::sqrt((1.0 - 2.0 * a) * (3.0 - 2.0 * a)) -
                          4.0 * a * (1.0 - 2.0 * a) * (3.0 - 2.0 * a);
    CHECK(std::abs(rep.h_min - closed) < 1e-10);
    CHECK(rep.h_min > 0.0);
    CHECK(rep.pass);
  }
}

TEST_CASE("corner Q: entry and exit determinants at the default u_tau") {
  const double a = 0.25;
  const CornerReport rep = corner_diagnostics(Corner::Q, Params::singular(a, 1.0));

  CHECK(std::abs(rep.u_corner - u_star(a)) < 1e-14);
  CHECK(std::abs(rep.u_tau - (-1.0 / 12.0)) < 1e-14);  // midpoint default

  // entry determinant: exact radical value at a = 1/4, u_tau = -1/12
  const double din = 319.0 / 2304.0 + 1309.0 * std::sqrt(3.0) / 6912.0;
  CHECK(std::abs(rep.det_in - din) < 1e-12);

  // exit determinant: f'(u_tau)^2 a (sqrt2 - 2 mu1(u_tau)) / 2
  const double fp = cubic_eval(rep.u_tau, a).fp;
  const double cs = singular_speed(a);
  const double mu1 = (-cs - std::sqrt(cs * cs - 4.0 * fp)) / 2.0;
  const double dout = fp * fp * a * (std::sqrt(2.0) - 2.0 * mu1) / 2.0;
  CHECK(std::abs(rep.det_out - dout) < 1e-12);
  CHECK(std::abs(rep.det_out - 0.07144970381214018) < 1e-12);

  // the exit leaves along c*K times the y-direction; c*K = -pi/2 at a = 1/4
  CHECK(std::abs(rep.c_times_k - (-M_PI / 2.0)) < 1e-8);
  CHECK(rep.c_times_k < 0.0);
  CHECK(rep.entrance_positive);
  CHECK(rep.exit_lower_link);
  CHECK(rep.pass);
}

TEST_CASE("corner Q determinants stay positive across a and u_tau") {
  for (double a = 0.05; a < 0.46; a += 0.05) {
    const double u_land = 2.0 / 3.0 * (a - 0.5);
    for (double frac : {0.1, 0.5, 0.9}) {
      const CornerReport rep =
          corner_diagnostics(Corner::Q, Params::singular(a, 1.0), u_land * frac);
      CHECK(rep.det_in > 0.0);
      CHECK(rep.det_out > 0.0);
      CHECK(rep.pass);
    }
  }
}

TEST_CASE("corner Q rejects u_tau outside the return segment") {
  const Params ps = Params::singular(0.25, 1.0);
  const double u_land = 2.0 / 3.0 * (0.25 - 0.5);
  CHECK_THROWS_AS(corner_diagnostics(Corner::Q, ps, 0.01),
                  std::invalid_argument);
  CHECK_THROWS_AS(corner_diagnostics(Corner::Q, ps, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(corner_diagnostics(Corner::Q, ps, 1.5 * u_land),
                  std::invalid_argument);
}

TEST_CASE("slow-right model determinant vanishes exactly at the mirror point") {
  const double a = 0.25;
  const Params ps = Params::singular(a, 1.0);
  const double u_tau = -1.0 / 12.0;
  const double mirror = 2.0 * (1.0 + a) / 3.0 - u_tau;  // = 11/12

  CHECK(std::abs(slow_right_model_det(mirror, u_tau, ps)) < 1e-12);

  // simple zero: sign change across it, and the only one on the branch
  const double lo = slow_right_model_det(mirror - 0.02, u_tau, ps);
  const double hi = slow_right_model_det(mirror + 0.02, u_tau, ps);
  CHECK(lo * hi < 0.0);

  int changes = 0;
  double prev = slow_right_model_det(u_star(a) + 1e-3, u_tau, ps);
  for (double u = u_star(a) + 1e-3; u <= 0.999; u += 1e-3) {
    const double cur = slow_right_model_det(u, u_tau, ps);
    if ((cur < 0.0) != (prev < 0.0)) ++changes;
    prev = cur;
  }
  CHECK(changes == 1);
}

TEST_CASE("reference plane model at u_tau = 0 is the stable rest plane") {
  for (double a : {0.15, 0.25, 0.4}) {
    const Params ps = Params::singular(a, 1.0);
    const Mat42 model = reference_plane_model(0.0, ps);

    Mat42 vs;
    vs.col(0) << 1.0, -a, 0.0, -(1.0 + ps.gamma * a) / ps.c;
    vs.col(1) << 1.0, 0.0, -a * std::sqrt(2.0), std::sqrt(2.0);
    CHECK(subspace_angle(model, vs) < 1e-12);
  }
}

// --------------------------------------------------------------------------
// fixed points of the induced flow on Lambda(2)
// --------------------------------------------------------------------------

TEST_CASE("coordinate-plane dimensions at the three corner base points") {
  const Params ps = Params::singular(0.25, 1.0);
  for (double u : {0.0, 1.0, u_star(0.25)}) {
    const ShaymanReport rep = shayman_classification(u, ps);
    CHECK(rep.pass);
    CHECK(std::abs(rep.mu[1]) < 1e-14);               // the wave-derivative rate
    CHECK(std::abs(rep.mu[2] - (-ps.c)) < 1e-12);     // its omega partner

    CHECK(plane_named(rep, "X12").unstable_dim == 3);
    CHECK(plane_named(rep, "X13").unstable_dim == 2);
    CHECK(plane_named(rep, "X24").unstable_dim == 1);
    CHECK(plane_named(rep, "X34").unstable_dim == 0);
    for (const char* name : {"X12", "X13", "X24", "X34"}) {
      const ShaymanPlane& pl = plane_named(rep, name);
      CHECK(pl.lagrangian);
      CHECK(pl.hyperbolic);
      CHECK(std::abs(pl.omega_value) < 1e-12);
    }
    // the omega-pairing excludes the other two coordinate planes
    CHECK_FALSE(plane_named(rep, "X14").lagrangian);
    CHECK_FALSE(plane_named(rep, "X23").lagrangian);
    CHECK(plane_named(rep, "X14").unstable_dim == -1);
    CHECK(plane_named(rep, "X23").unstable_dim == -1);
  }
}

TEST_CASE("classification refuses non-hyperbolic base points") {
  const Params ps = Params::singular(0.25, 1.0);
  // middle branch: f' > 0, no layer saddle at all
  CHECK_THROWS_AS(shayman_classification(0.5, ps), std::domain_error);
  // just outside the fold: two rates collide and the chart degenerates
  const double u_fold = cubic_folds(0.25).hi;
  CHECK_THROWS_AS(shayman_classification(u_fold + 1e-10, ps),
                  std::runtime_error);
}

// --------------------------------------------------------------------------
// bundles along the eps = 1e-4 pulse
// --------------------------------------------------------------------------

TEST_CASE("lambda = 0 bundles: Lagrangian residuals and the wave derivative") {
  const WaveProfile& prof = pulse_1e4();
  const BundlePathMeta& un = unstable_1e4();
  const BundlePathMeta& st = stable_1e4();

  CHECK(un.lambda == 0.0);
  CHECK(un.lagrangian_residual_max < 1e-10);
  CHECK(un.relation_residual_max < 1e-10);
  CHECK(st.lagrangian_residual_max < 1e-10);
  CHECK(st.relation_residual_max < 1e-10);

  // integration directions
  CHECK(std::abs(un.path.nodes.front().z - prof.z_min()) < 1e-9);
  CHECK(std::abs(st.path.nodes.front().z - prof.z_max()) < 1e-9);

  // phi'(z) lies in both planes at every sampled z
  const ProfileInterpolant interp(prof);
  for (const BundlePathMeta* b : {&un, &st}) {
    const auto& nodes = b->path.nodes;
    const std::size_t step = nodes.size() / 40 + 1;
    for (std::size_t i = 0; i < nodes.size(); i += step) {
      const Vec4 phi = vector_field(interp.state(nodes[i].z), prof.p);
      const Mat42 F = frame_from_plucker(PluckerPoint{nodes[i].x});
      CHECK(plane_residual(F, phi) < 1e-6);
    }
  }
}

TEST_CASE("bundle endpoints match the rest-state eigenplanes") {
  const WaveProfile& prof = pulse_1e4();
  const RestSpectrum rs = rest_spectrum(0.0, prof.p);

  Mat42 vu;
  vu.col(0) = rs.V.col(2);
  vu.col(1) = rs.V.col(3);
  const Mat42 f0 =
      frame_from_plucker(PluckerPoint{unstable_1e4().path.nodes.front().x});
  CHECK(subspace_angle(f0, vu) < 1e-6);

  // the stable seed carries the profile tail, which decays at the slow rate;
  // its distance to the ideal rest plane is the domain-truncation defect
  Mat42 vs;
  vs.col(0) = rs.V.col(0);
  vs.col(1) = rs.V.col(1);
  const Mat42 g0 =
      frame_from_plucker(PluckerPoint{stable_1e4().path.nodes.front().x});
  CHECK(subspace_angle(g0, vs) < 1e-3);
}

TEST_CASE("unstable plane rides the front-layer tangent model") {
  const WaveProfile& prof = pulse_1e4();
  const ProfileInterpolant interp(prof);
  const auto& nodes = unstable_1e4().path.nodes;

  // node nearest the phase-condition point u(0) = 1/2, mid-front
  std::size_t k = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (std::abs(nodes[i].z) < std::abs(nodes[k].z)) k = i;

  const double u = interp.u(nodes[k].z);
  Mat42 model;
  model.col(0) << 1.0, 0.0, std::sqrt(2.0) * (0.5 - u), 0.0;
  model.col(1) << 0.0, 0.0, 0.0, 1.0;
  const Mat42 F = frame_from_plucker(PluckerPoint{nodes[k].x});
  CHECK(subspace_angle(F, model) < 1e-2);
}

// --------------------------------------------------------------------------
// reference plane and the conjugate-point ledger at eps = 1e-4
// --------------------------------------------------------------------------

TEST_CASE("reference plane: admissible tau on the slow return") {
  const WaveProfile& prof = pulse_1e4();
  const ReferencePlane& ref = reference_1e4();

  CHECK(ref.tau > prof.z_back_hi);
  CHECK(ref.tau < prof.z_max());
  CHECK(ref.transversality_margin >= 0.02);

  const double u_land = 2.0 / 3.0 * (prof.p.a - 0.5);
  CHECK(ref.u_tau > u_land);
  CHECK(ref.u_tau < 0.0);

  // the slow-manifold model of E^s(0, tau)
  CHECK(subspace_angle(ref.frame, reference_plane_model(ref.u_tau, prof.p)) <
        0.01);
}

TEST_CASE("conjugate ledger at 1e-4: the four-crossing scorecard") {
  const WaveProfile& prof = pulse_1e4();
  const ConjugateLedger led =
      locate_conjugate_points(prof, unstable_1e4(), reference_1e4());

  REQUIRE(led.entries.size() == 3);
  CHECK_FALSE(led.degenerate);
  CHECK(led.n_plus == 1);
  CHECK(led.endpoint_gamma > 0.0);
  CHECK(led.total == 0);
  CHECK(maslov_index(led) == 0);

  int sum = led.n_plus;
  for (const auto& e : led.entries) sum += e.sign;
  CHECK(led.total == sum);

  const ConjugateEntry& front = led.entries[0];
  const ConjugateEntry& slow = led.entries[1];
  const ConjugateEntry& back = led.entries[2];

  for (const auto& e : led.entries) {
    CHECK(e.dim == 1);
    CHECK(std::abs(e.gamma_value) > kCrossingRegularityTol);
    CHECK(e.segment != "corner");
  }

  CHECK(front.segment == "front");
  CHECK(front.sign == -1);
  CHECK(front.z > 1.0);
  CHECK(front.z < 2.5);
  CHECK(std::abs(front.u_hat - 0.7736) < 0.01);
  CHECK(std::abs(front.gamma_value - (-0.1723)) < 0.01);

  CHECK(slow.segment == "slow_right");
  CHECK(slow.sign == +1);
  const double mirror = 2.0 * (1.0 + prof.p.a) / 3.0 - led.u_tau;
  CHECK(std::abs(slow.u_hat - mirror) < 0.02);
  CHECK(slow.gamma_value > 0.0);
  CHECK(slow.gamma_value < 0.05);

  CHECK(back.segment == "back");
  CHECK(back.sign == -1);
  CHECK(std::abs(back.u_hat - 0.0613) < 0.01);
  CHECK(std::abs(back.gamma_value - (-0.1758)) < 0.01);
}

TEST_CASE("the count is independent of the admissible tau") {
  const WaveProfile& prof = pulse_1e4();
  for (int skip : {40, 80, 160}) {
    ReferenceOptions ro;
    ro.skip_admissible = skip;
    const ReferencePlane ref = compute_reference_plane(prof, stable_1e4(), ro);
    const ConjugateLedger led =
        locate_conjugate_points(prof, unstable_1e4(), ref);

    CHECK(led.entries.size() == 3);
    CHECK(led.total == 0);
    CHECK(led.n_plus == 1);
    CHECK(led.entries[0].segment == "front");
    CHECK(led.entries[1].segment == "slow_right");
    CHECK(led.entries[2].segment == "back");
  }
}

TEST_CASE("endpoint intersection is the wave derivative") {
  const WaveProfile& prof = pulse_1e4();
  const ReferencePlane& ref = reference_1e4();
  const ProfileInterpolant interp(prof);
  const Params pc = prof.p;

  // transport the nearest bundle node to exactly tau
  const auto& nodes = unstable_1e4().path.nodes;
  std::size_t k = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (std::abs(nodes[i].z - ref.tau) < std::abs(nodes[k].z - ref.tau)) k = i;
  const CoeffFn B = [&interp, pc](double z) {
    return linearization(interp.u(z), 0.0, pc);
  };
  OdeOptions fine;
  fine.initial_dz = 1e-3;
  const auto path = integrate_plucker(B, PluckerPoint{nodes[k].x}, nodes[k].z,
                                      ref.tau, fine);

  const Mat42 Fu = frame_from_plucker(PluckerPoint{path.back().x}, 1e-5);
  Vec4 xi;
  const int dim = intersection_dimension(Fu, ref.frame, 1e-4, &xi);
  REQUIRE(dim == 1);

  const Vec4 phi = vector_field(interp.state(ref.tau), pc);
  CHECK(angle_between(xi, phi) < 1e-3);
}

TEST_CASE("full driver at 5e-4 reproduces the scorecard") {
  const ConjugateLedger led = maslov_ledger(pulse_5e4());

  REQUIRE(led.entries.size() == 3);
  CHECK(led.total == 0);
  CHECK(led.n_plus == 1);
  CHECK(led.endpoint_gamma > 0.0);
  CHECK_FALSE(led.degenerate);

  CHECK(led.entries[0].segment == "front");
  CHECK(led.entries[1].segment == "slow_right");
  CHECK(led.entries[2].segment == "back");
  CHECK(led.entries[0].sign == -1);
  CHECK(led.entries[1].sign == +1);
  CHECK(led.entries[2].sign == -1);
  CHECK(std::abs(led.entries[0].u_hat - 0.7818) < 0.01);
  CHECK(std::abs(led.entries[2].u_hat - 0.0603) < 0.01);
}

// --------------------------------------------------------------------------
// spectral cross-checks
// --------------------------------------------------------------------------

TEST_CASE("eigenvalue scan finds no crossings right of the essential spectrum") {
  const EigenvalueScanResult scan =
      eigenvalue_scan(pulse_5e4(), {0.05, 0.2, 0.5, 1.0});

  CHECK(scan.complete);
  CHECK(scan.first_failed_index == -1);
  CHECK(scan.sign_changes == 0);
  CHECK(scan.lagrangian_residual_max < 1e-8);
  REQUIRE(scan.beta_values.size() == 4);
  REQUIRE(scan.lambdas.size() == 4);
  for (double b : scan.beta_values) CHECK(b > 0.0);
}

TEST_CASE("eigenvalue scan validates its grid") {
  const WaveProfile& prof = pulse_5e4();
  CHECK_THROWS_AS(eigenvalue_scan(prof, {0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(eigenvalue_scan(prof, {-0.1, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(eigenvalue_scan(prof, {0.5, 0.2}), std::invalid_argument);
}

TEST_CASE("bundle integration rejects lambda left of the resolvent set") {
  CHECK_THROWS_AS(compute_unstable_bundle(pulse_5e4(), -0.5),
                  std::invalid_argument);
}

TEST_CASE("symplectic invariants hold along the computed wave") {
  const SymplecticCheck sc =
      check_symplectic_invariants(pulse_5e4(), {0.0, 0.5});

  CHECK(sc.omega_drift_max < 1e-7);
  CHECK(sc.lagrangian_residual_max < 1e-10);
  CHECK(sc.relation_residual_max < 1e-8);
  CHECK(sc.windows.size() >= 8);

  bool saw_zero = false, saw_half = false;
  for (const auto& w : sc.windows) {
    CHECK(w.max_rel_drift < 1e-6);
    CHECK(w.z_hi > w.z_lo);
    if (w.lambda == 0.0) saw_zero = true;
    if (w.lambda == 0.5) saw_half = true;
  }
  CHECK(saw_zero);
  CHECK(saw_half);
}
