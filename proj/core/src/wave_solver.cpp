#include "mwave/wave_solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "mwave/io.hpp"
#include "mwave/quadrature.hpp"

namespace mwave {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// ---------------------------------------------------------------------------
// Hyperbolic splitting at a rest state (u enters only through f'(u))
// ---------------------------------------------------------------------------

struct Splitting {
  Eigen::Vector4d mu;  // ascending
  Mat4 V;              // eigenvector columns, unit, canonical sign
  Mat4 Vinv;
};

Splitting splitting_at(double u_base, const Params& p) {
  const Mat4 A = linearization(u_base, 0.0, p);
  Eigen::EigenSolver<Mat4> es(A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigen decomposition failed at rest state");

  std::array<int, 4> order{0, 1, 2, 3};
  const auto ev = es.eigenvalues();
  for (int i = 0; i < 4; ++i)
    if (std::abs(ev[i].imag()) > 1e-9 * (1.0 + std::abs(ev[i].real())))
      throw std::runtime_error(
          "rest-state spectrum is not real: hyperbolic splitting undefined");
  std::sort(order.begin(), order.end(),
            [&](int l, int r) { return ev[l].real() < ev[r].real(); });

  Splitting s;
  for (int k = 0; k < 4; ++k) {
    s.mu[k] = ev[order[k]].real();
    Vec4 v = es.eigenvectors().col(order[k]).real();
    const double n = v.norm();
    if (n < 1e-300) throw std::runtime_error("degenerate eigenvector");
    s.V.col(k) = canonical_sign(v / n);
  }
  if (!(s.mu[1] < 0.0 && s.mu[2] > 0.0))
    throw std::runtime_error("rest state is not 2+2 hyperbolic");
  s.Vinv = s.V.inverse();
  return s;
}

// ---------------------------------------------------------------------------
// Mesh + seed
// ---------------------------------------------------------------------------

struct Mesh {
  std::vector<double> z;
  std::vector<Vec4> seed;
  int i_phase = 0;
  bool merged = false;       // front/back fast windows fused (larger eps)
  bool heteroclinic = false;
  double z_front_lo = 0.0, z_front_hi = 0.0;
  double z_back_lo = 0.0, z_back_hi = 0.0;
  double z_back_center = 0.0;  // transfer anchor (0 for heteroclinic)
  double u_right = 0.0;        // base point of the right rest state
  Vec4 right_rest = Vec4::Zero();
};

// Bounded layer y with cheap asymptotic shortcuts for deep tails.
double front_y_ext(double z, double a, double k_const) {
  const double c = singular_speed(a);
  if (z > 60.0) return -1.0 / c;
  if (z < -60.0) return k_const * std::exp(-c * z);
  return front_y(z, a);
}

double clamp(double x, double lo, double hi) {
  return std::min(std::max(x, lo), hi);
}

// z-length accumulated by the reduced flow between two nearby levels.  The
// leading slow expression for y picks up a first-order correction from its own
// v-dependence; keeping it sharpens the predicted layer spacing enough that
// Newton starts within a mesh cell of the answer.
double slow_dz(double v0, double v1, const CriticalBranch& br, double gamma,
               double c, double eps) {
  auto g = [&](double v) {
    const double dy0 = (gamma - 1.0 / br.slope(v)) / c;
    return (c + eps * dy0) / (eps * (gamma * v - br.inverse(v)));
  };
  return 0.5 * (g(v0) + g(v1)) * (v1 - v0);
}

Mesh build_pulse_mesh(const Params& p, const SingularOrbit& orb,
                      const SolveOptions& opt) {
  const double a = p.a, eps = p.eps, gamma = p.gamma;
  const double c0 = singular_speed(a);
  const double W = opt.fast_halfwidth;
  const double vs = orb.v_star;
  const CriticalBranch right(BranchSide::Right, a);
  const CriticalBranch left(BranchSide::Left, a);

  // Drift of v across the front region in the layer approximation.
  auto vdrift_at = [&](const std::vector<double>& zs) {
    std::vector<double> acc(zs.size());
    double run = orb.k * std::exp(-c0 * zs.front()) / (-c0);
    double prev = front_y_ext(zs.front(), a, orb.k);
    acc[0] = run;
    for (size_t i = 1; i < zs.size(); ++i) {
      const double cur = front_y_ext(zs[i], a, orb.k);
      run += 0.5 * (prev + cur) * (zs[i] - zs[i - 1]);
      acc[i] = run;
      prev = cur;
    }
    return acc;
  };

  // Estimated back-layer center from the reduced flow.
  const double vtil_W = vdrift_at({-W - opt.left_pad, -W, 0.0, W}).back();
  const double v_A = clamp(eps * vtil_W, 0.0, 0.8 * vs);
  double zB = W;
  {
    const int n = 400;
    double vp = v_A;
    for (int i = 1; i <= n; ++i) {
      const double vn = v_A + (vs - v_A) * i / n;
      zB += slow_dz(vp, vn, right, gamma, c0, eps);
      vp = vn;
    }
  }
  Mesh mesh;
  mesh.merged = zB < 2.0 * W + 5.0;
  mesh.z_back_center = zB;
  mesh.u_right = 0.0;

  // --- node layout -------------------------------------------------------
  std::vector<double> z;
  std::vector<int> region;       // 0 front, 1 slow-right, 2 back, 3 slow-left
  std::vector<double> v_slow;    // intended v for slow nodes

  const int n_pad = std::max(2, (int)std::lround(opt.left_pad / opt.coarse_dz));
  for (int i = 0; i < n_pad; ++i) {
    z.push_back(-W - opt.left_pad + opt.left_pad * i / n_pad);
    region.push_back(0);
    v_slow.push_back(0.0);
  }
  const int nf = (int)std::lround(W / opt.fast_dz);
  if (std::abs(nf * opt.fast_dz - W) > 1e-9)
    throw std::invalid_argument("fast_halfwidth must be a multiple of fast_dz");

  double v_B = clamp(vs - eps * orb.y_q * W, v_A + 1e-3 * vs, vs);
  double z_backwin_start = 0.0;

  if (!mesh.merged) {
    for (int i = -nf; i <= nf; ++i) {
      z.push_back(i * opt.fast_dz);
      region.push_back(0);
      v_slow.push_back(0.0);
    }
    // slow right, uniform in v, mapped through the reduced flow
    const int ns = std::max(8, opt.n_slow);
    double zr = W, vp = v_A;
    for (int i = 1; i <= ns; ++i) {
      const double vn = v_A + (v_B - v_A) * i / ns;
      zr += slow_dz(vp, vn, right, gamma, c0, eps);
      vp = vn;
      if (zr > z.back() + 0.25 * opt.fast_dz) {
        z.push_back(zr);
        region.push_back(1);
        v_slow.push_back(vn);
      }
    }
    z_backwin_start = z.back();
    const int nb = 2 * nf;
    for (int i = 1; i <= nb; ++i) {
      z.push_back(z_backwin_start + i * opt.fast_dz);
      region.push_back(2);
      v_slow.push_back(0.0);
    }
    mesh.z_back_center = z_backwin_start + W;
    mesh.z_front_lo = -W;
    mesh.z_front_hi = W;
    mesh.z_back_lo = z_backwin_start;
    mesh.z_back_hi = z.back();
  } else {
    // single fused fast window covering both layers
    const int nmerged = nf + (int)std::lround((zB + W) / opt.fast_dz);
    for (int i = 0; i <= nmerged; ++i) {
      const double zz = -W + i * opt.fast_dz;
      z.push_back(zz);
      const double w_eff = std::min(W, 0.5 * zB);
      region.push_back(zz <= zB - w_eff ? 0 : 2);
      v_slow.push_back(0.0);
    }
    mesh.z_front_lo = -W;
    mesh.z_front_hi = 0.5 * zB;
    mesh.z_back_lo = 0.5 * zB;
    mesh.z_back_hi = z.back();
  }

  // slow left: geometric grading down to the truncation level
  const double v_exit = clamp(vs + eps * (orb.y_q + 1.0 / c0) * W,
                              20.0 * opt.v_end_rel * vs, vs);
  const double v_end = opt.v_end_rel * vs;
  const double ratio = std::pow(10.0, -1.0 / opt.nodes_per_decade);
  {
    double zl = z.back(), vp = v_exit;
    while (vp > v_end * (1.0 + 1e-12)) {
      double vn = std::max(vp * ratio, v_end);
      zl += slow_dz(vp, vn, left, gamma, c0, eps);
      z.push_back(zl);
      region.push_back(3);
      v_slow.push_back(vn);
      vp = vn;
    }
  }

  // --- seed states ---------------------------------------------------------
  const size_t N = z.size();
  mesh.z = z;
  mesh.seed.resize(N);
  const std::vector<double> vtil = vdrift_at(z);

  // region-2 drift: v anchored at the window entry, integrating the layer y
  std::vector<double> v_back(N, 0.0);
  {
    double ventry = v_B;
    int i0 = -1;
    for (size_t i = 0; i < N; ++i) {
      if (region[i] != 2) continue;
      if (i0 < 0) {
        i0 = (int)i;
        if (mesh.merged) ventry = clamp(eps * vtil[i], 0.0, 0.9 * right.v_max());
        v_back[i] = ventry;
        continue;
      }
      const double th0 = z[i - 1] - mesh.z_back_center;
      const double th1 = z[i] - mesh.z_back_center;
      const double y0 = orb.y_q - front_y_ext(th0, a, orb.k);
      const double y1 = orb.y_q - front_y_ext(th1, a, orb.k);
      v_back[i] = v_back[i - 1] + eps * 0.5 * (y0 + y1) * (th1 - th0);
    }
  }

  const double vRmax = right.v_max() - 1e-6;
  const double vLmax = left.v_max() - 1e-6;
  for (size_t i = 0; i < N; ++i) {
    Vec4 x;
    switch (region[i]) {
      case 0: {
        const FrontPoint fr = front_point(z[i], a);
        const double v = clamp(eps * vtil[i], 0.0, vRmax);
        const double uR = right.inverse(clamp(v, 0.0, vRmax));
        const double yslow = (gamma * v - uR) / c0;
        const double fy = front_y_ext(z[i], a, orb.k);
        x[0] = fr.u + fr.u * (uR - 1.0);
        x[1] = v;
        x[2] = fr.w + fr.u * eps * fy / right.slope(clamp(v, 0.0, vRmax));
        x[3] = fy + fr.u * (yslow - (-1.0 / c0));
        break;
      }
      case 1: {
        const double v = v_slow[i];
        const double u = right.inverse(v);
        const double y = (gamma * v - u) / c0;
        x << u, v, eps * y / right.slope(v), y;
        break;
      }
      case 2: {
        const double th = z[i] - mesh.z_back_center;
        const FrontPoint fr = front_point(th, a);
        const double v = v_back[i];
        const double vr = clamp(v, 0.0, vRmax);
        const double vl = clamp(v, 1e-12, vLmax);
        const double uR = right.inverse(vr), uL = left.inverse(vl);
        const double yhat = orb.y_q - front_y_ext(th, a, orb.k);
        x[0] = orb.u_star - fr.u + (1.0 - fr.u) * (uR - orb.u_star) +
               fr.u * (uL - (orb.u_star - 1.0));
        x[1] = v;
        x[2] = -fr.w;
        x[3] = yhat + (1.0 - fr.u) * ((gamma * v - uR) / c0 - orb.y_q) +
               fr.u * ((gamma * v - uL) / c0 - (orb.y_q + 1.0 / c0));
        break;
      }
      default: {
        const double v = v_slow[i];
        const double u = left.inverse(v);
        const double y = (gamma * v - u) / c0;
        x << u, v, eps * y / left.slope(v), y;
        break;
      }
    }
    mesh.seed[i] = x;
  }

  // phase node
  mesh.i_phase = -1;
  for (size_t i = 0; i < N; ++i)
    if (std::abs(z[i]) < 1e-9) mesh.i_phase = (int)i;
  if (mesh.i_phase < 0) throw std::logic_error("mesh lost the phase node");
  return mesh;
}

Mesh build_front_mesh(const Params& p, const SolveOptions& opt) {
  const double a = p.a, eps = p.eps, gamma = p.gamma;
  const double c0 = singular_speed(a);
  const double W = opt.fast_halfwidth;
  const auto roots = nullcline_intersections(a, gamma);
  if (roots.size() != 3)
    throw std::invalid_argument(
        "front needs three intersections of u = gamma f(u); increase gamma");
  const double u3 = roots[2];
  const double v3 = cubic_eval(u3, a).f;
  const CriticalBranch right(BranchSide::Right, a);
  if (u3 <= right.u_min())
    throw std::invalid_argument("far rest state is not on the right branch");

  const double k_const = front_k(a);

  Mesh mesh;
  mesh.heteroclinic = true;
  mesh.u_right = u3;
  mesh.right_rest << u3, v3, 0.0, 0.0;

  std::vector<double>& z = mesh.z;
  std::vector<int> region;
  const int n_pad = std::max(2, (int)std::lround(opt.left_pad / opt.coarse_dz));
  for (int i = 0; i < n_pad; ++i) {
    z.push_back(-W - opt.left_pad + opt.left_pad * i / n_pad);
    region.push_back(0);
  }
  const int nf = (int)std::lround(W / opt.fast_dz);
  for (int i = -nf; i <= nf; ++i) {
    z.push_back(i * opt.fast_dz);
    region.push_back(0);
  }

  // approach to the slow equilibrium: geometric in sigma = v3 - v
  std::vector<double> vtil;
  {
    double run = k_const * std::exp(-c0 * z.front()) / (-c0);
    double prev = front_y_ext(z.front(), a, k_const);
    vtil.assign(z.size(), 0.0);
    vtil[0] = run;
    for (size_t i = 1; i < z.size(); ++i) {
      const double cur = front_y_ext(z[i], a, k_const);
      run += 0.5 * (prev + cur) * (z[i] - z[i - 1]);
      vtil[i] = run;
      prev = cur;
    }
  }
  const double v_A = clamp(eps * vtil.back(), 0.0, 0.5 * v3);
  const double sigma_A = v3 - v_A;
  const double sigma_end = std::max(opt.v_end_rel * v3, 1e-10);
  const double ratio = std::pow(10.0, -1.0 / opt.nodes_per_decade);
  std::vector<double> v_slow(z.size(), 0.0);
  {
    double zl = z.back();
    double sp = sigma_A;
    while (sp > sigma_end * (1.0 + 1e-12)) {
      const double sn = std::max(sp * ratio, sigma_end);
      // dz/dsigma = -(c + eps dy0)/(eps(gamma v - u_R(v))) with v = v3 - sigma
      auto g = [&](double s) {
        const double v = v3 - s;
        const double dy0 = (gamma - 1.0 / right.slope(v)) / c0;
        return -(c0 + eps * dy0) / (eps * (gamma * v - right.inverse(v)));
      };
      zl += 0.5 * (g(sp) + g(sn)) * (sn - sp);  // dz/dsigma < 0, sigma falls
      z.push_back(zl);
      region.push_back(1);
      v_slow.push_back(v3 - sn);
      sp = sn;
    }
  }

  mesh.z_front_lo = -W;
  mesh.z_front_hi = W;
  mesh.z_back_lo = mesh.z_back_hi = z.back();  // no back layer

  const double vRmax = right.v_max() - 1e-6;
  mesh.seed.resize(z.size());
  for (size_t i = 0; i < z.size(); ++i) {
    Vec4 x;
    if (region[i] == 0) {
      const FrontPoint fr = front_point(z[i], a);
      const double v = clamp(eps * vtil[i], 0.0, vRmax);
      const double uR = right.inverse(v);
      const double fy = front_y_ext(z[i], a, k_const);
      x[0] = fr.u + fr.u * (uR - 1.0);
      x[1] = v;
      x[2] = fr.w + fr.u * eps * fy / right.slope(v);
      x[3] = fy + fr.u * ((gamma * v - uR) / c0 - (-1.0 / c0));
    } else {
      const double v = v_slow[i];
      const double u = right.inverse(v);
      const double y = (gamma * v - u) / c0;
      x << u, v, eps * y / right.slope(v), y;
    }
    mesh.seed[i] = x;
  }
  mesh.i_phase = -1;
  for (size_t i = 0; i < z.size(); ++i)
    if (std::abs(z[i]) < 1e-9) mesh.i_phase = (int)i;
  if (mesh.i_phase < 0) throw std::logic_error("mesh lost the phase node");
  return mesh;
}

// ---------------------------------------------------------------------------
// Hermite–Simpson collocation with projection boundary conditions
// ---------------------------------------------------------------------------

struct NewtonOutcome {
  std::vector<Vec4> x;
  double c = 0.0;
  double residual = 0.0;
  int iters = 0;
  bool ok = false;
  std::string message;
};

class CollocationSystem {
 public:
  CollocationSystem(const Params& p, const Mesh& mesh, const SolveOptions& opt)
      : p_(p), mesh_(mesh), opt_(opt), n_((int)mesh.z.size()) {}

  NewtonOutcome solve(std::vector<Vec4> x, double c) const {
    const int nun = 4 * n_ + 1;
    Eigen::VectorXd r(nun);
    NewtonOutcome out;

    double rn = assemble_residual(x, c, r);
    for (int it = 0; it < opt_.max_newton_iters; ++it) {
      if (opt_.verbose) {
        int imax = 0;
        r.cwiseAbs().maxCoeff(&imax);
        const int node = imax / 4;
        std::fprintf(stderr,
                     "[newton] it=%2d  |r|2=%10.3e  |r|inf=%10.3e  c=%.12f  "
                     "worst row %d (node %d, z=%g)\n",
                     it, rn, r.lpNorm<Eigen::Infinity>(), c, imax,
                     node, node < n_ ? mesh_.z[node] : -1.0);
      }
      if (r.lpNorm<Eigen::Infinity>() <= opt_.newton_tol) {
        out.x = x;
        out.c = c;
        out.residual = r.lpNorm<Eigen::Infinity>();
        out.iters = it;
        out.ok = true;
        return out;
      }
      Eigen::SparseMatrix<double> J(nun, nun);
      assemble_jacobian(x, c, J);
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J);
      if (lu.info() != Eigen::Success) {
        out.message = "sparse factorization failed";
        break;
      }
      Eigen::VectorXd delta = lu.solve(-r);
      if (lu.info() != Eigen::Success) {
        out.message = "sparse solve failed";
        break;
      }

      double t = 1.0;
      bool accepted = false;
      while (t >= 1.0 / 4096.0) {
        std::vector<Vec4> xt(x);
        for (int i = 0; i < n_; ++i)
          xt[i] += t * delta.segment<4>(4 * i);
        const double ct = c + t * delta[4 * n_];
        Eigen::VectorXd rt(nun);
        const double rtn = assemble_residual(xt, ct, rt);
        if (rtn <= rn * (1.0 - 1e-4 * t) ||
            rt.lpNorm<Eigen::Infinity>() <= opt_.newton_tol) {
          x = std::move(xt);
          c = ct;
          r = std::move(rt);
          rn = rtn;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        out.message = "line search stalled";
        break;
      }
      if (opt_.verbose && t < 1.0)
        std::fprintf(stderr, "[newton]        damped step t=%g\n", t);
    }
    out.x = std::move(x);
    out.c = c;
    out.residual = r.lpNorm<Eigen::Infinity>();
    out.iters = opt_.max_newton_iters;
    if (out.message.empty()) out.message = "no convergence";
    out.ok = r.lpNorm<Eigen::Infinity>() <= opt_.newton_tol;
    return out;
  }

  // Boundary rows at the current speed.
  void boundary_rows(double c, Eigen::Matrix<double, 2, 4>& left,
                     Eigen::Matrix<double, 2, 4>& right_rows) const {
    Params pc = p_;
    pc.c = c;
    const Splitting s0 = splitting_at(0.0, pc);
    left = s0.Vinv.topRows<2>();  // kill stable coefficients at the left end
    const Splitting s1 =
        mesh_.heteroclinic ? splitting_at(mesh_.u_right, pc) : s0;
    right_rows = s1.Vinv.bottomRows<2>();  // kill unstable ones at the right
  }

  double assemble_residual(const std::vector<Vec4>& x, double c,
                           Eigen::VectorXd& r) const {
    Params pc = p_;
    pc.c = c;
    for (int i = 0; i + 1 < n_; ++i) {
      const double h = mesh_.z[i + 1] - mesh_.z[i];
      const Vec4 fi = vector_field(x[i], pc);
      const Vec4 fj = vector_field(x[i + 1], pc);
      const Vec4 xm = 0.5 * (x[i] + x[i + 1]) + (h / 8.0) * (fi - fj);
      const Vec4 fm = vector_field(xm, pc);
      r.segment<4>(4 * i) =
          (x[i + 1] - x[i]) / h - (fi + 4.0 * fm + fj) / 6.0;
    }
    Eigen::Matrix<double, 2, 4> bl, br;
    boundary_rows(c, bl, br);
    r.segment<2>(4 * (n_ - 1)) = bl * x.front();
    r.segment<2>(4 * (n_ - 1) + 2) = br * (x.back() - mesh_.right_rest);
    r[4 * n_] = x[mesh_.i_phase][0] - 0.5;
    return r.norm();
  }

  void assemble_jacobian(const std::vector<Vec4>& x, double c,
                         Eigen::SparseMatrix<double>& J) const {
    Params pc = p_;
    pc.c = c;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(40 * n_);
    const int ccol = 4 * n_;

    auto fc_of = [](const Vec4& u) {
      Vec4 g;
      g << 0.0, 0.0, -u[2], -u[3];
      return g;
    };

    for (int i = 0; i + 1 < n_; ++i) {
      const double h = mesh_.z[i + 1] - mesh_.z[i];
      const Vec4 fi = vector_field(x[i], pc);
      const Vec4 fj = vector_field(x[i + 1], pc);
      const Vec4 xm = 0.5 * (x[i] + x[i + 1]) + (h / 8.0) * (fi - fj);
      const Mat4 Ai = linearization(x[i][0], 0.0, pc);
      const Mat4 Aj = linearization(x[i + 1][0], 0.0, pc);
      const Mat4 Am = linearization(xm[0], 0.0, pc);
      const Mat4 I = Mat4::Identity();

      const Mat4 dmi = 0.5 * I + (h / 8.0) * Ai;
      const Mat4 dmj = 0.5 * I - (h / 8.0) * Aj;
      const Mat4 dRi = -I / h - (Ai + 4.0 * Am * dmi) / 6.0;
      const Mat4 dRj = I / h - (Aj + 4.0 * Am * dmj) / 6.0;

      const Vec4 fci = fc_of(x[i]), fcj = fc_of(x[i + 1]), fcm = fc_of(xm);
      const Vec4 dmc = (h / 8.0) * (fci - fcj);
      const Vec4 dRc = -(fci + 4.0 * (fcm + Am * dmc) + fcj) / 6.0;

      for (int rr = 0; rr < 4; ++rr) {
        for (int cc = 0; cc < 4; ++cc) {
          trip.emplace_back(4 * i + rr, 4 * i + cc, dRi(rr, cc));
          trip.emplace_back(4 * i + rr, 4 * (i + 1) + cc, dRj(rr, cc));
        }
        trip.emplace_back(4 * i + rr, ccol, dRc[rr]);
      }
    }

    // boundary rows; their c-derivative by central differences
    Eigen::Matrix<double, 2, 4> bl, br, blp, brp, blm, brm;
    boundary_rows(c, bl, br);
    const double dc = 1e-6 * (1.0 + std::abs(c));
    boundary_rows(c + dc, blp, brp);
    boundary_rows(c - dc, blm, brm);
    const Eigen::Matrix<double, 2, 4> dbl = (blp - blm) / (2.0 * dc);
    const Eigen::Matrix<double, 2, 4> dbr = (brp - brm) / (2.0 * dc);

    const int row0 = 4 * (n_ - 1);
    for (int rr = 0; rr < 2; ++rr) {
      for (int cc = 0; cc < 4; ++cc) {
        trip.emplace_back(row0 + rr, cc, bl(rr, cc));
        trip.emplace_back(row0 + 2 + rr, 4 * (n_ - 1) + cc, br(rr, cc));
      }
      trip.emplace_back(row0 + rr, ccol, dbl.row(rr).dot(x.front()));
      trip.emplace_back(row0 + 2 + rr, ccol,
                        dbr.row(rr).dot(x.back() - mesh_.right_rest));
    }
    trip.emplace_back(4 * n_, 4 * mesh_.i_phase, 1.0);

    J.setFromTriplets(trip.begin(), trip.end());
  }

 private:
  Params p_;
  const Mesh& mesh_;
  SolveOptions opt_;
  int n_;
};

WaveProfile profile_from(const Params& p, const Mesh& mesh,
                         const NewtonOutcome& res) {
  WaveProfile prof;
  prof.p = p;
  prof.p.c = res.c;
  prof.c = res.c;
  prof.eps = p.eps;
  prof.z = mesh.z;
  prof.x = res.x;
  prof.residual = res.residual;
  prof.newton_iters = res.iters;
  prof.phase_index = mesh.i_phase;
  prof.z_front_lo = mesh.z_front_lo;
  prof.z_front_hi = mesh.z_front_hi;
  prof.z_back_lo = mesh.z_back_lo;
  prof.z_back_hi = mesh.z_back_hi;
  prof.heteroclinic = mesh.heteroclinic;

  CollocationSystem sys(p, mesh, SolveOptions{});
  Eigen::Matrix<double, 2, 4> bl, br;
  sys.boundary_rows(res.c, bl, br);
  const double dl = (bl * res.x.front()).lpNorm<Eigen::Infinity>();
  const double dr =
      (br * (res.x.back() - mesh.right_rest)).lpNorm<Eigen::Infinity>();
  prof.endpoint_defect = std::max(dl, dr);
  return prof;
}

// Transfer a solved profile onto a new mesh through a piecewise-linear
// reparameterization aligning front (identity), back center, and right end.
std::vector<Vec4> transfer_seed(const WaveProfile& old_prof, const Mesh& mesh) {
  const ProfileInterpolant interp(old_prof);
  const double zb_new = mesh.z_back_center;
  double zb_old = zb_new;
  if (!mesh.heteroclinic) {
    // locate the old back center: downward crossing of u* - 1/2 level
    const double level = 0.5 * (2.0 * (old_prof.p.a + 1.0) / 3.0 +
                                (2.0 * (old_prof.p.a + 1.0) / 3.0 - 1.0));
    zb_old = old_prof.z_back_lo + 0.5 * (old_prof.z_back_hi - old_prof.z_back_lo);
    for (size_t i = old_prof.z.size(); i-- > 1;) {
      if (old_prof.z[i - 1] <= old_prof.z_front_hi) break;
      if (old_prof.x[i - 1][0] >= level && old_prof.x[i][0] < level) {
        const double t =
            (old_prof.x[i - 1][0] - level) /
            (old_prof.x[i - 1][0] - old_prof.x[i][0]);
        zb_old = old_prof.z[i - 1] + t * (old_prof.z[i] - old_prof.z[i - 1]);
        break;
      }
    }
  }
  const double ze_new = mesh.z.back();
  const double ze_old = old_prof.z.back();
  const double wa = mesh.heteroclinic
                        ? mesh.z_front_hi
                        : std::min({mesh.z_front_hi, 0.5 * zb_new, 0.5 * zb_old});

  // Keep the back layer rigid (unit slope) so its width is not distorted by
  // the stretching of the slow stretches on either side.
  double wr = 0.0;
  if (!mesh.heteroclinic) {
    wr = std::min({mesh.z_front_hi, 0.5 * (zb_new - wa), 0.5 * (zb_old - wa),
                   0.5 * (ze_new - zb_new), 0.5 * (ze_old - zb_old)});
    wr = std::max(wr, 0.0);
  }

  auto zeta = [&](double z) {
    if (z <= wa) return z;
    if (mesh.heteroclinic || zb_new <= wa) {
      return wa + (z - wa) * (ze_old - wa) / (ze_new - wa);
    }
    if (z <= zb_new - wr)
      return wa + (z - wa) * (zb_old - wr - wa) / (zb_new - wr - wa);
    if (z <= zb_new + wr) return zb_old + (z - zb_new);
    return zb_old + wr +
           (z - zb_new - wr) * (ze_old - zb_old - wr) / (ze_new - zb_new - wr);
  };

  std::vector<Vec4> seed(mesh.z.size());
  for (size_t i = 0; i < mesh.z.size(); ++i) {
    const double zz = clamp(zeta(mesh.z[i]), interp.z_min(), interp.z_max());
    seed[i] = interp.state(zz);
  }
  return seed;
}

WaveProfile solve_on_mesh(const Params& p, const Mesh& mesh,
                          std::vector<Vec4> seed, double c0,
                          const SolveOptions& opt) {
  CollocationSystem sys(p, mesh, opt);
  NewtonOutcome res = sys.solve(std::move(seed), c0);
  if (!res.ok)
    throw std::runtime_error("wave solve did not converge (eps=" +
                             fmt17(p.eps) + ", last residual " +
                             fmt17(res.residual) + ", " + res.message + ")");
  return profile_from(p, mesh, res);
}

}  // namespace

// ---------------------------------------------------------------------------
// public API
// ---------------------------------------------------------------------------

BoundaryProjectors boundary_projectors(const Params& p) {
  const Splitting s = splitting_at(0.0, p);
  BoundaryProjectors bp;
  bp.stable = s.V.leftCols<2>();
  bp.unstable = s.V.rightCols<2>();
  Mat4 sel_u = Mat4::Zero(), sel_s = Mat4::Zero();
  sel_u(2, 2) = sel_u(3, 3) = 1.0;
  sel_s(0, 0) = sel_s(1, 1) = 1.0;
  bp.projector_unstable = s.V * sel_u * s.Vinv;
  bp.projector_stable = s.V * sel_s * s.Vinv;
  bp.annihilator_left = s.Vinv.topRows<2>();
  bp.annihilator_right = s.Vinv.bottomRows<2>();
  return bp;
}

std::string profile_segment(const WaveProfile& prof, double z,
                            double corner_radius) {
  const ProfileInterpolant interp(prof);
  const Vec4 x = interp.state(z);
  const double a = prof.p.a;
  const double us = u_star(a), vs = v_star(a);
  // transition points of the singular loop in the (u,v) plane: front landing,
  // jump-off fold, back landing
  const double uc[3] = {1.0, us, us - 1.0};
  const double vc[3] = {0.0, vs, vs};
  for (int k = 0; k < 3; ++k)
    if (std::hypot(x[0] - uc[k], x[1] - vc[k]) < corner_radius)
      return "corner";
  constexpr double kLayerSlope = 0.02;  // |u'| well above any slow passage
  if (x[2] >= kLayerSlope) return "front";
  if (x[2] <= -kLayerSlope) return "back";
  if (x[0] >= 0.4) return "slow_right";
  // the left-hand tail of the front decays to the same rest state the slow
  // return ends on; split the two by position
  return z <= prof.z_front_hi ? "front" : "slow_left";
}

ProfileInterpolant::ProfileInterpolant(const WaveProfile& prof)
    : z_(prof.z), x_(prof.x) {
  if (z_.size() < 2) throw std::invalid_argument("profile too short");
  f_.resize(x_.size());
  for (size_t i = 0; i < x_.size(); ++i)
    f_[i] = vector_field(x_[i], prof.p);
}

int ProfileInterpolant::interval(double z) const {
  if (z <= z_.front()) return 0;
  if (z >= z_.back()) return (int)z_.size() - 2;
  const auto it = std::upper_bound(z_.begin(), z_.end(), z);
  return (int)std::distance(z_.begin(), it) - 1;
}

Vec4 ProfileInterpolant::state(double z) const {
  const int i = interval(z);
  const double h = z_[i + 1] - z_[i];
  const double t = clamp((z - z_[i]) / h, 0.0, 1.0);
  const double t2 = t * t, t3 = t2 * t;
  return (1.0 - 3.0 * t2 + 2.0 * t3) * x_[i] + (3.0 * t2 - 2.0 * t3) * x_[i + 1] +
         h * ((t - 2.0 * t2 + t3) * f_[i] + (t3 - t2) * f_[i + 1]);
}

double ProfileInterpolant::u(double z) const { return state(z)[0]; }

std::vector<double> nullcline_intersections(double a, double gamma) {
  std::vector<double> roots{0.0};
  const double disc = (1.0 - a) * (1.0 - a) - 4.0 / gamma;
  if (disc > 1e-12) {
    const double s = std::sqrt(disc);
    roots.push_back(0.5 * (1.0 + a - s));
    roots.push_back(0.5 * (1.0 + a + s));
  }
  return roots;
}

WaveProfile solve_pulse(const Params& p, const SingularOrbit& seed,
                        const SolveOptions& opt) {
  p.validate();
  if (!(p.eps > 0.0) || p.eps > p.eps_max)
    throw std::invalid_argument("solve_pulse needs eps in (0, eps_max]");
  if (std::abs(seed.p.a - p.a) > 1e-14 ||
      std::abs(seed.p.gamma - p.gamma) > 1e-14)
    throw std::invalid_argument("singular seed was assembled at different a or gamma");

  const double c0 = singular_speed(p.a);

  // cold attempt straight at the target
  {
    const Mesh mesh = build_pulse_mesh(p, seed, opt);
    CollocationSystem sys(p, mesh, opt);
    NewtonOutcome res = sys.solve(mesh.seed, c0);
    if (res.ok) return profile_from(p, mesh, res);
  }

  // continuation from a small-eps cold solve toward the target
  double eps_lo = std::min(opt.seed_eps, p.eps);
  Params pl = p;
  pl.eps = eps_lo;
  Mesh mesh_lo = build_pulse_mesh(pl, seed, opt);
  WaveProfile cur = solve_on_mesh(pl, mesh_lo, mesh_lo.seed, c0, opt);
  if (eps_lo == p.eps) return cur;

  double step = std::sqrt(10.0);
  double eps_cur = eps_lo;
  int guard = 0;
  while (eps_cur < p.eps && guard++ < 64) {
    double eps_next = std::min(eps_cur * step, p.eps);
    Params pn = p;
    pn.eps = eps_next;
    const Mesh mesh = build_pulse_mesh(pn, seed, opt);
    CollocationSystem sys(pn, mesh, opt);
    NewtonOutcome res = sys.solve(transfer_seed(cur, mesh), cur.c);
    if (opt.verbose)
      std::fprintf(stderr,
                   "[cont] eps %.6e -> %.6e : %s (c=%.9f, res=%.3e, %s)\n",
                   eps_cur, eps_next, res.ok ? "ok" : "FAIL", res.c,
                   res.residual, res.message.c_str());
    if (res.ok) {
      cur = profile_from(pn, mesh, res);
      eps_cur = eps_next;
      step = std::min(step * 1.5, std::sqrt(10.0));
    } else {
      step = std::sqrt(step);
      if (step < 1.0005)
        throw std::runtime_error("continuation stalled at eps=" +
                                 fmt17(eps_cur) + " (residual " +
                                 fmt17(res.residual) + ")");
    }
  }
  if (eps_cur < p.eps)
    throw std::runtime_error("continuation ran out of steps before eps=" +
                             fmt17(p.eps));
  return cur;
}

std::vector<WaveProfile> continue_in_eps(const Params& p,
                                         const std::vector<double>& eps_list,
                                         const SolveOptions& opt) {
  if (eps_list.empty()) return {};
  for (size_t i = 0; i + 1 < eps_list.size(); ++i)
    if ((eps_list[i + 1] - eps_list[i]) * (eps_list[1] - eps_list[0]) <= 0.0)
      throw std::invalid_argument("eps_list must be strictly monotone");

  const SingularOrbit orbit = assemble_singular_orbit(
      Params::singular(p.a, p.gamma), OrbitOptions{});

  std::vector<WaveProfile> out;
  for (double eps : eps_list) {
    Params pe = p;
    pe.eps = eps;
    if (out.empty()) {
      out.push_back(solve_pulse(pe, orbit, opt));
      continue;
    }
    const Mesh mesh = build_pulse_mesh(pe, orbit, opt);
    CollocationSystem sys(pe, mesh, opt);
    NewtonOutcome res = sys.solve(transfer_seed(out.back(), mesh), out.back().c);
    if (res.ok) {
      out.push_back(profile_from(pe, mesh, res));
    } else {
      // warm start failed; fall back to a cold solve at this eps
      try {
        out.push_back(solve_pulse(pe, orbit, opt));
      } catch (const std::exception& e) {
        throw std::runtime_error("continuation failed first at eps=" +
                                 fmt17(eps) + ": " + e.what());
      }
    }
  }
  return out;
}

WaveProfile solve_front(const Params& p, const SolveOptions& opt) {
  p.validate();
  if (!(p.eps > 0.0) || p.eps > p.eps_max)
    throw std::invalid_argument("solve_front needs eps in (0, eps_max]");
  const Mesh mesh = build_front_mesh(p, opt);
  const double c0 = singular_speed(p.a);
  CollocationSystem sys(p, mesh, opt);
  NewtonOutcome res = sys.solve(mesh.seed, c0);
  if (res.ok) return profile_from(p, mesh, res);

  // continuation in eps for the front as well
  double eps_lo = std::min(opt.seed_eps, p.eps);
  Params pl = p;
  pl.eps = eps_lo;
  Mesh mesh_lo = build_front_mesh(pl, opt);
  WaveProfile cur = solve_on_mesh(pl, mesh_lo, mesh_lo.seed, c0, opt);
  double step = std::sqrt(10.0), eps_cur = eps_lo;
  int guard = 0;
  while (eps_cur < p.eps && guard++ < 64) {
    const double eps_next = std::min(eps_cur * step, p.eps);
    Params pn = p;
    pn.eps = eps_next;
    const Mesh m = build_front_mesh(pn, opt);
    CollocationSystem s2(pn, m, opt);
    NewtonOutcome r2 = s2.solve(transfer_seed(cur, m), cur.c);
    if (r2.ok) {
      cur = profile_from(pn, m, r2);
      eps_cur = eps_next;
    } else {
      step = std::sqrt(step);
      if (step < 1.0005)
        throw std::runtime_error("front continuation stalled at eps=" +
                                 fmt17(eps_cur));
    }
  }
  if (eps_cur < p.eps)
    throw std::runtime_error("front continuation ran out of steps before eps=" +
                             fmt17(p.eps));
  return cur;
}

std::string profile_to_csv(const WaveProfile& prof) {
  std::ostringstream out;
  out << "z,u,v,w,y\n";
  for (size_t i = 0; i < prof.z.size(); ++i) {
    out << fmt17(prof.z[i]) << ',' << fmt17(prof.x[i][0]) << ','
        << fmt17(prof.x[i][1]) << ',' << fmt17(prof.x[i][2]) << ','
        << fmt17(prof.x[i][3]) << '\n';
  }
  return out.str();
}

}  // namespace mwave
