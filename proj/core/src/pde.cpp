#include "mwave/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mwave/io.hpp"

namespace mwave {

namespace {

// Thomas solve with a factorization reused across steps and components.
class Tridiag {
 public:
  Tridiag(double sub, double diag, double sup, int n)
      : sub_(sub), n_(n), cp_(n), inv_dp_(n) {
    // boundary rows are identity (Dirichlet)
    cp_[0] = 0.0;
    inv_dp_[0] = 1.0;
    for (int i = 1; i < n - 1; ++i) {
      const double dp = diag - sub * cp_[i - 1];
      inv_dp_[i] = 1.0 / dp;
      cp_[i] = sup * inv_dp_[i];
    }
    inv_dp_[n - 1] = 1.0;  // last row is identity
  }

  void solve(std::vector<double>& rhs) const {
    rhs[0] *= inv_dp_[0];
    for (int i = 1; i < n_ - 1; ++i)
      rhs[i] = (rhs[i] - sub_ * rhs[i - 1]) * inv_dp_[i];
    // last row is identity: rhs[n-1] already the solution
    for (int i = n_ - 2; i >= 0; --i) rhs[i] -= cp_[i] * rhs[i + 1];
  }

 private:
  double sub_;
  int n_;
  std::vector<double> cp_, inv_dp_;
};

struct WaveTable {
  const ProfileInterpolant* interp;
  std::array<double, 2> operator()(double z) const {
    const Vec4 s = interp->state(z);
    return {s[0], s[1]};
  }
};

double shifted_distance(const std::vector<double>& x,
                        const std::vector<double>& u,
                        const std::vector<double>& v, const WaveTable& wave,
                        double k) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto w = wave(x[i] - k);
    d = std::max(d, std::abs(u[i] - w[0]));
    d = std::max(d, std::abs(v[i] - w[1]));
  }
  return d;
}

// golden-section minimization of the shifted distance on [k0 - w, k0 + w]
std::array<double, 2> min_distance(const std::vector<double>& x,
                                   const std::vector<double>& u,
                                   const std::vector<double>& v,
                                   const WaveTable& wave, double k0) {
  constexpr double kGold = 0.6180339887498949;
  double lo = k0 - 1.5, hi = k0 + 1.5;
  double k1 = hi - kGold * (hi - lo);
  double k2 = lo + kGold * (hi - lo);
  double d1 = shifted_distance(x, u, v, wave, k1);
  double d2 = shifted_distance(x, u, v, wave, k2);
  for (int it = 0; it < 48 && (hi - lo) > 1e-9; ++it) {
    if (d1 <= d2) {
      hi = k2;
      k2 = k1;
      d2 = d1;
      k1 = hi - kGold * (hi - lo);
      d1 = shifted_distance(x, u, v, wave, k1);
    } else {
      lo = k1;
      k1 = k2;
      d1 = d2;
      k2 = lo + kGold * (hi - lo);
      d2 = shifted_distance(x, u, v, wave, k2);
    }
  }
  return d1 <= d2 ? std::array<double, 2>{d1, k1}
                  : std::array<double, 2>{d2, k2};
}

}  // namespace

PdeRunResult evolve(const WaveProfile& prof, const Perturbation& pert,
                    const PdeGrid& grid, const PdeOptions& opt) {
  if (grid.nx < 16) throw std::invalid_argument("pde grid needs nx >= 16");
  if (!(grid.x_hi > grid.x_lo))
    throw std::invalid_argument("pde grid needs x_hi > x_lo");
  if (!(grid.dt > 0.0)) throw std::invalid_argument("pde grid needs dt > 0");
  if (grid.x_lo < prof.z_min() || grid.x_hi > prof.z_max())
    throw std::invalid_argument(
        "pde grid must sit inside the profile domain [" +
        fmt17(prof.z_min()) + ", " + fmt17(prof.z_max()) + "]");
  if (!(opt.t_end > 0.0) || !(opt.record_dt > 0.0))
    throw std::invalid_argument("pde options need t_end, record_dt > 0");

  const int n = grid.nx;
  const double h = (grid.x_hi - grid.x_lo) / (n - 1);
  const double dt = grid.dt;
  const Params pc = prof.p;

  const ProfileInterpolant interp(prof);
  const WaveTable wave{&interp};

  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = grid.x_lo + h * i;

  // initial data: wave plus perturbation, boundaries pinned to the wave
  std::vector<double> u(n), v(n);
  for (int i = 0; i < n; ++i) {
    const auto w = wave(x[i]);
    const auto d = pert(x[i]);
    u[i] = w[0] + d[0];
    v[i] = w[1] + d[1];
  }
  {
    const auto wl = wave(x[0]);
    const auto wr = wave(x[n - 1]);
    u[0] = wl[0];
    v[0] = wl[1];
    u[n - 1] = wr[0];
    v[n - 1] = wr[1];
  }
  const double bc_u_lo = u[0], bc_v_lo = v[0];
  const double bc_u_hi = u[n - 1], bc_v_hi = v[n - 1];

  // L = d_xx + c d_x, shared by both components
  const double l_sub = 1.0 / (h * h) - pc.c / (2.0 * h);
  const double l_diag = -2.0 / (h * h);
  const double l_sup = 1.0 / (h * h) + pc.c / (2.0 * h);
  const double hd = 0.5 * dt;
  const Tridiag A(-hd * l_sub, 1.0 - hd * l_diag, -hd * l_sup, n);

  auto reaction = [&](const std::vector<double>& uu,
                      const std::vector<double>& vv, std::vector<double>& ru,
                      std::vector<double>& rv) {
    for (int i = 0; i < n; ++i) {
      ru[i] = cubic_eval(uu[i], pc.a).f - vv[i];
      rv[i] = pc.eps * (uu[i] - pc.gamma * vv[i]);
    }
  };

  std::vector<double> ru(n), rv(n), ru_prev(n), rv_prev(n);
  std::vector<double> rhs_u(n), rhs_v(n);

  auto step = [&](bool first) {
    reaction(u, v, ru, rv);
    for (int i = 1; i < n - 1; ++i) {
      const double lu = l_sub * u[i - 1] + l_diag * u[i] + l_sup * u[i + 1];
      const double lv = l_sub * v[i - 1] + l_diag * v[i] + l_sup * v[i + 1];
      const double fu = first ? ru[i] : 1.5 * ru[i] - 0.5 * ru_prev[i];
      const double fv = first ? rv[i] : 1.5 * rv[i] - 0.5 * rv_prev[i];
      rhs_u[i] = u[i] + hd * lu + dt * fu;
      rhs_v[i] = v[i] + hd * lv + dt * fv;
    }
    rhs_u[0] = bc_u_lo;
    rhs_v[0] = bc_v_lo;
    rhs_u[n - 1] = bc_u_hi;
    rhs_v[n - 1] = bc_v_hi;
    A.solve(rhs_u);
    A.solve(rhs_v);
    u.swap(rhs_u);
    v.swap(rhs_v);
    ru.swap(ru_prev);
    rv.swap(rv_prev);
  };

  PdeRunResult out;
  double k_prev = 0.0;
  const auto record = [&](double t) {
    const auto dk = min_distance(x, u, v, wave, k_prev);
    k_prev = dk[1];
    out.trace.push_back({t, dk[0], dk[1]});
    return dk[0];
  };

  out.d0 = record(0.0);
  const int steps_per_record = std::max(1, (int)std::lround(opt.record_dt / dt));
  const long total_steps = std::lround(opt.t_end / dt);

  bool first = true;
  for (long s = 1; s <= total_steps; ++s) {
    step(first);
    first = false;
    double umax = 0.0;
    for (int i = 0; i < n; ++i) umax = std::max(umax, std::abs(u[i]));
    if (!std::isfinite(umax) || umax > opt.blowup_norm) {
      out.blew_up = true;
      record(s * dt);
      break;
    }
    if (s % steps_per_record == 0 || s == total_steps) {
      const double d = record(s * dt);
      if (opt.stop_ratio > 0.0 && out.d0 > 0.0 &&
          d <= out.d0 / opt.stop_ratio)
        break;
    }
  }

  out.d_final = out.trace.back().dist;
  out.shift_final = out.trace.back().shift;
  return out;
}

std::string decay_trace_to_csv(const PdeRunResult& run) {
  std::ostringstream os;
  os << "t,dist,shift\n";
  for (const auto& s : run.trace)
    os << fmt17(s.t) << ',' << fmt17(s.dist) << ',' << fmt17(s.shift) << '\n';
  return os.str();
}

}  // namespace mwave
