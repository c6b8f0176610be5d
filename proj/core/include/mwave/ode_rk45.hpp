#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace mwave {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  double max_dz = 0.5;
  double min_dz = 1e-11;
  double initial_dz = 1e-3;
  bool renormalize = true;   // rescale the state to unit norm each accepted step
  std::size_t max_steps = 20'000'000;
};

template <class State>
struct OdePathNode {
  double z;
  State x;           // unit-norm representative when renormalizing
  double log_scale;  // accumulated log of removed norm factors
};

template <class State>
struct OdePath {
  std::vector<OdePathNode<State>> nodes;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool min_step_hit = false;

  const OdePathNode<State>& front() const { return nodes.front(); }
  const OdePathNode<State>& back() const { return nodes.back(); }
};

/// Dormand–Prince 5(4) with step control, integrating x' = rhs(z, x) from z0
/// to z1 (either direction).  States are Eigen fixed-size vectors/matrices.
/// With renormalization on, the state is divided by its Frobenius norm after
/// each accepted step and the log factor accumulated, so exponentially
/// growing linear flows stay representable over long windows.
template <class State, class Rhs>
OdePath<State> integrate_rk45(const Rhs& rhs, State x0, double z0, double z1,
                              const OdeOptions& opt = {}) {
  static constexpr double A21 = 1.0 / 5;
  static constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
  static constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
  static constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187,
                          A53 = 64448.0 / 6561, A54 = -212.0 / 729;
  static constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33,
                          A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                          A65 = -5103.0 / 18656;
  static constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                          B5 = -2187.0 / 6784, B6 = 11.0 / 84;
  static constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695,
                          E4 = 71.0 / 1920, E5 = -17253.0 / 339200,
                          E6 = 22.0 / 525, E7 = -1.0 / 40;

  OdePath<State> path;
  if (z1 == z0) {
    path.nodes.push_back({z0, x0, 0.0});
    return path;
  }
  const double dir = (z1 > z0) ? 1.0 : -1.0;
  double z = z0;
  double log_scale = 0.0;
  if (opt.renormalize) {
    const double n = x0.norm();
    if (n > 0.0) {
      x0 /= n;
      log_scale = std::log(n);
    }
  }
  path.nodes.push_back({z, x0, log_scale});

  double h = dir * std::min(opt.initial_dz, opt.max_dz);
  State x = x0;
  State k1 = rhs(z, x);
  std::size_t steps = 0;

  while (dir * (z1 - z) > 0.0) {
    if (++steps > opt.max_steps)
      throw std::runtime_error("integrate_rk45: step budget exhausted");
    if (std::abs(h) > opt.max_dz) h = dir * opt.max_dz;
    if (dir * (z + h - z1) > 0.0) h = z1 - z;
    bool giveup = false;
    if (std::abs(h) < opt.min_dz) {
      h = dir * opt.min_dz;
      if (dir * (z + h - z1) > 0.0) h = z1 - z;
      giveup = true;
      path.min_step_hit = true;
    }

    const State k2 = rhs(z + h * A21, State(x + h * (A21 * k1)));
    const State k3 = rhs(z + h * (A31 + A32), State(x + h * (A31 * k1 + A32 * k2)));
    const State k4 =
        rhs(z + h * (A41 + A42 + A43), State(x + h * (A41 * k1 + A42 * k2 + A43 * k3)));
    const State k5 = rhs(z + h * (A51 + A52 + A53 + A54),
                         State(x + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)));
    const State k6 =
        rhs(z + h, State(x + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)));
    State xn = x + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    const State k7 = rhs(z + h, xn);
    const State err_v =
        h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

    const double scale =
        opt.atol + opt.rtol * std::max(x.template lpNorm<Eigen::Infinity>(),
                                       xn.template lpNorm<Eigen::Infinity>());
    const double err = err_v.template lpNorm<Eigen::Infinity>() / scale;

    if (err <= 1.0 || giveup) {
      z += h;
      x = xn;
      k1 = k7;  // FSAL
      if (opt.renormalize) {
        const double n = x.norm();
        if (n > 0.0) {
          x /= n;
          k1 /= n;
          log_scale += std::log(n);
        }
      }
      path.nodes.push_back({z, x, log_scale});
      ++path.accepted;
    } else {
      ++path.rejected;
    }
    const double fac =
        0.9 * std::pow(std::max(err, 1e-10), -0.2);
    h *= std::clamp(fac, 0.2, 5.0);
  }
  return path;
}

}  // namespace mwave
