#include "mwave/singular_orbit.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mwave/io.hpp"
#include "mwave/quadrature.hpp"

namespace mwave {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double require_singular_speed(const Params& p) {
  const double cs = singular_speed(p.a);
  if (std::abs(p.c - cs) > 1e-12 * (1.0 + std::abs(cs)))
    throw std::invalid_argument(
        "singular orbit needs the layer speed sqrt(2)(a - 1/2)");
  return cs;
}

}  // namespace

FrontPoint front_point(double z, double a) {
  (void)a;  // the front profile itself does not depend on a, only its speed
  const double x = 0.5 * kSqrt2 * z;
  const double u = detail::sigmoid(x);
  const double one_minus_u = detail::sigmoid(-x);
  return {u, 0.5 * kSqrt2 * u * one_minus_u};
}

double front_y(double z, double a) {
  const double c = singular_speed(a);
  // log-integrand L(t) = c t + log u(z + t) is concave with maximum where
  // u = 2a; truncate a fixed number of e-folds past the peak.
  const double zeta_peak = kSqrt2 * std::log(2.0 * a / (1.0 - 2.0 * a));
  const double t_peak = std::max(0.0, zeta_peak - z);
  const double rate = -c;
  const double t_max = t_peak + 45.0 / rate;
  auto log_integrand = [&](double t) {
    return c * t - detail::softplus(-0.5 * kSqrt2 * (z + t));
  };
  const double peak = std::exp(log_integrand(t_peak));
  auto f = [&](double t) { return std::exp(log_integrand(t)); };
  const double tol = 1e-14 * peak * (1.0 + 1.0 / rate);
  return detail::adaptive_simpson(f, 0.0, t_max, tol);
}

double front_k(double a) {
  const double c = singular_speed(a);
  const double rate_left = kSqrt2 * a;
  const double rate_right = -c;
  const double s_peak = kSqrt2 * std::log(2.0 * a / (1.0 - 2.0 * a));
  const double s_lo = s_peak - 45.0 / rate_left;
  const double s_hi = s_peak + 45.0 / rate_right;
  auto log_integrand = [&](double s) {
    return c * s - detail::softplus(-0.5 * kSqrt2 * s);
  };
  const double peak = std::exp(log_integrand(s_peak));
  auto f = [&](double s) { return std::exp(log_integrand(s)); };
  const double tol =
      1e-14 * peak * (1.0 + 1.0 / std::min(rate_left, rate_right));
  return detail::adaptive_simpson(f, s_lo, s_hi, tol);
}

double front_k_closed_form(double a) {
  return kSqrt2 * M_PI / std::sin(2.0 * M_PI * a);
}

BackPoint back_point(double z, double a) {
  const FrontPoint f = front_point(z, a);
  return {u_star(a) - f.u, -f.w, -front_y(z, a)};
}

double u_star(double a) { return 2.0 * (a + 1.0) / 3.0; }

double v_star(double a) { return cubic_eval(u_star(a), a).f; }

double melnikov_front(double a) {
  const double c = singular_speed(a);
  // integrand exp(c z) w^2 with log w = log(sqrt2/2) - sp(-x) - sp(x),
  // x = sqrt2 z / 2; concave log-integrand peaking where u = a.
  const double z_peak = kSqrt2 * std::log(a / (1.0 - a));
  const double rate_left = kSqrt2 * (a + 0.5);
  const double rate_right = kSqrt2 * (1.5 - a);
  auto log_integrand = [&](double z) {
    const double x = 0.5 * kSqrt2 * z;
    const double logw =
        std::log(0.5 * kSqrt2) - detail::softplus(-x) - detail::softplus(x);
    return c * z + 2.0 * logw;
  };
  const double peak = std::exp(log_integrand(z_peak));
  auto f = [&](double z) { return std::exp(log_integrand(z)); };
  const double tol =
      1e-14 * peak * (1.0 + 1.0 / std::min(rate_left, rate_right));
  return detail::adaptive_simpson(f, z_peak - 45.0 / rate_left,
                                  z_peak + 45.0 / rate_right, tol);
}

double melnikov_back(double a) {
  const double c = singular_speed(a);
  const double z_peak = kSqrt2 * std::log(a / (1.0 - a));
  const double rate_left = kSqrt2 * a;
  const double rate_right = kSqrt2 * (1.0 - a);
  auto log_integrand = [&](double z) {
    const double x = 0.5 * kSqrt2 * z;
    return c * z + std::log(0.5 * kSqrt2) - detail::softplus(-x) -
           detail::softplus(x);
  };
  const double peak = std::exp(log_integrand(z_peak));
  auto f = [&](double z) { return std::exp(log_integrand(z)); };
  const double tol =
      1e-14 * peak * (1.0 + 1.0 / std::min(rate_left, rate_right));
  // w_b = -w_f, so the back integral is minus the front-w integral.
  return -detail::adaptive_simpson(f, z_peak - 45.0 / rate_left,
                                   z_peak + 45.0 / rate_right, tol);
}

CriticalBranch::CriticalBranch(BranchSide side, double a) : side_(side), a_(a) {
  if (!(a > 0.0 && a < 0.5))
    throw std::invalid_argument("branch needs a in (0, 1/2)");
  const CubicFolds folds = cubic_folds(a);
  if (side == BranchSide::Left) {
    u_min_ = -1.5;
    u_max_ = folds.lo;
  } else {
    u_min_ = folds.hi;
    u_max_ = 2.0;
  }
  // f is strictly decreasing between the caps, so the v-range flips.
  v_min_ = cubic_eval(u_max_, a).f;
  v_max_ = cubic_eval(u_min_, a).f;
}

double CriticalBranch::inverse(double v) const {
  const double slack = 1e-12 * (1.0 + std::abs(v));
  if (v < v_min_ - slack || v > v_max_ + slack)
    throw std::domain_error("level not on this branch of the nullcline");
  v = std::min(std::max(v, v_min_), v_max_);

  double lo = u_min_, hi = u_max_;  // f(lo) >= v >= f(hi)
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const CubicEval e = cubic_eval(u, a_);
    const double r = e.f - v;
    if (r > 0.0)
      lo = u;
    else
      hi = u;
    if (std::abs(r) <= 1e-14 * (1.0 + std::abs(v)) && it > 0) return u;
    double step = e.fp < 0.0 ? -r / e.fp : 0.0;
    double next = u + step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-15 * (1.0 + std::abs(u))) return next;
    u = next;
  }
  return u;
}

double CriticalBranch::slope(double v) const {
  return cubic_eval(inverse(v), a_).fp;
}

double slow_flow_rhs(double v, const CriticalBranch& branch, const Params& p) {
  return (p.gamma * v - branch.inverse(v)) / p.c;
}

LayerEigen layer_eigenpairs(double u, const Params& p) {
  const double fp = cubic_eval(u, p.a).fp;
  if (!(fp < 0.0))
    throw std::domain_error("layer eigenpairs need f'(u) < 0");
  const double c = p.c;
  const double s = std::sqrt(c * c - 4.0 * fp);
  const double mu1 = 0.5 * (-c - s);
  const double mu4 = 0.5 * (-c + s);

  LayerEigen out;
  out.mu = {mu1, 0.0, -c, mu4};
  out.eta.setZero();
  out.eta.col(0) << fp, 0.0, fp * mu1, mu1;
  out.eta.col(1) << 1.0, fp, 0.0, (p.gamma * fp - 1.0) / c;
  out.eta.col(2) << 0.0, 0.0, 0.0, 1.0;
  out.eta.col(3) << fp, 0.0, fp * mu4, mu4;
  return out;
}

std::string segment_name(SegmentTag tag) {
  switch (tag) {
    case SegmentTag::Front:
      return "front";
    case SegmentTag::SlowRight:
      return "slow_right";
    case SegmentTag::Back:
      return "back";
    case SegmentTag::SlowLeft:
      return "slow_left";
  }
  return "?";
}

SingularOrbit assemble_singular_orbit(const Params& p,
                                      const OrbitOptions& opt) {
  if (p.eps != 0.0)
    throw std::invalid_argument("singular orbit is the eps = 0 object");
  const double c = require_singular_speed(p);
  const double a = p.a;

  SingularOrbit orbit;
  orbit.p = p;
  orbit.u_star = u_star(a);
  orbit.v_star = v_star(a);
  orbit.k = front_k(a);
  orbit.y_q = (p.gamma * orbit.v_star - orbit.u_star) / c;

  orbit.corner_p << 1.0, 0.0, 0.0, -1.0 / c;
  orbit.corner_q << orbit.u_star, orbit.v_star, 0.0, orbit.y_q;
  orbit.corner_qhat << orbit.u_star - 1.0, orbit.v_star, 0.0,
      orbit.y_q + 1.0 / c;

  const double slowest = std::min(-c, kSqrt2 * a);
  const double z_half = opt.z_half > 0.0 ? opt.z_half : 45.0 / slowest;
  const int nf = std::max(opt.n_fast, 3);
  const int ns = std::max(opt.n_slow, 3);

  orbit.samples.reserve(static_cast<size_t>(2 * nf + 2 * ns));

  for (int i = 0; i < nf; ++i) {
    const double z = -z_half + 2.0 * z_half * i / (nf - 1);
    const FrontPoint f = front_point(z, a);
    Vec4 x;
    x << f.u, 0.0, f.w, front_y(z, a);
    orbit.samples.push_back({z, SegmentTag::Front, x});
  }

  const CriticalBranch right(BranchSide::Right, a);
  for (int i = 0; i < ns; ++i) {
    const double v = orbit.v_star * i / (ns - 1);
    const double u = right.inverse(v);
    Vec4 x;
    x << u, v, 0.0, (p.gamma * v - u) / c;
    orbit.samples.push_back({v, SegmentTag::SlowRight, x});
  }

  for (int i = 0; i < nf; ++i) {
    const double z = -z_half + 2.0 * z_half * i / (nf - 1);
    const BackPoint b = back_point(z, a);
    Vec4 x;
    x << b.u, orbit.v_star, b.w, orbit.y_q + b.ytilde;
    orbit.samples.push_back({z, SegmentTag::Back, x});
  }

  const CriticalBranch left(BranchSide::Left, a);
  for (int i = 0; i < ns; ++i) {
    const double v = orbit.v_star * (ns - 1 - i) / (ns - 1);
    const double u = left.inverse(v);
    Vec4 x;
    x << u, v, 0.0, (p.gamma * v - u) / c;
    orbit.samples.push_back({v, SegmentTag::SlowLeft, x});
  }

  return orbit;
}

std::string orbit_to_csv(const SingularOrbit& orbit) {
  std::ostringstream out;
  out << "param,u,v,w,y,segment\n";
  for (const OrbitSample& s : orbit.samples) {
    out << fmt17(s.param) << ',' << fmt17(s.state[0]) << ','
        << fmt17(s.state[1]) << ',' << fmt17(s.state[2]) << ','
        << fmt17(s.state[3]) << ',' << segment_name(s.seg) << '\n';
  }
  return out.str();
}

}  // namespace mwave
