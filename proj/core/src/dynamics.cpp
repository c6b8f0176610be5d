#include "mwave/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mwave {

Vec4 vector_field(const Vec4& U, const Params& p) {
  const double u = U[0], v = U[1], w = U[2], y = U[3];
  const double f = cubic_eval(u, p.a).f;
  return Vec4(w, p.eps * y, -p.c * w - f + v, -p.c * y + p.gamma * v - u);
}

Mat4 linearization(double u_base, double lambda, const Params& p) {
  if (lambda != 0.0 && p.eps <= 0.0)
    throw std::domain_error("linearization: lambda != 0 requires eps > 0");
  const double fp = cubic_eval(u_base, p.a).fp;
  const double lam_over_eps = (lambda == 0.0) ? 0.0 : lambda / p.eps;
  Mat4 A;
  A << 0.0, 0.0, 1.0, 0.0,                        //
      0.0, 0.0, 0.0, p.eps,                       //
      lambda - fp, 1.0, -p.c, 0.0,                //
      -1.0, lam_over_eps + p.gamma, 0.0, -p.c;    //
  return A;
}

Eigen::Matrix4cd linearization(double u_base, std::complex<double> lambda,
                               const Params& p) {
  if (lambda != 0.0 && p.eps <= 0.0)
    throw std::domain_error("linearization: lambda != 0 requires eps > 0");
  using C = std::complex<double>;
  const double fp = cubic_eval(u_base, p.a).fp;
  const C lam_over_eps = (lambda == C(0.0)) ? C(0.0) : lambda / p.eps;
  Eigen::Matrix4cd A;
  A << C(0.0), C(0.0), C(1.0), C(0.0),                 //
      C(0.0), C(0.0), C(0.0), C(p.eps),                //
      lambda - fp, C(1.0), C(-p.c), C(0.0),            //
      C(-1.0), lam_over_eps + p.gamma, C(0.0), C(-p.c);
  return A;
}

Vec4 canonical_sign(const Vec4& x, double tol) {
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return x;
  for (int i = 0; i < 4; ++i) {
    if (std::abs(x[i]) > tol * m) return (x[i] > 0.0) ? x : Vec4(-x);
  }
  return x;
}

namespace {

// Kernel direction of A - mu*I via full SVD (smallest right singular vector).
Vec4 kernel_vector(const Mat4& A, double mu) {
  Eigen::JacobiSVD<Mat4> svd(A - mu * Mat4::Identity(), Eigen::ComputeFullV);
  Vec4 v = svd.matrixV().col(3);
  return canonical_sign(v / v.norm());
}

}  // namespace

RestSpectrum rest_spectrum(double lambda, const Params& p) {
  const Mat4 A = linearization(0.0, lambda, p);
  RestSpectrum out;

  // Spatial eigenvalues solve (X - a - lambda)(X - eps*gamma - lambda) + eps = 0
  // with X = mu^2 + c mu, giving X_pm = lambda + (a + eps*gamma +- sqrt(disc))/2
  // and mu = (-c +- sqrt(c^2 + 4 X))/2.  disc = (a - eps*gamma)^2 - 4 eps is
  // lambda-independent.
  const double disc = p.discriminant();
  bool closed = disc >= 0.0;
  double s_plus = 0.0, s_minus = 0.0;
  if (closed) {
    const double r = std::sqrt(disc);
    const double xp = lambda + 0.5 * (p.a + p.eps * p.gamma + r);
    const double xm = lambda + 0.5 * (p.a + p.eps * p.gamma - r);
    const double dp = p.c * p.c + 4.0 * xp;
    const double dm = p.c * p.c + 4.0 * xm;
    if (dp >= 0.0 && dm >= 0.0) {
      s_plus = std::sqrt(dp);
      s_minus = std::sqrt(dm);
    } else {
      closed = false;
    }
  }

  if (closed) {
    out.mu = {0.5 * (-p.c - s_plus), 0.5 * (-p.c - s_minus),
              0.5 * (-p.c + s_minus), 0.5 * (-p.c + s_plus)};
    out.closed_form = true;
    out.real = true;
  } else {
    Eigen::EigenSolver<Mat4> es(A);
    std::array<std::complex<double>, 4> mu;
    for (int i = 0; i < 4; ++i) mu[i] = es.eigenvalues()[i];
    std::sort(mu.begin(), mu.end(), [](auto x, auto y) {
      return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    out.closed_form = false;
    out.real = true;
    for (int i = 0; i < 4; ++i) {
      out.mu[i] = mu[i].real();
      if (std::abs(mu[i].imag()) > 1e-10 * (1.0 + std::abs(mu[i].real())))
        out.real = false;
    }
  }

  for (int i = 0; i < 4; ++i) out.V.col(i) = kernel_vector(A, out.mu[i]);
  return out;
}

double essential_spectrum_right_edge(const Params& p) {
  const double disc = p.discriminant();
  if (disc < 0.0)
    throw std::domain_error(
        "essential_spectrum_right_edge: discriminant < 0 (complex rest "
        "spectrum); no real closed form");
  return -0.5 * (p.a + p.eps * p.gamma - std::sqrt(disc));
}

EssentialSpectrumReport essential_spectrum_margin(
    const std::vector<std::complex<double>>& lambda_grid, const Params& p,
    double tol) {
  EssentialSpectrumReport rep;
  rep.re_lambda_at_hit = std::numeric_limits<double>::quiet_NaN();
  rep.samples.reserve(lambda_grid.size());
  for (const auto& lam : lambda_grid) {
    const Eigen::Matrix4cd A = linearization(0.0, lam, p);
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(A);
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i)
      m = std::min(m, std::abs(es.eigenvalues()[i].real()));
    rep.samples.push_back({lam, m});
    if (m < tol) {
      if (!rep.any_hit || lam.real() > rep.re_lambda_at_hit)
        rep.re_lambda_at_hit = lam.real();
      rep.any_hit = true;
    }
  }
  return rep;
}

}  // namespace mwave
