#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

#include "mwave/params.hpp"

namespace mwave {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat42 = Eigen::Matrix<double, 4, 2>;

/// Phase-space point of the first-order traveling-wave system, ordered
/// (u, v, w, y) with u_z = w and v_z = eps * y.
struct PhasePoint {
  double u = 0.0, v = 0.0, w = 0.0, y = 0.0;

  Vec4 vec() const { return Vec4(u, v, w, y); }
  static PhasePoint from(const Vec4& x) { return {x[0], x[1], x[2], x[3]}; }
};

/// Right-hand side of the traveling-wave ODE
///   u' = w,  v' = eps y,  w' = -c w - f(u) + v,  y' = -c y + gamma v - u.
Vec4 vector_field(const Vec4& U, const Params& p);

/// First-order coefficient matrix A(lambda) of the linearized eigenvalue
/// problem about a state with u-component u_base:
///
///   [ 0              0                1   0 ]
///   [ 0              0                0 eps ]
///   [ lambda - f'(u) 1               -c   0 ]
///   [ -1             lambda/eps + g   0  -c ]
///
/// At lambda = 0 this is the variational matrix of vector_field.
/// Requires eps > 0 whenever lambda != 0 (the lambda/eps entry).
Mat4 linearization(double u_base, double lambda, const Params& p);

/// Complex-lambda variant, used for essential-spectrum scans.
Eigen::Matrix4cd linearization(double u_base, std::complex<double> lambda,
                               const Params& p);

/// Spatial eigenvalues and eigenvectors of the linearization about the rest
/// state u = 0.  mu is sorted ascending; for lambda real and right of the
/// essential spectrum the ordering is mu1 < mu2 < 0 < mu3 < mu4 with
/// mu1 + mu4 = mu2 + mu3 = -c.
struct RestSpectrum {
  std::array<double, 4> mu{};
  Mat4 V;                   // eigenvector columns matching mu
  bool closed_form = true;  // radical formulas used (real hyperbolic case)
  bool real = true;         // false when the numeric fallback met complex mu
};

RestSpectrum rest_spectrum(double lambda, const Params& p);

/// Rightmost real part attained by the essential-spectrum dispersion curves;
/// equals -(a + eps*gamma - sqrt((a - eps*gamma)^2 - 4 eps))/2 < 0.
/// Requires discriminant() >= 0.
double essential_spectrum_right_edge(const Params& p);

struct EssentialSpectrumSample {
  std::complex<double> lambda;
  double min_abs_re_mu;  // distance of the spatial spectrum from the imaginary axis
};

struct EssentialSpectrumReport {
  std::vector<EssentialSpectrumSample> samples;
  /// Largest Re(lambda) among grid points whose spatial spectrum touches the
  /// imaginary axis (min |Re mu| < tol); quiet_NaN when no point does.
  double re_lambda_at_hit;
  bool any_hit = false;
};

EssentialSpectrumReport essential_spectrum_margin(
    const std::vector<std::complex<double>>& lambda_grid, const Params& p,
    double tol = 1e-8);

/// Fix a deterministic sign: flip x so its first component exceeding
/// tol * max|x_i| is positive.  Zero vectors are returned unchanged.
Vec4 canonical_sign(const Vec4& x, double tol = 1e-12);

}  // namespace mwave
