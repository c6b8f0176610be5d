#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>

#include "doctest.h"
#include "mwave/dynamics.hpp"

using namespace mwave;

namespace {

// independent Jacobian oracle: central differences of the vector field
Mat4 fd_jacobian(const Vec4& x, const Params& p) {
  Mat4 J;
  const double h = 1e-6;
  for (int j = 0; j < 4; ++j) {
    Vec4 xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (vector_field(xp, p) - vector_field(xm, p)) / (2 * h);
  }
  return J;
}

}  // namespace

TEST_CASE("vector field components") {
  const Params p = Params::make(0.25, 1.0, 1e-3);
  const Vec4 x(0.3, 0.02, -0.1, 0.5);
  const Vec4 f = vector_field(x, p);
  CHECK(f[0] == x[2]);
  CHECK(f[1] == p.eps * x[3]);
  CHECK(f[2] == doctest::Approx(-p.c * x[2] - cubic_eval(x[0], p.a).f + x[1])
                    .epsilon(1e-15));
  CHECK(f[3] ==
        doctest::Approx(-p.c * x[3] + p.gamma * x[1] - x[0]).epsilon(1e-15));

  // rest state is an equilibrium
  CHECK(vector_field(Vec4::Zero(), p).norm() == 0.0);
}

TEST_CASE("linearization at lambda = 0 is the variational matrix") {
  const Params p = Params::make(0.25, 1.0, 1e-3);
  for (double u : {0.0, 0.3, 0.75, 1.0, -0.15}) {
    Vec4 x(u, 0.01, 0.2, -0.4);
    const Mat4 A = linearization(u, 0.0, p);
    const Mat4 J = fd_jacobian(x, p);
    CHECK((A - J).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("linearization entries at lambda > 0") {
  const Params p = Params::make(0.25, 1.0, 1e-3);
  const double lambda = 0.37;
  const double u = 0.6;
  const Mat4 A = linearization(u, lambda, p);
  CHECK(A(0, 2) == 1.0);
  CHECK(A(1, 3) == p.eps);
  CHECK(A(2, 0) ==
        doctest::Approx(lambda - cubic_eval(u, p.a).fp).epsilon(1e-15));
  CHECK(A(2, 1) == 1.0);
  CHECK(A(2, 2) == -p.c);
  CHECK(A(3, 0) == -1.0);
  CHECK(A(3, 1) == doctest::Approx(lambda / p.eps + p.gamma).epsilon(1e-15));
  CHECK(A(3, 3) == -p.c);

  // the complex overload agrees on the real axis
  const Eigen::Matrix4cd Ac = linearization(u, std::complex<double>(lambda), p);
  CHECK((Ac - A.cast<std::complex<double>>()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rest spectrum: ordering, pairing, and eigen residuals") {
  const Params p = Params::make(0.25, 1.0, 1e-3);
  for (double lambda : {0.0, 0.01, 0.1, 0.37, 1.0}) {
    const RestSpectrum rs = rest_spectrum(lambda, p);
    REQUIRE(rs.real);
    CHECK(rs.mu[0] < rs.mu[1]);
    CHECK(rs.mu[1] < 0.0);
    CHECK(rs.mu[2] > 0.0);
    CHECK(rs.mu[2] < rs.mu[3]);
    // the symplectic pairing of spatial rates
    CHECK(rs.mu[0] + rs.mu[3] == doctest::Approx(-p.c).epsilon(1e-12));
    CHECK(rs.mu[1] + rs.mu[2] == doctest::Approx(-p.c).epsilon(1e-12));

    const Mat4 A = linearization(0.0, lambda, p);
    for (int i = 0; i < 4; ++i) {
      const Vec4 v = rs.V.col(i);
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK((A * v - rs.mu[i] * v).norm() < 1e-9 * (1.0 + std::abs(rs.mu[i])));
    }
  }
}

TEST_CASE("rest spectrum closed form matches a numeric eigensolve") {
  const Params p = Params::make(0.25, 1.0, 1e-3);
  for (double lambda : {0.0, 0.05, 0.5, 1.0}) {
    const RestSpectrum rs = rest_spectrum(lambda, p);
    Eigen::EigenSolver<Mat4> es(linearization(0.0, lambda, p));
    std::array<double, 4> mu_num{};
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(es.eigenvalues()[i].imag()) < 1e-10);
      mu_num[i] = es.eigenvalues()[i].real();
    }
    std::sort(mu_num.begin(), mu_num.end());
    for (int i = 0; i < 4; ++i)
      CHECK(rs.mu[i] == doctest::Approx(mu_num[i]).epsilon(1e-10));
  }
}

TEST_CASE("essential spectrum right edge") {
  const Params p = Params::make(0.25, 1.0, 1e-3);
  const double edge = essential_spectrum_right_edge(p);
  const double disc = p.discriminant();
  CHECK(edge == doctest::Approx(-(p.a + p.eps * p.gamma - std::sqrt(disc)) / 2.0)
                    .epsilon(1e-14));
  CHECK(edge < 0.0);
  CHECK(edge == doctest::Approx(-0.0050829).epsilon(1e-4));

  // exactly on the edge the spatial spectrum touches the imaginary axis;
  // strictly to the right it does not
  EssentialSpectrumReport rep = essential_spectrum_margin(
      {std::complex<double>(edge, 0.0)}, p, 1e-6);
  CHECK(rep.any_hit);
  CHECK(rep.re_lambda_at_hit == doctest::Approx(edge));

  rep = essential_spectrum_margin(
      {std::complex<double>(0.01, 0.0), std::complex<double>(0.1, 0.5),
       std::complex<double>(1.0, 2.0)},
      p, 1e-6);
  CHECK_FALSE(rep.any_hit);
  for (const auto& s : rep.samples) CHECK(s.min_abs_re_mu > 1e-4);
}

TEST_CASE("canonical sign") {
  CHECK(canonical_sign(Vec4(-1.0, 2.0, 0.0, 0.0))[0] == 1.0);
  CHECK(canonical_sign(Vec4(1.0, 2.0, 0.0, 0.0))[0] == 1.0);
  // tiny leading entries are skipped, the first significant one decides
  const Vec4 v(1e-16, -2.0, 1.0, 0.0);
  const Vec4 c = canonical_sign(v);
  CHECK(c[1] == 2.0);
  CHECK(canonical_sign(Vec4::Zero()).norm() == 0.0);
}
