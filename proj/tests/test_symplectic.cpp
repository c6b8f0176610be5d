#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mwave/symplectic.hpp"

using namespace mwave;

namespace {

std::mt19937 rng(20240317u);

Vec4 random_vec() {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec4(n(rng), n(rng), n(rng), n(rng));
}

Mat42 random_frame() {
  Mat42 F;
  do {
    F << random_vec(), random_vec();
  } while (LagrangianFrame{F}.conditioning() < 0.1);
  return F;
}

// a random Lagrangian plane: project the omega-component of z along J x out
// (omega(x, Jx) = -|x|^2, so the correction is explicit)
Mat42 random_lagrangian_frame() {
  while (true) {
    const Vec4 x = random_vec();
    const Vec4 z = random_vec();
    const Vec4 y =
        z + symplectic_form(x, z) / x.squaredNorm() * (symplectic_J() * x);
    Mat42 F;
    F << x, y;
    if (LagrangianFrame{F}.conditioning() > 0.1) return F;
  }
}

}  // namespace

TEST_CASE("J is a symplectic structure") {
  const Mat4& J = symplectic_J();
  CHECK((J * J + Mat4::Identity()).norm() == 0.0);
  CHECK((J.transpose() + J).norm() == 0.0);
  CHECK(symplectic_form(Vec4::Unit(0), Vec4::Unit(2)) == 1.0);
  CHECK(symplectic_form(Vec4::Unit(1), Vec4::Unit(3)) == -1.0);
  CHECK(symplectic_form(Vec4::Unit(0), Vec4::Unit(1)) == 0.0);
  for (int i = 0; i < 10; ++i) {
    const Vec4 x = random_vec(), y = random_vec();
    CHECK(symplectic_form(x, y) ==
          doctest::Approx(-symplectic_form(y, x)).epsilon(1e-14));
    CHECK(symplectic_form(x, y) == doctest::Approx(x.dot(J * y)));
  }
}

TEST_CASE("omega gram matrix") {
  Mat4 B;
  B << random_vec(), random_vec(), random_vec(), random_vec();
  const Mat4 G = omega_gram(B);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(G(i, j) ==
            doctest::Approx(symplectic_form(B.col(i), B.col(j))).epsilon(1e-13));
}

TEST_CASE("plucker embedding basics") {
  Mat42 F;
  F << Vec4::Unit(0), Vec4::Unit(2);
  const PluckerPoint P = plucker_embed(F);
  CHECK(P.p13() != 0.0);
  CHECK(std::abs(P.p12()) + std::abs(P.p14()) + std::abs(P.p23()) +
            std::abs(P.p24()) + std::abs(P.p34()) ==
        0.0);

  for (int i = 0; i < 20; ++i) {
    const Mat42 G = random_frame();
    const PluckerPoint Q = plucker_embed(G);
    CHECK(std::abs(Q.relation_residual()) < 1e-13);
    // column operations change the representative only by scale
    Mat42 G2;
    G2.col(0) = 2.0 * G.col(0) - 0.7 * G.col(1);
    G2.col(1) = G.col(1) + 0.3 * G.col(0);
    const PluckerPoint Q2 = plucker_embed(G2);
    const Vec6 a = Q.p / Q.norm(), b = Q2.p / Q2.norm();
    CHECK(std::min((a - b).norm(), (a + b).norm()) < 1e-12);
  }
}

TEST_CASE("lagrangian defect identifies Lagrangian planes") {
  for (int i = 0; i < 10; ++i) {
    const Mat42 L = random_lagrangian_frame();
    CHECK(std::abs(plucker_embed(L).lagrangian_defect()) < 1e-12);
    CHECK(LagrangianFrame{L}.lagrangian_defect() < 1e-12);
  }
  Mat42 F;
  F << Vec4::Unit(0), Vec4::Unit(2);  // omega(e1,e3) = 1: not Lagrangian
  CHECK(std::abs(plucker_embed(F).lagrangian_defect()) > 0.5);
}

TEST_CASE("frame recovery from plucker coordinates") {
  for (int i = 0; i < 20; ++i) {
    const Mat42 F = random_frame();
    const Mat42 G = frame_from_plucker(plucker_embed(F));
    // angles this close to zero are only resolvable to ~sqrt(machine eps)
    CHECK(subspace_angle(F, G) < 1e-7);
  }
  PluckerPoint bogus;
  bogus.p << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;  // p12 p34 != 0: off the quadric
  CHECK_THROWS(frame_from_plucker(bogus, 1e-10));
}

TEST_CASE("detection form equals the frame determinant") {
  for (int i = 0; i < 20; ++i) {
    const Mat42 F = random_frame(), G = random_frame();
    Mat4 M;
    M << F, G;
    const double det = M.determinant();
    const double beta = detection_form(plucker_embed(F), plucker_embed(G));
    CHECK(std::abs(beta - det) < 1e-10 * (1.0 + std::abs(det)));
  }
  // shared direction: vanishing detection form
  const Mat42 F = random_frame();
  Mat42 G;
  G << F.col(0), random_vec();
  const double beta = detection_form(plucker_embed(F), plucker_embed(G));
  CHECK(std::abs(beta) < 1e-12 * plucker_embed(F).norm() *
                             plucker_embed(G).norm());
}

TEST_CASE("induced matrix is the derivative of the embedding") {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat4 B;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) B(i, j) = n(rng);

  const Mat42 F = random_frame();
  const double h = 1e-6;
  const Mat42 Fp = F + h * (B * F);
  const Mat42 Fm = F - h * (B * F);
  const Vec6 dp_fd = (plucker_embed(Fp).p - plucker_embed(Fm).p) / (2 * h);
  const Vec6 dp = induced_matrix(B) * plucker_embed(F).p;
  CHECK((dp - dp_fd).norm() < 1e-7 * (1.0 + dp.norm()));

  // diagonal rates add pairwise
  const Vec4 d(0.3, -1.2, 0.8, 2.0);
  const Mat6 ind = induced_matrix(Vec4(d).asDiagonal());
  for (int k = 0; k < 6; ++k) {
    const auto& pr = kPluckerPairs[k];
    CHECK(ind(k, k) == doctest::Approx(d[pr[0]] + d[pr[1]]).epsilon(1e-14));
    for (int l = 0; l < 6; ++l)
      if (l != k) CHECK(ind(k, l) == 0.0);
  }
}

TEST_CASE("second compound matrix") {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat4 M;
  do {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) M(i, j) = n(rng);
  } while (std::abs(M.determinant()) < 0.1);

  const Mat42 F = random_frame();
  const Vec6 lhs = plucker_embed(Mat42(M * F)).p;
  const Vec6 rhs = lambda2_matrix(M) * plucker_embed(F).p;
  CHECK((lhs - rhs).norm() < 1e-10 * lhs.norm());

  // det of the compound is det(M)^3
  const double dM = M.determinant();
  CHECK(lambda2_matrix(M).determinant() ==
        doctest::Approx(dM * dM * dM).epsilon(1e-8));
}

TEST_CASE("coordinates relative to a basis") {
  Mat4 B;
  do {
    B << random_vec(), random_vec(), random_vec(), random_vec();
  } while (std::abs(B.determinant()) < 0.1);

  const Mat42 F = random_frame();
  const Mat42 Fb = frame_in_basis(F, B);
  CHECK((B * Fb - F).norm() < 1e-10 * F.norm());

  const PluckerPoint P = plucker_embed(F);
  const PluckerPoint Pb = plucker_in_basis(P, B);
  const Vec6 expect = plucker_embed(Fb).p;
  const Vec6 a = Pb.p / Pb.norm();
  const Vec6 b = expect / expect.norm();
  CHECK(std::min((a - b).norm(), (a + b).norm()) < 1e-10);
}

TEST_CASE("intersection dimension") {
  // transverse planes
  Mat42 F, G;
  F << Vec4::Unit(0), Vec4::Unit(1);
  G << Vec4::Unit(2), Vec4::Unit(3);
  CHECK(intersection_dimension(F, G) == 0);

  // one shared direction, recovered by the output vector
  const Vec4 shared = random_vec().normalized();
  Mat42 F1, G1;
  F1 << shared, Vec4::Unit(0);
  G1 << shared, Vec4::Unit(2);
  Vec4 xi;
  const int dim = intersection_dimension(F1, G1, 1e-7, &xi);
  CHECK(dim == 1);
  CHECK(std::abs(std::abs(xi.dot(shared)) - 1.0) < 1e-9);

  // identical planes
  const Mat42 H = random_frame();
  Mat42 H2;
  H2.col(0) = H.col(0) + H.col(1);
  H2.col(1) = H.col(0) - H.col(1);
  CHECK(intersection_dimension(H, H2) == 2);
}

TEST_CASE("canonicalized representative is deterministic") {
  PluckerPoint P;
  P.p << -2.0, 1.0, 0.0, 0.0, 0.0, 0.0;
  const PluckerPoint C = P.canonicalized();
  CHECK(C.p[0] > 0.0);
  CHECK(C.norm() == doctest::Approx(1.0));
  PluckerPoint tiny;
  tiny.p << 1e-17, -1.0, 0.5, 0.0, 0.0, 0.0;
  CHECK(tiny.canonicalized().p[1] > 0.0);
}
