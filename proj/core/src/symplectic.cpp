#include "mwave/symplectic.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace mwave {

const Mat4& symplectic_J() {
  static const Mat4 J = [] {
    Mat4 J;
    J << 0, 0, 1, 0,   //
        0, 0, 0, -1,   //
        -1, 0, 0, 0,   //
        0, 1, 0, 0;
    return J;
  }();
  return J;
}

double symplectic_form(const Vec4& x, const Vec4& y) {
  return x.dot(symplectic_J() * y);
}

Mat4 omega_gram(const Mat4& B) {
  return B.transpose() * symplectic_J() * B;
}

double LagrangianFrame::lagrangian_defect() const {
  const double s = cols.col(0).norm() * cols.col(1).norm();
  if (s == 0.0) return 0.0;
  return std::abs(symplectic_form(cols.col(0), cols.col(1))) / s;
}

double LagrangianFrame::conditioning() const {
  Eigen::JacobiSVD<Mat42> svd(cols);
  return svd.singularValues()[1] / svd.singularValues()[0];
}

Mat42 LagrangianFrame::orthonormalized() const {
  Eigen::HouseholderQR<Mat42> qr(cols);
  return qr.householderQ() * Eigen::Matrix<double, 4, 2>::Identity();
}

double PluckerPoint::relation_residual() const {
  const double n2 = p.squaredNorm();
  if (n2 == 0.0) return 0.0;
  return (p[0] * p[5] - p[1] * p[4] + p[2] * p[3]) / n2;
}

double PluckerPoint::lagrangian_defect() const {
  const double n = p.norm();
  if (n == 0.0) return 0.0;
  return (p[1] - p[4]) / n;
}

PluckerPoint PluckerPoint::normalized() const {
  const double n = p.norm();
  if (n == 0.0) return *this;
  return {p / n};
}

PluckerPoint PluckerPoint::canonicalized(double tol) const {
  PluckerPoint q = normalized();
  const double m = q.p.cwiseAbs().maxCoeff();
  if (m == 0.0) return q;
  for (int i = 0; i < 6; ++i) {
    if (std::abs(q.p[i]) > tol * m) {
      if (q.p[i] < 0.0) q.p = -q.p;
      break;
    }
  }
  return q;
}

PluckerPoint plucker_embed(const Mat42& F) {
  PluckerPoint P;
  for (int k = 0; k < 6; ++k) {
    const int i = kPluckerPairs[k][0], j = kPluckerPairs[k][1];
    P.p[k] = F(i, 0) * F(j, 1) - F(j, 0) * F(i, 1);
  }
  return P;
}

PluckerPoint plucker_embed(const LagrangianFrame& frame) {
  return plucker_embed(frame.cols);
}

Mat42 frame_from_plucker(const PluckerPoint& P, double tol) {
  if (std::abs(P.relation_residual()) > tol)
    throw std::invalid_argument(
        "frame_from_plucker: quadric residual too large; not a decomposable "
        "bivector");
  // For p = u ^ v the antisymmetric matrix M = u v^T - v u^T has range
  // span{u, v}; its two leading left singular vectors recover the plane.
  Mat4 M = Mat4::Zero();
  for (int k = 0; k < 6; ++k) {
    const int i = kPluckerPairs[k][0], j = kPluckerPairs[k][1];
    M(i, j) = P.p[k];
    M(j, i) = -P.p[k];
  }
  Eigen::JacobiSVD<Mat4> svd(M, Eigen::ComputeFullU);
  Mat42 F;
  F.col(0) = svd.matrixU().col(0);
  F.col(1) = svd.matrixU().col(1);
  return F;
}

Mat6 induced_matrix(const Mat4& B) {
  // p_ij' = sum_m B_im p_mj + B_jm p_im with the antisymmetric extension
  // p_mj = -p_jm, p_mm = 0.
  auto canon = [](int x, int y, double* sign) -> int {
    if (x == y) return -1;
    if (x > y) {
      std::swap(x, y);
      *sign = -*sign;
    }
    for (int k = 0; k < 6; ++k)
      if (kPluckerPairs[k][0] == x && kPluckerPairs[k][1] == y) return k;
    return -1;
  };
  Mat6 Ind = Mat6::Zero();
  for (int r = 0; r < 6; ++r) {
    const int i = kPluckerPairs[r][0], j = kPluckerPairs[r][1];
    for (int m = 0; m < 4; ++m) {
      double s1 = 1.0;
      if (int k = canon(m, j, &s1); k >= 0) Ind(r, k) += s1 * B(i, m);
      double s2 = 1.0;
      if (int k = canon(i, m, &s2); k >= 0) Ind(r, k) += s2 * B(j, m);
    }
  }
  return Ind;
}

double detection_form(const PluckerPoint& P, const PluckerPoint& Q) {
  const Vec6& p = P.p;
  const Vec6& q = Q.p;
  return p[0] * q[5] - p[1] * q[4] + p[2] * q[3] + p[3] * q[2] - p[4] * q[1] +
         p[5] * q[0];
}

Mat6 lambda2_matrix(const Mat4& M) {
  Mat6 L;
  for (int r = 0; r < 6; ++r) {
    const int i = kPluckerPairs[r][0], j = kPluckerPairs[r][1];
    for (int s = 0; s < 6; ++s) {
      const int k = kPluckerPairs[s][0], l = kPluckerPairs[s][1];
      L(r, s) = M(i, k) * M(j, l) - M(i, l) * M(j, k);
    }
  }
  return L;
}

Mat42 frame_in_basis(const Mat42& frame, const Mat4& B) {
  return B.fullPivLu().solve(frame);
}

PluckerPoint plucker_in_basis(const PluckerPoint& P, const Mat4& B) {
  const Mat4 Binv = B.fullPivLu().inverse();
  return {lambda2_matrix(Binv) * P.p};
}

double subspace_angle(const Mat42& F, const Mat42& G) {
  const Mat42 QF = LagrangianFrame{F}.orthonormalized();
  const Mat42 QG = LagrangianFrame{G}.orthonormalized();
  const Eigen::Matrix2d C = QF.transpose() * QG;
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(C);
  const double c = std::clamp(svd.singularValues()[1], -1.0, 1.0);
  // acos loses half the working precision near zero angle; switch to the
  // sine of the projection residual there (exact since QG is orthonormal)
  if (c * c < 0.5) return std::acos(c);
  const Mat42 R = QG - QF * C;
  Eigen::JacobiSVD<Mat42> rsvd(R);
  const double s = std::clamp(rsvd.singularValues()[0], -1.0, 1.0);
  return std::asin(s);
}

int intersection_dimension(const Mat42& F, const Mat42& G, double rel_tol,
                           Vec4* intersection) {
  const Mat42 QF = LagrangianFrame{F}.orthonormalized();
  const Mat42 QG = LagrangianFrame{G}.orthonormalized();
  Mat4 S;
  S.leftCols<2>() = QF;
  S.rightCols<2>() = QG;
  Eigen::JacobiSVD<Mat4> svd(S, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int dim = 0;
  for (int i = 0; i < 4; ++i)
    if (sv[i] < rel_tol * sv[0]) ++dim;
  if (intersection != nullptr && dim >= 1) {
    // Null vector (alpha, beta) of [QF | QG] means QF alpha = -QG beta: a
    // common direction of the two planes.
    const Vec4 n = svd.matrixV().col(3);
    Vec4 xi = QF * n.head<2>();
    const double s = xi.norm();
    if (s > 0.0) xi /= s;
    *intersection = canonical_sign(xi);
  }
  return dim;
}

}  // namespace mwave
