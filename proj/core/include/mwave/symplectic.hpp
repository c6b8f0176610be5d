#pragma once

#include <array>
#include <string>

#include "mwave/dynamics.hpp"

namespace mwave {

/// Symplectic form on R^4 used throughout: omega(x, y) = <x, J y> with
///
///       [ 0  0  1  0 ]
///   J = [ 0  0  0 -1 ]
///       [-1  0  0  0 ]
///       [ 0  1  0  0 ]
///
/// i.e. omega = e1* ^ e3* - e2* ^ e4*.  Along two solutions of the
/// linearized traveling-wave system, e^{cz} omega(x, y) is constant.
const Mat4& symplectic_J();

double symplectic_form(const Vec4& x, const Vec4& y);

/// omega evaluated pairwise on the columns of a basis B: Omega_kl = omega(b_k, b_l).
Mat4 omega_gram(const Mat4& B);

/// Index pairs of the Pluecker coordinate order (12, 13, 14, 23, 24, 34).
inline constexpr std::array<std::array<int, 2>, 6> kPluckerPairs{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// A 2-plane in R^4 by a spanning 4x2 frame.
struct LagrangianFrame {
  Mat42 cols;

  /// |omega(col0, col1)| scaled by the frame size; zero iff Lagrangian.
  double lagrangian_defect() const;
  /// Smallest singular value over largest; zero iff the columns are dependent.
  double conditioning() const;
  Mat42 orthonormalized() const;
};

/// A point of the Pluecker embedding of Gr_2(R^4) into P(R^6), stored as a
/// representative vector (p12, p13, p14, p23, p24, p34).
struct PluckerPoint {
  Vec6 p = Vec6::Zero();

  double p12() const { return p[0]; }
  double p13() const { return p[1]; }
  double p14() const { return p[2]; }
  double p23() const { return p[3]; }
  double p24() const { return p[4]; }
  double p34() const { return p[5]; }

  /// Quadric residual p12 p34 - p13 p24 + p14 p23, scale-normalized by |p|^2.
  /// Zero iff the bivector is decomposable (lies on the Grassmannian).
  double relation_residual() const;

  /// (p13 - p24)/|p|: zero iff the plane is Lagrangian for omega, since
  /// omega pairs with a bivector through its (13) and (24) components only
  /// (standard coordinates).
  double lagrangian_defect() const;

  double norm() const { return p.norm(); }
  /// Unit representative, keeping the current sign (continuous rescaling).
  PluckerPoint normalized() const;
  /// Unit representative with the first coordinate exceeding tol * max|p_i|
  /// made positive; deterministic across runs.
  PluckerPoint canonicalized(double tol = 1e-12) const;
};

/// Pluecker coordinates (2x2 minors) of a frame.
PluckerPoint plucker_embed(const Mat42& frame);
PluckerPoint plucker_embed(const LagrangianFrame& frame);

/// A spanning frame of the plane represented by P (inverse of plucker_embed
/// up to scale and column operations).  Throws when the quadric residual
/// exceeds tol.
Mat42 frame_from_plucker(const PluckerPoint& P, double tol = 1e-8);

/// Derivative of the Pluecker embedding: if frames evolve by x' = B x then
/// representatives evolve by p' = induced_matrix(B) p (the action of
/// B ^ I + I ^ B on bivectors).  Diagonal B gives rates B_ii + B_jj.
Mat6 induced_matrix(const Mat4& B);

/// Detection form: beta(P, Q) = p12 q34 - p13 q24 + p14 q23 + p23 q14
/// - p24 q13 + p34 q12, proportional to det[v1 v2 w1 w2] for spanning
/// frames; zero iff the two planes intersect nontrivially.
double detection_form(const PluckerPoint& P, const PluckerPoint& Q);

/// Induced change of coordinates on bivectors: the 6x6 second compound
/// matrix of M, (p_new = lambda2_matrix(M) p when frame coordinates map by
/// x -> M x).
Mat6 lambda2_matrix(const Mat4& M);

/// Frame/Pluecker coordinates relative to the basis with columns B.
Mat42 frame_in_basis(const Mat42& frame, const Mat4& B);
PluckerPoint plucker_in_basis(const PluckerPoint& P, const Mat4& B);

/// Largest principal angle between the column spans of two 4x2 frames.
double subspace_angle(const Mat42& F, const Mat42& G);

/// Dimension of span(F) ∩ span(G): the number of singular values of the
/// stacked 4x4 matrix [F | G] (columns orthonormalized) falling below
/// rel_tol * sigma_max.  For dim >= 1, *intersection (when non-null) gets a
/// unit vector in the intersection.
int intersection_dimension(const Mat42& F, const Mat42& G,
                           double rel_tol = 1e-7, Vec4* intersection = nullptr);

}  // namespace mwave
