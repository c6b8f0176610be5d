#pragma once

#include <functional>

#include "mwave/ode_rk45.hpp"
#include "mwave/symplectic.hpp"

namespace mwave {

using CoeffFn = std::function<Mat4(double)>;

/// Integrate a plane under the linearized flow in Pluecker coordinates:
/// p' = induced_matrix(B(z)) p, renormalized to a unit representative each
/// step (the scalar factor is positive, so the representative varies
/// continuously and detection-form signs along the path are meaningful).
OdePath<Vec6> integrate_plucker(const CoeffFn& B, const PluckerPoint& P0,
                                double z0, double z1,
                                const OdeOptions& opt = {});

/// Integrate a 4x2 frame under x' = B(z) x with scalar renormalization (both
/// columns divided by the same factor, so columns remain genuine solutions of
/// the linear equation up to one constant); used as an independent check of
/// the Pluecker route and for invariants of the form e^{cz} omega(x, y).
OdePath<Mat42> integrate_frame(const CoeffFn& B, const Mat42& F0, double z0,
                               double z1, const OdeOptions& opt = {});

}  // namespace mwave
