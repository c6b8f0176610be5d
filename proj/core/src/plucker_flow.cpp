#include "mwave/plucker_flow.hpp"

namespace mwave {

OdePath<Vec6> integrate_plucker(const CoeffFn& B, const PluckerPoint& P0,
                                double z0, double z1, const OdeOptions& opt) {
  auto rhs = [&B](double z, const Vec6& p) -> Vec6 {
    return induced_matrix(B(z)) * p;
  };
  return integrate_rk45<Vec6>(rhs, P0.p, z0, z1, opt);
}

OdePath<Mat42> integrate_frame(const CoeffFn& B, const Mat42& F0, double z0,
                               double z1, const OdeOptions& opt) {
  auto rhs = [&B](double z, const Mat42& F) -> Mat42 { return B(z) * F; };
  return integrate_rk45<Mat42>(rhs, F0, z0, z1, opt);
}

}  // namespace mwave
