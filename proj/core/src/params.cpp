#include "mwave/params.hpp"

#include <stdexcept>
#include <string>

namespace mwave {

void Params::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("Params: " + msg); };
  if (!(a > 0.0 && a < 0.5)) fail("a must lie in (0, 1/2), got " + std::to_string(a));
  if (!(gamma > 0.0) || !std::isfinite(gamma)) fail("gamma must be positive and finite");
  if (!(eps >= 0.0) || !std::isfinite(eps)) fail("eps must be nonnegative and finite");
  if (!std::isfinite(c) || !(c < 0.0)) fail("wave speed c must be negative (a < 1/2)");
  if (!(eps_max > 0.0)) fail("eps_max must be positive");
}

Params Params::singular(double a, double gamma) {
  Params p;
  p.a = a;
  p.gamma = gamma;
  p.eps = 0.0;
  p.c = singular_speed(a);
  p.validate();
  return p;
}

Params Params::make(double a, double gamma, double eps) {
  Params p;
  p.a = a;
  p.gamma = gamma;
  p.eps = eps;
  p.c = singular_speed(a);
  p.validate();
  return p;
}

}  // namespace mwave
