#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "mwave/maslov.hpp"
#include "mwave/pde.hpp"

using namespace mwave;

namespace {

const WaveProfile& shared_pulse() {
  static const WaveProfile prof = [] {
    const Params p = Params::make(0.25, 1.0, 5e-4);
    return solve_pulse(p, assemble_singular_orbit(Params::singular(p.a, p.gamma)));
  }();
  return prof;
}

// wide enough to hold both layers and the full slow excursion between them
PdeGrid wide_grid() {
  PdeGrid g;
  g.x_hi = 120.0;
  g.nx = 726;  // dx = 0.2
  return g;
}

Perturbation no_perturbation() {
  return [](double) { return std::array<double, 2>{0.0, 0.0}; };
}

}  // namespace

TEST_CASE("the computed wave is a discrete steady state") {
  PdeOptions opt;
  opt.t_end = 10.0;
  const PdeRunResult run =
      evolve(shared_pulse(), no_perturbation(), wide_grid(), opt);

  CHECK_FALSE(run.blew_up);
  CHECK(run.d0 < 1e-8);
  // residual motion is the scheme's truncation error, not an instability
  CHECK(run.d_final < 1e-3);
  CHECK(std::abs(run.shift_final) < 0.01);
  CHECK(run.trace.size() >= 20);
}

TEST_CASE("a derivative perturbation reads back as a phase shift") {
  const WaveProfile& prof = shared_pulse();
  const ProfileInterpolant interp(prof);

  // phi(x) + 0.01 phi'(x) is phi translated by -0.01 up to quadratic terms
  const Perturbation pert = [&](double x) {
    const Vec4 d = vector_field(interp.state(x), prof.p);
    return std::array<double, 2>{0.01 * d[0], 0.01 * d[1]};
  };

  PdeOptions opt;
  opt.t_end = 5.0;
  const PdeRunResult run = evolve(prof, pert, wide_grid(), opt);

  CHECK_FALSE(run.blew_up);
  CHECK(run.d0 < 1e-4);  // Taylor remainder only
  CHECK(std::abs(run.shift_final - (-0.01)) < 5e-3);
  CHECK(run.d_final < 1e-3);
}

TEST_CASE("a localized bump decays back to the wave") {
  const Perturbation bump = [](double x) {
    const double b = 0.05 * std::exp(-(x - 10.0) * (x - 10.0) / 2.0);
    return std::array<double, 2>{b, 0.0};
  };

  PdeOptions opt;
  opt.t_end = 60.0;
  opt.stop_ratio = 5.0;
  const PdeRunResult run = evolve(shared_pulse(), bump, wide_grid(), opt);

  CHECK_FALSE(run.blew_up);
  CHECK(run.d0 > 0.03);
  CHECK(run.d0 < 0.06);
  CHECK(run.trace.size() >= 3);
  // the stop criterion fired well before t_end
  CHECK(run.trace.back().t < 30.0);
  CHECK(run.d_final * 5.0 <= run.d0 * (1.0 + 1e-9));
  CHECK(run.trace.back().dist < run.trace.front().dist);
}

TEST_CASE("halving dx and dt quarters the steady-state defect") {
  PdeOptions opt;
  opt.t_end = 5.0;
  const PdeGrid coarse = wide_grid();
  PdeGrid fine = coarse;
  fine.nx = 2 * coarse.nx - 1;
  fine.dt = coarse.dt / 2.0;

  const double dc =
      evolve(shared_pulse(), no_perturbation(), coarse, opt).d_final;
  const double df =
      evolve(shared_pulse(), no_perturbation(), fine, opt).d_final;

  CHECK(dc / df > 2.5);
  CHECK(dc / df < 6.0);
}

TEST_CASE("evolve validates grid and options") {
  const WaveProfile& prof = shared_pulse();
  const Perturbation zero = no_perturbation();

  PdeGrid g = wide_grid();
  g.nx = 8;
  CHECK_THROWS_AS(evolve(prof, zero, g), std::invalid_argument);

  g = wide_grid();
  g.x_hi = g.x_lo;
  CHECK_THROWS_AS(evolve(prof, zero, g), std::invalid_argument);

  g = wide_grid();
  g.dt = 0.0;
  CHECK_THROWS_AS(evolve(prof, zero, g), std::invalid_argument);

  g = wide_grid();
  g.x_lo = prof.z_min() - 50.0;  // outside the computed domain
  CHECK_THROWS_AS(evolve(prof, zero, g), std::invalid_argument);

  PdeOptions bad;
  bad.t_end = 0.0;
  CHECK_THROWS_AS(evolve(prof, zero, wide_grid(), bad), std::invalid_argument);
}

TEST_CASE("decay trace serializes to csv") {
  PdeOptions opt;
  opt.t_end = 2.0;
  const PdeRunResult run =
      evolve(shared_pulse(), no_perturbation(), wide_grid(), opt);
  const std::string csv = decay_trace_to_csv(run);

  std::istringstream is(csv);
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "t,dist,shift");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 2);
  }
  CHECK(rows == run.trace.size());
}
