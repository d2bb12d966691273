#include <doctest.h>

#include <cmath>

#include "waveband/forward.hpp"
#include "waveband/linalg.hpp"

using namespace waveband;

namespace {

ControlProfile channel0(std::function<double(double)> f, int n) {
  return [f, n](double t) {
    Vec v = Vec::Zero(n);
    v(0) = f(t);
    return v;
  };
}

}  // namespace

TEST_CASE("FD solver: transport for q = 0") {
  const Grid g = Grid::make(256, 1.0 / 256, 2);
  const HermitianPotential q = make_potential("zero", g);
  const BoundaryControl f =
      BoundaryControl::sample(channel0([](double t) { return std::sin(M_PI * t); }, 2), g, false);
  const WaveField u = solve_wave_fd(q, f, g);
  const Vec last = u.slice(g.N);
  double err = 0.0;
  for (int i = 0; i <= g.N; ++i) {
    const double x = i * g.h;
    err = std::max(err, std::abs(last(2 * i) - std::sin(M_PI * (1.0 - x))));
    err = std::max(err, std::abs(last(2 * i + 1)));
  }
  CHECK(err <= 1e-3);
  // Boundary values are imposed exactly.
  for (int j = 0; j <= g.N; ++j) CHECK(u.values(j, 0) == f.samples(2 * j));
}

TEST_CASE("FD solver: zero control and finite speed") {
  const Grid g = Grid::make(64, 1.0 / 64, 1);
  const HermitianPotential q = make_potential("const:1", g);
  const BoundaryControl zero = BoundaryControl::sample(builtin_control("zero", g), g, true);
  CHECK(solve_wave_fd(q, zero, g).values.cwiseAbs().maxCoeff() == 0.0);

  const BoundaryControl f = BoundaryControl::sample(builtin_control("t2", g), g, true);
  const WaveField u = solve_wave_fd(q, f, g);
  for (int j = 0; j <= g.N; ++j)
    for (int i = 0; i < u.values.cols(); ++i)
      if (i * g.h > j * g.h + 2 * g.h + 1e-12) CHECK(u.values(j, i) == cplx(0.0));

  const HermitianPotential shorty = HermitianPotential::sample(builtin_potential("const:1", 1), 1, g.h, 0.5);
  CHECK_THROWS_AS(solve_wave_fd(shorty, f, g), Error);
}

TEST_CASE("Goursat kernel oracles") {
  SUBCASE("q = 0 gives w = 0") {
    const Grid g = Grid::make(32, 1.0 / 32, 2);
    const KernelField k = solve_goursat_kernel(make_potential("zero", g), g);
    CHECK(k.omega == 0.0);
    for (int i = 0; i <= g.N; ++i)
      for (int j = i; j <= g.N; ++j) CHECK(k.at(i, j).norm() == 0.0);
  }
  SUBCASE("boundary and diagonal data, q = 1") {
    const Grid g = Grid::make(128, 1.0 / 128, 1);
    const KernelField k = solve_goursat_kernel(make_potential("const:1", g), g);
    for (int j = 0; j <= g.N; ++j) CHECK(k.at(0, j).norm() == 0.0);
    for (int i = 0; i <= g.N; ++i) CHECK(std::abs(k.at(i, i)(0, 0) + 0.5 * i * g.h) < 1e-10);
    CHECK(k.omega >= 0.0);
    CHECK(std::abs(k.omega - 0.25) < 1e-2);
  }
  SUBCASE("2x2 bump: neighbor jumps are O(h) with a stable constant") {
    auto jump_constant = [](int N) {
      const Grid g = Grid::make(N, 1.0 / N, 2);
      const KernelField k = solve_goursat_kernel(make_potential("bump:0.5,0.4,0.02", g), g);
      double worst = 0.0;
      for (int i = 0; i < g.N; ++i)
        for (int j = i + 1; j < g.N; ++j) {
          worst = std::max(worst, (k.at(i, j + 1) - k.at(i, j)).norm());
          worst = std::max(worst, (k.at(i + 1, j + 1) - k.at(i, j)).norm());
        }
      return worst / g.h;
    };
    const double c1 = jump_constant(64), c2 = jump_constant(128);
    CHECK(c1 < 5.0);
    CHECK(std::abs(c1 - c2) <= 0.2 * c1);
  }
}

TEST_CASE("kernel representation") {
  SUBCASE("zero kernel is transport with a cut front") {
    const Grid g = Grid::make(64, 1.0 / 64, 2);
    const KernelField k = solve_goursat_kernel(make_potential("zero", g), g);
    const BoundaryControl f = BoundaryControl::sample(channel0([](double t) { return t; }, 2), g, false);
    const Vec u = apply_control_kernel(k, f, g, 1.0);
    for (int i = 0; i <= g.x_steps(); ++i) {
      const double x = i * g.h;
      const double want = x <= 1.0 ? 1.0 - x : 0.0;
      CHECK(std::abs(u(2 * i) - want) < 1e-12);
      CHECK(std::abs(u(2 * i + 1)) < 1e-15);
    }
    CHECK_THROWS_AS(apply_control_kernel(k, f, g, 0.3 + 1e-3), Error);
  }
  SUBCASE("zero control") {
    const Grid g = Grid::make(32, 1.0 / 32, 1);
    const KernelField k = solve_goursat_kernel(make_potential("const:1", g), g);
    const BoundaryControl f = BoundaryControl::sample(builtin_control("zero", g), g, true);
    CHECK(apply_control_kernel(k, f, g, g.N).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("q = 1, f = t^2: agreement with FD at second order") {
    auto err = [](int N) {
      const Grid g = Grid::make(N, 1.0 / N, 1);
      const HermitianPotential q = make_potential("const:1", g);
      const BoundaryControl f = BoundaryControl::sample(builtin_control("t2", g), g, true);
      const Vec fd = solve_wave_fd(q, f, g).slice(g.N).head(g.N + 1);
      const Vec kr = apply_control_kernel(solve_goursat_kernel(q, g), f, g, g.N).head(g.N + 1);
      return (fd - kr).cwiseAbs().maxCoeff();
    };
    const double e1 = err(128), e2 = err(256);
    CHECK(e1 / e2 >= 3.2);
    CHECK(e1 / e2 <= 4.8);
    CHECK(e2 / (1.0 / (256.0 * 256.0)) < 1.0);
  }
}

TEST_CASE("solver cross-validation") {
  const Grid g = Grid::make(128, 1.0 / 128, 1);
  SUBCASE("q = 0 is exact") {
    const auto r = cross_validate_solvers(builtin_potential("zero", 1), builtin_control("smooth", g), g);
    CHECK(r.l2_error <= 1e-10);
  }
  SUBCASE("q = 1") {
    const auto r = cross_validate_solvers(builtin_potential("const:1", 1), builtin_control("smooth", g), g);
    CHECK(r.ratio >= 3.2);
    CHECK(r.ratio <= 4.8);
  }
  SUBCASE("2x2 bump") {
    const Grid g2 = Grid::make(128, 1.0 / 128, 2);
    const auto r =
        cross_validate_solvers(builtin_potential("bump:0.5,0.4,0.02", 2), builtin_control("smooth", g2), g2);
    CHECK(r.ratio >= 3.0);
    CHECK(r.ratio <= 5.0);
  }
}
