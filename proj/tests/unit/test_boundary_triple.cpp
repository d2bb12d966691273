#include <doctest.h>

#include <cmath>

#include "waveband/boundary_triple.hpp"
#include "waveband/linalg.hpp"

using namespace waveband;

namespace {

struct Setup {
  Grid grid;
  HermitianPotential q;
  DefectFrame frame;
};

Setup frame_for(const std::string& spec, int n, double h, double x_max) {
  const Grid g = Grid::make(16, h, n, x_max);
  HermitianPotential q = make_potential(spec, g);
  DefectFrame f = compute_defect_frame(q, g);
  return {g, std::move(q), std::move(f)};
}

Vec scalar(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_CASE("defect frame, q = 1") {
  const Setup s = frame_for("const:1", 1, 1.0 / 256, 20.0);
  const DefectFrame& f = s.frame;
  double kerr = 0.0, k1err = 0.0;
  for (int i = 0; i <= f.M; ++i) {
    const double x = i * f.h;
    kerr = std::max(kerr, std::abs(f.K[i](0, 0) - std::exp(-x)));
    k1err = std::max(k1err, std::abs(f.K1[i](0, 0) - 0.5 * x * std::exp(-x)));
  }
  CHECK(kerr <= 1e-6);
  CHECK(k1err <= 1e-6);
  CHECK(std::abs(f.G(0, 0) - 0.5) <= 1e-6);
  CHECK(std::abs(f.Kp0(0, 0) + 1.0) <= 1e-4);
  // K1'(0) = (K1'' = K1 - K integrated against K) = G_K.
  CHECK(std::abs(f.K1p0(0, 0) - f.G(0, 0)) <= 1e-4);

  // K1 solves -K1'' + K1 = K.
  double resid = 0.0;
  for (int i = 1; i < f.M; ++i) {
    const double d2 = (f.K1[i + 1](0, 0) - 2.0 * f.K1[i](0, 0) + f.K1[i - 1](0, 0)).real() / (f.h * f.h);
    resid = std::max(resid, std::abs(-d2 + f.K1[i](0, 0).real() - f.K[i](0, 0).real()));
  }
  CHECK(resid <= 1e-4);  // the central stencil's own truncation is ~h^2/12
  CHECK(std::abs(f.K1[0](0, 0)) <= 1e-14);
}

TEST_CASE("defect frame, decoupled diag(1, 4)") {
  const Setup s = frame_for("diag:1,4", 2, 1.0 / 256, 20.0);
  const DefectFrame& f = s.frame;
  double err = 0.0;
  for (int i = 0; i <= f.M; ++i) {
    const double x = i * f.h;
    Mat want = Mat::Zero(2, 2);
    want(0, 0) = std::exp(-x);
    want(1, 1) = std::exp(-2 * x);
    err = std::max(err, (f.K[i] - want).cwiseAbs().maxCoeff());
  }
  CHECK(err <= 1e-6);
  CHECK(std::abs(f.G(0, 0) - 0.5) <= 1e-6);
  CHECK(std::abs(f.G(1, 1) - 0.25) <= 1e-6);
  CHECK(std::abs(f.G(0, 1)) <= 1e-12);
  CHECK(linalg::hermitian_deviation(f.Kp0) <= 1e-8);
}

TEST_CASE("defect frame errors") {
  const Grid g = Grid::make(16, 1.0 / 64, 1, 10.0);
  CHECK_THROWS_AS(compute_defect_frame(make_potential("zero", g), g), Error);
  const HermitianPotential shorty = HermitianPotential::sample(builtin_potential("const:1", 1), 1, g.h, 5.0);
  CHECK_THROWS_AS(compute_defect_frame(shorty, g), Error);
}

TEST_CASE("boundary maps") {
  const Setup s = frame_for("const:1", 1, 1.0 / 256, 20.0);
  const DefectFrame& f = s.frame;
  SUBCASE("Gamma1 of Dirichlet functions vanishes") {
    const auto y = BoundaryFunction::sample([](double x) { return scalar(x * std::exp(-x)); }, 1, f.h, f.M);
    CHECK(gamma1(y, f).function.cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("Gamma1 y = -e^{-x} y(0)") {
    const auto y = BoundaryFunction::sample([](double x) { return scalar(std::cos(x) * std::exp(-x)); }, 1, f.h, f.M);
    const Vec g1 = gamma1(y, f).function;
    double err = 0.0;
    for (int i = 0; i <= f.M; ++i) err = std::max(err, std::abs(g1(i) + std::exp(-i * f.h)));
    CHECK(err <= 1e-6);
  }
  SUBCASE("Gamma2 vanishes when y'(0) = K'(0) y(0)") {
    BoundaryFunction y;
    y.samples = f.apply_K(scalar(2.0));
    y.value0 = scalar(2.0);
    y.deriv0 = f.Kp0 * y.value0;
    const BoundaryImage g2 = gamma2(y, f);
    CHECK(g2.coefficients.norm() <= 1e-14);
    CHECK(g2.function.norm() <= 1e-14);
  }
  SUBCASE("Gamma2 of a Dirichlet function") {
    const auto y = BoundaryFunction::sample([](double x) { return scalar(x * std::exp(-2 * x)); }, 1, f.h, f.M);
    const BoundaryImage g2 = gamma2(y, f);
    CHECK(std::abs(g2.coefficients(0) - y.deriv0(0) / f.K1p0(0, 0)) <= 1e-14);
    CHECK(std::abs(g2.coefficients(0) - 1.0 / f.K1p0(0, 0)) <= 5e-4);  // one-sided y'(0)
  }
  SUBCASE("channel e2 for diag(1,4)") {
    const Setup d = frame_for("diag:1,4", 2, 1.0 / 256, 20.0);
    const auto y = BoundaryFunction::sample(
        [](double x) {
          Vec v(2);
          v << 0.0, std::exp(-3 * x);
          return v;
        },
        2, d.frame.h, d.frame.M);
    const Vec g1 = gamma1(y, d.frame).function;
    double err = 0.0;
    for (int i = 0; i <= d.frame.M; ++i)
      err = std::max({err, std::abs(g1(2 * i)), std::abs(g1(2 * i + 1) + std::exp(-2 * i * d.frame.h))});
    CHECK(err <= 1e-6);
  }
}

TEST_CASE("Green formula") {
  auto residual = [](double h) {
    const Setup s = frame_for("const:1", 1, h, 20.0);
    const auto u = BoundaryFunction::sample([](double x) { return scalar(x * std::exp(-x)); }, 1, h, s.frame.M);
    const auto v = BoundaryFunction::sample([](double x) { return scalar(std::exp(-2 * x)); }, 1, h, s.frame.M);
    return green_residual(u, v, s.q, s.frame);
  };
  const GreenReport coarse = residual(1.0 / 128), fine = residual(1.0 / 256);
  CHECK(fine.residual <= 1e-5);
  CHECK(fine.residual < coarse.residual);
  CHECK_FALSE(fine.truncated);

  const Setup s = frame_for("const:1", 1, 1.0 / 256, 20.0);
  SUBCASE("u = v, real data") {
    const auto u = BoundaryFunction::sample([](double x) { return scalar(std::exp(-x) * (1 + x)); }, 1, s.frame.h, s.frame.M);
    CHECK(green_residual(u, u, s.q, s.frame).residual <= 1e-8);
  }
  SUBCASE("compactly supported pair") {
    auto bump = [](double c) {
      return [c](double x) {
        const double r = (x - c) / 1.5;
        return scalar(std::abs(r) < 1 ? std::pow(1 - r * r, 4) : 0.0);
      };
    };
    const auto u = BoundaryFunction::sample(bump(3.0), 1, s.frame.h, s.frame.M);
    const auto v = BoundaryFunction::sample(bump(3.7), 1, s.frame.h, s.frame.M);
    const GreenReport r = green_residual(u, v, s.q, s.frame);
    CHECK(std::abs(r.lhs) <= 1e-8);
    CHECK(std::abs(r.rhs) <= 1e-8);
  }
}

TEST_CASE("Vishik decomposition") {
  const Setup s = frame_for("const:1", 1, 1.0 / 256, 20.0);
  const DefectFrame& f = s.frame;
  SUBCASE("pure defect element") {
    BoundaryFunction y = BoundaryFunction::from_samples(f.apply_K(scalar(1.5)), 1, f.h);
    const VishikDecomposition d = vishik_decompose(y, f);
    CHECK(std::abs(d.d(0) - 1.5) <= 1e-12);
    CHECK(d.c.norm() <= 1e-4);
    CHECK(d.y0.cwiseAbs().maxCoeff() <= 1e-4);
  }
  SUBCASE("K1 element") {
    BoundaryFunction y = BoundaryFunction::from_samples(f.apply_K1(scalar(2.0)), 1, f.h);
    const VishikDecomposition d = vishik_decompose(y, f);
    CHECK(d.d.norm() <= 1e-12);
    CHECK(std::abs(d.c(0) - 2.0) <= 1e-4);
    CHECK(d.y0.cwiseAbs().maxCoeff() <= 1e-4);
  }
  SUBCASE("e^{-x} sin x") {
    const auto y = BoundaryFunction::sample([](double x) { return scalar(std::exp(-x) * std::sin(x)); }, 1, f.h, f.M);
    const VishikDecomposition d = vishik_decompose(y, f);
    CHECK(d.y0_value_residual <= 1e-6);
    CHECK(d.y0_derivative_residual <= 1e-6);
    CHECK(d.reassembly_error <= 1e-12);
  }
}
