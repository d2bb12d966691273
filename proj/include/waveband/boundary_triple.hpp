#pragma once

// Boundary triple of the minimal operator S0 = -d^2/dx^2 + q on the half-line:
// the defect frame K (square-summable solutions of -K'' + qK = 0, K(0) = I),
// its Dirichlet preimage K1 = S^{-1} K, the Gram matrix G_K, and the boundary
// maps Gamma1 y = -K(x) y(0), Gamma2 y = K(x) K1'(0)^{-1} [y'(0) - K'(0) y(0)].

#include <filesystem>

#include "waveband/core.hpp"

namespace waveband {

struct DefectFrame {
  int n = 1;
  double h = 0.0;
  int M = 0;               // samples x_i = i h, i = 0..M
  std::vector<Mat> K;
  std::vector<Mat> K1;
  Mat G;                   // (G)_{ij} = (k_i, k_j)
  Mat Kp0;                 // K'(0)
  Mat K1p0;                // K1'(0)
  double K1p0_condition = 0.0;

  // Flat samples of K(x) v and K1(x) v.
  Vec apply_K(const Vec& v) const;
  Vec apply_K1(const Vec& v) const;
};

// Default truncation: T + 15 / sqrt(min eigenvalue of q at the far end).
double default_frame_extent(const HermitianPotential& potential, double T);

DefectFrame compute_defect_frame(const HermitianPotential& potential, const Grid& grid);

// Sampled function on the frame grid together with its endpoint data.
struct BoundaryFunction {
  Vec samples;
  Vec value0;
  Vec deriv0;

  // Endpoint data taken from the samples with one-sided stencils.
  static BoundaryFunction from_samples(Vec samples, int n, double h);
  static BoundaryFunction sample(const std::function<Vec(double)>& y, int n, double h, int M);
};

struct BoundaryImage {
  Vec coefficients;  // d for Gamma1, c for Gamma2
  Vec function;      // samples of -K d, respectively K c
};

BoundaryImage gamma1(const BoundaryFunction& y, const DefectFrame& frame);
BoundaryImage gamma2(const BoundaryFunction& y, const DefectFrame& frame);

struct GreenReport {
  cplx lhs;  // (L u, v) - (u, L v)
  cplx rhs;  // (G1 u, G2 v) - (G2 u, G1 v)
  double residual = 0.0;
  bool truncated = false;  // an input does not decay by x_max
};

GreenReport green_residual(const BoundaryFunction& u, const BoundaryFunction& v,
                           const HermitianPotential& potential, const DefectFrame& frame);

struct VishikDecomposition {
  Vec y0;
  Vec c;
  Vec d;
  Vec g;       // K c
  Vec hpart;   // K d
  double y0_value_residual = 0.0;
  double y0_derivative_residual = 0.0;
  double reassembly_error = 0.0;
};

VishikDecomposition vishik_decompose(const BoundaryFunction& y, const DefectFrame& frame);

// Writes frame_K.csv, frame_K1.csv and frame.json into `dir`.
void save_frame(const DefectFrame& frame, const std::filesystem::path& dir);

}  // namespace waveband
