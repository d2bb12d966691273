#pragma once

// Forward problem: u_tt - u_xx + q(x) u = 0 on x > 0, zero initial data,
// u(0, t) = f(t). Two independent solvers are provided: an explicit cross
// scheme on the characteristic grid and the transmutation representation
//
//   u(x, t) = f(t - x) + int_x^t w(x, s) f(t - s) ds,   f = 0 for t < 0,
//
// whose kernel solves the Goursat problem
//   w_ss - w_xx + q(x) w = 0,  w(0, s) = 0,  w(x, x) = -1/2 int_0^x q.

#include "waveband/core.hpp"

namespace waveband {

// w(x_i, s_j) on the triangle 0 <= i <= j <= N.
struct KernelField {
  int N = 0;
  int n = 1;
  double h = 0.0;
  std::vector<Mat> values;  // packed rows: (i, j) at offset(i) + (j - i)
  double omega = 0.0;       // max over nodes of ||w(x, s)||_2^2

  const Mat& at(int i, int j) const;
  static std::size_t offset(int N, int i);
};

WaveField solve_wave_fd(const HermitianPotential& potential, const BoundaryControl& control,
                        const Grid& grid);

// State u(x_i, T), i = 0..rows-1, for boundary samples f(t_0..t_N) given as
// a flat vector. Uses a domain truncated just past x = T.
Vec fd_final_state(const HermitianPotential& potential, const Vec& boundary, const Grid& grid,
                   int rows);

KernelField solve_goursat_kernel(const HermitianPotential& potential, const Grid& grid);

// u(x_i, t_k) for i = 0..grid.x_steps(); `time_index` k selects t = k h.
Vec apply_control_kernel(const KernelField& kernel, const BoundaryControl& control,
                         const Grid& grid, int time_index);
// Same with t given as a time; throws grid error when t is off-grid.
Vec apply_control_kernel(const KernelField& kernel, const BoundaryControl& control,
                         const Grid& grid, double t);

struct CrossValidationReport {
  double h = 0.0;
  double l2_error = 0.0;          // at h
  double l2_error_refined = 0.0;  // at h / 2
  double ratio = 0.0;
};

// Compares the final slices of both solvers on [0, T] at h and h/2.
CrossValidationReport cross_validate_solvers(const PotentialProfile& potential,
                                             const ControlProfile& control, const Grid& grid);

}  // namespace waveband
