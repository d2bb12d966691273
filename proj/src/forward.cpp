#include "waveband/forward.hpp"

#include <cmath>

#include "waveband/linalg.hpp"

namespace waveband {

namespace {

// One step of the cross scheme on samples 0..last; the boundary sample is set
// by the caller, the right edge stays zero.
void cross_step(const std::vector<Mat>& q, const Vec& prev, const Vec& cur, Vec& next, int last,
                int n, double h) {
  const double h2 = h * h;
  for (int i = 1; i < last; ++i)
    next.segment(i * n, n) = cur.segment((i + 1) * n, n) + cur.segment((i - 1) * n, n) -
                             prev.segment(i * n, n) - h2 * (q[i] * cur.segment(i * n, n));
  next.segment(Eigen::Index(last) * n, n).setZero();
}

// Leading `count` samples of the potential.
std::vector<Mat> leading_samples(const HermitianPotential& p, int count) {
  if (int(p.size()) < count) throw Error(ErrorKind::coverage, "potential shorter than the domain");
  return {p.samples().begin(), p.samples().begin() + count};
}

}  // namespace

WaveField solve_wave_fd(const HermitianPotential& potential, const BoundaryControl& control,
                        const Grid& grid) {
  const int n = grid.n;
  const int M = grid.x_steps();
  if (potential.n() != n || control.n != n) throw Error(ErrorKind::dimension, "channel mismatch");
  if (control.count() != grid.N + 1) throw Error(ErrorKind::dimension, "control must have N + 1 samples");
  potential.require_coverage(grid.x_max);
  const auto q = leading_samples(potential, M + 1);

  WaveField u{grid, Mat::Zero(grid.N + 1, Eigen::Index(M + 1) * n)};
  Vec prev = Vec::Zero(Eigen::Index(M + 1) * n);
  Vec cur = prev;
  cur.segment(0, n) = control.at(0);
  u.values.row(0) = cur.transpose();
  if (grid.N >= 1) {
    // u_t(., 0) = 0: use the mirrored level u(., -h) = u(., h).
    Vec next(cur.size());
    const double h2 = grid.h * grid.h;
    for (int i = 1; i < M; ++i)
      next.segment(i * n, n) = 0.5 * (cur.segment((i + 1) * n, n) + cur.segment((i - 1) * n, n)) -
                               0.5 * h2 * (q[i] * cur.segment(i * n, n));
    next.segment(Eigen::Index(M) * n, n).setZero();
    next.segment(0, n) = control.at(1);
    prev = cur;
    cur = next;
    u.values.row(1) = cur.transpose();
  }
  Vec next(cur.size());
  for (int j = 1; j < grid.N; ++j) {
    cross_step(q, prev, cur, next, M, n, grid.h);
    next.segment(0, n) = control.at(j + 1);
    prev.swap(cur);
    cur.swap(next);
    u.values.row(j + 1) = cur.transpose();
  }
  return u;
}

Vec fd_final_state(const HermitianPotential& potential, const Vec& boundary, const Grid& grid,
                   int rows) {
  const int n = grid.n;
  const int last = grid.N + 2;
  if (boundary.size() != Eigen::Index(grid.N + 1) * n)
    throw Error(ErrorKind::dimension, "boundary data must have N + 1 samples");
  if (rows > last) throw Error(ErrorKind::dimension, "too many rows requested");
  const auto q = leading_samples(potential, last + 1);
  Vec prev = Vec::Zero(Eigen::Index(last + 1) * n);
  Vec cur = prev;
  Vec next = prev;
  cur.segment(0, n) = boundary.segment(0, n);
  // First step with u_t(., 0) = 0.
  const double h2 = grid.h * grid.h;
  for (int i = 1; i < last; ++i)
    next.segment(i * n, n) = 0.5 * (cur.segment((i + 1) * n, n) + cur.segment((i - 1) * n, n)) -
                             0.5 * h2 * (q[i] * cur.segment(i * n, n));
  next.segment(0, n) = boundary.segment(n, n);
  prev = cur;
  cur = next;
  for (int j = 1; j < grid.N; ++j) {
    cross_step(q, prev, cur, next, last, n, grid.h);
    next.segment(0, n) = boundary.segment(Eigen::Index(j + 1) * n, n);
    prev.swap(cur);
    cur.swap(next);
  }
  return cur.head(Eigen::Index(rows) * n);
}

// ---------------------------------------------------------------------------
// Transmutation kernel

std::size_t KernelField::offset(int N, int i) {
  // Row i holds j = i..N, i.e. N - i + 1 entries.
  return std::size_t(i) * std::size_t(N + 1) - std::size_t(i) * std::size_t(i - 1) / 2;
}

const Mat& KernelField::at(int i, int j) const {
  if (i < 0 || j < i || j > N) throw Error(ErrorKind::grid, "kernel index outside the triangle");
  return values[offset(N, i) + std::size_t(j - i)];
}

KernelField solve_goursat_kernel(const HermitianPotential& potential, const Grid& grid) {
  const int N = grid.N;
  const int n = grid.n;
  const double h = grid.h;
  if (potential.n() != n) throw Error(ErrorKind::dimension, "channel mismatch");
  potential.require_coverage(grid.T());

  // Characteristic lattice xi = s - x = a h, eta = s + x = b h, 0 <= a <= b,
  // a + b <= 2N. Node (a, b) sits at x = (b - a) h / 2, so the potential is
  // needed on the half-step grid x = k h / 2, k = 0..2N.
  std::vector<Mat> q_half(2 * N + 1);
  for (int k = 0; k <= 2 * N; ++k) q_half[k] = linalg::hermitian_part(potential.at(0.5 * k * h));

  // w on xi = 0 (the diagonal x = s): -1/2 int_0^x q, trapezoid on half steps.
  std::vector<Mat> diag(2 * N + 1, Mat::Zero(n, n));
  for (int k = 1; k <= 2 * N; ++k) diag[k] = diag[k - 1] - 0.125 * h * (q_half[k - 1] + q_half[k]);

  // Implicit trapezoid for the new corner: (I + c q) w_new = rhs.
  const double c = h * h / 16.0;
  std::vector<Eigen::PartialPivLU<Mat>> solve(2 * N + 1);
  for (int k = 0; k <= 2 * N; ++k) solve[k].compute(Mat::Identity(n, n) + c * q_half[k]);

  std::vector<Mat> row_prev(2 * N + 1, Mat::Zero(n, n));
  std::vector<Mat> row_cur(2 * N + 1, Mat::Zero(n, n));
  KernelField out;
  out.N = N;
  out.n = n;
  out.h = h;
  out.values.assign(KernelField::offset(N, N) + 1, Mat::Zero(n, n));
  auto store = [&](int a, int b, const Mat& w) {
    if ((a + b) % 2 != 0) return;
    const int j = (a + b) / 2;
    const int i = (b - a) / 2;
    out.values[KernelField::offset(N, i) + std::size_t(j - i)] = w;
  };

  for (int b = 0; b <= 2 * N; ++b) {
    row_prev[b] = diag[b];
    store(0, b, diag[b]);
  }
  for (int a = 0; a < N; ++a) {
    // Row a + 1 spans b = a + 1 .. 2N - a - 1; b = a + 1 is the x = 0 edge.
    row_cur[a + 1].setZero();
    store(a + 1, a + 1, row_cur[a + 1]);
    for (int b = a + 2; b <= 2 * N - a - 1; ++b) {
      const Mat& w00 = row_prev[b - 1];  // (a, b-1)
      const Mat& w01 = row_prev[b];      // (a, b)
      const Mat& w10 = row_cur[b - 1];   // (a+1, b-1)
      const Mat known = w10 + w01 - w00;
      const Mat src = q_half[b - 1 - a] * w00 + q_half[b - a] * w01 + q_half[b - a - 2] * w10;
      row_cur[b] = solve[b - a - 1].solve(known - c * src);
      store(a + 1, b, row_cur[b]);
    }
    std::swap(row_prev, row_cur);
  }

  double omega = 0.0;
  for (const Mat& w : out.values) {
    const double s = n == 1 ? std::abs(w(0, 0)) : linalg::spectral_norm(w);
    omega = std::max(omega, s * s);
  }
  out.omega = omega;
  return out;
}

Vec apply_control_kernel(const KernelField& kernel, const BoundaryControl& control,
                         const Grid& grid, int k) {
  const int n = grid.n;
  if (k < 0 || k > grid.N || k > kernel.N) throw Error(ErrorKind::grid, "time index outside [0, T]");
  if (control.count() < k + 1) throw Error(ErrorKind::dimension, "control too short");
  const int M = grid.x_steps();
  Vec u = Vec::Zero(Eigen::Index(M + 1) * n);
  for (int i = 0; i <= std::min(k, M); ++i) {
    Vec acc = control.at(k - i);
    // Trapezoid over s in [x_i, t_k].
    for (int j = i; j <= k; ++j) {
      const double weight = (j == i || j == k) ? 0.5 * grid.h : grid.h;
      if (j == i && j == k) break;
      acc += weight * (kernel.at(i, j) * control.at(k - j));
    }
    u.segment(i * n, n) = acc;
  }
  return u;
}

Vec apply_control_kernel(const KernelField& kernel, const BoundaryControl& control,
                         const Grid& grid, double t) {
  const double k = t / grid.h;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9) throw Error(ErrorKind::grid, "time is not on the grid");
  return apply_control_kernel(kernel, control, grid, int(r));
}

CrossValidationReport cross_validate_solvers(const PotentialProfile& potential,
                                             const ControlProfile& control, const Grid& grid) {
  auto error_at = [&](const Grid& g) {
    const HermitianPotential q = HermitianPotential::sample(potential, g.n, g.h, g.x_max);
    const BoundaryControl f = BoundaryControl::sample(control, g, true);
    const Vec fd = fd_final_state(q, f.samples, g, g.N + 1);
    const KernelField w = solve_goursat_kernel(q, g);
    const Vec kr = apply_control_kernel(w, f, g, g.N).head(Eigen::Index(g.N + 1) * g.n);
    return l2_norm(fd - kr, g.h);
  };
  CrossValidationReport r;
  r.h = grid.h;
  r.l2_error = error_at(grid);
  r.l2_error_refined = error_at(grid.refined());
  r.ratio = r.l2_error_refined > 0.0 ? r.l2_error / r.l2_error_refined : 0.0;
  return r;
}

}  // namespace waveband
