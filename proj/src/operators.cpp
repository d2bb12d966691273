#include "waveband/operators.hpp"

#include <cmath>

#include "waveband/linalg.hpp"
#include "waveband/parallel.hpp"

namespace waveband {

AssemblyMethod assembly_method_from_string(std::string_view s) {
  if (s == "fd") return AssemblyMethod::fd;
  if (s == "kernel") return AssemblyMethod::kernel;
  throw Error(ErrorKind::configuration, "unknown assembly method '" + std::string(s) + "'");
}

DiscreteOperator assemble_control_operator(const HermitianPotential& potential, const Grid& grid,
                                           AssemblyMethod method, const KernelField* kernel) {
  const int N = grid.N;
  const int n = grid.n;
  if (potential.n() != n) throw Error(ErrorKind::dimension, "channel mismatch");
  DiscreteOperator W{Mat::Zero(Eigen::Index(N) * n, Eigen::Index(N) * n), grid.h, n, Role::W};

  if (method == AssemblyMethod::kernel) {
    if (!kernel || kernel->N != N || kernel->n != n || std::abs(kernel->h - grid.h) > 1e-15)
      throw Error(ErrorKind::configuration, "kernel assembly needs a kernel on the same grid");
    // u(x_i, T) = f(T - x_i) + int_{x_i}^T w(x_i, s) f(T - s) ds with the hat
    // basis: the integral of a hat against w is h w at interior nodes and
    // h/2 w where the hat is cut by the lower limit s = x_i.
    for (int i = 0; i < N; ++i) {
      const int front = N - i;  // control slot index j with t_j = T - x_i
      for (int a = 0; a < n; ++a) W.matrix(i * n + a, (front - 1) * n + a) += 1.0;
      for (int j = 1; j <= front; ++j) {
        const int s = N - j;
        const double weight = s == i ? 0.5 * grid.h : grid.h;
        W.matrix.block(i * n, (j - 1) * n, n, n) += weight * kernel->at(i, s);
      }
    }
    return W;
  }

  potential.require_coverage(grid.T() + 2.0 * grid.h);
  parallel_for(N * n, [&](int col) {
    const int j = col / n + 1;
    const int a = col % n;
    Vec boundary = Vec::Zero(Eigen::Index(N + 1) * n);
    boundary(Eigen::Index(j) * n + a) = 1.0;
    W.matrix.col(col) = fd_final_state(potential, boundary, grid, N);
  });
  return W;
}

DiscreteOperator compute_connecting(const DiscreteOperator& W) {
  DiscreteOperator C{W.matrix.adjoint() * W.matrix, W.h, W.n, Role::C};
  C.matrix = linalg::hermitian_part(C.matrix);
  return C;
}

DiscreteOperator reachable_projection(const DiscreteOperator& A, int steps, double tol) {
  const int slots = A.col_slots();
  if (steps < 0 || steps > slots) throw Error(ErrorKind::grid, "s outside [0, T]");
  const Eigen::Index dim = A.matrix.rows();
  DiscreteOperator P{Mat::Zero(dim, dim), A.h, A.n, Role::other};
  if (steps == 0) return P;
  const Eigen::Index cols = Eigen::Index(steps) * A.n;
  const linalg::Svd s = linalg::svd(A.matrix.rightCols(cols));
  if (s.sigma.size() == 0 || s.sigma(0) == 0.0) return P;
  Eigen::Index rank = 0;
  while (rank < s.sigma.size() && s.sigma(rank) > tol * s.sigma(0)) ++rank;
  const Mat U = s.U.leftCols(rank);
  P.matrix = U * U.adjoint();
  return P;
}

DiscreteOperator reachable_projection(const DiscreteOperator& A, double s, double tol) {
  const double k = s / A.h;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9) throw Error(ErrorKind::grid, "s is not on the grid");
  return reachable_projection(A, int(r), tol);
}

DiscreteOperator state_cutoff(int steps, int slots, int n, double h) {
  if (steps < 0 || steps > slots) throw Error(ErrorKind::grid, "s outside [0, T]");
  const Eigen::Index dim = Eigen::Index(slots) * n;
  DiscreteOperator P{Mat::Zero(dim, dim), h, n, Role::other};
  for (Eigen::Index k = 0; k < Eigen::Index(steps) * n; ++k) P.matrix(k, k) = 1.0;
  return P;
}

DiscreteOperator assemble_eikonal(const std::vector<DiscreteOperator>& projections,
                                  const NestPartition& partition) {
  if (projections.size() != partition.knots.size() || projections.empty())
    throw Error(ErrorKind::dimension, "one projection per partition knot is required");
  const Eigen::Index dim = projections.front().matrix.rows();
  DiscreteOperator E{Mat::Zero(dim, dim), partition.h, projections.front().n, Role::E};
  for (std::size_t k = 1; k < projections.size(); ++k) {
    const Mat& lo = projections[k - 1].matrix;
    const Mat& hi = projections[k].matrix;
    if ((hi * lo - lo).cwiseAbs().maxCoeff() > 1e-8)
      throw Error(ErrorKind::nest_violation, "projection family is not monotone");
    E.matrix += (partition.knots[k] * partition.h) * (hi - lo);
  }
  E.matrix = linalg::hermitian_part(E.matrix);
  return E;
}

Mat reflection(int N, int n) {
  Mat R = Mat::Zero(Eigen::Index(N) * n, Eigen::Index(N) * n);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < n; ++a) R(i * n + a, (N - i - 1) * n + a) = 1.0;
  return R;
}

}  // namespace waveband
