#include "waveband/factorization.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "waveband/linalg.hpp"

namespace waveband {

DiscreteOperator operator_sqrt(const DiscreteOperator& C) {
  if (C.matrix.rows() != C.matrix.cols()) throw Error(ErrorKind::dimension, "C must be square");
  const linalg::HermitianEigen e = linalg::eigh(linalg::hermitian_part(C.matrix));
  const double top = e.values.size() ? e.values.cwiseAbs().maxCoeff() : 0.0;
  if (e.values.size() && e.values(0) < -1e-6 * top)
    throw Error(ErrorKind::not_psd, "operator has a negative eigenvalue " + std::to_string(e.values(0)));
  const Eigen::VectorXd root = e.values.cwiseMax(0.0).cwiseSqrt();
  DiscreteOperator S{e.vectors * root.cast<cplx>().asDiagonal() * e.vectors.adjoint(), C.h, C.n,
                     Role::other};
  S.matrix = linalg::hermitian_part(S.matrix);
  return S;
}

FormulaFactorization factorize_formula(const DiscreteOperator& C, const Grid& grid,
                                       const std::vector<NestPartition>& schedule) {
  const DiscreteOperator S = operator_sqrt(C);
  DiagonalOptions opts;
  opts.source = ProjectionSource::reachable;
  DiagonalLimit lim = diagonal_limit(S, grid, schedule, opts);
  if (!lim.D) throw Error(ErrorKind::divergence, "diagonal sums of sqrt(C) do not settle");
  const PolarFactors polar = polar_unitary(*lim.D);
  FormulaFactorization f;
  f.Phi = polar.Phi;
  f.V = DiscreteOperator{polar.Phi.matrix * S.matrix, C.h, C.n, Role::V};
  f.diagonal = std::move(lim.report);
  return f;
}

CholeskyFactorization factorize_cholesky_nest(const DiscreteOperator& C) {
  if (C.matrix.rows() != C.matrix.cols()) throw Error(ErrorKind::dimension, "C must be square");
  const int slots = C.row_slots();
  const Mat R = linalg::slot_reversal(slots, C.n);
  // In reversed slot order the nest F_s is the leading block, so an upper
  // triangular factor there preserves it.
  Mat reversed = linalg::hermitian_part(R * C.matrix * R);
  CholeskyFactorization out;
  Eigen::LLT<Mat> llt(reversed);
  if (llt.info() != Eigen::Success) {
    out.ridge = 1e-12 * linalg::spectral_norm(reversed);
    reversed.diagonal().array() += out.ridge;
    llt.compute(reversed);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorKind::factorization, "Cholesky factorization failed after regularization");
  }
  const Mat L = llt.matrixL();
  out.V = DiscreteOperator{R * L.adjoint() * R, C.h, C.n, Role::V};
  return out;
}

double nest_leakage(const DiscreteOperator& V, const Grid& grid, bool relative_frobenius) {
  const int N = V.col_slots();
  const Eigen::Index n = V.n;
  double worst = 0.0;
  // The spectral variant is sampled on at most 64 knots; the Frobenius one on all.
  const int stride = relative_frobenius ? 1 : std::max(1, N / 64);
  for (int s = 1; s < N; s += stride) {
    const auto block = V.matrix.topRightCorner((N - s) * n, s * n);
    worst = std::max(worst, relative_frobenius ? block.norm() : linalg::spectral_norm(block));
  }
  (void)grid;
  if (relative_frobenius) {
    const double total = V.matrix.norm();
    return total > 0.0 ? worst / total : worst;
  }
  return worst;
}

nlohmann::json FactorComparison::to_json() const {
  return {{"gram_difference", gram_difference},
          {"unitarity_defect", unitarity_defect},
          {"offblock_norm", offblock_norm},
          {"offblock_mass", offblock_mass},
          {"partition_offblock", partition_offblock}};
}

FactorComparison compare_factors(const DiscreteOperator& V1, const DiscreteOperator& V2,
                                 int partition_slots) {
  if (V1.matrix.rows() != V2.matrix.rows() || V1.matrix.cols() != V2.matrix.cols())
    throw Error(ErrorKind::dimension, "factor sizes differ");
  FactorComparison c;
  const Mat G1 = V1.matrix.adjoint() * V1.matrix;
  const Mat G2 = V2.matrix.adjoint() * V2.matrix;
  c.gram_difference = (G1 - G2).norm() / std::max(G1.norm(), 1e-300);
  // U V1 = V2  <=>  V1^* U^* = V2^*.
  const Mat Ut = V1.matrix.adjoint().partialPivLu().solve(V2.matrix.adjoint());
  c.U = DiscreteOperator{Ut.adjoint(), V1.h, V1.n, Role::other};
  const Eigen::Index dim = c.U.matrix.cols();
  c.unitarity_defect =
      linalg::spectral_norm(c.U.matrix.adjoint() * c.U.matrix - Mat::Identity(dim, dim));
  const Mat off = c.U.matrix - linalg::block_diagonal_part(c.U.matrix, V1.n);
  c.offblock_norm = linalg::spectral_norm(off);
  c.offblock_mass = off.norm() / std::max(c.U.matrix.norm(), 1e-300);
  if (partition_slots > 0)
    c.partition_offblock = linalg::spectral_norm(
        c.U.matrix - linalg::block_diagonal_part(c.U.matrix, partition_slots * V1.n));
  return c;
}

Mat control_reversal(const Grid& grid) { return linalg::slot_reversal(grid.N, grid.n); }

DiscreteOperator model_control_operator(const DiscreteOperator& V, const Grid& grid) {
  if (V.col_slots() != grid.N || V.row_slots() != grid.N)
    throw Error(ErrorKind::dimension, "factor does not match the grid");
  const Mat Y = control_reversal(grid);
  return DiscreteOperator{Y * V.matrix * Y, V.h, V.n, Role::other};
}

DiscreteOperator model_orthogonalizer(const DiscreteOperator& phi, const Grid& grid) {
  if (phi.row_slots() != grid.N) throw Error(ErrorKind::dimension, "orthogonalizer does not match the grid");
  return DiscreteOperator{control_reversal(grid) * phi.matrix, phi.h, phi.n, Role::Phi};
}

double orthogonalizer_consistency(const DiscreteOperator& phi_short, const Grid& short_grid,
                                  const DiscreteOperator& phi_long, const Grid& long_grid) {
  if (std::abs(short_grid.h - long_grid.h) > 1e-15 || short_grid.N > long_grid.N ||
      short_grid.n != long_grid.n)
    throw Error(ErrorKind::grid, "horizons must share the step and be nested");
  const Mat a = model_orthogonalizer(phi_short, short_grid).matrix;
  const Mat b = model_orthogonalizer(phi_long, long_grid).matrix;
  const Eigen::Index k = Eigen::Index(short_grid.N) * short_grid.n;
  return linalg::spectral_norm(b.topLeftCorner(k, k) - a);
}

}  // namespace waveband
