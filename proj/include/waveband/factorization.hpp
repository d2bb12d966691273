#pragma once

// Triangular factorization C = V^* V with V F_s = F_s, computed two ways:
// from the polar factor of the diagonal of sqrt(C), and by Cholesky in the
// coordinate order where the nest subspaces are leading.

#include <json.hpp>

#include "waveband/core.hpp"
#include "waveband/nest_diagonal.hpp"

namespace waveband {

// Positive square root; eigenvalues in [-1e-6 ||C||, 0) are clipped to zero.
DiscreteOperator operator_sqrt(const DiscreteOperator& C);

struct FormulaFactorization {
  DiscreteOperator V;
  DiscreteOperator Phi;  // polar factor of the adjoint diagonal of sqrt(C)
  DiagonalReport diagonal;
};

// V = Phi_{D^*_{sqrt C}} sqrt(C) on the finest partition of `schedule`.
// Throws divergence error when the diagonal sums do not settle.
FormulaFactorization factorize_formula(const DiscreteOperator& C, const Grid& grid,
                                       const std::vector<NestPartition>& schedule);

struct CholeskyFactorization {
  DiscreteOperator V;
  double ridge = 0.0;  // added to C before factoring, 0 when not needed
};

CholeskyFactorization factorize_cholesky_nest(const DiscreteOperator& C);

// Max over knots s of ||(I - X_s) V X_s||; relative Frobenius variant divides
// by ||V||_F.
double nest_leakage(const DiscreteOperator& V, const Grid& grid, bool relative_frobenius = false);

struct FactorComparison {
  double gram_difference = 0.0;  // ||V1^* V1 - V2^* V2||_F / ||V1^* V1||_F
  DiscreteOperator U;            // V2 V1^{-1}
  double unitarity_defect = 0.0; // ||U^* U - I||_2
  double offblock_norm = 0.0;    // ||U - blockdiag_n(U)||_2
  double offblock_mass = 0.0;    // ||U - blockdiag_n(U)||_F / ||U||_F
  double partition_offblock = 0.0;  // ||U - blockdiag over partition cells||_2

  nlohmann::json to_json() const;
};

// `partition_slots` > 0 also measures U against the cells of a uniform
// partition with that many slots per cell.
FactorComparison compare_factors(const DiscreteOperator& V1, const DiscreteOperator& V2,
                                 int partition_slots = 0);

// Control-time reversal (Y f)(t) = f(T - t) on the control slots.
Mat control_reversal(const Grid& grid);

// Model control operator W~ = Y~ V Y: controls to the model space
// L2([0, T]; C^n) in the variable tau.
DiscreteOperator model_control_operator(const DiscreteOperator& V, const Grid& grid);

// Model-space orthogonalizer Phi^T = Y~ Phi_{D^*_W} (states x to model tau).
DiscreteOperator model_orthogonalizer(const DiscreteOperator& phi, const Grid& grid);

// ||Phi^{T'} restricted to states on [0, T] - Phi^T|| for nested horizons on a
// shared step.
double orthogonalizer_consistency(const DiscreteOperator& phi_short, const Grid& short_grid,
                                  const DiscreteOperator& phi_long, const Grid& long_grid);

}  // namespace waveband
