#pragma once

// Wave model: the operator L~ = -W~ D_tt W~^{-1} on L2([0, T]; C^n) in the
// model variable tau, its potential part Q = L~ + d^2/dtau^2, and the
// recovery of q(tau) from the diagonal blocks of Q.
//
// Model slot k sits at tau_k = k h. Columns with tau >= T - mask_steps h are
// outside the domain (they carry the one-sided stencil ends), so L~ and Q
// are zero there.

#include <json.hpp>

#include "waveband/boundary_triple.hpp"
#include "waveband/core.hpp"

namespace waveband {

struct ModelOperator {
  DiscreteOperator L;     // role Lmodel, masked columns zeroed
  Eigen::VectorXd mask;   // per flat index, 1 inside the domain
  int mask_steps = 4;
  double sigma_ratio = 0.0;  // sigma_min / sigma_max of W~
};

ModelOperator assemble_model_operator(const DiscreteOperator& Wt, const Grid& grid,
                                      int mask_steps = 4);

DiscreteOperator assemble_Q(const ModelOperator& model, const Grid& grid);

// Slot range [first, last] of the interior tau in [margin, T - margin].
std::pair<int, int> interior_slots(const Grid& grid, double margin);

struct DecomposabilityReport {
  double margin = 0.0;
  double offdiag_mass = 0.0;
  double blockwise_hermiticity = 0.0;  // max_k ||B_k - B_k^*||
  double interior_norm = 0.0;          // ||Q restricted to the interior||_2

  nlohmann::json to_json() const;
};

// `reference` (usually L~) sets a roundoff floor for the normalization so
// that a vanishing Q does not report noise as mass.
DecomposabilityReport decomposability_diagnostic(const DiscreteOperator& Q, const Grid& grid,
                                                 double margin,
                                                 const DiscreteOperator* reference = nullptr);

struct Recovery {
  HermitianPotential potential;
  DecomposabilityReport quality;
  double hermitian_deviation = 0.0;  // before symmetrization
};

// Throws recovery_rejected when offdiag_mass > 0.5.
Recovery recover_potential(const DiscreteOperator& Q, const Grid& grid, double margin,
                           const DecomposabilityReport& quality);

struct ReconstructionError {
  double nodal = 0.0;  // relative discrete L2 error at the recovered samples
  double cell = 0.0;   // relative continuum L2 error of the piecewise-constant reconstruction
};

ReconstructionError reconstruction_error(const HermitianPotential& recovered,
                                         const PotentialProfile& truth);

// |(L y, z) - (y, L z)| / (||y|| ||z||) maximized over a fixed family of
// smooth functions supported in [a, b].
double symmetry_residual(const ModelOperator& model, double a, double b);
// ||(I - P) L y|| / ||y|| for the same family, P the cutoff to [a - h, b + h]:
// a three-point stencil moves support by one cell, nothing more.
double invariance_residual(const ModelOperator& model, double a, double b);

struct ConjugationReport {
  double kappa = 1.0;               // condition number of G_K^{1/2}
  double worst_bound_ratio = 0.0;   // max_tau ||G^{-1/2} q G^{1/2}|| / (kappa ||q||)
  double identity_deviation = 0.0;  // max_tau ||G^{-1/2} q G^{1/2} - q|| / ||q||
  bool bound_holds = true;
  bool frame_diagonal = false;

  nlohmann::json to_json() const;
};

ConjugationReport conjugation_check(const HermitianPotential& q, const DefectFrame* frame);

// Artifacts of one pipeline level for the conditions report.
struct PipelineLevel {
  Grid grid;
  std::optional<DiscreteOperator> W;  // absent when C was imported
  DiscreteOperator C;
  DiscreteOperator V;
  DiscreteOperator Wt;
  ModelOperator model;
  DiscreteOperator Q;
  DecomposabilityReport decomposability;
  double margin = 0.0;
};

struct ConditionEntry {
  std::string name;
  bool pass = false;
  bool surrogate = false;
  std::vector<double> values;  // one per level, coarse to fine
  std::string detail;

  nlohmann::json to_json() const;
};

struct ConditionsReport {
  std::vector<ConditionEntry> entries;  // C1..C5, then decomposability
  bool all_pass() const;
  const ConditionEntry& entry(std::string_view name) const;

  nlohmann::json to_json() const;
};

// Needs at least two levels ordered coarse to fine.
ConditionsReport verify_conditions(const std::vector<PipelineLevel>& levels);

}  // namespace waveband
