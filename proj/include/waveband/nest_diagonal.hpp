#pragma once

// Diagonal of an operator with respect to a pair of nests:
//
//   D^Xi_A = sum_k (P_{s_k} - P_{s_{k-1}}) A (X_{s_k} - X_{s_{k-1}}),
//
// and its limit as the partition range goes to zero.

#include <optional>

#include <json.hpp>

#include "waveband/core.hpp"

namespace waveband {

NestPartition make_partition(const Grid& grid, int parts);

// Keeps controls with t > T - s (the trailing `steps` slots).
DiscreteOperator control_cutoff(int steps, const Grid& grid);
DiscreteOperator control_cutoff(double s, const Grid& grid);

DiscreteOperator diagonal_sum(const DiscreteOperator& A, const NestPartition& partition,
                              const std::vector<DiscreteOperator>& p_family,
                              const std::vector<DiscreteOperator>& x_family);

// Where the output-side projections P_s come from: exact state cutoffs (valid
// for control operators, whose reachable sets are L2([0, s])) or the SVD
// projection onto the span of A restricted to F_s.
enum class ProjectionSource { exact_cutoff, reachable };

struct DiagonalLevel {
  double delta = 0.0;
  std::optional<double> step_difference;  // ||D_k - D_{k-1}||, absent at the first level
  std::optional<double> reference_distance;
  double sigma_min = 0.0;
  std::optional<double> bound;  // sqrt(omega) * delta when omega is known
};

struct DiagonalReport {
  std::vector<DiagonalLevel> levels;
  bool diverged = false;

  nlohmann::json to_json() const;
};

struct DiagonalLimit {
  std::optional<DiscreteOperator> D;  // finest-level sum; empty on divergence
  DiagonalReport report;
};

struct DiagonalOptions {
  ProjectionSource source = ProjectionSource::reachable;
  std::optional<Mat> reference;     // e.g. the reflection, for distance reporting
  std::optional<double> omega;      // kernel constant for the error bound
  double rank_tol = 1e-8;
};

// Partition sums over a refining schedule; reports per-level norms.
DiagonalLimit diagonal_limit(const DiscreteOperator& A, const Grid& grid,
                             const std::vector<NestPartition>& schedule,
                             const DiagonalOptions& options = {});

// Halving schedule from `coarsest_parts` parts down to `finest_parts`.
std::vector<NestPartition> halving_schedule(const Grid& grid, int coarsest_parts,
                                            int finest_parts);

struct PolarFactors {
  DiscreteOperator Phi;      // unitary factor of D^*
  DiscreteOperator abs_adj;  // |D^*| = (D D^*)^{1/2}
};

// D^* = Phi |D^*|. Throws polar error when D is rank deficient.
PolarFactors polar_unitary(const DiscreteOperator& D);

}  // namespace waveband
