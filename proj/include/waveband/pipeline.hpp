#pragma once

// End-to-end orchestration: simulate the inverse data C for a potential,
// factor it, build the wave model and recover q.

#include <optional>
#include <string>

#include <json.hpp>

#include "waveband/factorization.hpp"
#include "waveband/operators.hpp"
#include "waveband/wave_model.hpp"

namespace waveband {

enum class Route { cholesky, formula };
Route route_from_string(std::string_view s);
std::string_view to_string(Route r);

struct PipelineOptions {
  Route route = Route::cholesky;
  AssemblyMethod method = AssemblyMethod::fd;
  double margin_fraction = 0.05;  // of T, at both ends
  int mask_steps = 4;
  // Formula route partition schedule, in parts of [0, T]. finest_parts = 0
  // selects delta = h; coarser finest levels leave a gauge that is only
  // block-diagonal over the partition cells, which Q inherits.
  int coarsest_parts = 8;
  int finest_parts = 0;

  int finest(const Grid& grid) const { return finest_parts > 0 ? finest_parts : grid.N; }
};

struct LevelResult {
  PipelineLevel level;
  std::optional<Recovery> recovery;
  std::optional<std::string> rejection;  // set when recovery was rejected
  std::optional<FormulaFactorization> formula;
  double factor_residual = 0.0;  // ||V^* V - C||_F / ||C||_F
  double ridge = 0.0;

  nlohmann::json to_json() const;
};

// Runs the model-building half of the pipeline on a given C. `W` is kept
// for reporting only.
LevelResult run_from_connecting(DiscreteOperator C, const Grid& grid, const PipelineOptions& options,
                                std::optional<DiscreteOperator> W = std::nullopt);

// Simulates W and C for the potential, then runs the model half.
LevelResult run_pipeline(const HermitianPotential& potential, const Grid& grid,
                         const PipelineOptions& options);

// C + level * ||C||_F * E / ||E||_F with E a seeded Gaussian Hermitian matrix.
DiscreteOperator corrupt_connecting(const DiscreteOperator& C, double level, std::uint64_t seed);

// Polar factor of the diagonal of W on the finest partition (delta = h),
// with exact state cutoffs.
DiscreteOperator control_orthogonalizer(const DiscreteOperator& W, const Grid& grid);

struct EikonalLevel {
  double delta = 0.0;
  double deviation = 0.0;  // ||Phi E Phi^* - (T I - t)||_2
};

// E from the reachable projections of W on uniform partitions with the given
// part counts, conjugated by `phi` (states to controls).
std::vector<EikonalLevel> eikonal_check(const DiscreteOperator& W, const DiscreteOperator& phi,
                                        const Grid& grid, const std::vector<int>& parts);

// Grid for horizon T and step h (T / h must be an integer >= 8).
Grid grid_for(double T, double h, int n);

}  // namespace waveband
