#include "waveband/pipeline.hpp"

#include <cmath>
#include <map>
#include <random>

#include "waveband/linalg.hpp"

namespace waveband {

Route route_from_string(std::string_view s) {
  if (s == "cholesky") return Route::cholesky;
  if (s == "formula") return Route::formula;
  throw Error(ErrorKind::configuration, "unknown route '" + std::string(s) + "'");
}

std::string_view to_string(Route r) { return r == Route::cholesky ? "cholesky" : "formula"; }

nlohmann::json LevelResult::to_json() const {
  nlohmann::json j;
  j["h"] = level.grid.h;
  j["N"] = level.grid.N;
  j["n"] = level.grid.n;
  j["T"] = level.grid.T();
  j["margin"] = level.margin;
  j["factor_residual"] = factor_residual;
  j["ridge"] = ridge;
  j["model_sigma_ratio"] = level.model.sigma_ratio;
  j["decomposability"] = level.decomposability.to_json();
  if (recovery) j["hermitian_deviation"] = recovery->hermitian_deviation;
  j["recovered"] = bool(recovery);
  if (rejection) j["rejection"] = *rejection;
  if (formula) j["diagonal"] = formula->diagonal.to_json();
  return j;
}

LevelResult run_from_connecting(DiscreteOperator C, const Grid& grid, const PipelineOptions& options,
                                std::optional<DiscreteOperator> W) {
  if (C.row_slots() != grid.N || C.n != grid.n)
    throw Error(ErrorKind::dimension, "connecting operator does not match the grid");
  C.role = Role::C;
  C.validate();
  LevelResult r;
  r.level.grid = grid;
  r.level.margin = options.margin_fraction * grid.T();
  if (options.route == Route::formula) {
    r.formula = factorize_formula(C, grid,
                                  halving_schedule(grid, options.coarsest_parts, options.finest(grid)));
    r.level.V = r.formula->V;
  } else {
    CholeskyFactorization f = factorize_cholesky_nest(C);
    r.ridge = f.ridge;
    r.level.V = std::move(f.V);
  }
  r.factor_residual =
      (r.level.V.matrix.adjoint() * r.level.V.matrix - C.matrix).norm() / std::max(C.matrix.norm(), 1e-300);
  r.level.Wt = model_control_operator(r.level.V, grid);
  r.level.model = assemble_model_operator(r.level.Wt, grid, options.mask_steps);
  r.level.Q = assemble_Q(r.level.model, grid);
  r.level.decomposability = decomposability_diagnostic(r.level.Q, grid, r.level.margin, &r.level.model.L);
  try {
    r.recovery = recover_potential(r.level.Q, grid, r.level.margin, r.level.decomposability);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::recovery_rejected) throw;
    r.rejection = e.what();
  }
  r.level.C = std::move(C);
  r.level.W = std::move(W);
  return r;
}

LevelResult run_pipeline(const HermitianPotential& potential, const Grid& grid,
                         const PipelineOptions& options) {
  std::optional<KernelField> kernel;
  if (options.method == AssemblyMethod::kernel) kernel = solve_goursat_kernel(potential, grid);
  DiscreteOperator W = assemble_control_operator(potential, grid, options.method, kernel ? &*kernel : nullptr);
  DiscreteOperator C = compute_connecting(W);
  return run_from_connecting(std::move(C), grid, options, std::move(W));
}

DiscreteOperator corrupt_connecting(const DiscreteOperator& C, double level, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::Index dim = C.matrix.rows();
  Mat G(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) G(i, j) = cplx(normal(rng), normal(rng));
  const Mat E = linalg::hermitian_part(G);
  DiscreteOperator out = C;
  out.matrix += (level * C.matrix.norm() / E.norm()) * E;
  out.matrix = linalg::hermitian_part(out.matrix);
  return out;
}

DiscreteOperator control_orthogonalizer(const DiscreteOperator& W, const Grid& grid) {
  DiagonalOptions opts;
  opts.source = ProjectionSource::exact_cutoff;
  const DiagonalLimit lim = diagonal_limit(W, grid, {make_partition(grid, grid.N)}, opts);
  return polar_unitary(*lim.D).Phi;
}

std::vector<EikonalLevel> eikonal_check(const DiscreteOperator& W, const DiscreteOperator& phi,
                                        const Grid& grid, const std::vector<int>& parts) {
  const Eigen::Index dim = Eigen::Index(grid.N) * grid.n;
  Mat travel = Mat::Zero(dim, dim);
  for (int j = 0; j < grid.N; ++j)
    for (int a = 0; a < grid.n; ++a) travel(j * grid.n + a, j * grid.n + a) = grid.T() - (j + 1) * grid.h;
  std::map<int, DiscreteOperator> cache;
  std::vector<EikonalLevel> out;
  for (int p : parts) {
    const NestPartition part = make_partition(grid, p);
    std::vector<DiscreteOperator> P;
    for (int k : part.knots) {
      auto it = cache.find(k);
      if (it == cache.end()) it = cache.emplace(k, reachable_projection(W, k)).first;
      P.push_back(it->second);
    }
    const DiscreteOperator E = assemble_eikonal(P, part);
    out.push_back({part.delta(), linalg::spectral_norm(phi.matrix * E.matrix * phi.matrix.adjoint() - travel)});
  }
  return out;
}

Grid grid_for(double T, double h, int n) {
  const double k = T / h;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9 * std::max(1.0, k))
    throw Error(ErrorKind::grid, "T must be an integer multiple of h");
  return Grid::make(int(r), h, n);
}

}  // namespace waveband
