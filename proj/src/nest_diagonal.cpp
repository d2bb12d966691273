#include "waveband/nest_diagonal.hpp"

#include <cmath>
#include <map>

#include "waveband/linalg.hpp"
#include "waveband/operators.hpp"

namespace waveband {

NestPartition make_partition(const Grid& grid, int parts) {
  if (parts < 1 || grid.N % parts != 0)
    throw Error(ErrorKind::grid, "partition count must divide N");
  NestPartition p;
  p.h = grid.h;
  const int step = grid.N / parts;
  for (int k = 0; k <= parts; ++k) p.knots.push_back(k * step);
  return p;
}

DiscreteOperator control_cutoff(int steps, const Grid& grid) {
  if (steps < 0 || steps > grid.N) throw Error(ErrorKind::grid, "s outside [0, T]");
  const Eigen::Index dim = Eigen::Index(grid.N) * grid.n;
  DiscreteOperator X{Mat::Zero(dim, dim), grid.h, grid.n, Role::other};
  for (Eigen::Index k = dim - Eigen::Index(steps) * grid.n; k < dim; ++k) X.matrix(k, k) = 1.0;
  return X;
}

DiscreteOperator control_cutoff(double s, const Grid& grid) {
  const double k = s / grid.h;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9) throw Error(ErrorKind::grid, "s is not on the grid");
  return control_cutoff(int(r), grid);
}

namespace {

// [first, first + count) when d is a 0/1 diagonal matrix with a contiguous
// block of ones; coordinate cutoffs of the nests have this form.
std::optional<std::pair<Eigen::Index, Eigen::Index>> coordinate_range(const Mat& d) {
  if (d.rows() != d.cols()) return std::nullopt;
  Eigen::Index first = -1, count = 0;
  for (Eigen::Index k = 0; k < d.rows(); ++k) {
    const cplx v = d(k, k);
    if (v == cplx(1.0)) {
      if (first < 0) first = k;
      else if (first + count != k) return std::nullopt;
      ++count;
    } else if (v != cplx(0.0)) {
      return std::nullopt;
    }
  }
  const Mat off = d - Mat(d.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() != 0.0) return std::nullopt;
  return std::make_pair(std::max<Eigen::Index>(first, 0), count);
}

}  // namespace

DiscreteOperator diagonal_sum(const DiscreteOperator& A, const NestPartition& partition,
                              const std::vector<DiscreteOperator>& p_family,
                              const std::vector<DiscreteOperator>& x_family) {
  if (p_family.size() != partition.knots.size() || x_family.size() != partition.knots.size())
    throw Error(ErrorKind::dimension, "families must be indexed by the partition knots");
  DiscreteOperator D{Mat::Zero(A.matrix.rows(), A.matrix.cols()), A.h, A.n, Role::D};
  for (std::size_t k = 1; k < partition.knots.size(); ++k) {
    const Mat dP = p_family[k].matrix - p_family[k - 1].matrix;
    const Mat dX = x_family[k].matrix - x_family[k - 1].matrix;
    if (dP.rows() != A.matrix.rows() || dX.cols() != A.matrix.cols())
      throw Error(ErrorKind::dimension, "family and operator sizes differ");
    if (const auto cols = coordinate_range(dX)) {
      if (cols->second == 0) continue;
      const auto block = A.matrix.middleCols(cols->first, cols->second);
      if (const auto rows = coordinate_range(dP)) {
        D.matrix.block(rows->first, cols->first, rows->second, cols->second) +=
            block.middleRows(rows->first, rows->second);
      } else {
        D.matrix.middleCols(cols->first, cols->second).noalias() += dP * block;
      }
    } else {
      D.matrix.noalias() += dP * A.matrix * dX;
    }
  }
  return D;
}

nlohmann::json DiagonalReport::to_json() const {
  nlohmann::json j;
  j["diverged"] = diverged;
  j["levels"] = nlohmann::json::array();
  for (const auto& l : levels) {
    nlohmann::json e;
    e["delta"] = l.delta;
    e["step_difference"] = l.step_difference ? nlohmann::json(*l.step_difference) : nlohmann::json();
    e["reference_distance"] =
        l.reference_distance ? nlohmann::json(*l.reference_distance) : nlohmann::json();
    e["sigma_min"] = l.sigma_min;
    e["bound"] = l.bound ? nlohmann::json(*l.bound) : nlohmann::json();
    j["levels"].push_back(e);
  }
  return j;
}

std::vector<NestPartition> halving_schedule(const Grid& grid, int coarsest_parts,
                                            int finest_parts) {
  std::vector<NestPartition> s;
  for (int parts = coarsest_parts; parts <= finest_parts; parts *= 2)
    s.push_back(make_partition(grid, parts));
  if (s.empty()) throw Error(ErrorKind::grid, "empty partition schedule");
  return s;
}

// Step differences may stall once cells hold a single slot; only clear growth
// counts as divergence.
constexpr double kGrowth = 1.25;

DiagonalLimit diagonal_limit(const DiscreteOperator& A, const Grid& grid,
                             const std::vector<NestPartition>& schedule,
                             const DiagonalOptions& options) {
  if (schedule.empty()) throw Error(ErrorKind::grid, "empty partition schedule");
  const int slots = A.row_slots();
  std::map<int, DiscreteOperator> p_cache;
  auto p_at = [&](int steps) -> const DiscreteOperator& {
    auto it = p_cache.find(steps);
    if (it == p_cache.end()) {
      DiscreteOperator P = options.source == ProjectionSource::exact_cutoff
                               ? state_cutoff(steps, slots, A.n, A.h)
                               : reachable_projection(A, steps, options.rank_tol);
      it = p_cache.emplace(steps, std::move(P)).first;
    }
    return it->second;
  };

  DiagonalLimit out;
  std::optional<Mat> previous;
  const double scale = std::max(1.0, linalg::spectral_norm(A.matrix));
  for (const NestPartition& part : schedule) {
    std::vector<DiscreteOperator> P, X;
    for (int k : part.knots) {
      P.push_back(p_at(k));
      X.push_back(control_cutoff(k, grid));
    }
    DiscreteOperator D = diagonal_sum(A, part, P, X);
    DiagonalLevel level;
    level.delta = part.delta();
    if (previous) level.step_difference = linalg::spectral_norm(D.matrix - *previous);
    if (options.reference) level.reference_distance = linalg::spectral_norm(D.matrix - *options.reference);
    level.sigma_min = linalg::min_singular_value(D.matrix);
    if (options.omega) level.bound = std::sqrt(*options.omega) * level.delta;
    const auto& levels = out.report.levels;
    if (level.step_difference && levels.size() >= 2 && levels.back().step_difference &&
        *level.step_difference > kGrowth * *levels.back().step_difference + 1e-10 * scale)
      out.report.diverged = true;
    previous = D.matrix;
    out.report.levels.push_back(level);
    out.D = std::move(D);
  }
  if (out.report.diverged) out.D.reset();
  return out;
}

PolarFactors polar_unitary(const DiscreteOperator& D) {
  const Mat adj = D.matrix.adjoint();
  const linalg::Svd s = linalg::svd(adj);
  if (s.sigma.size() == 0 || !(s.sigma(s.sigma.size() - 1) > 1e-10 * s.sigma(0)) ||
      adj.rows() != adj.cols())
    throw Error(ErrorKind::polar, "diagonal is rank deficient");
  PolarFactors f;
  f.Phi = DiscreteOperator{s.U * s.V.adjoint(), D.h, D.n, Role::Phi};
  f.abs_adj = DiscreteOperator{s.V * s.sigma.cast<cplx>().asDiagonal() * s.V.adjoint(), D.h, D.n,
                               Role::other};
  f.abs_adj.matrix = linalg::hermitian_part(f.abs_adj.matrix);
  return f;
}

}  // namespace waveband
