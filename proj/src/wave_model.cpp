#include "waveband/wave_model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "waveband/linalg.hpp"
#include "waveband/nest_diagonal.hpp"

namespace waveband {

ModelOperator assemble_model_operator(const DiscreteOperator& Wt, const Grid& grid, int mask_steps) {
  if (Wt.row_slots() != grid.N || Wt.col_slots() != grid.N || Wt.n != grid.n)
    throw Error(ErrorKind::dimension, "model control operator does not match the grid");
  if (mask_steps < 1 || 2 * mask_steps >= grid.N)
    throw Error(ErrorKind::configuration, "mask must leave an interior");
  ModelOperator m;
  m.mask_steps = mask_steps;
  const Eigen::VectorXd sigma = linalg::svd(Wt.matrix).sigma;
  m.sigma_ratio = sigma.size() && sigma(0) > 0.0 ? sigma(sigma.size() - 1) / sigma(0) : 0.0;
  if (!(m.sigma_ratio > 1e-10)) throw Error(ErrorKind::model, "model control operator is rank deficient");

  const Mat D = second_difference_matrix(grid.N, grid.n, grid.h);
  // L W~ = -W~ D  <=>  W~^* L^* = -(W~ D)^*.
  const Mat rhs = -(Wt.matrix * D).adjoint();
  const Mat L = Wt.matrix.adjoint().partialPivLu().solve(rhs).adjoint();

  const Eigen::Index dim = L.cols();
  m.mask = Eigen::VectorXd::Ones(dim);
  for (Eigen::Index k = Eigen::Index(grid.N - mask_steps) * grid.n; k < dim; ++k) m.mask(k) = 0.0;
  m.L = DiscreteOperator{L * m.mask.cast<cplx>().asDiagonal(), grid.h, grid.n, Role::Lmodel};
  return m;
}

DiscreteOperator assemble_Q(const ModelOperator& model, const Grid& grid) {
  const Mat D = second_difference_matrix(grid.N, grid.n, grid.h);
  return DiscreteOperator{model.L.matrix + D * model.mask.cast<cplx>().asDiagonal(), grid.h, grid.n,
                          Role::Q};
}

std::pair<int, int> interior_slots(const Grid& grid, double margin) {
  const int first = int(std::ceil(margin / grid.h - 1e-9));
  const int last = int(std::floor((grid.T() - margin) / grid.h + 1e-9));
  const int hi = std::min(last, grid.N - 1);
  if (first < 0 || first > hi) throw Error(ErrorKind::configuration, "margin leaves no interior");
  return {first, hi};
}

nlohmann::json DecomposabilityReport::to_json() const {
  return {{"margin", margin},
          {"offdiag_mass", offdiag_mass},
          {"blockwise_hermiticity", blockwise_hermiticity},
          {"interior_norm", interior_norm}};
}

DecomposabilityReport decomposability_diagnostic(const DiscreteOperator& Q, const Grid& grid,
                                                 double margin, const DiscreteOperator* reference) {
  if (margin < 4.0 * grid.h - 1e-12) throw Error(ErrorKind::configuration, "margin must be at least 4h");
  const auto [first, last] = interior_slots(grid, margin);
  const Eigen::Index n = grid.n;
  const Eigen::Index off = first * n, len = Eigen::Index(last - first + 1) * n;
  const Mat Qi = Q.matrix.block(off, off, len, len);
  const Mat blocks = linalg::block_diagonal_part(Qi, grid.n);

  DecomposabilityReport r;
  r.margin = margin;
  double scale = Qi.norm();
  if (reference) scale = std::max(scale, 1e-8 * reference->matrix.block(off, off, len, len).norm());
  r.offdiag_mass = scale > 0.0 ? (Qi - blocks).norm() / scale : 0.0;
  for (Eigen::Index k = 0; k < len; k += n) {
    const Mat B = Qi.block(k, k, n, n);
    r.blockwise_hermiticity = std::max(r.blockwise_hermiticity, (B - B.adjoint()).norm());
  }
  r.interior_norm = linalg::spectral_norm(Qi);
  return r;
}

Recovery recover_potential(const DiscreteOperator& Q, const Grid& grid, double margin,
                           const DecomposabilityReport& quality) {
  if (!(quality.offdiag_mass <= 0.5))
    throw Error(ErrorKind::recovery_rejected,
                "Q is not decomposable (offdiag_mass " + std::to_string(quality.offdiag_mass) + ")");
  const auto [first, last] = interior_slots(grid, margin);
  const Eigen::Index n = grid.n;
  std::vector<Mat> samples;
  double dev = 0.0;
  for (int k = first; k <= last; ++k) {
    const Mat B = Q.matrix.block(k * n, k * n, n, n);
    dev = std::max(dev, (B - B.adjoint()).norm());
    samples.push_back(linalg::hermitian_part(B));
  }
  HermitianPotential p(std::move(samples), grid.h, first * grid.h, HermitianPotential::Source::builtin,
                       "recovered");
  return Recovery{std::move(p), quality, dev};
}

ReconstructionError reconstruction_error(const HermitianPotential& recovered,
                                         const PotentialProfile& truth) {
  // Gauss-Legendre, 5 points per cell.
  static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                               0.9061798459386640};
  static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                               0.4786286704993665, 0.2369268850561891};
  const double h = recovered.h();
  double nodal_err = 0.0, nodal_ref = 0.0, cell_err = 0.0, cell_ref = 0.0;
  for (std::size_t k = 0; k < recovered.size(); ++k) {
    const double x = recovered.origin() + double(k) * h;
    const Mat& qk = recovered[k];
    const Mat exact = truth(x);
    nodal_err += (qk - exact).squaredNorm();
    nodal_ref += exact.squaredNorm();
    for (int g = 0; g < 5; ++g) {
      const Mat t = truth(x + 0.5 * h * gx[g]);
      cell_err += gw[g] * (qk - t).squaredNorm();
      cell_ref += gw[g] * t.squaredNorm();
    }
  }
  ReconstructionError e;
  e.nodal = nodal_ref > 0.0 ? std::sqrt(nodal_err / nodal_ref) : std::sqrt(nodal_err);
  e.cell = cell_ref > 0.0 ? std::sqrt(cell_err / cell_ref) : std::sqrt(cell_err * 0.5 * h);
  return e;
}

namespace {

// Smooth probes (s (1 - s))^4 s^m, s = (tau - a) / (b - a), along a few directions.
std::vector<Vec> probes(const Grid& grid, double a, double b) {
  std::vector<Vec> out;
  const int n = grid.n;
  for (int m = 0; m < 2; ++m) {
    for (int dir = 0; dir <= n; ++dir) {
      Vec e = Vec::Zero(n);
      if (dir < n) e(dir) = 1.0;
      else
        for (int c = 0; c < n; ++c) e(c) = std::polar(1.0 / (c + 1), 0.5 * M_PI * c);
      Vec y = Vec::Zero(Eigen::Index(grid.N) * n);
      for (int k = 0; k < grid.N; ++k) {
        const double t = k * grid.h;
        if (t <= a || t >= b) continue;
        const double s = (t - a) / (b - a);
        y.segment(Eigen::Index(k) * n, n) = std::pow(s * (1.0 - s), 4) * std::pow(s, m) * e;
      }
      out.push_back(y / l2_norm(y, grid.h));
      if (n == 1) break;
    }
  }
  return out;
}

Grid grid_of(const ModelOperator& model) {
  return Grid::make(model.L.col_slots(), model.L.h, model.L.n);
}

}  // namespace

double symmetry_residual(const ModelOperator& model, double a, double b) {
  const Grid grid = grid_of(model);
  const auto ys = probes(grid, a, b);
  double worst = 0.0;
  for (const Vec& y : ys) {
    const Vec Ly = model.L.matrix * y;
    for (const Vec& z : ys) {
      const Vec Lz = model.L.matrix * z;
      worst = std::max(worst, std::abs(inner_product(Ly, z, grid.h) - inner_product(y, Lz, grid.h)));
    }
  }
  return worst;
}

double invariance_residual(const ModelOperator& model, double a, double b) {
  const Grid grid = grid_of(model);
  double worst = 0.0;
  for (const Vec& y : probes(grid, a, b)) {
    Vec Ly = model.L.matrix * y;
    for (int k = 0; k < grid.N; ++k) {
      const double t = k * grid.h;
      if (t >= a - grid.h - 1e-12 && t <= b + grid.h + 1e-12) Ly.segment(Eigen::Index(k) * grid.n, grid.n).setZero();
    }
    worst = std::max(worst, l2_norm(Ly, grid.h));
  }
  return worst;
}

nlohmann::json ConjugationReport::to_json() const {
  return {{"kappa", kappa},
          {"worst_bound_ratio", worst_bound_ratio},
          {"identity_deviation", identity_deviation},
          {"bound_holds", bound_holds},
          {"frame_diagonal", frame_diagonal}};
}

ConjugationReport conjugation_check(const HermitianPotential& q, const DefectFrame* frame) {
  if (!frame) throw Error(ErrorKind::frame_missing, "conjugation check needs a defect frame");
  if (frame->n != q.n()) throw Error(ErrorKind::dimension, "frame and potential channels differ");
  const Mat Ghalf = linalg::hermitian_function(frame->G, [](double v) { return std::sqrt(std::max(v, 0.0)); });
  const Mat Gmhalf = linalg::hermitian_function(frame->G, [](double v) { return 1.0 / std::sqrt(v); });
  ConjugationReport r;
  const Eigen::VectorXd ev = linalg::eigh(frame->G).values;
  r.kappa = std::sqrt(ev(ev.size() - 1) / ev(0));
  const Mat off = frame->G - Mat(frame->G.diagonal().asDiagonal());
  r.frame_diagonal = off.cwiseAbs().maxCoeff() <= 1e-12 * frame->G.cwiseAbs().maxCoeff();
  for (const Mat& qk : q.samples()) {
    const Mat c = Gmhalf * qk * Ghalf;
    const double qn = linalg::spectral_norm(qk);
    if (qn == 0.0) continue;
    const double ratio = linalg::spectral_norm(c) / (r.kappa * qn);
    r.worst_bound_ratio = std::max(r.worst_bound_ratio, ratio);
    r.identity_deviation = std::max(r.identity_deviation, linalg::spectral_norm(c - qk) / qn);
  }
  r.bound_holds = r.worst_bound_ratio <= 1.0 + 1e-12;
  return r;
}

nlohmann::json ConditionEntry::to_json() const {
  return {{"name", name}, {"pass", pass}, {"surrogate", surrogate}, {"values", values}, {"detail", detail}};
}

bool ConditionsReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const ConditionEntry& e) { return e.pass; });
}

const ConditionEntry& ConditionsReport::entry(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw Error(ErrorKind::configuration, "no condition entry '" + std::string(name) + "'");
}

nlohmann::json ConditionsReport::to_json() const {
  nlohmann::json j;
  j["all_pass"] = all_pass();
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) j["entries"].push_back(e.to_json());
  return j;
}

namespace {

// Residual tolerances for the conditions report. Residuals at or below the
// floor count as exact.
constexpr double kResidualPerH = 10.0;
constexpr double kFloor = 1e-8;
constexpr double kStableSpread = 0.10;

bool small_and_refining(const std::vector<double>& v, const std::vector<double>& h) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(v[i] <= std::max(kResidualPerH * h[i], kFloor))) return false;
  return v.back() <= kFloor || v.back() <= v.front();
}

bool stable(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi <= kFloor) return true;
  return (*hi - *lo) <= kStableSpread * *hi;
}

// Model-space test intervals as fractions of T.
constexpr std::pair<double, double> kIntervals[] = {{0.1, 0.5}, {0.3, 0.9}, {0.2, 0.7}};

}  // namespace

ConditionsReport verify_conditions(const std::vector<PipelineLevel>& levels) {
  if (levels.size() < 2) throw Error(ErrorKind::configuration, "conditions need at least two levels");
  std::vector<double> hs;
  for (const auto& l : levels) hs.push_back(l.grid.h);

  ConditionsReport report;
  {
    ConditionEntry c1{"C1", false, false, {}, ""};
    std::vector<double> inv, sym;
    for (const auto& l : levels) {
      double wi = 0.0, ws = 0.0;
      for (const auto& [fa, fb] : kIntervals) {
        const double T = l.grid.T();
        wi = std::max(wi, invariance_residual(l.model, fa * T, fb * T));
        ws = std::max(ws, symmetry_residual(l.model, fa * T, fb * T));
      }
      inv.push_back(wi);
      sym.push_back(ws);
      c1.values.push_back(std::max(wi, ws));
    }
    c1.pass = small_and_refining(inv, hs) && small_and_refining(sym, hs);
    c1.detail = "invariance and symmetry residuals of L~ on [a,b] probes; <= 10 h and non-increasing";
    report.entries.push_back(c1);
  }
  {
    ConditionEntry c2{"C2", true, false, {}, ""};
    std::vector<double> sw, sd;
    for (const auto& l : levels) {
      const DiscreteOperator& A = l.W ? *l.W : l.V;
      DiagonalOptions opts;
      opts.source = l.W ? ProjectionSource::exact_cutoff : ProjectionSource::reachable;
      const int parts = std::min(l.grid.N, 32);
      const auto lim = diagonal_limit(A, l.grid, halving_schedule(l.grid, parts / 4, parts), opts);
      const double s_a = linalg::min_singular_value(A.matrix);
      const double s_d = lim.D ? linalg::min_singular_value(lim.D->matrix) : 0.0;
      sw.push_back(s_a);
      sd.push_back(s_d);
      c2.values.push_back(std::min(s_a, s_d));
      if (lim.report.diverged || !(s_a > 1e-8) || !(s_d > 1e-8)) c2.pass = false;
    }
    auto ratio_ok = [](const std::vector<double>& v) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      return *hi <= 2.0 * *lo;
    };
    c2.pass = c2.pass && ratio_ok(sw) && ratio_ok(sd);
    c2.detail = "min singular values of the control operator and of its nest diagonal; settled sums";
    report.entries.push_back(c2);
  }
  {
    ConditionEntry c3{"C3", false, false, {}, ""};
    for (const auto& l : levels) {
      const BoundaryControl f = BoundaryControl::sample(builtin_control("smooth", l.grid), l.grid, true);
      const Vec y = l.Wt.matrix * f.control_vector();
      const Vec y2 = second_difference(y, l.grid.n, l.grid.h);
      c3.values.push_back(std::sqrt(std::pow(l2_norm(y, l.grid.h), 2) + std::pow(l2_norm(y2, l.grid.h), 2)));
    }
    c3.pass = stable(c3.values);
    c3.detail = "discrete H2 norm of W~ f for the smooth control; spread <= 10%";
    report.entries.push_back(c3);
  }
  {
    ConditionEntry c4{"C4", false, false, {}, ""};
    for (const auto& l : levels) c4.values.push_back(l.decomposability.interior_norm);
    c4.pass = stable(c4.values);
    c4.detail = "interior norm of Q; spread <= 10%";
    report.entries.push_back(c4);
  }
  {
    ConditionEntry c5{"C5", true, true, {}, ""};
    for (const auto& l : levels) {
      const DiscreteOperator& A = l.W ? *l.W : l.V;
      const Eigen::VectorXd s = linalg::svd(A.matrix).sigma;
      const double r = s(s.size() - 1) / s(0);
      c5.values.push_back(r);
      if (!(r > 1e-10) || A.matrix.rows() != A.matrix.cols()) c5.pass = false;
    }
    c5.detail = "surrogate: control operator has full rank onto the discretized L2([0,T]; C^n)";
    report.entries.push_back(c5);
  }
  {
    ConditionEntry d{"decomposability", false, false, {}, ""};
    for (const auto& l : levels) d.values.push_back(l.decomposability.offdiag_mass);
    const double fine = d.values.back(), coarse = d.values.front();
    d.pass = fine <= 0.05 && (fine <= kFloor || 1.6 * fine <= coarse);
    d.detail = "interior off-diagonal mass of Q <= 0.05 at the finest level and shrinking";
    report.entries.push_back(d);
  }
  return report;
}

}  // namespace waveband
