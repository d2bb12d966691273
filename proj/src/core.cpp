#include "waveband/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "waveband/io.hpp"

namespace waveband {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::grid: return "grid";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::defect_frame: return "defect-frame";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::not_psd: return "not-psd";
    case ErrorKind::polar: return "polar";
    case ErrorKind::factorization: return "factorization";
    case ErrorKind::nest_violation: return "nest-violation";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::model: return "model";
    case ErrorKind::recovery_rejected: return "recovery-rejected";
    case ErrorKind::frame_missing: return "frame-missing";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
      kind_(kind) {}

// ---------------------------------------------------------------------------
// Grid

Grid Grid::make(int N, double h, int n, double x_max) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorKind::grid, "step h must be positive");
  if (N < 8) throw Error(ErrorKind::grid, "N must be at least 8");
  if (n < 1) throw Error(ErrorKind::grid, "channel dimension n must be at least 1");
  Grid g{h, N, n, x_max};
  if (x_max <= 0.0) g.x_max = g.T() + 2.0 * h;
  if (g.x_max < g.T() - 1e-12 * g.T())
    throw Error(ErrorKind::grid, "x_max must not be smaller than T");
  return g;
}

Grid Grid::from_horizon(int N, double T, int n, double x_max) {
  if (N < 8) throw Error(ErrorKind::grid, "N must be at least 8");
  return make(N, T / N, n, x_max);
}

int Grid::x_steps() const {
  return int(std::ceil(x_max / h - 1e-9));
}

Grid Grid::refined() const { return Grid::make(2 * N, 0.5 * h, n, x_max); }

// ---------------------------------------------------------------------------
// HermitianPotential

HermitianPotential::HermitianPotential(std::vector<Mat> samples, double h,
                                       double origin, Source source,
                                       std::string label)
    : samples_(std::move(samples)),
      h_(h),
      origin_(origin),
      n_(0),
      source_(source),
      label_(std::move(label)) {
  if (samples_.empty()) throw Error(ErrorKind::dimension, "potential has no samples");
  if (!(h_ > 0.0)) throw Error(ErrorKind::grid, "potential step must be positive");
  n_ = int(samples_.front().rows());
  for (const Mat& q : samples_) {
    if (q.rows() != n_ || q.cols() != n_)
      throw Error(ErrorKind::dimension, "potential samples must be n x n");
    if (!q.allFinite()) throw Error(ErrorKind::configuration, "potential has non-finite entries");
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    if ((q - q.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw Error(ErrorKind::configuration, "potential sample is not Hermitian");
  }
}

HermitianPotential HermitianPotential::sample(const PotentialProfile& profile,
                                              int n, double h, double x_max,
                                              std::string label) {
  const int M = int(std::ceil(x_max / h - 1e-9));
  std::vector<Mat> s;
  s.reserve(M + 1);
  for (int i = 0; i <= M; ++i) {
    Mat q = profile(i * h);
    if (q.rows() != n || q.cols() != n)
      throw Error(ErrorKind::dimension, "potential profile returned wrong size");
    s.push_back(std::move(q));
  }
  return HermitianPotential(std::move(s), h, 0.0, Source::builtin, std::move(label));
}

Mat HermitianPotential::at(double x) const {
  const double u = (x - origin_) / h_;
  if (u < -1e-9 || u > double(samples_.size() - 1) + 1e-9)
    throw Error(ErrorKind::coverage, "potential evaluated outside its samples");
  const auto last = samples_.size() - 1;
  const auto i = std::min<std::size_t>(last, std::size_t(std::max(0.0, std::floor(u))));
  if (i == last) return samples_[last];
  const double t = std::clamp(u - double(i), 0.0, 1.0);
  return (1.0 - t) * samples_[i] + t * samples_[i + 1];
}

void HermitianPotential::require_coverage(double x_max) const {
  if (origin_ > 1e-12 || extent() < x_max - 1e-9 * std::max(1.0, x_max))
    throw Error(ErrorKind::coverage, "potential does not cover [0, x_max]");
}

namespace {

std::vector<double> parse_numbers(std::string_view body) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(body)};
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos)
        throw Error(ErrorKind::configuration, "bad number '" + item + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::configuration, "bad number '" + item + "'");
    }
  }
  return out;
}

}  // namespace

Mat bump_shape(int n) {
  Mat b = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a) b(a, a) = 1.0 / double(a + 1);
  for (int a = 0; a + 1 < n; ++a) {
    b(a, a + 1) = cplx(0.5, -0.5);
    b(a + 1, a) = cplx(0.5, 0.5);
  }
  return b;
}

PotentialProfile builtin_potential(std::string_view spec, int n) {
  const auto colon = spec.find(':');
  const std::string_view name = spec.substr(0, colon);
  const std::string_view body = colon == std::string_view::npos ? "" : spec.substr(colon + 1);
  if (name == "zero") {
    return [n](double) -> Mat { return Mat::Zero(n, n); };
  }
  if (name == "const") {
    const auto v = parse_numbers(body);
    if (v.size() != 1) throw Error(ErrorKind::configuration, "const potential needs one value");
    const double c = v[0];
    return [n, c](double) -> Mat { return c * Mat::Identity(n, n); };
  }
  if (name == "bump") {
    const auto v = parse_numbers(body);
    if (v.size() != 3 || !(v[2] > 0.0))
      throw Error(ErrorKind::configuration, "bump potential needs <amp>,<center>,<width> with width > 0");
    const double amp = v[0], center = v[1], width = v[2];
    const Mat shape = bump_shape(n);
    return [n, amp, center, width, shape](double x) -> Mat {
      const double g = std::exp(-(x - center) * (x - center) / width);
      return Mat::Identity(n, n) + amp * g * shape;
    };
  }
  if (name == "diag") {
    const auto v = parse_numbers(body);
    if (int(v.size()) != n)
      throw Error(ErrorKind::configuration, "diag potential needs exactly n values");
    Mat d = Mat::Zero(n, n);
    for (int a = 0; a < n; ++a) d(a, a) = v[a];
    return [d](double) -> Mat { return d; };
  }
  throw Error(ErrorKind::configuration, "unknown potential '" + std::string(spec) + "'");
}

HermitianPotential make_potential(std::string_view spec, const Grid& grid) {
  if (spec.starts_with("file:")) {
    HermitianPotential p = io::load_potential(std::string(spec.substr(5)));
    if (p.n() != grid.n) throw Error(ErrorKind::configuration, "potential file has wrong channel count");
    p.require_coverage(grid.x_max);
    if (std::abs(p.h() - grid.h) > 1e-12 * grid.h) {
      // Resample onto the grid by linear interpolation.
      std::vector<Mat> s;
      for (int i = 0; i <= grid.x_steps(); ++i) s.push_back(p.at(std::min(i * grid.h, p.extent())));
      return HermitianPotential(std::move(s), grid.h, 0.0,
                                HermitianPotential::Source::file, std::string(spec));
    }
    return p;
  }
  return HermitianPotential::sample(builtin_potential(spec, grid.n), grid.n, grid.h,
                                    grid.x_max, std::string(spec));
}

// ---------------------------------------------------------------------------
// Controls

BoundaryControl BoundaryControl::sample(const ControlProfile& profile,
                                        const Grid& grid, bool smooth) {
  BoundaryControl c;
  c.n = grid.n;
  c.smooth = smooth;
  c.samples.resize(Eigen::Index(grid.N + 1) * grid.n);
  for (int j = 0; j <= grid.N; ++j) {
    Vec v = profile(j * grid.h);
    if (v.size() != grid.n) throw Error(ErrorKind::dimension, "control profile returned wrong size");
    c.samples.segment(j * grid.n, grid.n) = v;
  }
  if (smooth) {
    // Discrete form of f(0) = f'(0) = 0: the first difference may only be as
    // large as the second differences allow.
    double curvature = 0.0;
    for (int j = 1; j < grid.N; ++j)
      curvature = std::max(curvature, (c.at(j + 1) - 2.0 * c.at(j) + c.at(j - 1)).norm() /
                                          (grid.h * grid.h));
    const double slope = (c.at(1) - c.at(0)).norm() / grid.h;
    if (c.at(0).norm() > 1e-12 || slope > 1e-6 + 2.0 * grid.h * curvature)
      throw Error(ErrorKind::configuration, "control flagged smooth does not vanish to first order at t = 0");
  }
  return c;
}

ControlProfile builtin_control(std::string_view spec, const Grid& grid) {
  const int n = grid.n;
  const double T = grid.T();
  const double pi = std::numbers::pi;
  auto along_first = [n](double v) {
    Vec out = Vec::Zero(n);
    out(0) = v;
    return out;
  };
  if (spec == "sin") return [=](double t) { return along_first(std::sin(pi * t / T)); };
  if (spec == "t2") return [=](double t) { return along_first(t * t); };
  if (spec == "zero") return [n](double) -> Vec { return Vec::Zero(n); };
  if (spec == "smooth") {
    Vec dir(n);
    for (int a = 0; a < n; ++a) dir(a) = std::polar(1.0 / double(a + 1), 0.5 * pi * a);
    return [=](double t) -> Vec {
      const double s = std::sin(pi * t / T);
      return dir * (s * s);
    };
  }
  throw Error(ErrorKind::configuration, "unknown control '" + std::string(spec) + "'");
}

bool control_is_smooth(std::string_view spec) {
  return spec == "t2" || spec == "smooth" || spec == "zero";
}

// ---------------------------------------------------------------------------
// Operators

std::string_view to_string(Role role) {
  switch (role) {
    case Role::W: return "W";
    case Role::C: return "C";
    case Role::V: return "V";
    case Role::D: return "D";
    case Role::Phi: return "Phi";
    case Role::E: return "E";
    case Role::Lmodel: return "Lmodel";
    case Role::Q: return "Q";
    case Role::other: return "other";
  }
  return "other";
}

Role role_from_string(std::string_view s) {
  for (Role r : {Role::W, Role::C, Role::V, Role::D, Role::Phi, Role::E, Role::Lmodel,
                 Role::Q, Role::other})
    if (to_string(r) == s) return r;
  throw Error(ErrorKind::io, "unknown operator role '" + std::string(s) + "'");
}

DiscreteOperator DiscreteOperator::adjoint() const {
  return DiscreteOperator{matrix.adjoint(), h, n, role};
}

void DiscreteOperator::validate() const {
  if (n < 1 || matrix.rows() % n != 0 || matrix.cols() % n != 0)
    throw Error(ErrorKind::dimension, "operator dimensions must be divisible by n");
  if (!matrix.allFinite()) throw Error(ErrorKind::dimension, "operator has non-finite entries");
  if (role == Role::C) {
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    if (matrix.rows() != matrix.cols() ||
        (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw Error(ErrorKind::dimension, std::string("operator of role ") +
                                            std::string(to_string(role)) + " must be Hermitian");
  }
}

double NestPartition::delta() const {
  int d = 0;
  for (std::size_t k = 1; k < knots.size(); ++k) d = std::max(d, knots[k] - knots[k - 1]);
  return d * h;
}

// ---------------------------------------------------------------------------
// Quadrature and stencils

cplx inner_product(const Vec& f, const Vec& g, double h) {
  if (f.size() != g.size()) throw Error(ErrorKind::dimension, "inner product of different lengths");
  return h * g.dot(f);
}

double l2_norm(const Vec& f, double h) { return std::sqrt(h) * f.norm(); }

Eigen::VectorXd simpson_weights(int samples, double h) {
  if (samples < 2) throw Error(ErrorKind::dimension, "quadrature needs two samples");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(samples);
  const int intervals = samples - 1;
  if (intervals == 1) {
    w.setConstant(0.5 * h);
    return w;
  }
  int simpson_end = intervals;
  if (intervals % 2 == 1) simpson_end = intervals - 3;
  for (int k = 0; k + 2 <= simpson_end; k += 2) {
    w(k) += h / 3.0;
    w(k + 1) += 4.0 * h / 3.0;
    w(k + 2) += h / 3.0;
  }
  if (intervals % 2 == 1) {
    const int k = simpson_end;
    w(k) += 3.0 * h / 8.0;
    w(k + 1) += 9.0 * h / 8.0;
    w(k + 2) += 9.0 * h / 8.0;
    w(k + 3) += 3.0 * h / 8.0;
  }
  return w;
}

cplx weighted_inner(const Vec& f, const Vec& g, const Eigen::VectorXd& w, int n) {
  if (f.size() != g.size() || f.size() != w.size() * n)
    throw Error(ErrorKind::dimension, "weighted inner product of mismatched lengths");
  cplx acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    acc += w(i) * g.segment(i * n, n).dot(f.segment(i * n, n));
  return acc;
}

Vec second_difference(const Vec& f, int n, double h) {
  const Eigen::Index m = f.size() / n;
  if (m < 3 || f.size() % n != 0)
    throw Error(ErrorKind::dimension, "second difference needs at least 3 samples");
  Vec out(f.size());
  const double s = 1.0 / (h * h);
  auto at = [&](Eigen::Index i) { return f.segment(i * n, n); };
  for (Eigen::Index i = 1; i + 1 < m; ++i)
    out.segment(i * n, n) = s * (at(i - 1) - 2.0 * at(i) + at(i + 1));
  if (m >= 4) {
    out.segment(0, n) = s * (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3));
    out.segment((m - 1) * n, n) =
        s * (2.0 * at(m - 1) - 5.0 * at(m - 2) + 4.0 * at(m - 3) - at(m - 4));
  } else {
    // Three samples: the unique quadratic has a constant second derivative.
    out.segment(0, n) = out.segment(n, n);
    out.segment(2 * n, n) = out.segment(n, n);
  }
  return out;
}

Mat second_difference_matrix(int slots, int n, double h) {
  if (slots < 4) throw Error(ErrorKind::dimension, "second difference matrix needs 4 slots");
  const Eigen::Index dim = Eigen::Index(slots) * n;
  Mat d = Mat::Zero(dim, dim);
  const double s = 1.0 / (h * h);
  for (int a = 0; a < n; ++a) {
    for (int i = 1; i + 1 < slots; ++i) {
      d(i * n + a, (i - 1) * n + a) = s;
      d(i * n + a, i * n + a) = -2.0 * s;
      d(i * n + a, (i + 1) * n + a) = s;
    }
    const double c[4] = {2.0, -5.0, 4.0, -1.0};
    for (int k = 0; k < 4; ++k) {
      d(a, k * n + a) = c[k] * s;
      d((slots - 1) * n + a, (slots - 1 - k) * n + a) = c[k] * s;
    }
  }
  return d;
}

Vec left_derivative(const Vec& f, int n, double h) {
  if (f.size() < 3 * n) throw Error(ErrorKind::dimension, "derivative needs 3 samples");
  return (-3.0 * f.segment(0, n) + 4.0 * f.segment(n, n) - f.segment(2 * n, n)) / (2.0 * h);
}

}  // namespace waveband
