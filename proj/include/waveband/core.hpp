#pragma once

// Shared discretization types for the waveband library.
//
// Every sampled C^n-valued function is stored flat in an Eigen vector with
// sample-major layout: entry (i * n + alpha) holds channel alpha of sample i.
// Operators on such functions are dense matrices with the same layout, so
// the column j * n + alpha of a control operator is the response to the unit
// control in channel alpha at slot j.

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace waveband {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

enum class ErrorKind {
  dimension,
  grid,
  coverage,
  configuration,
  defect_frame,
  degeneracy,
  truncation,
  not_psd,
  polar,
  factorization,
  nest_violation,
  divergence,
  model,
  recovery_rejected,
  frame_missing,
  io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Uniform characteristic-aligned grid: dx = dt = h, T = N * h.
struct Grid {
  double h = 0.0;
  int N = 0;
  int n = 1;
  double x_max = 0.0;

  // x_max <= 0 selects T + 2h, enough room for waves launched at x = 0.
  static Grid make(int N, double h, int n, double x_max = 0.0);
  static Grid from_horizon(int N, double T, int n, double x_max = 0.0);

  double T() const { return N * h; }
  // Number of space steps M; samples live at x_i = i * h, i = 0..M.
  int x_steps() const;
  // Same grid with h halved and N doubled; x_max is kept.
  Grid refined() const;
};

using PotentialProfile = std::function<Mat(double)>;

// Sampled n x n Hermitian potential q(x_i), x_i = origin + i * h.
class HermitianPotential {
 public:
  enum class Source { builtin, file };

  HermitianPotential(std::vector<Mat> samples, double h, double origin = 0.0,
                     Source source = Source::builtin, std::string label = {});

  static HermitianPotential sample(const PotentialProfile& profile, int n,
                                   double h, double x_max,
                                   std::string label = {});

  int n() const { return n_; }
  std::size_t size() const { return samples_.size(); }
  double h() const { return h_; }
  double origin() const { return origin_; }
  double extent() const { return origin_ + h_ * double(samples_.size() - 1); }
  Source source() const { return source_; }
  const std::string& label() const { return label_; }

  const Mat& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Mat>& samples() const { return samples_; }

  // Piecewise-linear interpolation; x must lie inside [origin, extent].
  Mat at(double x) const;

  // Throws coverage error if the samples do not reach x_max.
  void require_coverage(double x_max) const;

 private:
  std::vector<Mat> samples_;
  double h_;
  double origin_;
  int n_;
  Source source_;
  std::string label_;
};

// Builtin potential grammar: zero | const:<c> | bump:<amp>,<center>,<width> |
// diag:<c1>,...,<cn>. The bump is I + amp * exp(-(x-center)^2/width) * B_n
// with a fixed Hermitian shape matrix B_n (B_1 = 1).
PotentialProfile builtin_potential(std::string_view spec, int n);
// Shape matrix of the builtin bump.
Mat bump_shape(int n);

// Resolves builtin specs and `file:<path>` specs onto the grid.
HermitianPotential make_potential(std::string_view spec, const Grid& grid);

using ControlProfile = std::function<Vec(double)>;

// Boundary control samples f(t_j), t_j = j * h, j = 0..N.
struct BoundaryControl {
  Vec samples;
  int n = 1;
  bool smooth = false;

  static BoundaryControl sample(const ControlProfile& profile,
                                const Grid& grid, bool smooth);
  int count() const { return int(samples.size() / n); }
  Eigen::Ref<const Vec> at(int j) const { return samples.segment(j * n, n); }
  // Samples at t_1..t_N: the coordinates of the control space.
  Vec control_vector() const { return samples.tail(samples.size() - n); }
};

// Builtin control grammar: sin | t2 | smooth | zero. `sin` and `t2` drive
// channel 0 only; `smooth` is sin^2(pi t / T) along a fixed complex direction.
ControlProfile builtin_control(std::string_view spec, const Grid& grid);
bool control_is_smooth(std::string_view spec);

// Wave values u(x_i, t_j); row j is the time slice t_j, columns are the
// flattened space samples i = 0..M.
struct WaveField {
  Grid grid;
  Mat values;

  Vec slice(int j) const { return values.row(j).transpose(); }
};

enum class Role { W, C, V, D, Phi, E, Lmodel, Q, other };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

// Dense operator on discretized L2([0,T]; C^n). Rows and columns carry the
// same quadrature weight h, so adjoints are plain conjugate transposes.
struct DiscreteOperator {
  Mat matrix;
  double h = 0.0;
  int n = 1;
  Role role = Role::other;

  int row_slots() const { return int(matrix.rows()) / n; }
  int col_slots() const { return int(matrix.cols()) / n; }
  DiscreteOperator adjoint() const;
  void validate() const;
};

// Knots s_k = knots[k] * h with knots[0] = 0 and knots.back() = N.
struct NestPartition {
  std::vector<int> knots;
  double h = 0.0;

  int parts() const { return int(knots.size()) - 1; }
  double delta() const;
};

// L2([0,T]; C^n) pairing with uniform weight h: h * sum <f_i, g_i>,
// linear in f and antilinear in g.
cplx inner_product(const Vec& f, const Vec& g, double h);
double l2_norm(const Vec& f, double h);

// Composite Simpson weights for `samples` equally spaced points (3/8 rule on
// the last three intervals when the interval count is odd).
Eigen::VectorXd simpson_weights(int samples, double h);
// Pairing with per-sample weights for C^n-valued samples.
cplx weighted_inner(const Vec& f, const Vec& g, const Eigen::VectorXd& w,
                    int n);

// Channel-wise second difference: central in the interior, four-point
// one-sided stencils at both ends (exact on quadratics).
Vec second_difference(const Vec& f, int n, double h);
// Matrix of second_difference acting on `slots` samples of C^n.
Mat second_difference_matrix(int slots, int n, double h);

// Second-order one-sided derivative at the left end of a sampled function.
Vec left_derivative(const Vec& f, int n, double h);

}  // namespace waveband
