#include "waveband/boundary_triple.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "waveband/io.hpp"
#include "waveband/linalg.hpp"

namespace waveband {

namespace {

constexpr double kSeed = 1e-8;

double tail_min_eigenvalue(const HermitianPotential& p, int M) {
  double lo = std::numeric_limits<double>::infinity();
  const int first = std::max(0, M - std::max(1, M / 10));
  for (int i = first; i <= M; ++i) lo = std::min(lo, linalg::eigh(p[i]).values(0));
  return lo;
}

// Columns of `rows` stacked samples as a flat vector times v.
Vec apply_samples(const std::vector<Mat>& s, const Vec& v, int n) {
  Vec out(Eigen::Index(s.size()) * n);
  for (std::size_t i = 0; i < s.size(); ++i) out.segment(Eigen::Index(i) * n, n) = s[i] * v;
  return out;
}

Mat left_derivative(const std::vector<Mat>& s, double h) {
  return (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h);
}

nlohmann::json to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Vec DefectFrame::apply_K(const Vec& v) const { return apply_samples(K, v, n); }
Vec DefectFrame::apply_K1(const Vec& v) const { return apply_samples(K1, v, n); }

double default_frame_extent(const HermitianPotential& potential, double T) {
  const int M = int(potential.size()) - 1;
  const double lo = tail_min_eigenvalue(potential, M);
  if (!(lo > 0.0)) throw Error(ErrorKind::defect_frame, "potential is not positive at the far end");
  return T + 15.0 / std::sqrt(lo);
}

DefectFrame compute_defect_frame(const HermitianPotential& potential, const Grid& grid) {
  const int n = grid.n;
  const int M = grid.x_steps();
  const double h = grid.h;
  if (potential.n() != n) throw Error(ErrorKind::dimension, "channel mismatch");
  potential.require_coverage(grid.x_max);
  if (M < 4) throw Error(ErrorKind::grid, "frame grid too short");
  const Mat& q_end = potential[M];
  if (!(tail_min_eigenvalue(potential, M) > 0.0))
    throw Error(ErrorKind::defect_frame, "potential is not uniformly positive near x_max");

  const double c = h * h / 12.0;
  const Mat I = Mat::Identity(n, n);
  auto A = [&](int i) -> Mat { return I - c * potential[i]; };
  auto B = [&](int i) -> Mat { return I + 5.0 * c * potential[i]; };

  // Backward Numerov for Y'' = q Y from the decaying end data
  // Y(X) = eps I, Y(X - h) = eps exp(sqrt(q(X)) h).
  std::vector<Mat> Y(M + 1);
  Y[M] = kSeed * I;
  Y[M - 1] = kSeed * linalg::hermitian_function(q_end, [h](double lam) {
               return std::exp(std::sqrt(std::max(lam, 0.0)) * h);
             });
  for (int i = M - 1; i >= 1; --i) {
    const Mat rhs = 2.0 * B(i) * Y[i] - A(i + 1) * Y[i + 1];
    Y[i - 1] = A(i - 1).partialPivLu().solve(rhs);
    if (!Y[i - 1].allFinite()) throw Error(ErrorKind::defect_frame, "overflow in backward integration");
  }

  Eigen::JacobiSVD<Mat> y0svd(Y[0]);
  const auto& sv = y0svd.singularValues();
  if (!(sv(n - 1) > 1e-12 * sv(0)))
    throw Error(ErrorKind::degeneracy, "K(0) is numerically singular");
  const Mat norm = Y[0].inverse();

  DefectFrame f;
  f.n = n;
  f.h = h;
  f.M = M;
  f.K.resize(M + 1);
  for (int i = 0; i <= M; ++i) f.K[i] = Y[i] * norm;
  f.K[0] = I;
  const double k0 = linalg::spectral_norm(f.K[0]);
  if (linalg::spectral_norm(f.K[M]) > 1e-6 * k0)
    throw Error(ErrorKind::defect_frame, "no solution decaying by x_max was found");

  // K1: -K1'' + q K1 = K, K1(0) = K1(X) = 0, Numerov as a block tridiagonal
  // system A_{i-1} y_{i-1} - 2 B_i y_i + A_{i+1} y_{i+1} = -c (K_{i-1} + 10 K_i + K_{i+1}).
  const int m = M - 1;
  std::vector<Mat> dprime(m), rprime(m);
  for (int k = 0; k < m; ++k) {
    const int i = k + 1;
    Mat d = -2.0 * B(i);
    Mat r = -c * (f.K[i - 1] + 10.0 * f.K[i] + f.K[i + 1]);
    if (k > 0) {
      const Mat lower = A(i - 1);
      const auto lu = dprime[k - 1].partialPivLu();
      d -= lower * lu.solve(A(i));
      r -= lower * lu.solve(rprime[k - 1]);
    }
    dprime[k] = std::move(d);
    rprime[k] = std::move(r);
  }
  f.K1.assign(M + 1, Mat::Zero(n, n));
  for (int k = m - 1; k >= 0; --k) {
    const int i = k + 1;
    Mat r = rprime[k];
    if (k + 1 < m) r -= A(i + 1) * f.K1[i + 1];
    f.K1[i] = dprime[k].partialPivLu().solve(r);
  }

  const Eigen::VectorXd w = simpson_weights(M + 1, h);
  f.G = Mat::Zero(n, n);
  for (int i = 0; i <= M; ++i) f.G += w(i) * f.K[i].adjoint() * f.K[i];
  f.G = linalg::hermitian_part(f.G);
  f.Kp0 = left_derivative(f.K, h);
  f.K1p0 = left_derivative(f.K1, h);
  Eigen::JacobiSVD<Mat> ksvd(f.K1p0);
  const auto& ks = ksvd.singularValues();
  f.K1p0_condition = ks(n - 1) > 0.0 ? ks(0) / ks(n - 1) : std::numeric_limits<double>::infinity();
  return f;
}

BoundaryFunction BoundaryFunction::from_samples(Vec samples, int n, double h) {
  BoundaryFunction y;
  y.value0 = samples.head(n);
  y.deriv0 = waveband::left_derivative(samples, n, h);
  y.samples = std::move(samples);
  return y;
}

BoundaryFunction BoundaryFunction::sample(const std::function<Vec(double)>& fn, int n, double h,
                                          int M) {
  Vec s(Eigen::Index(M + 1) * n);
  for (int i = 0; i <= M; ++i) s.segment(i * n, n) = fn(i * h);
  return from_samples(std::move(s), n, h);
}

BoundaryImage gamma1(const BoundaryFunction& y, const DefectFrame& frame) {
  if (y.value0.size() != frame.n) throw Error(ErrorKind::dimension, "endpoint data has wrong size");
  return {y.value0, -frame.apply_K(y.value0)};
}

BoundaryImage gamma2(const BoundaryFunction& y, const DefectFrame& frame) {
  if (y.value0.size() != frame.n || y.deriv0.size() != frame.n)
    throw Error(ErrorKind::dimension, "endpoint data has wrong size");
  if (!(frame.K1p0_condition <= 1e12))
    throw Error(ErrorKind::degeneracy, "K1'(0) is numerically singular");
  const Vec c = frame.K1p0.partialPivLu().solve(y.deriv0 - frame.Kp0 * y.value0);
  return {c, frame.apply_K(c)};
}

GreenReport green_residual(const BoundaryFunction& u, const BoundaryFunction& v,
                           const HermitianPotential& potential, const DefectFrame& frame) {
  const int n = frame.n;
  const Eigen::Index len = Eigen::Index(frame.M + 1) * n;
  if (u.samples.size() != len || v.samples.size() != len)
    throw Error(ErrorKind::dimension, "functions must live on the frame grid");
  auto apply_L = [&](const Vec& y) {
    Vec out = -second_difference(y, n, frame.h);
    for (int i = 0; i <= frame.M; ++i) out.segment(i * n, n) += potential[i] * y.segment(i * n, n);
    return out;
  };
  const Eigen::VectorXd w = simpson_weights(frame.M + 1, frame.h);
  GreenReport r;
  r.lhs = weighted_inner(apply_L(u.samples), v.samples, w, n) -
          weighted_inner(u.samples, apply_L(v.samples), w, n);
  const BoundaryImage g1u = gamma1(u, frame), g2u = gamma2(u, frame);
  const BoundaryImage g1v = gamma1(v, frame), g2v = gamma2(v, frame);
  r.rhs = weighted_inner(g1u.function, g2v.function, w, n) -
          weighted_inner(g2u.function, g1v.function, w, n);
  r.residual = std::abs(r.lhs - r.rhs);
  r.truncated = u.samples.tail(n).norm() > 1e-6 || v.samples.tail(n).norm() > 1e-6;
  return r;
}

VishikDecomposition vishik_decompose(const BoundaryFunction& y, const DefectFrame& frame) {
  const int n = frame.n;
  VishikDecomposition out;
  out.d = gamma1(y, frame).coefficients;
  const BoundaryImage g2 = gamma2(y, frame);
  out.c = g2.coefficients;
  out.g = g2.function;
  out.hpart = frame.apply_K(out.d);
  const Vec k1c = frame.apply_K1(out.c);
  out.y0 = y.samples - k1c - out.hpart;
  out.y0_value_residual = out.y0.head(n).norm();
  // Endpoint derivative of y0 with the frame's stencil conventions.
  out.y0_derivative_residual =
      (y.deriv0 - frame.K1p0 * out.c - frame.Kp0 * out.d).norm();
  out.reassembly_error = (out.y0 + k1c + out.hpart - y.samples).cwiseAbs().maxCoeff();
  return out;
}

void save_frame(const DefectFrame& frame, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto table = [&](const std::vector<Mat>& s, const std::string& name) {
    std::ofstream out(dir / name);
    out << "# x,re/im pairs of entries (row-major)\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << io::format_double(double(i) * frame.h);
      for (int r = 0; r < frame.n; ++r)
        for (int c = 0; c < frame.n; ++c)
          out << ',' << io::format_double(s[i](r, c).real()) << ','
              << io::format_double(s[i](r, c).imag());
      out << '\n';
    }
  };
  table(frame.K, "frame_K.csv");
  table(frame.K1, "frame_K1.csv");
  nlohmann::json j;
  j["n"] = frame.n;
  j["h"] = frame.h;
  j["x_max"] = frame.M * frame.h;
  j["G_K"] = to_json(frame.G);
  j["K_prime_0"] = to_json(frame.Kp0);
  j["K1_prime_0"] = to_json(frame.K1p0);
  j["K1_prime_0_condition"] = frame.K1p0_condition;
  io::write_text(dir / "frame.json", j.dump(2) + "\n");
}

}  // namespace waveband
