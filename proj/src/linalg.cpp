#include "waveband/linalg.hpp"

#include <cmath>

namespace waveband::linalg {

double hermitian_deviation(const Mat& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::dimension, "matrix is not square");
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

Mat hermitian_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }

bool all_finite(const Mat& a) { return a.allFinite(); }

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<Mat> s(a);
  return s.singularValues()(0);
}

double min_singular_value(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<Mat> s(a);
  return s.singularValues()(s.singularValues().size() - 1);
}

Svd svd(const Mat& a) {
  Eigen::BDCSVD<Mat> s(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd out{s.matrixU(), s.singularValues(), s.matrixV()};
  for (Eigen::Index k = 0; k < out.U.cols(); ++k) {
    Eigen::Index pivot = 0;
    out.U.col(k).cwiseAbs().maxCoeff(&pivot);
    const cplx p = out.U(pivot, k);
    if (std::abs(p) == 0.0) continue;
    const cplx phase = std::conj(p) / std::abs(p);
    out.U.col(k) *= phase;
    out.V.col(k) *= phase;
  }
  return out;
}

HermitianEigen eigh(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a));
  return {es.eigenvalues(), es.eigenvectors()};
}

Mat hermitian_function(const Mat& a, const std::function<double(double)>& f) {
  const HermitianEigen e = eigh(a);
  Eigen::VectorXd fv(e.values.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(e.values(i));
  return e.vectors * fv.cast<cplx>().asDiagonal() * e.vectors.adjoint();
}

Mat block_diagonal_part(const Mat& a, int block) {
  Mat out = Mat::Zero(a.rows(), a.cols());
  const Eigen::Index blocks = std::min(a.rows(), a.cols()) / block;
  for (Eigen::Index b = 0; b < blocks; ++b)
    out.block(b * block, b * block, block, block) =
        a.block(b * block, b * block, block, block);
  return out;
}

Mat slot_reversal(int slots, int n) {
  Mat r = Mat::Zero(Eigen::Index(slots) * n, Eigen::Index(slots) * n);
  for (int k = 0; k < slots; ++k)
    for (int a = 0; a < n; ++a) r(k * n + a, (slots - 1 - k) * n + a) = 1.0;
  return r;
}

}  // namespace waveband::linalg
