#pragma once

// Dense complex linear-algebra helpers shared by the operator modules.

#include "waveband/core.hpp"

namespace waveband::linalg {

double hermitian_deviation(const Mat& a);
Mat hermitian_part(const Mat& a);
bool all_finite(const Mat& a);

double spectral_norm(const Mat& a);
double min_singular_value(const Mat& a);

// Thin SVD with a deterministic gauge: the first entry of largest modulus in
// each left singular vector is made real positive (right vectors follow).
struct Svd {
  Mat U;
  Eigen::VectorXd sigma;
  Mat V;
};
Svd svd(const Mat& a);

// Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.
struct HermitianEigen {
  Eigen::VectorXd values;
  Mat vectors;
};
HermitianEigen eigh(const Mat& a);

// f(A) for Hermitian A via its eigen-decomposition.
Mat hermitian_function(const Mat& a, const std::function<double(double)>& f);

// Block-diagonal part with respect to `block` x `block` diagonal blocks.
Mat block_diagonal_part(const Mat& a, int block);

// Reversal of the slot order (channels within a slot keep their order).
Mat slot_reversal(int slots, int n);

}  // namespace waveband::linalg
