#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace mses {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class InsufficientSamplesError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Principal-component model of a point cloud: an affine subspace spanned by
// the orthonormal columns of `basis` around `mean`, with the per-component
// sample variances in non-increasing order. `k` is the number of retained
// components and may be smaller than requested when the data is rank
// deficient. Each basis column is sign-fixed so its largest-magnitude entry
// is positive, which makes fits on identical data bitwise reproducible.
struct PcaModel {
  int dim = 0;
  int k = 0;
  Vector mean;
  Matrix basis;      // dim x k, orthonormal columns
  Vector variances;  // k, non-increasing, >= 0
};

// Affine transform y = linear * x + bias.
struct AffineMap {
  int in_dim = 0;
  int out_dim = 0;
  Matrix linear;  // out_dim x in_dim
  Vector bias;    // out_dim
};

// Moore-Penrose pseudo-inverse via SVD. Singular values below
// rel_tol * sigma_max are treated as zero. rel_tol must lie in (0, 1).
Matrix pinv(const Matrix& a, double rel_tol = 1e-10);

// Fits a PCA model to `data` whose columns are samples. Requires at least two
// samples and k >= 1. When the centered data has rank r < k the retained
// component count is reduced to max(r, 1); callers can detect the reduction
// by comparing the model's k against the request.
PcaModel pca_fit(const Matrix& data, int k);

// Column-wise basis^T * (x - mean).
Matrix pca_project(const PcaModel& model, const Matrix& points);

// Column-wise basis * coord + mean.
Matrix pca_reconstruct(const PcaModel& model, const Matrix& coords);

// Least-squares affine map S -> T learned from paired columns. S is augmented
// with a constant-one row and the closed form
//   M_aug = (T * S_aug^T) * pinv(S_aug * S_aug^T)
// is split into (linear, bias). The pseudo-inverse makes this the
// minimum-norm least-squares solution when the Gram matrix is singular, which
// is the normal regime when the sample count is below in_dim + 1.
AffineMap learn_affine_map(const Matrix& s, const Matrix& t,
                           double rel_tol = 1e-10);

Matrix apply_map(const AffineMap& map, const Matrix& points);
Vector apply_map(const AffineMap& map, const Vector& point);

// outer(inner(x)) as a single map.
AffineMap compose(const AffineMap& outer, const AffineMap& inner);

}  // namespace mses
