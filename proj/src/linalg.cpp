#include "mses/linalg.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace mses {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) +
                                ": entries must be finite");
  }
}

// First index of the largest-magnitude entry; flips the column so that entry
// is positive.
void fix_column_signs(Matrix& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index idx = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      const double mag = std::abs(basis(i, j));
      if (mag > best) {
        best = mag;
        idx = i;
      }
    }
    if (basis(idx, j) < 0.0) basis.col(j) = -basis.col(j);
  }
}

}  // namespace

Matrix pinv(const Matrix& a, double rel_tol) {
  require_finite(a, "pinv");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
    throw std::invalid_argument("pinv: rel_tol must be in (0, 1)");
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = sigma.size() > 0 ? rel_tol * sigma(0) : 0.0;
  Vector inv = Vector::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff) inv(i) = 1.0 / sigma(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

PcaModel pca_fit(const Matrix& data, int k) {
  require_finite(data, "pca_fit");
  const auto d = data.rows();
  const auto n = data.cols();
  if (n < 2) {
    throw InsufficientSamplesError("pca_fit: need at least 2 samples");
  }
  if (k < 1) {
    throw std::invalid_argument("pca_fit: k must be at least 1");
  }

  PcaModel model;
  model.dim = static_cast<int>(d);
  model.mean = data.rowwise().mean();
  Matrix centered = data.colwise() - model.mean;

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
  const Vector& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;

  if (sigma_max == 0.0) {
    // Zero-variance data: a single arbitrary-but-fixed direction.
    model.k = 1;
    model.basis = Matrix::Zero(d, 1);
    model.basis(0, 0) = 1.0;
    model.variances = Vector::Zero(1);
    return model;
  }

  const double rank_tol = std::numeric_limits<double>::epsilon() *
                          static_cast<double>(std::max(d, n)) * sigma_max;
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > rank_tol) ++rank;
  }
  rank = std::min<int>(rank, static_cast<int>(std::min(d, n - 1)));

  model.k = std::min(k, std::max(rank, 1));
  model.basis = svd.matrixU().leftCols(model.k);
  fix_column_signs(model.basis);
  model.variances = (sigma.head(model.k).array().square() /
                     static_cast<double>(n - 1))
                        .cwiseMax(0.0);
  return model;
}

Matrix pca_project(const PcaModel& model, const Matrix& points) {
  if (points.rows() != model.dim) {
    throw std::invalid_argument("pca_project: point dimension mismatch");
  }
  return model.basis.transpose() * (points.colwise() - model.mean);
}

Matrix pca_reconstruct(const PcaModel& model, const Matrix& coords) {
  if (coords.rows() != model.k) {
    throw std::invalid_argument("pca_reconstruct: coordinate count mismatch");
  }
  return (model.basis * coords).colwise() + model.mean;
}

AffineMap learn_affine_map(const Matrix& s, const Matrix& t, double rel_tol) {
  if (s.cols() != t.cols()) {
    throw std::invalid_argument(
        "learn_affine_map: S and T must pair the same number of columns");
  }
  if (s.cols() < 1) {
    throw std::invalid_argument("learn_affine_map: need at least one pair");
  }
  require_finite(s, "learn_affine_map");
  require_finite(t, "learn_affine_map");

  const auto n = s.cols();
  const auto in_dim = s.rows();
  Matrix s_aug(in_dim + 1, n);
  s_aug.topRows(in_dim) = s;
  s_aug.row(in_dim).setOnes();

  const Matrix gram = s_aug * s_aug.transpose();
  const Matrix m_aug = (t * s_aug.transpose()) * pinv(gram, rel_tol);

  AffineMap map;
  map.in_dim = static_cast<int>(in_dim);
  map.out_dim = static_cast<int>(t.rows());
  map.linear = m_aug.leftCols(in_dim);
  map.bias = m_aug.col(in_dim);
  return map;
}

Matrix apply_map(const AffineMap& map, const Matrix& points) {
  if (points.rows() != map.in_dim) {
    throw std::invalid_argument("apply_map: point dimension mismatch");
  }
  return (map.linear * points).colwise() + map.bias;
}

Vector apply_map(const AffineMap& map, const Vector& point) {
  if (point.size() != map.in_dim) {
    throw std::invalid_argument("apply_map: point dimension mismatch");
  }
  return map.linear * point + map.bias;
}

AffineMap compose(const AffineMap& outer, const AffineMap& inner) {
  if (inner.out_dim != outer.in_dim) {
    throw std::invalid_argument("compose: inner output must feed outer input");
  }
  AffineMap map;
  map.in_dim = inner.in_dim;
  map.out_dim = outer.out_dim;
  map.linear = outer.linear * inner.linear;
  map.bias = outer.linear * inner.bias + outer.bias;
  return map;
}

}  // namespace mses
