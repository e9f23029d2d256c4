#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mses/linalg.hpp"
#include "mses/rng.hpp"

using mses::AffineMap;
using mses::Matrix;
using mses::PcaModel;
using mses::Vector;

namespace {

Matrix random_matrix(int rows, int cols, mses::Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

// Residual of the four Penrose conditions, the independent check that a
// matrix is the Moore-Penrose pseudo-inverse.
double penrose_residual(const Matrix& a, const Matrix& p) {
  double r = (a * p * a - a).norm();
  r = std::max(r, (p * a * p - p).norm());
  r = std::max(r, ((a * p).transpose() - a * p).norm());
  r = std::max(r, ((p * a).transpose() - p * a).norm());
  return r;
}

// Squared reconstruction loss of an affine map over paired columns,
// (1/2N) * sum_i ||t_i - (L s_i + b)||^2, evaluated directly.
double squared_loss(const AffineMap& map, const Matrix& s, const Matrix& t) {
  const Matrix residual = t - mses::apply_map(map, s);
  return residual.squaredNorm() / (2.0 * static_cast<double>(s.cols()));
}

}  // namespace

TEST_CASE("pinv of the identity is the identity") {
  const Matrix id = Matrix::Identity(3, 3);
  CHECK((mses::pinv(id) - id).norm() < 1e-12);
}

TEST_CASE("pinv inverts nonzero singular values and drops zero ones") {
  Matrix a(2, 2);
  a << 2, 0, 0, 0;
  Matrix expected(2, 2);
  expected << 0.5, 0, 0, 0;
  CHECK((mses::pinv(a) - expected).norm() < 1e-12);
}

TEST_CASE("pinv satisfies the Penrose conditions on a tall full-rank matrix") {
  mses::Rng rng(11);
  const Matrix a = random_matrix(5, 3, rng);
  const Matrix p = mses::pinv(a);
  CHECK((p * a - Matrix::Identity(3, 3)).norm() < 1e-8);
  CHECK(penrose_residual(a, p) < 1e-8 * a.norm());
}

TEST_CASE("pinv rejects bad input") {
  Matrix a(2, 2);
  a << 1, 2, 3, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(mses::pinv(a), std::invalid_argument);
  CHECK_THROWS_AS(mses::pinv(Matrix::Identity(2, 2), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(mses::pinv(Matrix::Identity(2, 2), 1.5),
                  std::invalid_argument);
}

TEST_CASE("pca_fit recovers the diagonal line") {
  Matrix data(2, 3);
  data << 0, 1, 2, 0, 1, 2;
  const PcaModel model = mses::pca_fit(data, 1);
  CHECK(model.k == 1);
  CHECK(model.mean(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.mean(1) == doctest::Approx(1.0).epsilon(1e-12));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(model.basis(0, 0) - inv_sqrt2) < 1e-12);
  CHECK(std::abs(model.basis(1, 0) - inv_sqrt2) < 1e-12);
  // Covariance of {(0,0),(1,1),(2,2)} has eigenvalues 2 and 0.
  CHECK(model.variances(0) == doctest::Approx(2.0).epsilon(1e-12));
  const Matrix rebuilt =
      mses::pca_reconstruct(model, mses::pca_project(model, data));
  CHECK((rebuilt - data).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pca_fit handles zero-variance data") {
  Matrix data = Matrix::Constant(3, 4, 5.0);
  const PcaModel model = mses::pca_fit(data, 2);
  CHECK(model.k == 1);
  CHECK(model.variances.size() == 1);
  CHECK(model.variances(0) == 0.0);
  CHECK((model.basis.transpose() * model.basis - Matrix::Identity(1, 1))
            .norm() < 1e-12);
}

TEST_CASE("pca_fit reconstructs an embedded affine subspace exactly") {
  mses::Rng rng(42);
  const int d = 10, k = 3, n = 40;
  Matrix basis = random_matrix(d, k, rng);
  // Orthonormalize so the subspace is well conditioned.
  const Eigen::HouseholderQR<Matrix> qr(basis);
  basis = qr.householderQ() * Matrix::Identity(d, k);
  const Vector offset = random_matrix(d, 1, rng);
  const Matrix coords = random_matrix(k, n, rng);
  const Matrix data = (basis * coords).colwise() + offset;

  const PcaModel model = mses::pca_fit(data, k);
  CHECK(model.k == k);
  const Matrix rebuilt =
      mses::pca_reconstruct(model, mses::pca_project(model, data));
  CHECK((rebuilt - data).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pca_fit input validation") {
  CHECK_THROWS_AS(mses::pca_fit(Matrix::Identity(3, 1), 1),
                  mses::InsufficientSamplesError);
  CHECK_THROWS_AS(mses::pca_fit(Matrix::Identity(3, 3), 0),
                  std::invalid_argument);
}

TEST_CASE("pca projection basics") {
  Matrix data(2, 3);
  data << 0, 1, 2, 0, 1, 2;
  const PcaModel model = mses::pca_fit(data, 1);

  const Matrix at_mean = mses::pca_project(model, model.mean);
  CHECK(std::abs(at_mean(0, 0)) < 1e-12);

  Vector x(2);
  x << 2, 2;
  const Matrix proj = mses::pca_project(model, x);
  CHECK(proj(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  const Matrix back = mses::pca_reconstruct(model, Matrix::Zero(1, 1));
  CHECK((back.col(0) - model.mean).norm() < 1e-12);

  CHECK_THROWS_AS(mses::pca_project(model, Matrix::Zero(3, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(mses::pca_reconstruct(model, Matrix::Zero(2, 1)),
                  std::invalid_argument);
}

TEST_CASE("full-rank projection round trip is the identity") {
  mses::Rng rng(3);
  const Matrix data = random_matrix(4, 30, rng);
  const PcaModel model = mses::pca_fit(data, 4);
  CHECK(model.k == 4);
  const Matrix rebuilt =
      mses::pca_reconstruct(model, mses::pca_project(model, data));
  CHECK((rebuilt - data).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projection residual is orthogonal to the basis") {
  mses::Rng rng(7);
  const Matrix data = random_matrix(6, 25, rng);
  const PcaModel model = mses::pca_fit(data, 2);
  const Matrix outside = random_matrix(6, 5, rng);
  const Matrix rebuilt =
      mses::pca_reconstruct(model, mses::pca_project(model, outside));
  const Matrix residual = outside - rebuilt;
  CHECK((model.basis.transpose() * residual).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("explained variance never exceeds total variance") {
  mses::Rng rng(19);
  const Matrix data = random_matrix(5, 20, rng);
  const Matrix centered = data.colwise() - data.rowwise().mean().eval();
  const double total = centered.squaredNorm() / (data.cols() - 1.0);

  const PcaModel partial = mses::pca_fit(data, 2);
  CHECK(partial.variances.sum() <= total + 1e-9);

  const PcaModel full = mses::pca_fit(data, 5);
  CHECK(full.k == 5);
  CHECK(full.variances.sum() == doctest::Approx(total).epsilon(1e-9));

  for (int i = 1; i < full.k; ++i) {
    CHECK(full.variances(i) <= full.variances(i - 1));
  }
}

TEST_CASE("pca_fit is bitwise deterministic") {
  mses::Rng rng(29);
  const Matrix data = random_matrix(6, 12, rng);
  const PcaModel a = mses::pca_fit(data, 3);
  const PcaModel b = mses::pca_fit(data, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.basis == b.basis);
  CHECK(a.variances == b.variances);
}

TEST_CASE("learn_affine_map solves the pinned 1-D system") {
  Matrix s(1, 2), t(1, 2);
  s << 0, 1;
  t << 3, 5;
  const AffineMap map = mses::learn_affine_map(s, t);
  CHECK(map.linear(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(map.bias(0) == doctest::Approx(3.0).epsilon(1e-12));

  const Matrix y = mses::apply_map(map, s);
  CHECK(y(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(y(0, 1) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("learn_affine_map finds the identity when T equals S") {
  mses::Rng rng(5);
  const Matrix s = random_matrix(3, 10, rng);
  const AffineMap map = mses::learn_affine_map(s, s);
  CHECK((mses::apply_map(map, s) - s).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("learn_affine_map recovers a planted affine transform") {
  mses::Rng rng(13);
  const int d_in = 4, d_out = 3, n = d_in + 5;
  const Matrix a = random_matrix(d_out, d_in, rng);
  const Vector b = random_matrix(d_out, 1, rng);
  const Matrix s = random_matrix(d_in, n, rng);
  const Matrix t = (a * s).colwise() + b;

  const AffineMap map = mses::learn_affine_map(s, t);
  CHECK((map.linear - a).norm() / a.norm() < 1e-6);
  CHECK((map.bias - b).norm() / (b.norm() + 1.0) < 1e-6);
}

TEST_CASE("learn_affine_map validates shapes") {
  CHECK_THROWS_AS(
      mses::learn_affine_map(Matrix::Zero(2, 3), Matrix::Zero(2, 4)),
      std::invalid_argument);
}

TEST_CASE("apply_map identity and composition") {
  AffineMap identity;
  identity.in_dim = identity.out_dim = 3;
  identity.linear = Matrix::Identity(3, 3);
  identity.bias = Vector::Zero(3);
  mses::Rng rng(23);
  const Matrix x = random_matrix(3, 6, rng);
  CHECK((mses::apply_map(identity, x) - x).norm() == 0.0);

  AffineMap m1, m2;
  m1.in_dim = 3;
  m1.out_dim = 2;
  m1.linear = random_matrix(2, 3, rng);
  m1.bias = random_matrix(2, 1, rng);
  m2.in_dim = 2;
  m2.out_dim = 4;
  m2.linear = random_matrix(4, 2, rng);
  m2.bias = random_matrix(4, 1, rng);
  const Matrix direct = mses::apply_map(m2, mses::apply_map(m1, x));
  const Matrix composed = mses::apply_map(mses::compose(m2, m1), x);
  CHECK((direct - composed).cwiseAbs().maxCoeff() < 1e-10);

  const Matrix wrong_shape = Matrix::Zero(4, 2);
  CHECK_THROWS_AS(mses::apply_map(m1, wrong_shape), std::invalid_argument);
}

TEST_CASE("closed-form map is a local optimum of the squared loss") {
  mses::Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const int d_in = 2 + trial;
    // Includes the rank-deficient regime: fewer samples than d_in + 1.
    const int n = trial % 2 == 0 ? d_in : d_in + 6;
    const Matrix s = random_matrix(d_in, n, rng);
    const Matrix t = random_matrix(3, n, rng);
    const AffineMap map = mses::learn_affine_map(s, t);
    const double loss = squared_loss(map, s, t);
    for (int p = 0; p < 20; ++p) {
      AffineMap perturbed = map;
      Matrix delta = random_matrix(3, d_in + 1, rng);
      delta *= 1e-3 / delta.norm();
      perturbed.linear += delta.leftCols(d_in);
      perturbed.bias += delta.col(d_in);
      CHECK(loss <= squared_loss(perturbed, s, t) + 1e-9);
    }
  }
}

TEST_CASE("closed-form map is the ridge-regression limit") {
  mses::Rng rng(37);
  const int d_in = 3, n = 20;
  const Matrix s = random_matrix(d_in, n, rng);
  const Matrix t = random_matrix(2, n, rng);
  const AffineMap map = mses::learn_affine_map(s, t);

  auto ridge = [&](double lambda) {
    Matrix s_aug(d_in + 1, n);
    s_aug.topRows(d_in) = s;
    s_aug.row(d_in).setOnes();
    const Matrix gram = s_aug * s_aug.transpose() +
                        lambda * Matrix::Identity(d_in + 1, d_in + 1);
    return (t * s_aug.transpose() * gram.inverse()).eval();
  };

  Matrix m_aug(2, d_in + 1);
  m_aug.leftCols(d_in) = map.linear;
  m_aug.col(d_in) = map.bias;
  const double gap_coarse = (ridge(1e-6) - m_aug).norm();
  const double gap_fine = (ridge(1e-8) - m_aug).norm();
  CHECK(gap_fine < gap_coarse);
}
