#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vsum/linalg.hpp"

using namespace vsum;
using linalg::Matrix;

TEST_SUITE("linalg") {

TEST_CASE("matmul identity and zero") {
  std::mt19937_64 rng(1);
  const Matrix a = oracles::random_matrix(3, 3, rng);
  CHECK(linalg::matmul(Matrix::identity(3), a) == a);

  const Matrix zero(3, 4);
  const Matrix prod = linalg::matmul(a, zero);
  for (double v : prod.data) CHECK(v == 0.0);
}

TEST_CASE("matmul matches the triple-loop oracle") {
  std::mt19937_64 rng(2);
  const Matrix a = oracles::random_matrix(4, 5, rng);
  const Matrix b = oracles::random_matrix(5, 3, rng);
  const Matrix got = linalg::matmul(a, b);
  const Matrix want = oracles::naive_matmul(a, b);
  for (size_t i = 0; i < got.data.size(); ++i)
    CHECK(std::abs(got.data[i] - want.data[i]) < 1e-12);
}

TEST_CASE("matmul rejects mismatched shapes") {
  CHECK_THROWS_AS(linalg::matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST_CASE("cholesky of the identity uses no jitter") {
  const auto f = linalg::cholesky_psd(Matrix::identity(3), 0.0);
  CHECK(f.jitter_used == 0.0);
  CHECK(f.lower == Matrix::identity(3));
}

TEST_CASE("cholesky of a diagonal matrix") {
  const std::vector<double> d{4.0, 9.0};
  const auto f = linalg::cholesky_psd(Matrix::diagonal(d), 0.0);
  CHECK(f.lower.at(0, 0) == doctest::Approx(2.0));
  CHECK(f.lower.at(1, 1) == doctest::Approx(3.0));
  CHECK(f.lower.at(0, 1) == 0.0);
  CHECK(f.lower.at(1, 0) == 0.0);
}

TEST_CASE("cholesky reconstructs a random Gram matrix") {
  std::mt19937_64 rng(3);
  const Matrix m = oracles::random_psd(6, rng, 1e-6);
  const auto f = linalg::cholesky_psd(m, linalg::kDefaultJitter);
  const Matrix rebuilt = linalg::matmul(f.lower, linalg::transpose(f.lower));
  Matrix shifted = m;
  for (int i = 0; i < 6; ++i) shifted.at(i, i) += f.jitter_used;
  CHECK(linalg::frobenius_distance(rebuilt, shifted) < 1e-10);
}

TEST_CASE("cholesky rejects indefinite and asymmetric input") {
  Matrix indefinite(2, 2, {1.0, 2.0, 2.0, 1.0});  // eigenvalues 3, -1
  CHECK_THROWS_AS(linalg::cholesky_psd(indefinite, 1e-10), NumericError);
  Matrix asym(2, 2, {1.0, 0.5, 0.0, 1.0});
  CHECK_THROWS_AS(linalg::cholesky_psd(asym, 0.0), ShapeError);
}

TEST_CASE("jitter ladder climbs until the factorization succeeds") {
  // rank-1, exactly singular: needs a strictly positive shift
  Matrix m(2, 2, {1.0, 1.0, 1.0, 1.0});
  const auto f = linalg::cholesky_psd(m, 1e-10);
  CHECK(f.jitter_used > 0.0);
  CHECK(f.lower.at(1, 1) > 0.0);
}

TEST_CASE("logdet of identity is zero") {
  CHECK(linalg::logdet_psd(Matrix::identity(5), 0.0) == doctest::Approx(0.0));
}

TEST_CASE("logdet of diag(2,3) is log 6") {
  const std::vector<double> d{2.0, 3.0};
  CHECK(linalg::logdet_psd(Matrix::diagonal(d), 0.0) == doctest::Approx(std::log(6.0)));
}

TEST_CASE("logdet matches the cofactor-expansion oracle") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix m = oracles::random_psd(8, rng, 0.5);
    const double got = linalg::logdet_psd(m, 0.0);
    const double want = std::log(oracles::cofactor_det(m));
    CHECK(std::abs(got - want) / std::abs(want) < 1e-9);
  }
}

TEST_CASE("exp(logdet) equals the product of squared Cholesky diagonals") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = oracles::random_psd(6, rng, 0.1);
    const auto f = linalg::cholesky_psd(m, 0.0);
    double prod = 1.0;
    for (int i = 0; i < 6; ++i) prod *= f.lower.at(i, i) * f.lower.at(i, i);
    const double got = std::exp(linalg::logdet(f));
    CHECK(std::abs(got - prod) / prod < 1e-12);
  }
}

TEST_CASE("sym_eig on diagonal and identity matrices") {
  const std::vector<double> d{5.0, 1.0};
  const auto [values, vectors] = linalg::sym_eig(Matrix::diagonal(d));
  CHECK(values[0] == doctest::Approx(5.0));
  CHECK(values[1] == doctest::Approx(1.0));
  CHECK(std::abs(vectors.at(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(vectors.at(1, 1)) == doctest::Approx(1.0));

  const auto [iv, ivec] = linalg::sym_eig(Matrix::identity(4));
  for (double v : iv) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("sym_eig reconstructs random symmetric matrices up to 16x16") {
  std::mt19937_64 rng(6);
  for (int n : {2, 6, 11, 16}) {
    Matrix m = oracles::random_matrix(n, n, rng);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = 0.5 * (m.at(i, j) + m.at(j, i));
        m.at(i, j) = v;
        m.at(j, i) = v;
      }
    const auto [values, vectors] = linalg::sym_eig(m);

    // descending order
    for (size_t i = 1; i < values.size(); ++i) CHECK(values[i - 1] >= values[i]);

    // V^T V = I
    const Matrix vtv = linalg::matmul(linalg::transpose(vectors), vectors);
    CHECK(linalg::frobenius_distance(vtv, Matrix::identity(n)) < 1e-8);

    // V diag(lambda) V^T = m
    Matrix scaled = vectors;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) scaled.at(i, j) *= values[j];
    const Matrix rebuilt = linalg::matmul(scaled, linalg::transpose(vectors));
    CHECK(linalg::frobenius_distance(rebuilt, m) < 1e-8);
  }
}

TEST_CASE("sym_eig rejects non-symmetric input") {
  Matrix asym(2, 2, {1.0, 2.0, 0.0, 1.0});
  CHECK_THROWS_AS(linalg::sym_eig(asym), ShapeError);
}

TEST_CASE("covariance of identical rows is zero") {
  Matrix x(3, 2);
  for (int r = 0; r < 3; ++r) {
    x.at(r, 0) = 1.5;
    x.at(r, 1) = -2.0;
  }
  const Matrix cov = linalg::covariance(x);
  for (double v : cov.data) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("covariance of rows (0),(2) is 2") {
  Matrix x(2, 1, {0.0, 2.0});
  CHECK(linalg::covariance(x).at(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("covariance matches the two-pass oracle") {
  std::mt19937_64 rng(7);
  const Matrix x = oracles::random_matrix(100, 4, rng, 2.0);
  const Matrix got = linalg::covariance(x);
  const Matrix want = oracles::two_pass_covariance(x);
  for (size_t i = 0; i < got.data.size(); ++i)
    CHECK(std::abs(got.data[i] - want.data[i]) < 1e-12);
}

TEST_CASE("covariance is exactly symmetric with eigenvalues >= -1e-10") {
  std::mt19937_64 rng(8);
  const Matrix x = oracles::random_matrix(40, 5, rng);
  const Matrix cov = linalg::covariance(x);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) CHECK(cov.at(i, j) == cov.at(j, i));
  const auto [values, vectors] = linalg::sym_eig(cov);
  CHECK(values.back() >= -1e-10);
}

TEST_CASE("covariance needs at least two rows") {
  CHECK_THROWS_AS(linalg::covariance(Matrix(1, 3)), ContractError);
}

}  // TEST_SUITE
