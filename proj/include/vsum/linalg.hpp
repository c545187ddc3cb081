#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vsum/common.hpp"

namespace vsum::linalg {

// Dense row-major matrix of doubles. Every model weight, DPP kernel and
// feature sequence in the project is one of these.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  Matrix(int r, int c, std::vector<double> d);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  std::span<const double> row(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
  std::span<double> row(int r) {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  static Matrix identity(int n);
  static Matrix diagonal(std::span<const double> d);
};

// A per-video sequence of frame features, rows = frames.
using FeatureSequence = Matrix;

// Result of a (possibly jittered) Cholesky factorization of a PSD matrix.
struct CholeskyFactor {
  Matrix lower;           // lower triangular, strictly positive diagonal
  double jitter_used = 0; // amount added to the diagonal to make it succeed
};

bool operator==(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& m, std::span<const double> v);

double max_abs(const Matrix& m);
double frobenius_norm(const Matrix& m);
double frobenius_distance(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);
bool is_symmetric(const Matrix& m, double rel_tol = 1e-9);

// Cholesky of a symmetric PSD matrix. Tries diagonal shifts
// {0, jitter, 10*jitter, ..., 1e6*jitter} in order and keeps the first that
// succeeds; jitter <= 0 means no shifts are allowed. Throws NumericError when
// the matrix is not PSD even at the largest shift.
CholeskyFactor cholesky_psd(const Matrix& m, double jitter);

// log det(m + jitter_used * I) via the Cholesky diagonal.
double logdet_psd(const Matrix& m, double jitter);
double logdet(const CholeskyFactor& f);

// Solves (L L^T) x = b given the lower factor.
std::vector<double> cholesky_solve(const CholeskyFactor& f, std::span<const double> b);

// Inverse of a symmetric PSD matrix through cholesky_psd.
Matrix psd_inverse(const Matrix& m, double jitter);

// Determinant by LU with partial pivoting; works for any square matrix,
// returns 0 for singular input.
double determinant(const Matrix& m);

// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
// eigenvalues sorted descending and the matching orthonormal eigenvectors as
// columns of the second element.
std::pair<std::vector<double>, Matrix> sym_eig(const Matrix& m);

// Unbiased sample covariance of the rows of x (divides by rows - 1).
// Symmetric by construction.
Matrix covariance(const Matrix& x);

// Default diagonal shift for near-singular PSD matrices.
inline constexpr double kDefaultJitter = 1e-10;

}  // namespace vsum::linalg
