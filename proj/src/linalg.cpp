#include "vsum/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace vsum::linalg {

Matrix::Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != static_cast<size_t>(r) * c)
    throw ShapeError("matrix data length does not match rows*cols");
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (size_t i = 0; i < d.size(); ++i) m.at(static_cast<int>(i), static_cast<int>(i)) = d[i];
  return m;
}

bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) t.at(c, r) = m.at(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
      double* orow = out.data.data() + static_cast<size_t>(i) * out.cols;
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> v) {
  if (m.cols != static_cast<int>(v.size())) throw ShapeError("matvec: dimension mismatch");
  std::vector<double> out(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.data.data() + static_cast<size_t>(r) * m.cols;
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.data) v = std::max(v, std::abs(x));
  return v;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data) s += x * x;
  return std::sqrt(s);
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("frobenius_distance: shapes differ");
  double s = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return std::sqrt(s);
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.data.begin(), m.data.end(), [](double x) { return std::isfinite(x); });
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows != m.cols) return false;
  const double tol = rel_tol * std::max(1.0, max_abs(m));
  for (int r = 0; r < m.rows; ++r)
    for (int c = r + 1; c < m.cols; ++c)
      if (std::abs(m.at(r, c) - m.at(c, r)) > tol) return false;
  return true;
}

namespace {

// Plain Cholesky; fails (nullopt) on a pivot at or below the noise floor, so
// exactly singular matrices do not sneak through on rounding error.
std::optional<Matrix> try_cholesky(const Matrix& m, double shift) {
  const int n = m.rows;
  double max_diag = 0.0;
  for (int j = 0; j < n; ++j) max_diag = std::max(max_diag, std::abs(m.at(j, j) + shift));
  const double pivot_floor = n * std::numeric_limits<double>::epsilon() * max_diag;
  Matrix lower(n, n);
  for (int j = 0; j < n; ++j) {
    double d = m.at(j, j) + shift;
    for (int k = 0; k < j; ++k) d -= lower.at(j, k) * lower.at(j, k);
    if (!(d > pivot_floor) || !std::isfinite(d)) return std::nullopt;
    const double ljj = std::sqrt(d);
    lower.at(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = m.at(i, j);
      for (int k = 0; k < j; ++k) s -= lower.at(i, k) * lower.at(j, k);
      lower.at(i, j) = s / ljj;
    }
  }
  return lower;
}

}  // namespace

CholeskyFactor cholesky_psd(const Matrix& m, double jitter) {
  if (m.rows != m.cols) throw ShapeError("cholesky_psd: matrix not square");
  if (!is_symmetric(m)) throw ShapeError("cholesky_psd: matrix not symmetric");
  if (m.rows == 0) return {Matrix(0, 0), 0.0};

  if (auto lower = try_cholesky(m, 0.0)) return {std::move(*lower), 0.0};
  if (jitter > 0.0) {
    for (double shift = jitter; shift <= 1e6 * jitter * (1 + 1e-12); shift *= 10.0) {
      if (auto lower = try_cholesky(m, shift)) return {std::move(*lower), shift};
    }
  }
  throw NumericError("cholesky_psd: matrix is not PSD (factorization failed at max jitter)");
}

double logdet(const CholeskyFactor& f) {
  double s = 0.0;
  for (int i = 0; i < f.lower.rows; ++i) s += std::log(f.lower.at(i, i));
  return 2.0 * s;
}

double logdet_psd(const Matrix& m, double jitter) { return logdet(cholesky_psd(m, jitter)); }

std::vector<double> cholesky_solve(const CholeskyFactor& f, std::span<const double> b) {
  const Matrix& l = f.lower;
  const int n = l.rows;
  if (static_cast<int>(b.size()) != n) throw ShapeError("cholesky_solve: dimension mismatch");
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l.at(i, k) * y[k];
    y[i] = s / l.at(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= l.at(k, i) * y[k];
    y[i] = s / l.at(i, i);
  }
  return y;
}

Matrix psd_inverse(const Matrix& m, double jitter) {
  const CholeskyFactor f = cholesky_psd(m, jitter);
  const int n = m.rows;
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    std::vector<double> col = cholesky_solve(f, e);
    for (int i = 0; i < n; ++i) inv.at(i, j) = col[i];
    e[j] = 0.0;
  }
  // the solve is exact up to rounding; enforce symmetry
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (inv.at(i, j) + inv.at(j, i));
      inv.at(i, j) = v;
      inv.at(j, i) = v;
    }
  return inv;
}

double determinant(const Matrix& m) {
  if (m.rows != m.cols) throw ShapeError("determinant: matrix not square");
  const int n = m.rows;
  if (n == 0) return 1.0;
  Matrix a = m;
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) pivot = r;
    if (a.at(pivot, col) == 0.0) return 0.0;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a.at(pivot, c), a.at(col, c));
      det = -det;
    }
    det *= a.at(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double factor = a.at(r, col) / a.at(col, col);
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) a.at(r, c) -= factor * a.at(col, c);
    }
  }
  return det;
}

std::pair<std::vector<double>, Matrix> sym_eig(const Matrix& m) {
  if (m.rows != m.cols) throw ShapeError("sym_eig: matrix not square");
  if (!is_symmetric(m, 1e-8)) throw ShapeError("sym_eig: matrix not symmetric");
  const int n = m.rows;
  Matrix a = m;
  Matrix v = Matrix::identity(n);

  auto off_diag_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += a.at(i, j) * a.at(i, j);
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  constexpr double kTol = 1e-12;
  for (int sweep = 0; sweep < kMaxSweeps && off_diag_norm() >= kTol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double app = a.at(p, p);
        const double aqq = a.at(q, q);
        const double theta = 0.5 * (aqq - app) / apq;
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a.at(k, p);
          const double akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a.at(p, k);
          const double aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v.at(k, p);
          const double vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a.at(i, i) > a.at(j, j); });

  std::vector<double> eigenvalues(n);
  Matrix vectors(n, n);
  for (int j = 0; j < n; ++j) {
    eigenvalues[j] = a.at(order[j], order[j]);
    for (int i = 0; i < n; ++i) vectors.at(i, j) = v.at(i, order[j]);
  }
  return {std::move(eigenvalues), std::move(vectors)};
}

Matrix covariance(const Matrix& x) {
  if (x.rows < 2) throw ContractError("covariance: need at least 2 rows of samples");
  const int n = x.rows;
  const int d = x.cols;
  std::vector<double> mean(d, 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) mean[c] += x.at(r, c);
  for (double& v : mean) v /= n;

  Matrix cov(d, d);
  std::vector<double> centered(d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) centered[c] = x.at(r, c) - mean[c];
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) cov.at(i, j) += centered[i] * centered[j];
  }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double v = cov.at(i, j) / (n - 1);
      cov.at(i, j) = v;
      cov.at(j, i) = v;
    }
  return cov;
}

}  // namespace vsum::linalg
