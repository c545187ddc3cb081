#pragma once

// Independent oracles used by the test suites. These deliberately take the
// dumbest correct route (triple loops, cofactor expansion, enumeration) so
// they share no code with the implementations they check.

#include <cmath>
#include <random>
#include <vector>

#include "vsum/linalg.hpp"
#include "vsum/temporal.hpp"

namespace oracles {

using vsum::linalg::Matrix;

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
      out.at(i, j) = acc;
    }
  return out;
}

// Laplace expansion along the first row; fine for n <= 10.
inline double cofactor_det(const Matrix& m) {
  const int n = m.rows;
  if (n == 0) return 1.0;
  if (n == 1) return m.at(0, 0);
  double det = 0.0;
  for (int j = 0; j < n; ++j) {
    Matrix minor(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int c = 0; c < n; ++c) {
        if (c == j) continue;
        minor.at(r - 1, cc++) = m.at(r, c);
      }
    }
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    det += sign * m.at(0, j) * cofactor_det(minor);
  }
  return det;
}

inline Matrix two_pass_covariance(const Matrix& x) {
  const int n = x.rows;
  const int d = x.cols;
  std::vector<double> mean(d, 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) mean[c] += x.at(r, c) / n;
  Matrix cov(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int r = 0; r < n; ++r) acc += (x.at(r, i) - mean[i]) * (x.at(r, j) - mean[j]);
      cov.at(i, j) = acc / (n - 1);
    }
  return cov;
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (double& v : m.data) v = dist(rng);
  return m;
}

// G^T G is PSD; shift makes it comfortably positive definite when asked.
inline Matrix random_psd(int n, std::mt19937_64& rng, double diag_shift = 0.0) {
  const Matrix g = random_matrix(n, n, rng);
  Matrix m = naive_matmul(vsum::linalg::transpose(g), g);
  for (int i = 0; i < n; ++i) m.at(i, i) += diag_shift;
  return m;
}

struct BruteKnapsackResult {
  double value = 0.0;
  int duration = 0;
  std::vector<int> picks;
};

// Enumerates all subsets; keeps (max value, min duration, lexicographically
// smallest index set).
inline BruteKnapsackResult brute_knapsack(const std::vector<vsum::temporal::KnapsackItem>& items,
                                          int budget) {
  const int n = static_cast<int>(items.size());
  BruteKnapsackResult best;
  std::vector<int> current;
  // lexicographic pre-order over index sets, first hit wins ties
  auto rec = [&](auto&& self, int start, double value, int duration) -> void {
    if (value > best.value || (value == best.value && duration < best.duration)) {
      best.value = value;
      best.duration = duration;
      best.picks = current;
    }
    for (int i = start; i < n; ++i) {
      if (duration + items[i].duration > budget) continue;
      current.push_back(i);
      self(self, i + 1, value + items[i].value, duration + items[i].duration);
      current.pop_back();
    }
  };
  rec(rec, 0, 0.0, 0);
  return best;
}

}  // namespace oracles
