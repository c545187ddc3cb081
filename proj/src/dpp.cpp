#include "vsum/dpp.hpp"

#include <algorithm>
#include <cmath>

namespace vsum::dpp {

void validate_subset(const SubsetIndex& z, int ground_size) {
  for (size_t i = 0; i < z.size(); ++i) {
    if (z[i] < 0 || z[i] >= ground_size) throw ContractError("dpp: subset index out of range");
    if (i > 0 && z[i] <= z[i - 1]) throw ContractError("dpp: subset must be sorted and distinct");
  }
}

void validate(const DppKernel& k) {
  if (k.l.rows != k.l.cols) throw ShapeError("dpp: kernel must be square");
  if (!linalg::is_symmetric(k.l)) throw ShapeError("dpp: kernel must be symmetric");
}

void validate_psd(const DppKernel& k) {
  validate(k);
  const auto [eigenvalues, vectors] = linalg::sym_eig(k.l);
  (void)vectors;
  if (!eigenvalues.empty() && eigenvalues.back() < -1e-9)
    throw NumericError("dpp: kernel has eigenvalue below -1e-9");
}

linalg::Matrix principal_minor(const linalg::Matrix& m, const SubsetIndex& z) {
  const int k = static_cast<int>(z.size());
  linalg::Matrix minor(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) minor.at(i, j) = m.at(z[i], z[j]);
  return minor;
}

namespace {

linalg::Matrix plus_identity(const linalg::Matrix& l) {
  linalg::Matrix m = l;
  for (int i = 0; i < m.rows; ++i) m.at(i, i) += 1.0;
  return m;
}

}  // namespace

double dpp_log_prob(const DppKernel& k, const SubsetIndex& z) {
  validate(k);
  validate_subset(z, k.size());
  const double denom = linalg::logdet_psd(plus_identity(k.l), k.jitter);
  if (z.empty()) return -denom;

  double numer;
  try {
    numer = linalg::logdet_psd(principal_minor(k.l, z), 0.0);
  } catch (const NumericError&) {
    return kLogZeroFloor;  // singular minor: probability zero
  }
  return std::max(numer - denom, kLogZeroFloor);
}

linalg::Matrix dpp_nll_grad(const DppKernel& k, const SubsetIndex& z) {
  validate(k);
  validate_subset(z, k.size());
  const int n = k.size();
  linalg::Matrix grad = linalg::psd_inverse(plus_identity(k.l), k.jitter);

  if (!z.empty()) {
    linalg::Matrix minor_inv;
    try {
      minor_inv = linalg::psd_inverse(principal_minor(k.l, z), k.jitter);
    } catch (const NumericError&) {
      throw NumericError("dpp_nll_grad: target minor singular even after jitter ladder");
    }
    for (size_t i = 0; i < z.size(); ++i)
      for (size_t j = 0; j < z.size(); ++j)
        grad.at(z[i], z[j]) -= minor_inv.at(static_cast<int>(i), static_cast<int>(j));
  }

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (grad.at(i, j) + grad.at(j, i));
      grad.at(i, j) = v;
      grad.at(j, i) = v;
    }
  return grad;
}

SubsetIndex map_greedy(const DppKernel& k) {
  validate(k);
  const int n = k.size();
  SubsetIndex selected;
  linalg::Matrix lower(0, 0);  // growing Cholesky factor of L_selected
  std::vector<char> in_set(n, 0);

  while (static_cast<int>(selected.size()) < n) {
    const int m = static_cast<int>(selected.size());
    int best_j = -1;
    double best_gain = 0.0;
    double best_pivot = 0.0;
    std::vector<double> best_solve;

    std::vector<double> column(m), solve(m);
    for (int j = 0; j < n; ++j) {
      if (in_set[j]) continue;
      for (int i = 0; i < m; ++i) column[i] = k.l.at(selected[i], j);
      // forward substitution against the current factor
      double cross = 0.0;
      for (int i = 0; i < m; ++i) {
        double s = column[i];
        for (int t = 0; t < i; ++t) s -= lower.at(i, t) * solve[t];
        solve[i] = s / lower.at(i, i);
        cross += solve[i] * solve[i];
      }
      const double pivot = k.l.at(j, j) - cross;
      if (!(pivot > 0.0)) continue;
      const double gain = std::log(pivot);
      if (gain > best_gain) {
        best_gain = gain;
        best_j = j;
        best_pivot = pivot;
        best_solve.assign(solve.begin(), solve.begin() + m);
      }
    }
    if (best_j < 0) break;  // no strictly positive gain remains

    linalg::Matrix grown(m + 1, m + 1);
    for (int i = 0; i < m; ++i)
      for (int t = 0; t <= i; ++t) grown.at(i, t) = lower.at(i, t);
    for (int t = 0; t < m; ++t) grown.at(m, t) = best_solve[t];
    grown.at(m, m) = std::sqrt(best_pivot);
    lower = std::move(grown);
    selected.push_back(best_j);
    in_set[best_j] = 1;
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

namespace {

// Pre-order DFS over subsets in lexicographic order; calls fn on every
// non-empty subset exactly once.
template <typename Fn>
void for_each_subset(int n, Fn&& fn) {
  SubsetIndex current;
  auto rec = [&](auto&& self, int start) -> void {
    for (int j = start; j < n; ++j) {
      current.push_back(j);
      fn(current);
      self(self, j + 1);
      current.pop_back();
    }
  };
  rec(rec, 0);
}

}  // namespace

SubsetIndex map_exhaustive(const DppKernel& k) {
  validate(k);
  if (k.size() > 20) throw ContractError("map_exhaustive: kernel larger than the 20-frame guard");
  SubsetIndex best;  // empty set, det = 1
  double best_det = 1.0;
  for_each_subset(k.size(), [&](const SubsetIndex& z) {
    const double det = linalg::determinant(principal_minor(k.l, z));
    if (det > best_det) {
      best_det = det;
      best = z;
    }
  });
  return best;
}

double normalization_check(const DppKernel& k) {
  validate(k);
  if (k.size() > 16) throw ContractError("normalization_check: kernel larger than the 16-frame guard");
  double sum = 1.0;  // det of the empty subset
  for_each_subset(k.size(), [&](const SubsetIndex& z) {
    sum += linalg::determinant(principal_minor(k.l, z));
  });
  const double denom = linalg::determinant(plus_identity(k.l));
  return std::abs(sum - denom) / denom;
}

}  // namespace vsum::dpp
