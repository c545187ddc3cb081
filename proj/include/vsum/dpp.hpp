#pragma once

#include <vector>

#include "vsum/linalg.hpp"

namespace vsum::dpp {

// Symmetric PSD kernel over the frames of one video. P(z) = det(L_z) / det(L + I).
struct DppKernel {
  linalg::Matrix l;
  double jitter = linalg::kDefaultJitter;

  int size() const { return l.rows; }
};

// Sorted distinct frame indices in [0, T).
using SubsetIndex = std::vector<int>;

void validate_subset(const SubsetIndex& z, int ground_size);

// Checks kernel symmetry cheaply; the PSD bound (min eigenvalue >= -1e-9) is
// verified separately by validate_psd since it costs an eigendecomposition.
void validate(const DppKernel& k);
void validate_psd(const DppKernel& k);

linalg::Matrix principal_minor(const linalg::Matrix& m, const SubsetIndex& z);

// Log probability floor standing in for log(0) on degenerate subsets.
inline constexpr double kLogZeroFloor = -1e18;

// log det(L_z) - log det(L + I). The numerator is evaluated without jitter:
// a singular minor means probability zero and returns the floor.
double dpp_log_prob(const DppKernel& k, const SubsetIndex& z);

// d(-log P(z)) / dL = (L + I)^{-1} - pad(L_z^{-1}), symmetrized. The minor
// inverse uses the kernel's jitter ladder so training stays finite near
// singular kernels.
linalg::Matrix dpp_nll_grad(const DppKernel& k, const SubsetIndex& z);

// Forward greedy MAP: repeatedly adds the index with the largest strictly
// positive gain in log det(L_z); ties go to the smallest index.
SubsetIndex map_greedy(const DppKernel& k);

// Exact MAP by enumeration of all 2^T subsets (T <= 20). det(empty) = 1;
// ties resolved to the lexicographically smallest subset.
SubsetIndex map_exhaustive(const DppKernel& k);

// |sum_z det(L_z) - det(L + I)| / det(L + I), enumerated over all subsets
// (T <= 16). Zero up to rounding for any valid kernel.
double normalization_check(const DppKernel& k);

}  // namespace vsum::dpp
