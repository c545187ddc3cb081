#pragma once

#include <filesystem>
#include <string>

#include "vsum/linalg.hpp"

namespace vsum::adapt {

// Linear feature-space map aligning a source dataset's second-order
// statistics with a target's. Applied as row-vector times matrix.
struct LinearTransform {
  linalg::Matrix matrix;  // d x d
  double ridge = 0.0;
  std::string fitted_on;  // "source->target" identifiers
};

// Suggested ridge for a covariance: 1e-3 * trace(C) / d.
double auto_ridge(const linalg::Matrix& cov);

// M = (C_s + ridge I)^{-1/2} (C_t + ridge I)^{1/2} through sym_eig. After the
// transform, source covariance matches target covariance up to the ridge.
LinearTransform fit_align(const linalg::Matrix& source_features,
                          const linalg::Matrix& target_features, double ridge,
                          std::string fitted_on = "");

linalg::FeatureSequence apply_transform(const LinearTransform& t,
                                        const linalg::FeatureSequence& x);

void save_transform(const std::filesystem::path& path, const LinearTransform& t);
LinearTransform load_transform(const std::filesystem::path& path);

}  // namespace vsum::adapt
