#include "vsum/adapt.hpp"

#include <cmath>

#include "vsum/io_util.hpp"

namespace vsum::adapt {

double auto_ridge(const linalg::Matrix& cov) {
  double trace = 0.0;
  for (int i = 0; i < cov.rows; ++i) trace += cov.at(i, i);
  return 1e-3 * trace / cov.rows;
}

namespace {

// C^{power} for symmetric PSD C, with a ridge added to the eigenvalues.
linalg::Matrix sym_power(const linalg::Matrix& cov, double ridge, double power) {
  auto [eigenvalues, vectors] = linalg::sym_eig(cov);
  const int d = cov.rows;
  linalg::Matrix scaled(d, d);
  for (int j = 0; j < d; ++j) {
    const double lam = std::max(eigenvalues[j], 0.0) + ridge;
    if (lam <= 0.0)
      throw NumericError("fit_align: rank-deficient covariance; a positive ridge is required");
    const double s = std::pow(lam, power);
    for (int i = 0; i < d; ++i) scaled.at(i, j) = vectors.at(i, j) * s;
  }
  return linalg::matmul(scaled, linalg::transpose(vectors));
}

}  // namespace

LinearTransform fit_align(const linalg::Matrix& source_features,
                          const linalg::Matrix& target_features, double ridge,
                          std::string fitted_on) {
  if (source_features.cols != target_features.cols)
    throw ShapeError("fit_align: feature dimensions differ");
  if (ridge < 0) throw ContractError("fit_align: ridge must be >= 0");

  const linalg::Matrix cov_s = linalg::covariance(source_features);
  const linalg::Matrix cov_t = linalg::covariance(target_features);

  LinearTransform t;
  t.matrix = linalg::matmul(sym_power(cov_s, ridge, -0.5), sym_power(cov_t, ridge, 0.5));
  t.ridge = ridge;
  t.fitted_on = std::move(fitted_on);
  return t;
}

linalg::FeatureSequence apply_transform(const LinearTransform& t,
                                        const linalg::FeatureSequence& x) {
  if (x.cols != t.matrix.rows) throw ShapeError("apply_transform: feature dim mismatch");
  return linalg::matmul(x, t.matrix);
}

namespace {
constexpr std::string_view kMagic = "VSTF";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_transform(const std::filesystem::path& path, const LinearTransform& t) {
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(t.matrix.rows));
  w.f64(t.ridge);
  w.str(t.fitted_on);
  for (double v : t.matrix.data) w.f64(v);
  io::atomic_write_file(path, w.buf);
}

LinearTransform load_transform(const std::filesystem::path& path) {
  const std::string data = io::read_file(path);
  io::ByteReader r(data, "transform " + path.string());
  r.expect_magic(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw VersionError("transform " + path.string() + ": unsupported version " +
                       std::to_string(version));
  LinearTransform t;
  const int d = static_cast<int>(r.u32());
  t.ridge = r.f64();
  t.fitted_on = r.str();
  t.matrix = linalg::Matrix(d, d);
  for (double& v : t.matrix.data) v = r.f64();
  r.expect_end();
  return t;
}

}  // namespace vsum::adapt
