#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "graphwhittle/covariance.hpp"

namespace graphwhittle {

/// Lower-triangular L with L L^T = K + jitter * I.
struct CovarianceFactor {
  Eigen::MatrixXd L;
  double jitter = 0.0;
};

/// Plain Cholesky first; on failure retries with jitter (trace/m) * 1e-12 * 10^p
/// up to (trace/m) * 1e-6, then throws NotPositiveDefinite.
CovarianceFactor factorize_covariance(const Eigen::MatrixXd& K);
inline CovarianceFactor factorize_covariance(const CovarianceMatrix& K) { return factorize_covariance(K.values); }

struct GaussianSample {
  Eigen::VectorXd values;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  double theta0 = 0.0;
  double factorization_jitter = 0.0;
};

/// Standard normal keyed by (seed, replicate, coordinate): a counter-based
/// hash to a 53-bit uniform, mapped through the inverse normal CDF.
double keyed_normal(std::uint64_t seed, std::uint64_t replicate, std::uint64_t coordinate);

/// Samples L z for replicates first_replicate .. first_replicate + count - 1.
/// Replicate r is identical whether drawn alone or inside a batch.
std::vector<GaussianSample> sample_field(const CovarianceFactor& factor, std::uint64_t seed, std::size_t count,
                                         std::uint64_t first_replicate = 0, double theta0 = 0.0);

/// One row per replicate, one column per vertex id (header "replicate,<ids>").
void write_samples_csv(std::ostream& out, std::span<const GaussianSample> samples, std::span<const Vertex> ids);

}  // namespace graphwhittle
