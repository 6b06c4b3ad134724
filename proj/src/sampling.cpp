#include "graphwhittle/sampling.hpp"

#include <cmath>
#include <ostream>

#include <boost/math/special_functions/erf.hpp>

#include "graphwhittle/error.hpp"

namespace graphwhittle {

CovarianceFactor factorize_covariance(const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols() || K.rows() == 0) {
    throw Error(ErrorCode::InvalidParameter, "covariance must be a nonempty square matrix");
  }
  const double scale = K.cwiseAbs().maxCoeff();
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "covariance matrix is not symmetric");
  }
  const auto m = K.rows();
  const double mean_diag = K.trace() / static_cast<double>(m);
  CovarianceFactor out;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() == Eigen::Success) {
    out.L = llt.matrixL();
    return out;
  }
  for (int p = 0; p <= 6; ++p) {
    const double jitter = mean_diag * 1e-12 * std::pow(10.0, p);
    Eigen::MatrixXd shifted = K;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      out.L = llt.matrixL();
      out.jitter = jitter;
      return out;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, Eigen::EigenvaluesOnly);
  throw Error(ErrorCode::NotPositiveDefinite,
              "covariance is not positive definite (min eigenvalue " + std::to_string(eig.eigenvalues().minCoeff()) +
                  ", jitter ceiling " + std::to_string(mean_diag * 1e-6) + ")");
}

namespace {

constexpr std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

double keyed_normal(std::uint64_t seed, std::uint64_t replicate, std::uint64_t coordinate) {
  std::uint64_t x = mix(seed + 0x9E3779B97F4A7C15ULL);
  x = mix(x ^ (replicate * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  x = mix(x ^ (coordinate * 0xAEF17502108EF2D9ULL + 0x2545F4914F6CDD1DULL));
  const double u = (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;  // in (0, 1)
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

std::vector<GaussianSample> sample_field(const CovarianceFactor& factor, std::uint64_t seed, std::size_t count,
                                         std::uint64_t first_replicate, double theta0) {
  const auto m = factor.L.rows();
  std::vector<GaussianSample> out;
  out.reserve(count);
  Eigen::VectorXd z(m);
  for (std::size_t r = 0; r < count; ++r) {
    const std::uint64_t rep = first_replicate + r;
    for (Eigen::Index i = 0; i < m; ++i) z[i] = keyed_normal(seed, rep, static_cast<std::uint64_t>(i));
    GaussianSample s;
    s.values = factor.L.triangularView<Eigen::Lower>() * z;
    s.seed = seed;
    s.replicate = rep;
    s.theta0 = theta0;
    s.factorization_jitter = factor.jitter;
    out.push_back(std::move(s));
  }
  return out;
}

void write_samples_csv(std::ostream& out, std::span<const GaussianSample> samples, std::span<const Vertex> ids) {
  out << "replicate";
  for (Vertex v : ids) out << ',' << v;
  out << '\n';
  const auto old = out.precision(17);
  for (const auto& s : samples) {
    if (static_cast<std::size_t>(s.values.size()) != ids.size()) {
      throw Error(ErrorCode::InvalidParameter, "sample length does not match the vertex list");
    }
    out << s.replicate;
    for (Eigen::Index i = 0; i < s.values.size(); ++i) out << ',' << s.values[i];
    out << '\n';
  }
  out.precision(old);
}

}  // namespace graphwhittle
