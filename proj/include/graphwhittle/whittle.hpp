#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "graphwhittle/covariance.hpp"
#include "graphwhittle/density.hpp"
#include "graphwhittle/sampling.hpp"

namespace graphwhittle {

/// exact: L_n; bar: Whittle log-det with exact inverse; tilde: Whittle log-det
/// with K_n(1/f); unbiased: Whittle log-det with Q_n(1/f) = B (.) K_n(1/f).
enum class LikelihoodKind { exact, bar, tilde, unbiased };

LikelihoodKind parse_likelihood_kind(const std::string& name);
std::string to_string(LikelihoodKind kind);

inline constexpr int kOptimizerGridPoints = 64;

/// Everything a likelihood evaluation needs besides the data; read-only
/// after construction and safe to share between workers.
class EstimationContext {
 public:
  EstimationContext(ParametricDensity family, const Graph& host, VertexSet subset, SpectralMeasure mu,
                    int truncation_order = 15, std::optional<CorrectionMatrix> correction = std::nullopt);

  const ParametricDensity& family() const { return family_; }
  const VertexSet& subset() const { return subset_; }
  Eigen::Index volume() const { return static_cast<Eigen::Index>(subset_.size()); }
  const SpectralMeasure& measure() const { return mu_; }
  int truncation_order() const { return truncation_; }
  const RestrictedPowers& powers() const { return powers_; }
  const std::optional<CorrectionMatrix>& correction() const { return correction_; }
  bool padding_ok() const { return padding_ok_; }

  /// The optimizer's theta grid over the parameter interval.
  const std::vector<double>& theta_grid() const { return grid_; }
  /// int log f_theta dmu (cached on the optimizer grid).
  double log_integral(double theta) const;
  /// K_n(f_theta) with the series truncated at the context's order.
  Eigen::MatrixXd covariance(double theta) const;
  /// sum of (B_ij - 1) A_ij x_i x_j over the pairs where B differs from 1.
  double correction_form(const Eigen::MatrixXd& A, const Eigen::VectorXd& x) const;

 private:
  struct Offset {
    Eigen::Index a;
    Eigen::Index b;
    double delta;
  };

  ParametricDensity family_;
  VertexSet subset_;
  SpectralMeasure mu_;
  int truncation_;
  RestrictedPowers powers_;
  std::optional<CorrectionMatrix> correction_;
  std::vector<Offset> offsets_;
  std::vector<double> grid_;
  std::vector<double> grid_log_integral_;
  bool padding_ok_ = true;
};

/// Per-sample evaluator: caches the quadratic forms X^T (W^k)_n X and the
/// Cholesky-based terms so several kinds can share work on one sample.
class LikelihoodEvaluator {
 public:
  LikelihoodEvaluator(const EstimationContext& ctx, const GaussianSample& sample);

  double operator()(LikelihoodKind kind, double theta);
  const GaussianSample& sample() const { return sample_; }
  const EstimationContext& context() const { return ctx_; }

 private:
  struct Factored {
    double logdet;
    double quad;
  };
  const Factored& factored(double theta);

  const EstimationContext& ctx_;
  GaussianSample sample_;
  std::vector<double> forms_;            // X^T (W^k)_n X
  std::vector<double> corrected_forms_;  // X^T (B (.) (W^k)_n) X
  std::map<double, Factored> cache_;
};

double log_likelihood(LikelihoodKind kind, double theta, const GaussianSample& x, const EstimationContext& ctx);

struct EstimationResult {
  LikelihoodKind kind = LikelihoodKind::exact;
  double theta_hat = 0.0;
  double loglik_at_max = 0.0;
  double std_error = 0.0;
  double fisher = 0.0;  // J(theta_hat)
  std::size_t n_evals = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double jitter = 0.0;
  std::vector<std::string> warnings;
};

nlohmann::ordered_json to_json(const EstimationResult& r);

/// 64-point grid over the parameter interval, then golden-section refinement
/// of the best grid bracket down to width <= tol.
EstimationResult maximize_likelihood(LikelihoodKind kind, LikelihoodEvaluator& eval, double tol = 1e-4);
EstimationResult maximize_likelihood(LikelihoodKind kind, const GaussianSample& x, const EstimationContext& ctx,
                                     double tol = 1e-4);

/// J(theta) = 1/2 int (f'_theta / f_theta)^2 dmu
double fisher_information(const ParametricDensity& family, double theta, const SpectralMeasure& mu);

/// IK(f0, f) = 1/2 int (-log(f0/f) - 1 + f0/f) dmu
double kullback_information(const PowerSeries& f0, const PowerSeries& f, const SpectralMeasure& mu);
double kullback_information(const ParametricDensity& family, double theta0, double theta, const SpectralMeasure& mu);

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool clipped = false;
};

/// Standard normal quantile.
double normal_quantile(double p);

/// theta_hat +/- z_{(1+level)/2} * std_error, clipped to the domain.
ConfidenceInterval confidence_interval(const EstimationResult& res, double level, const Interval& domain);

}  // namespace graphwhittle
