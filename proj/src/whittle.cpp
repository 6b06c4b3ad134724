#include "graphwhittle/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "graphwhittle/error.hpp"

namespace graphwhittle {

LikelihoodKind parse_likelihood_kind(const std::string& name) {
  if (name == "exact") return LikelihoodKind::exact;
  if (name == "bar") return LikelihoodKind::bar;
  if (name == "tilde") return LikelihoodKind::tilde;
  if (name == "unbiased") return LikelihoodKind::unbiased;
  throw Error(ErrorCode::InvalidParameter, "unknown likelihood kind '" + name + "'");
}

std::string to_string(LikelihoodKind kind) {
  switch (kind) {
    case LikelihoodKind::exact: return "exact";
    case LikelihoodKind::bar: return "bar";
    case LikelihoodKind::tilde: return "tilde";
    case LikelihoodKind::unbiased: return "unbiased";
  }
  return "?";
}

EstimationContext::EstimationContext(ParametricDensity family, const Graph& host, VertexSet subset,
                                     SpectralMeasure mu, int truncation_order,
                                     std::optional<CorrectionMatrix> correction)
    : family_(std::move(family)),
      subset_(std::move(subset)),
      mu_(std::move(mu)),
      truncation_(truncation_order),
      correction_(std::move(correction)) {
  if (truncation_ < 0) throw Error(ErrorCode::InvalidParameter, "negative truncation order");
  if (mu_.size() == 0) throw Error(ErrorCode::InvalidParameter, "empty spectral measure");
  int order = truncation_;
  if (auto p = family_.ar_order()) order = std::max(order, *p);
  powers_ = RestrictedPowers(host, subset_, order);
  padding_ok_ = padding_sufficient(host, subset_, order);

  if (correction_) {
    const auto& B = correction_->values;
    if (B.rows() != volume() || B.cols() != volume()) {
      throw Error(ErrorCode::InvalidParameter, "correction matrix shape does not match the subset");
    }
    for (Eigen::Index b = 0; b < B.cols(); ++b) {
      for (Eigen::Index a = 0; a < B.rows(); ++a) {
        if (B(a, b) != 1.0) offsets_.push_back(Offset{a, b, B(a, b) - 1.0});
      }
    }
  }

  const Interval& d = family_.domain();
  grid_.resize(kOptimizerGridPoints);
  grid_log_integral_.resize(kOptimizerGridPoints);
  for (int g = 0; g < kOptimizerGridPoints; ++g) {
    grid_[static_cast<std::size_t>(g)] =
        g == kOptimizerGridPoints - 1 ? d.hi : d.lo + d.width() * g / (kOptimizerGridPoints - 1);
    const double theta = grid_[static_cast<std::size_t>(g)];
    grid_log_integral_[static_cast<std::size_t>(g)] =
        integrate(mu_, [&](double x) { return family_.log_value(theta, x); });
  }
}

double EstimationContext::log_integral(double theta) const {
  auto it = std::lower_bound(grid_.begin(), grid_.end(), theta);
  if (it != grid_.end() && *it == theta) return grid_log_integral_[static_cast<std::size_t>(it - grid_.begin())];
  return integrate(mu_, [&](double x) { return family_.log_value(theta, x); });
}

Eigen::MatrixXd EstimationContext::covariance(double theta) const {
  return powers_.combine(family_.series(theta, truncation_));
}

double EstimationContext::correction_form(const Eigen::MatrixXd& A, const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (const Offset& o : offsets_) s += o.delta * A(o.a, o.b) * x[o.a] * x[o.b];
  return s;
}

LikelihoodEvaluator::LikelihoodEvaluator(const EstimationContext& ctx, const GaussianSample& sample)
    : ctx_(ctx), sample_(sample) {
  const auto& X = sample_.values;
  if (X.size() != ctx_.volume()) {
    throw Error(ErrorCode::InvalidParameter, "sample length " + std::to_string(X.size()) +
                                                 " does not match subgraph volume " + std::to_string(ctx_.volume()));
  }
  const int K = ctx_.powers().max_order();
  forms_.resize(static_cast<std::size_t>(K) + 1);
  corrected_forms_.resize(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    const auto& P = ctx_.powers()[k];
    const double q = X.dot(P * X);
    forms_[static_cast<std::size_t>(k)] = q;
    corrected_forms_[static_cast<std::size_t>(k)] = ctx_.correction() ? q + ctx_.correction_form(P, X) : q;
  }
}

const LikelihoodEvaluator::Factored& LikelihoodEvaluator::factored(double theta) {
  auto it = cache_.find(theta);
  if (it != cache_.end()) return it->second;
  const Eigen::MatrixXd K = ctx_.covariance(theta);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "K_n(f_theta) is not positive definite at theta = " + std::to_string(theta));
  }
  const auto& L = llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < K.rows(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
  const Eigen::VectorXd y = L.solve(sample_.values);
  return cache_.emplace(theta, Factored{logdet, y.squaredNorm()}).first->second;
}

double LikelihoodEvaluator::operator()(LikelihoodKind kind, double theta) {
  ctx_.family().check_theta(theta);
  const auto m = static_cast<double>(ctx_.volume());
  const double base = m * std::log(2.0 * std::numbers::pi);
  switch (kind) {
    case LikelihoodKind::exact: {
      const auto& f = factored(theta);
      return -0.5 * (base + f.logdet + f.quad);
    }
    case LikelihoodKind::bar: {
      const auto& f = factored(theta);
      return -0.5 * (base + m * ctx_.log_integral(theta) + f.quad);
    }
    case LikelihoodKind::tilde:
    case LikelihoodKind::unbiased: {
      if (kind == LikelihoodKind::unbiased && !ctx_.correction()) {
        throw Error(ErrorCode::InvalidParameter, "unbiased likelihood needs a correction matrix");
      }
      const int K = ctx_.powers().max_order();
      const PowerSeries inv = ctx_.family().inverse_series(theta, K);
      const auto& q = kind == LikelihoodKind::unbiased ? corrected_forms_ : forms_;
      double quad = 0.0;
      for (int k = 0; k <= K; ++k) quad += inv.coeff(k) * q[static_cast<std::size_t>(k)];
      return -0.5 * (base + m * ctx_.log_integral(theta) + quad);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double log_likelihood(LikelihoodKind kind, double theta, const GaussianSample& x, const EstimationContext& ctx) {
  LikelihoodEvaluator eval(ctx, x);
  return eval(kind, theta);
}

nlohmann::ordered_json to_json(const EstimationResult& r) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(r.kind);
  j["theta_hat"] = r.theta_hat;
  j["std_error"] = r.std_error;
  j["loglik"] = r.loglik_at_max;
  j["n_evals"] = r.n_evals;
  j["bracket_lo"] = r.bracket_lo;
  j["bracket_hi"] = r.bracket_hi;
  j["jitter"] = r.jitter;
  j["warnings"] = r.warnings;
  return j;
}

EstimationResult maximize_likelihood(LikelihoodKind kind, LikelihoodEvaluator& eval, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidParameter, "optimizer tolerance must be positive");
  const EstimationContext& ctx = eval.context();
  const auto& grid = ctx.theta_grid();
  constexpr double kFailed = -std::numeric_limits<double>::infinity();

  EstimationResult res;
  res.kind = kind;
  res.jitter = eval.sample().factorization_jitter;
  std::string first_error;
  double best_theta = 0.0;
  double best_value = kFailed;

  auto evaluate = [&](double theta) {
    ++res.n_evals;
    double v = kFailed;
    try {
      v = eval(kind, theta);
      if (!std::isfinite(v)) v = kFailed;
    } catch (const Error& e) {
      if (first_error.empty()) first_error = e.what();
    }
    if (v > best_value) {
      best_value = v;
      best_theta = theta;
    }
    return v;
  };

  std::vector<double> values(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) values[g] = evaluate(grid[g]);
  if (best_value == kFailed) {
    throw Error(ErrorCode::EstimationFailed, "every grid evaluation failed: " + first_error);
  }
  if (!first_error.empty()) res.warnings.push_back("some likelihood evaluations failed: " + first_error);

  const auto b = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  double lo = grid[b == 0 ? 0 : b - 1];
  double hi = grid[std::min(b + 1, grid.size() - 1)];
  constexpr double phi = 0.6180339887498949;
  double c = hi - phi * (hi - lo);
  double d = lo + phi * (hi - lo);
  double fc = evaluate(c);
  double fd = evaluate(d);
  while (hi - lo > tol) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - phi * (hi - lo);
      fc = evaluate(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + phi * (hi - lo);
      fd = evaluate(d);
    }
  }
  res.theta_hat = best_theta;
  res.loglik_at_max = best_value;
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  const double range = ctx.family().domain().width();
  if (best_theta <= ctx.family().domain().lo + 1e-9 * range || best_theta >= ctx.family().domain().hi - 1e-9 * range) {
    res.warnings.push_back("maximum on the boundary of the parameter interval");
  }
  res.fisher = fisher_information(ctx.family(), best_theta, ctx.measure());
  if (res.fisher > 0.0) {
    res.std_error = 1.0 / std::sqrt(static_cast<double>(ctx.volume()) * res.fisher);
  } else {
    res.std_error = std::numeric_limits<double>::infinity();
    res.warnings.push_back("zero Fisher information at theta_hat");
  }
  if (!ctx.padding_ok()) res.warnings.push_back("host padding too small for the truncation order");
  return res;
}

EstimationResult maximize_likelihood(LikelihoodKind kind, const GaussianSample& x, const EstimationContext& ctx,
                                     double tol) {
  LikelihoodEvaluator eval(ctx, x);
  return maximize_likelihood(kind, eval, tol);
}

double fisher_information(const ParametricDensity& family, double theta, const SpectralMeasure& mu) {
  return 0.5 * integrate(mu, [&](double x) {
           const double r = family.dtheta_value(theta, x) / family.value(theta, x);
           return r * r;
         });
}

namespace {

double kullback_term(double f0, double f) {
  if (!(f0 > 0.0) || !(f > 0.0)) throw Error(ErrorCode::SingularDensity, "Kullback information needs positive densities");
  const double r = f0 / f;
  return -std::log(r) - 1.0 + r;
}

}  // namespace

double kullback_information(const PowerSeries& f0, const PowerSeries& f, const SpectralMeasure& mu) {
  return 0.5 * integrate(mu, [&](double x) { return kullback_term(f0(x), f(x)); });
}

double kullback_information(const ParametricDensity& family, double theta0, double theta, const SpectralMeasure& mu) {
  return 0.5 * integrate(mu, [&](double x) { return kullback_term(family.value(theta0, x), family.value(theta, x)); });
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidParameter, "quantile level must be in (0, 1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

ConfidenceInterval confidence_interval(const EstimationResult& res, double level, const Interval& domain) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidParameter, "confidence level must be in (0, 1)");
  if (!(res.fisher > 0.0) || !std::isfinite(res.std_error)) {
    throw Error(ErrorCode::DegenerateInformation, "zero Fisher information: no confidence interval");
  }
  const double half = normal_quantile(0.5 * (1.0 + level)) * res.std_error;
  ConfidenceInterval ci{res.theta_hat - half, res.theta_hat + half, false};
  if (ci.lo < domain.lo) {
    ci.lo = domain.lo;
    ci.clipped = true;
  }
  if (ci.hi > domain.hi) {
    ci.hi = domain.hi;
    ci.clipped = true;
  }
  return ci;
}

}  // namespace graphwhittle
