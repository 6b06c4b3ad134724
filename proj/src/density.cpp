#include "graphwhittle/density.hpp"

#include <algorithm>
#include <cmath>

#include "graphwhittle/error.hpp"

namespace graphwhittle {

FamilyKind parse_family_kind(const std::string& name) {
  if (name == "ar_squared") return FamilyKind::ar_squared;
  if (name == "ar1") return FamilyKind::ar1;
  if (name == "ma_poly") return FamilyKind::ma_poly;
  if (name == "constant") return FamilyKind::constant;
  if (name == "custom") return FamilyKind::custom;
  throw Error(ErrorCode::InvalidParameter, "unknown density family '" + name + "'");
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::ar_squared: return "ar_squared";
    case FamilyKind::ar1: return "ar1";
    case FamilyKind::ma_poly: return "ma_poly";
    case FamilyKind::constant: return "constant";
    case FamilyKind::custom: return "custom";
  }
  return "?";
}

namespace {

void check_domain(const Interval& d, double open_bound) {
  if (!(d.lo < d.hi)) throw Error(ErrorCode::InvalidParameter, "parameter interval must have lo < hi");
  if (open_bound > 0.0 && (d.lo <= -open_bound || d.hi >= open_bound)) {
    throw Error(ErrorCode::InvalidParameter, "parameter interval must lie strictly inside (-1, 1)");
  }
}

ParametricDensity with_rho(ParametricDensity f) {
  f.set_rho(default_rho(f));
  return f;
}

}  // namespace

ParametricDensity ParametricDensity::ar_squared(Interval domain) {
  check_domain(domain, 1.0);
  ParametricDensity f;
  f.kind_ = FamilyKind::ar_squared;
  f.domain_ = domain;
  return with_rho(f);
}

ParametricDensity ParametricDensity::ar1(Interval domain) {
  check_domain(domain, 1.0);
  ParametricDensity f;
  f.kind_ = FamilyKind::ar1;
  f.domain_ = domain;
  return with_rho(f);
}

ParametricDensity ParametricDensity::ma_poly(Interval domain) {
  check_domain(domain, 1.0);
  ParametricDensity f;
  f.kind_ = FamilyKind::ma_poly;
  f.domain_ = domain;
  return with_rho(f);
}

ParametricDensity ParametricDensity::constant(Interval domain) {
  check_domain(domain, 0.0);
  if (domain.lo <= 0.0) throw Error(ErrorCode::InvalidParameter, "constant family needs a positive interval");
  ParametricDensity f;
  f.kind_ = FamilyKind::constant;
  f.domain_ = domain;
  return with_rho(f);
}

ParametricDensity ParametricDensity::custom(SeriesFn series, Interval domain, int eval_order) {
  check_domain(domain, 0.0);
  if (!series) throw Error(ErrorCode::InvalidParameter, "custom family needs a series function");
  ParametricDensity f;
  f.kind_ = FamilyKind::custom;
  f.domain_ = domain;
  f.custom_series_ = std::move(series);
  f.eval_order_ = eval_order;
  return with_rho(f);
}

void ParametricDensity::check_theta(double theta) const {
  if (!std::isfinite(theta) || !domain_.contains(theta)) {
    throw Error(ErrorCode::Domain, "theta = " + std::to_string(theta) + " outside [" +
                                       std::to_string(domain_.lo) + ", " + std::to_string(domain_.hi) + "]");
  }
}

PowerSeries ParametricDensity::series(double theta, int order) const {
  if (order < 0) throw Error(ErrorCode::InvalidParameter, "negative truncation order");
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  switch (kind_) {
    case FamilyKind::ar_squared: {
      double p = 1.0;
      for (int k = 0; k <= order; ++k, p *= theta) c[k] = (k + 1) * p;
      break;
    }
    case FamilyKind::ar1: {
      double p = 1.0;
      for (int k = 0; k <= order; ++k, p *= theta) c[k] = p;
      break;
    }
    case FamilyKind::ma_poly:
      c[0] = 1.0;
      if (order >= 1) c[1] = 2.0 * theta;
      if (order >= 2) c[2] = theta * theta;
      break;
    case FamilyKind::constant:
      c[0] = theta;
      break;
    case FamilyKind::custom:
      return custom_series_(theta, order).truncated(order);
  }
  return PowerSeries(std::move(c));
}

namespace {

constexpr double kDiffStep = 1e-5;

}  // namespace

PowerSeries ParametricDensity::dtheta_series(double theta, int order) const {
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  switch (kind_) {
    case FamilyKind::ar_squared: {
      double p = 1.0;  // theta^(k-1)
      for (int k = 1; k <= order; ++k, p *= theta) c[k] = k * (k + 1) * p;
      break;
    }
    case FamilyKind::ar1: {
      double p = 1.0;
      for (int k = 1; k <= order; ++k, p *= theta) c[k] = k * p;
      break;
    }
    case FamilyKind::ma_poly:
      if (order >= 1) c[1] = 2.0;
      if (order >= 2) c[2] = 2.0 * theta;
      break;
    case FamilyKind::constant:
      c[0] = 1.0;
      break;
    case FamilyKind::custom: {
      const double h = kDiffStep;
      return (1.0 / (2.0 * h)) * (series(theta + h, order) - series(theta - h, order));
    }
  }
  return PowerSeries(std::move(c));
}

PowerSeries ParametricDensity::d2theta_series(double theta, int order) const {
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  switch (kind_) {
    case FamilyKind::ar_squared: {
      double p = 1.0;  // theta^(k-2)
      for (int k = 2; k <= order; ++k, p *= theta) c[k] = (k + 1) * k * (k - 1) * p;
      break;
    }
    case FamilyKind::ar1: {
      double p = 1.0;
      for (int k = 2; k <= order; ++k, p *= theta) c[k] = k * (k - 1) * p;
      break;
    }
    case FamilyKind::ma_poly:
      if (order >= 2) c[2] = 2.0;
      break;
    case FamilyKind::constant:
      break;
    case FamilyKind::custom: {
      const double h = 1e-4;
      return (1.0 / (h * h)) * (series(theta + h, order) - 2.0 * series(theta, order) + series(theta - h, order));
    }
  }
  return PowerSeries(std::move(c));
}

PowerSeries ParametricDensity::inverse_series(double theta, int order) const {
  switch (kind_) {
    case FamilyKind::ar_squared:
      return PowerSeries({1.0, -2.0 * theta, theta * theta}).truncated(std::max(order, 2));
    case FamilyKind::ar1:
      return PowerSeries({1.0, -theta}).truncated(std::max(order, 1));
    case FamilyKind::constant:
      return PowerSeries::constant(1.0 / theta).truncated(order);
    case FamilyKind::ma_poly:
      return series_reciprocal(series(theta, 2), order);
    case FamilyKind::custom:
      return series_reciprocal(series(theta, eval_order_), order);
  }
  return {};
}

double ParametricDensity::value(double theta, double x) const {
  switch (kind_) {
    case FamilyKind::ar_squared: {
      const double d = 1.0 - theta * x;
      return 1.0 / (d * d);
    }
    case FamilyKind::ar1: return 1.0 / (1.0 - theta * x);
    case FamilyKind::ma_poly: {
      const double d = 1.0 + theta * x;
      return d * d;
    }
    case FamilyKind::constant: return theta;
    case FamilyKind::custom: return custom_series_(theta, eval_order_)(x);
  }
  return 0.0;
}

double ParametricDensity::dtheta_value(double theta, double x) const {
  switch (kind_) {
    case FamilyKind::ar_squared: {
      const double d = 1.0 - theta * x;
      return 2.0 * x / (d * d * d);
    }
    case FamilyKind::ar1: {
      const double d = 1.0 - theta * x;
      return x / (d * d);
    }
    case FamilyKind::ma_poly: return 2.0 * x * (1.0 + theta * x);
    case FamilyKind::constant: return 1.0;
    case FamilyKind::custom: {
      const double h = kDiffStep;
      return (value(theta + h, x) - value(theta - h, x)) / (2.0 * h);
    }
  }
  return 0.0;
}

std::optional<double> ParametricDensity::tail_bound(double theta, int order) const {
  const double q = std::abs(theta);
  const double K = order;
  switch (kind_) {
    case FamilyKind::ar_squared:
      return ((K + 2) * std::pow(q, K + 1) - (K + 1) * std::pow(q, K + 2)) / ((1 - q) * (1 - q));
    case FamilyKind::ar1: return std::pow(q, K + 1) / (1 - q);
    case FamilyKind::ma_poly: return order >= 2 ? 0.0 : (order == 1 ? q * q : 2 * q + q * q);
    case FamilyKind::constant: return 0.0;
    case FamilyKind::custom: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<int> ParametricDensity::ar_order() const {
  switch (kind_) {
    case FamilyKind::ar_squared: return 2;
    case FamilyKind::ar1: return 1;
    case FamilyKind::constant: return 0;
    default: return std::nullopt;
  }
}

std::optional<int> ParametricDensity::ma_order() const {
  switch (kind_) {
    case FamilyKind::ma_poly: return 2;
    case FamilyKind::constant: return 0;
    default: return std::nullopt;
  }
}

double ParametricDensity::log_regularity(double theta) const {
  const double q = std::abs(theta);
  // log(1 -/+ q x) has coefficients q^k / k, so alpha = sum_k q^k (k+1)/k
  const auto log_series_alpha = [](double q) { return q / (1.0 - q) - std::log1p(-q); };
  switch (kind_) {
    case FamilyKind::ar_squared:
    case FamilyKind::ma_poly: return 2.0 * log_series_alpha(q);
    case FamilyKind::ar1: return log_series_alpha(q);
    case FamilyKind::constant: return std::abs(std::log(theta));
    case FamilyKind::custom:
      return regularity_factor(series_log(series(theta, eval_order_), eval_order_));
  }
  return 0.0;
}

double default_rho(const ParametricDensity& family) {
  const Interval& d = family.domain();
  double best = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double theta = d.lo + d.width() * i / 100.0;
    best = std::max(best, family.log_regularity(theta));
  }
  return 1.1 * best;
}

FamilyCheck check_family(const ParametricDensity& family, int order) {
  FamilyCheck out;
  const Interval& d = family.domain();
  std::vector<PowerSeries> grid;
  out.min_value = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    const double theta = d.lo + d.width() * i / 100.0;
    grid.push_back(family.series(theta, order));
    const double lo = grid_minimum([&](double x) { return family.value(theta, x); });
    out.min_value = std::min(out.min_value, lo);
    if (!(lo > 0.0)) out.positive = false;
    const double a = family.log_regularity(theta);
    out.max_log_regularity = std::max(out.max_log_regularity, a);
    if (a > family.rho()) out.within_rho = false;
  }
  for (std::size_t a = 0; a < grid.size() && out.injective; ++a) {
    for (std::size_t b = a + 1; b < grid.size(); ++b) {
      double diff = 0.0;
      for (int k = 0; k <= order; ++k) diff = std::max(diff, std::abs(grid[a].coeff(k) - grid[b].coeff(k)));
      if (diff <= 1e-12) {
        out.injective = false;
        break;
      }
    }
  }
  return out;
}

}  // namespace graphwhittle
