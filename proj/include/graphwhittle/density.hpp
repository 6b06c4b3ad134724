#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "graphwhittle/spectral.hpp"

namespace graphwhittle {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
};

enum class FamilyKind { ar_squared, ar1, ma_poly, constant, custom };

FamilyKind parse_family_kind(const std::string& name);
std::string to_string(FamilyKind kind);

/// One-parameter family theta -> f_theta of spectral densities on [-1, 1].
///
/// Closed-form families:
///   ar_squared  f = (1 - theta x)^-2     (1/f is a degree-2 polynomial)
///   ar1         f = (1 - theta x)^-1     (1/f is a degree-1 polynomial)
///   ma_poly     f = (1 + theta x)^2      (f is a degree-2 polynomial)
///   constant    f = theta                (white noise with variance theta)
/// Pointwise values are exact; `series` returns the power series truncated
/// at the requested order.
class ParametricDensity {
 public:
  using SeriesFn = std::function<PowerSeries(double theta, int order)>;

  static ParametricDensity ar_squared(Interval domain = {-0.9, 0.9});
  static ParametricDensity ar1(Interval domain = {-0.9, 0.9});
  static ParametricDensity ma_poly(Interval domain = {-0.9, 0.9});
  static ParametricDensity constant(Interval domain = {0.2, 5.0});
  /// User-supplied series; theta derivatives by central differences, values
  /// by evaluating the series at `eval_order`.
  static ParametricDensity custom(SeriesFn series, Interval domain, int eval_order = 60);

  FamilyKind kind() const { return kind_; }
  const Interval& domain() const { return domain_; }
  double rho() const { return rho_; }
  void set_rho(double rho) { rho_ = rho; }
  std::string name() const { return to_string(kind_); }

  PowerSeries series(double theta, int order) const;
  PowerSeries dtheta_series(double theta, int order) const;
  PowerSeries d2theta_series(double theta, int order) const;
  /// Power series of 1/f_theta (exact polynomial for the AR families).
  PowerSeries inverse_series(double theta, int order) const;

  double value(double theta, double x) const;
  double dtheta_value(double theta, double x) const;
  double log_value(double theta, double x) const { return std::log(value(theta, x)); }

  /// sum_{k > order} |f_k| when a closed form is known.
  std::optional<double> tail_bound(double theta, int order) const;
  /// Degree P of 1/f_theta when it is a polynomial for every theta (AR_P case).
  std::optional<int> ar_order() const;
  /// Degree P of f_theta when it is a polynomial for every theta (MA_P case).
  std::optional<int> ma_order() const;
  /// alpha(log f_theta), closed form where available.
  double log_regularity(double theta) const;

  void check_theta(double theta) const;

 private:
  FamilyKind kind_ = FamilyKind::custom;
  Interval domain_;
  double rho_ = 0.0;
  SeriesFn custom_series_;
  int eval_order_ = 60;
};

/// max over a 101-point theta grid of alpha(log f_theta), plus 10% headroom.
double default_rho(const ParametricDensity& family);

struct FamilyCheck {
  bool injective = true;
  bool positive = true;
  bool within_rho = true;
  double min_value = 0.0;
  double max_log_regularity = 0.0;
  bool ok() const { return injective && positive && within_rho; }
};

/// Grid surrogate for the family assumptions: injectivity (coefficient
/// comparison on 101 theta values, tol 1e-12), positivity on a lambda grid,
/// and alpha(log f_theta) <= rho.
FamilyCheck check_family(const ParametricDensity& family, int order = 15);

}  // namespace graphwhittle
