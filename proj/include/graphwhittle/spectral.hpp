#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "graphwhittle/graph.hpp"

namespace graphwhittle {

/// Truncated power series f(x) = sum_k f_k x^k, evaluated on [-1, 1].
class PowerSeries {
 public:
  PowerSeries() : coeffs_{0.0} {}
  explicit PowerSeries(std::vector<double> coeffs);

  static PowerSeries constant(double c) { return PowerSeries({c}); }
  static PowerSeries monomial(int k, double c = 1.0);

  /// Truncation order K (number of coefficients minus one).
  int order() const { return static_cast<int>(coeffs_.size()) - 1; }
  double coeff(int k) const {
    return k >= 0 && k < static_cast<int>(coeffs_.size()) ? coeffs_[k] : 0.0;
  }
  const std::vector<double>& coeffs() const { return coeffs_; }

  double operator()(double x) const;
  /// Highest index with a nonzero coefficient (0 for the zero series).
  int degree() const;
  PowerSeries truncated(int order) const;

  friend PowerSeries operator+(const PowerSeries& a, const PowerSeries& b);
  friend PowerSeries operator-(const PowerSeries& a, const PowerSeries& b);
  friend PowerSeries operator*(double s, const PowerSeries& a);

 private:
  std::vector<double> coeffs_;
};

/// Cauchy product; truncated to `order` when given, otherwise exact.
PowerSeries series_multiply(const PowerSeries& f, const PowerSeries& g,
                            std::optional<int> order = std::nullopt);
/// 1/f to order K. Throws SingularDensity if f_0 == 0 or f changes sign on [-1, 1].
PowerSeries series_reciprocal(const PowerSeries& f, int order);
/// log f to order K. Throws SingularDensity unless f_0 > 0 and f > 0 on [-1, 1].
PowerSeries series_log(const PowerSeries& f, int order);
/// exp f to order K.
PowerSeries series_exp(const PowerSeries& f, int order);

/// alpha(f) = sum_k |f_k| (k + 1)
double regularity_factor(const PowerSeries& f);
/// sum_k |f_k|
double absolute_sum(const PowerSeries& f);

/// Minimum of f over an equispaced grid of [-1, 1].
double grid_minimum(const std::function<double(double)>& f, int points = 2001);

struct Atom {
  double lambda;
  double weight;
};

/// Discrete probability measure on [-1, 1]; atoms sorted by location.
class SpectralMeasure {
 public:
  SpectralMeasure() = default;
  /// Sorts, drops zero weights, rescales to total mass 1 and validates support.
  explicit SpectralMeasure(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double total_mass() const;
  /// int x^k dmu
  double moment(int k) const;

 private:
  std::vector<Atom> atoms_;
};

enum class MeasureMethod { eigen, moments };

struct MeasureOptions {
  MeasureMethod method = MeasureMethod::eigen;
  int moment_order = 40;
  int nodes = 0;  // Chebyshev extrema -cos(pi j / (nodes - 1)); 0 = 4 * (moment_order + 1) + 1
  bool require_padding = true;
};

/// eigen: eigenvalues of W restricted to the subset, weight 1/m each.
/// moments: nonnegative fit on Chebyshev nodes matching the Chebyshev moments
/// (1/m) sum_{i in subset} T_k(W)_ii, k <= moment_order, taken on the host.
SpectralMeasure empirical_spectral_measure(const Graph& host, std::span<const Vertex> subset,
                                           const MeasureOptions& options = {});

/// Eigenvalues (ascending) of the symmetric restriction W_{subset}.
std::vector<double> restricted_eigenvalues(const Graph& host, std::span<const Vertex> subset);

/// (1/m) Tr((W^k)_{subset}) for k = 0..max_order, powers taken on the host.
std::vector<double> trace_moments(const Graph& host, std::span<const Vertex> subset, int max_order);

double integrate(const SpectralMeasure& mu, const std::function<double(double)>& f);
double integrate(const SpectralMeasure& mu, const PowerSeries& f);

/// CSV "lambda,weight", 17 significant digits, sorted by lambda.
void write_measure_csv(std::ostream& out, const SpectralMeasure& mu);
SpectralMeasure read_measure_csv(std::istream& in);

}  // namespace graphwhittle
