#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "graphwhittle/covariance.hpp"
#include "graphwhittle/density.hpp"
#include "graphwhittle/graph.hpp"
#include "graphwhittle/spectral.hpp"

namespace graphwhittle {

enum class LemmaId { hom, det, unbiased_trace, correction, porosity, concentration };

std::string to_string(LemmaId id);

inline constexpr double kBoundSlack = 1e-9;

/// One numerical check: `passed` is measured <= bound + kBoundSlack.
struct LemmaReport {
  LemmaId lemma_id = LemmaId::hom;
  std::string instance;
  double measured = 0.0;
  double bound = 0.0;
  bool passed = false;
};

LemmaReport make_report(LemmaId id, std::string instance, double measured, double bound);

nlohmann::ordered_json to_json(const LemmaReport& r);
/// JSON lines, one report per line.
void write_reports(std::ostream& out, std::span<const LemmaReport> reports);

/// (1/delta) sum_{i,j} |B_ij|. Throws InvalidParameter when delta is 0.
double block_norm(const Eigen::MatrixXd& B, std::size_t delta);

/// Block norm of K_n(g_1)...K_n(g_k) - K_n(g_1 ... g_k) against
/// ((k-1)/2) prod alpha(g_i). The product density is the exact Cauchy product.
LemmaReport szego_defect(std::span<const PowerSeries> densities, const Graph& host,
                         std::span<const Vertex> subset);

struct LogdetGap {
  std::vector<LemmaReport> levels;  // measured = gap at level n, bound = gap at level n-1
  std::vector<double> boundary_ratio;  // delta_n / m_n
  double slope = 0.0;  // least squares slope of log gap against log(delta_n / m_n)
  bool decreasing = false;  // last gap < first gap and slope > 0
};

/// |(1/m_n) log det K_n(f) - int log f dmu| per level.
LogdetGap logdet_gap(const PowerSeries& f, const NestedSubgraphs& subsets, const SpectralMeasure& mu);

/// |Tr(K_n(f) Q_n(g)) - Tr(K_n(fg))| / max(1, |Tr(K_n(fg))|) against 1e-8.
LemmaReport exact_correction_residual(const PowerSeries& f, const PowerSeries& g, const Graph& host,
                                      std::span<const Vertex> subset, const CorrectionMatrix& B);

inline constexpr double kCorrectionTolerance = 1e-8;

/// max_n (1/delta_n) sum_{k outside G_n} sum_{j in G_n} |(W^h)_kj| against h + 1.
/// Throws InvalidParameter when the host is not padded by h around a level.
LemmaReport porosity_factor(const NestedSubgraphs& subsets, int h);

/// |(1/m) Tr((K(f)K(g))^p) - (1/m) Tr((K(f)Q(g))^p)| against 2^p u_n alpha(f)^p alpha(g)^p.
LemmaReport unbiased_trace_gap(const PowerSeries& f, const PowerSeries& g, const Graph& host,
                               std::span<const Vertex> subset, const CorrectionMatrix& B, int p);

enum class QuadraticForm { k_inv_density, inv_k, unbiased };

QuadraticForm parse_quadratic_form(const std::string& name);
std::string to_string(QuadraticForm form);

struct QuadraticFormSetup {
  ParametricDensity family;
  double theta0 = 0.5;
  double theta = 0.5;
  int truncation_order = 15;
  std::size_t replicates = 300;
  std::uint64_t seed = 1;
};

/// Monte Carlo mean of (1/m) X^T Lambda X with X ~ N(0, K_n(f_theta0)) against
/// int f_theta0 / f_theta dmu; bound is 3 standard errors. `B` is used only
/// by the unbiased form.
LemmaReport quadratic_form_limit(const QuadraticFormSetup& setup, QuadraticForm form, const Graph& host,
                                 std::span<const Vertex> subset, const SpectralMeasure& mu,
                                 const CorrectionMatrix* B = nullptr);

/// Every check above on fixed instances: correction and trace gaps on an 8x8 box
/// of a 24x24 grid, Szego defects on a path and grid boxes, log-det gaps and
/// porosity on nested grid boxes and path intervals, and the three quadratic
/// forms on a rhombus chain ball of volume ~400.
std::vector<LemmaReport> standard_suite(std::uint64_t seed = 1, std::size_t replicates = 300);

}  // namespace graphwhittle
