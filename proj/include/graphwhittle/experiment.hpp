#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphwhittle/density.hpp"
#include "graphwhittle/graph.hpp"
#include "graphwhittle/sampling.hpp"
#include "graphwhittle/spectral.hpp"
#include "graphwhittle/whittle.hpp"

namespace graphwhittle {

struct SubgraphConfig {
  SubgraphKind kind = SubgraphKind::ball;
  int center = -1;          // -1: middle of the host
  int radius = -1;          // ball radius or box side; -1: chosen from target_volume
  int target_volume = 724;
};

struct FamilyConfig {
  FamilyKind kind = FamilyKind::ar_squared;
  Interval domain{-0.9, 0.9};
  double theta0 = 0.5;
  std::optional<double> rho;  // default: default_rho(family)
};

struct MeasureConfig {
  MeasureMethod method = MeasureMethod::eigen;
  int proxy_size = 2500;  // size parameter of the proxy graph (same kind as the host); eigen method only
  int moment_order = 40;
};

struct ExperimentConfig {
  GraphSpec graph{GraphKind::rhombus_chain, 2500, 0, {}};
  SubgraphConfig subgraph;
  FamilyConfig family;
  int truncation_order = 15;
  int correction_radius = 2;     // P
  int signature_order = 8;       // M
  MeasureConfig measure;
  std::vector<LikelihoodKind> kinds{LikelihoodKind::tilde, LikelihoodKind::unbiased};
  std::size_t replicates = 500;
  std::uint64_t seed = 20240601;
  std::string output_dir = "out";
  bool legacy_section6_normalization = false;
  double optimizer_tol = 1e-4;
};

/// Reference defaults: rhombus chain, ball of volume 724, ar_squared at 0.5.
ExperimentConfig default_config();

/// Missing keys keep their defaults; unknown keys and bad values throw Config errors.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Throws Config when a parameter is out of range.
void validate(const ExperimentConfig& cfg);

ParametricDensity make_family(const FamilyConfig& cfg);

/// Host graph, estimation subset and spectral measure prepared from a config.
struct ExperimentSetup {
  Graph host;
  VertexSet subset;
  std::size_t boundary = 0;
  ParametricDensity family;
  SpectralMeasure measure;
  std::optional<CorrectionMatrix> correction;
  std::vector<std::string> warnings;
};

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg);

struct ReplicateRow {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  LikelihoodKind kind = LikelihoodKind::unbiased;
  double theta_hat = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  std::string status = "ok";
  bool covered = false;  // 95% interval contains theta0
};

inline constexpr int kHistogramBins = 40;
inline constexpr double kHistogramRange = 4.0;

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double normal_density = 0.0;  // at the midpoint; 0 for the overflow bins
};

struct KindSummary {
  LikelihoodKind kind = LikelihoodKind::unbiased;
  std::size_t ok = 0;
  std::size_t failed = 0;
  double mean_theta = 0.0;
  double median_abs_error = 0.0;
  double z_mean = 0.0;
  double z_sd = 0.0;
  double ks = 0.0;
  double coverage95 = 0.0;
  std::vector<HistogramBin> histogram;  // underflow, 40 bins, overflow
};

struct MonteCarloReport {
  ExperimentConfig config;
  std::size_t volume = 0;
  std::size_t boundary = 0;
  double fisher_theta0 = 0.0;
  double z_scale = 0.0;  // z = z_scale * (theta_hat - theta0)
  double trace_gap = 0.0;  // sqrt(m) ((1/m) Tr K_n(f_theta0) - int f_theta0 dmu)
  std::vector<ReplicateRow> rows;  // replicate-major, kinds in config order
  std::vector<KindSummary> summaries;
  std::vector<std::string> warnings;
};

/// Kolmogorov-Smirnov distance between the sample and N(0, 1).
double ks_statistic(std::vector<double> sample);
std::vector<HistogramBin> z_histogram(const std::vector<double>& z);
KindSummary summarize(LikelihoodKind kind, const std::vector<ReplicateRow>& rows, double theta0);

/// Replicate r uses the sample keyed by (seed, r); results do not depend on `workers`.
MonteCarloReport run_monte_carlo(const ExperimentConfig& cfg, unsigned workers = 0);

/// Writes replicates.csv, summary.json, histogram.csv (plus histogram_<kind>.csv)
/// and config.json into `dir`, each through a temporary file and a rename.
void emit_report(const MonteCarloReport& report, const std::filesystem::path& dir);

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRow>& rows);
std::vector<ReplicateRow> read_replicates_csv(std::istream& in);
struct SampleTable {
  VertexSet ids;
  std::vector<GaussianSample> samples;
};
/// Reads the layout written by write_samples_csv.
SampleTable read_samples_csv(std::istream& in);

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins);
nlohmann::ordered_json summary_json(const MonteCarloReport& report);

MonteCarloReport reproduce_reference_experiment(const std::filesystem::path& output_dir, unsigned workers = 0);

/// Writes `content` to `path` via `path.tmp` and a rename; Io errors carry the path.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest round-trip decimal form ("nan", "inf" and "-inf" for non-finite values).
std::string format_double(double x);

}  // namespace graphwhittle
