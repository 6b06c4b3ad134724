#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "graphwhittle/error.hpp"
#include "graphwhittle/experiment.hpp"

using namespace graphwhittle;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::Numerical;
}

ExperimentConfig small_chain_config() {
  ExperimentConfig cfg = default_config();
  cfg.graph.size = 120;
  cfg.subgraph.target_volume = 120;
  cfg.measure.proxy_size = 120;
  cfg.kinds = {LikelihoodKind::tilde, LikelihoodKind::unbiased};
  cfg.replicates = 6;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("graphwhittle_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("default configuration is the reference experiment") {
  const auto cfg = default_config();
  CHECK(cfg.graph.kind == GraphKind::rhombus_chain);
  CHECK(cfg.subgraph.target_volume == 724);
  CHECK(cfg.family.kind == FamilyKind::ar_squared);
  CHECK(cfg.family.theta0 == 0.5);
  CHECK(cfg.correction_radius == 2);
  CHECK(cfg.replicates == 500);
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("configuration json round trip") {
  auto cfg = small_chain_config();
  cfg.family.rho = 3.5;
  cfg.measure.method = MeasureMethod::moments;
  cfg.legacy_section6_normalization = true;
  cfg.seed = 77;
  const auto j = to_json(cfg);
  const auto back = config_from_json(nlohmann::json::parse(j.dump()));
  CHECK(to_json(back).dump() == j.dump());
  CHECK(back.family.rho == 3.5);

  const auto defaults = config_from_json(nlohmann::json::parse(to_json(default_config()).dump()));
  CHECK_FALSE(defaults.family.rho.has_value());
  CHECK(to_json(config_from_json(nlohmann::json::object())).dump() == to_json(default_config()).dump());
}

TEST_CASE("configuration errors") {
  const auto parse = [](const char* text) { return config_from_json(nlohmann::json::parse(text)); };
  CHECK(code_of([&] { parse(R"({"replicatez": 3})"); }) == ErrorCode::Config);
  CHECK(code_of([&] { parse(R"({"graph": {"kind": "path", "length": 3}})"); }) == ErrorCode::Config);
  CHECK(code_of([&] { parse(R"({"graph": {"kind": "hypercube"}})"); }) == ErrorCode::Config);
  CHECK(code_of([&] { parse(R"({"replicates": "many"})"); }) == ErrorCode::Config);
  CHECK(code_of([&] { parse(R"({"kinds": ["exact", "whittle"]})"); }) == ErrorCode::Config);

  auto cfg = default_config();
  cfg.family.theta0 = 0.95;
  CHECK(code_of([&] { validate(cfg); }) == ErrorCode::Config);
  cfg = default_config();
  cfg.signature_order = 3;
  CHECK(code_of([&] { validate(cfg); }) == ErrorCode::Config);
  cfg = default_config();
  cfg.kinds = {LikelihoodKind::exact, LikelihoodKind::exact};
  CHECK(code_of([&] { validate(cfg); }) == ErrorCode::Config);
  cfg = default_config();
  cfg.kinds.clear();
  CHECK(code_of([&] { validate(cfg); }) == ErrorCode::Config);

  CHECK(code_of([&] { load_config("/nonexistent/config.json"); }) == ErrorCode::Io);
  const auto dir = scratch("badjson");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << "{ not json";
  CHECK(code_of([&] { load_config(dir / "c.json"); }) == ErrorCode::Config);
}

TEST_CASE("reference subgraph has the expected size") {
  const auto setup = prepare_experiment(default_config());
  CHECK(setup.subset.size() == 724);
  CHECK(setup.boundary == 3);
  CHECK(setup.correction.has_value());
  CHECK(setup.measure.size() > 0);
  CHECK(setup.warnings.empty());
}

TEST_CASE("box subgraphs on grids") {
  ExperimentConfig cfg = default_config();
  cfg.graph = {GraphKind::grid2d, 40, 0, {}};
  cfg.subgraph.kind = SubgraphKind::box;
  cfg.subgraph.target_volume = 100;
  cfg.measure.method = MeasureMethod::moments;
  cfg.measure.moment_order = 20;
  cfg.kinds = {LikelihoodKind::tilde};
  const auto setup = prepare_experiment(cfg);
  CHECK(setup.subset.size() == 100);
  CHECK(setup.boundary == 36);
  CHECK_FALSE(setup.correction.has_value());

  cfg.subgraph.target_volume = 2000;
  CHECK(code_of([&] { prepare_experiment(cfg); }) == ErrorCode::Config);
  cfg.graph = {GraphKind::path, 100, 0, {}};
  cfg.subgraph.target_volume = 25;
  CHECK(code_of([&] { prepare_experiment(cfg); }) == ErrorCode::Config);
}

TEST_CASE("ks statistic against exact quantiles") {
  CHECK(ks_statistic({0.0}) == doctest::Approx(0.5));
  const int n = 400;
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) q[i] = normal_quantile((i + 0.5) / n);
  CHECK(ks_statistic(q) == doctest::Approx(0.5 / n).epsilon(1e-6));
  for (auto& v : q) v += 1.0;
  CHECK(ks_statistic(q) > 0.3);
  CHECK(std::isnan(ks_statistic({})));
}

TEST_CASE("z histogram layout") {
  const auto bins = z_histogram({-5.0, -4.0, -0.01, 0.0, 3.99, 4.0, std::nan("")});
  REQUIRE(bins.size() == kHistogramBins + 2);
  CHECK(std::isinf(bins.front().lo));
  CHECK(std::isinf(bins.back().hi));
  CHECK(bins.front().count == 1);
  CHECK(bins[1].count == 1);
  CHECK(bins[20].count == 1);
  CHECK(bins[21].count == 1);
  CHECK(bins[40].count == 1);
  CHECK(bins.back().count == 1);
  std::size_t total = 0;
  double mass = 0.0;
  for (const auto& b : bins) {
    total += b.count;
    if (std::isfinite(b.lo) && std::isfinite(b.hi)) mass += b.normal_density * (b.hi - b.lo);
  }
  CHECK(total == 6);
  const double R = 500.0;
  CHECK(R * mass == doctest::Approx(R).epsilon(0.02));
}

TEST_CASE("kind summaries") {
  std::vector<ReplicateRow> rows;
  const double thetas[] = {0.4, 0.55, 0.7, 0.5};
  for (int i = 0; i < 4; ++i) {
    ReplicateRow r;
    r.replicate = i;
    r.kind = LikelihoodKind::tilde;
    r.theta_hat = thetas[i];
    r.z = 10.0 * (thetas[i] - 0.5);
    r.covered = i != 2;
    rows.push_back(r);
  }
  ReplicateRow failed;
  failed.kind = LikelihoodKind::tilde;
  failed.status = "E_NUMERICAL";
  rows.push_back(failed);
  ReplicateRow other;
  other.kind = LikelihoodKind::exact;
  rows.push_back(other);

  const auto s = summarize(LikelihoodKind::tilde, rows, 0.5);
  CHECK(s.ok == 4);
  CHECK(s.failed == 1);
  CHECK(s.mean_theta == doctest::Approx(0.5375));
  CHECK(s.median_abs_error == doctest::Approx(0.075));
  CHECK(s.coverage95 == doctest::Approx(0.75));
  CHECK(s.z_mean == doctest::Approx(0.375));
  CHECK(s.z_sd == doctest::Approx(std::sqrt((1.375 * 1.375 + 0.125 * 0.125 + 1.625 * 1.625 + 0.375 * 0.375) / 3.0)));

  const auto empty = summarize(LikelihoodKind::bar, rows, 0.5);
  CHECK(empty.ok == 0);
  CHECK(std::isnan(empty.mean_theta));
  CHECK(std::isnan(empty.coverage95));
}

TEST_CASE("replicates csv round trip") {
  std::ostringstream empty;
  write_replicates_csv(empty, {});
  CHECK(empty.str() == "replicate,seed,kind,theta_hat,std_error,z,status\n");

  std::vector<ReplicateRow> rows(3);
  rows[0] = {0, 5, LikelihoodKind::unbiased, 0.512345678901234, 0.031, -0.25, "ok", true};
  rows[1] = {0, 5, LikelihoodKind::exact, 0.1, 0.2, 1e-300, "ok", false};
  rows[2] = {1, 5, LikelihoodKind::bar, std::nan(""), std::nan(""), std::nan(""), "E_NOT_PD", false};
  std::ostringstream out;
  write_replicates_csv(out, rows);
  std::istringstream in(out.str());
  const auto back = read_replicates_csv(in);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].replicate == rows[i].replicate);
    CHECK(back[i].seed == rows[i].seed);
    CHECK(back[i].kind == rows[i].kind);
    CHECK(back[i].theta_hat == rows[i].theta_hat);
    CHECK(back[i].std_error == rows[i].std_error);
    CHECK(back[i].z == rows[i].z);
  }
  CHECK(std::isnan(back[2].theta_hat));
  CHECK(back[2].status == "E_NOT_PD");

  std::istringstream bad_header("replicate,kind\n");
  CHECK(code_of([&] { read_replicates_csv(bad_header); }) == ErrorCode::Io);
  std::istringstream short_row("replicate,seed,kind,theta_hat,std_error,z,status\n1,2,exact\n");
  CHECK(code_of([&] { read_replicates_csv(short_row); }) == ErrorCode::Io);
}

TEST_CASE("samples csv round trip") {
  const auto factor = factorize_covariance(Eigen::MatrixXd::Identity(3, 3));
  const auto samples = sample_field(factor, 4, 3, 2);
  const VertexSet ids{7, 8, 12};
  std::ostringstream out;
  write_samples_csv(out, samples, ids);
  std::istringstream in(out.str());
  const auto table = read_samples_csv(in);
  CHECK(table.ids == ids);
  REQUIRE(table.samples.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(table.samples[r].replicate == samples[r].replicate);
    CHECK(table.samples[r].values == samples[r].values);
  }
  std::istringstream ragged("replicate,1,2\n0,0.5\n");
  CHECK(code_of([&] { read_samples_csv(ragged); }) == ErrorCode::Io);
  std::istringstream no_header("");
  CHECK(code_of([&] { read_samples_csv(no_header); }) == ErrorCode::Io);
}

TEST_CASE("number formatting and atomic writes") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(std::strtod(format_double(1.0 / 3.0).c_str(), nullptr) == 1.0 / 3.0);

  const auto dir = scratch("atomic");
  fs::create_directories(dir);
  write_file_atomic(dir / "a.txt", "hello\n");
  CHECK(slurp(dir / "a.txt") == "hello\n");
  CHECK_FALSE(fs::exists(dir / "a.txt.tmp"));
  CHECK(code_of([&] { write_file_atomic(dir / "missing" / "a.txt", "x"); }) == ErrorCode::Io);
}

TEST_CASE("white noise monte carlo is standard normal") {
  ExperimentConfig cfg = default_config();
  cfg.graph = {GraphKind::path, 300, 0, {}};
  cfg.subgraph.target_volume = 101;
  cfg.family.kind = FamilyKind::constant;
  cfg.family.domain = {0.2, 5.0};
  cfg.family.theta0 = 1.0;
  cfg.truncation_order = 2;
  cfg.measure.proxy_size = 300;
  cfg.kinds = {LikelihoodKind::exact, LikelihoodKind::tilde};
  cfg.replicates = 200;
  cfg.seed = 31;
  const auto report = run_monte_carlo(cfg, 1);
  CHECK(report.volume == 101);
  CHECK(report.fisher_theta0 == doctest::Approx(0.5));
  CHECK(report.z_scale == doctest::Approx(std::sqrt(101 * 0.5)));
  CHECK(report.rows.size() == 400);
  REQUIRE(report.summaries.size() == 2);
  for (const auto& s : report.summaries) {
    CHECK(s.ok == 200);
    CHECK(s.ks < 0.12);
    CHECK(s.z_sd == doctest::Approx(1.0).epsilon(0.15));
    CHECK(s.coverage95 > 0.88);
  }
  for (std::size_t r = 0; r < 200; ++r) {
    CHECK(report.rows[2 * r].replicate == r);
    CHECK(report.rows[2 * r].kind == LikelihoodKind::exact);
    CHECK(report.rows[2 * r].theta_hat == doctest::Approx(report.rows[2 * r + 1].theta_hat).epsilon(1e-3));
  }

  cfg.legacy_section6_normalization = true;
  cfg.replicates = 1;
  CHECK(run_monte_carlo(cfg, 1).z_scale == doctest::Approx(std::sqrt(101.0)));
}

TEST_CASE("results do not depend on the worker count") {
  const auto cfg = small_chain_config();
  const auto one = run_monte_carlo(cfg, 1);
  const auto three = run_monte_carlo(cfg, 3);
  std::ostringstream a, b;
  write_replicates_csv(a, one.rows);
  write_replicates_csv(b, three.rows);
  CHECK(a.str() == b.str());
  CHECK(summary_json(one).dump() == summary_json(three).dump());
}

TEST_CASE("single replicate report files") {
  auto cfg = small_chain_config();
  cfg.replicates = 1;
  const auto dir = scratch("report");
  cfg.output_dir = dir.string();
  const auto report = run_monte_carlo(cfg, 1);
  emit_report(report, dir);
  for (const char* name : {"replicates.csv", "summary.json", "histogram.csv", "histogram_tilde.csv",
                           "histogram_unbiased.csv", "config.json"}) {
    CHECK(fs::exists(dir / name));
  }
  CHECK(slurp(dir / "histogram.csv") == slurp(dir / "histogram_unbiased.csv"));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["replicates"] == 1);
  CHECK(summary["kinds"]["unbiased"]["ok"] == 1);
  CHECK(summary["kinds"]["unbiased"]["z_sd"].is_null());
  const auto cfg_back = load_config(dir / "config.json");
  CHECK(to_json(cfg_back).dump() == to_json(cfg).dump());
  std::ifstream csv(dir / "replicates.csv");
  CHECK(read_replicates_csv(csv).size() == 2);
}
