#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphwhittle/error.hpp"
#include "graphwhittle/experiment.hpp"
#include "graphwhittle/verification.hpp"

namespace gw = graphwhittle;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::string out;
  unsigned workers = 0;
  std::vector<std::string> kinds;
  bool legacy = false;
  std::string input;
  std::size_t replicate = 0;
};

gw::ExperimentConfig resolve(const Options& o, bool reference_defaults = false) {
  gw::ExperimentConfig cfg =
      !o.config.empty() && !reference_defaults ? gw::load_config(o.config) : gw::default_config();
  if (o.seed) cfg.seed = *o.seed;
  if (o.replicates) cfg.replicates = *o.replicates;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.kinds.empty()) {
    cfg.kinds.clear();
    for (const auto& k : o.kinds) {
      try {
        cfg.kinds.push_back(gw::parse_likelihood_kind(k));
      } catch (const gw::Error& e) {
        throw gw::Error(gw::ErrorCode::Config, e.what());
      }
    }
  }
  if (o.legacy) cfg.legacy_section6_normalization = true;
  gw::validate(cfg);
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw gw::Error(gw::ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

int cmd_graph(const Options& o) {
  const auto cfg = resolve(o);
  const auto setup = gw::prepare_experiment(cfg);
  const fs::path dir = cfg.output_dir;
  ensure_dir(dir);
  std::ostringstream graph, measure, subset;
  gw::write_graph(graph, setup.host);
  gw::write_measure_csv(measure, setup.measure);
  for (gw::Vertex v : setup.subset) subset << v << '\n';
  gw::write_file_atomic(dir / "graph.txt", graph.str());
  gw::write_file_atomic(dir / "measure.csv", measure.str());
  gw::write_file_atomic(dir / "subset.txt", subset.str());
  nlohmann::ordered_json j;
  j["n_vertices"] = setup.host.n_vertices();
  j["n_edges"] = setup.host.n_edges();
  j["volume"] = setup.subset.size();
  j["boundary"] = setup.boundary;
  j["measure_atoms"] = setup.measure.size();
  j["warnings"] = setup.warnings;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  const auto cfg = resolve(o);
  const auto setup = gw::prepare_experiment(cfg);
  const auto K0 = gw::covariance_matrix(setup.family.series(cfg.family.theta0, cfg.truncation_order), setup.host,
                                        setup.subset);
  const auto factor = gw::factorize_covariance(K0);
  const auto samples = gw::sample_field(factor, cfg.seed, cfg.replicates, 0, cfg.family.theta0);
  const fs::path dir = cfg.output_dir;
  ensure_dir(dir);
  std::ostringstream out;
  gw::write_samples_csv(out, samples, setup.subset);
  gw::write_file_atomic(dir / "samples.csv", out.str());
  std::cout << (dir / "samples.csv").string() << '\n';
  return kExitOk;
}

int cmd_estimate(const Options& o) {
  const auto cfg = resolve(o);
  const auto setup = gw::prepare_experiment(cfg);
  std::vector<gw::GaussianSample> samples;
  if (!o.input.empty()) {
    std::ifstream in(o.input);
    if (!in) throw gw::Error(gw::ErrorCode::Io, "cannot open samples " + o.input);
    auto table = gw::read_samples_csv(in);
    if (table.ids != setup.subset) {
      throw gw::Error(gw::ErrorCode::Config, "sample vertex ids do not match the configured subgraph");
    }
    samples = std::move(table.samples);
  } else {
    const auto K0 = gw::covariance_matrix(setup.family.series(cfg.family.theta0, cfg.truncation_order),
                                          setup.host, setup.subset);
    samples = gw::sample_field(gw::factorize_covariance(K0), cfg.seed, 1, o.replicate, cfg.family.theta0);
  }
  const gw::EstimationContext ctx(setup.family, setup.host, setup.subset, setup.measure, cfg.truncation_order,
                                  setup.correction);
  std::ostringstream lines;
  for (const auto& s : samples) {
    gw::LikelihoodEvaluator eval(ctx, s);
    for (auto kind : cfg.kinds) {
      nlohmann::ordered_json j;
      j["replicate"] = s.replicate;
      for (auto& [k, v] : gw::to_json(gw::maximize_likelihood(kind, eval, cfg.optimizer_tol)).items()) j[k] = v;
      lines << j.dump() << '\n';
    }
  }
  std::cout << lines.str();
  if (!o.out.empty()) {
    ensure_dir(o.out);
    gw::write_file_atomic(fs::path(o.out) / "estimates.jsonl", lines.str());
  }
  return kExitOk;
}

int report_mc(const gw::MonteCarloReport& report) {
  gw::emit_report(report, report.config.output_dir);
  std::cout << gw::summary_json(report).dump() << '\n';
  return kExitOk;
}

int cmd_mc(const Options& o) {
  const auto cfg = resolve(o);
  return report_mc(gw::run_monte_carlo(cfg, o.workers));
}

int cmd_reproduce(const Options& o) {
  auto cfg = resolve(o, true);
  if (o.out.empty()) cfg.output_dir = "out/reference";
  return report_mc(gw::run_monte_carlo(cfg, o.workers));
}

int cmd_verify(const Options& o) {
  const auto reports = gw::standard_suite(o.seed.value_or(1), o.replicates.value_or(300));
  std::ostringstream lines;
  gw::write_reports(lines, reports);
  std::cout << lines.str();
  if (!o.out.empty()) {
    ensure_dir(o.out);
    gw::write_file_atomic(fs::path(o.out) / "verify.jsonl", lines.str());
  }
  for (const auto& r : reports) {
    if (!r.passed) return kExitChecksFailed;
  }
  return kExitOk;
}

int exit_code(gw::ErrorCode code) {
  switch (code) {
    case gw::ErrorCode::Config:
    case gw::ErrorCode::InvalidParameter:
    case gw::ErrorCode::Domain:
      return kExitConfig;
    case gw::ErrorCode::Io:
      return kExitIo;
    default:
      return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whittle estimation for Gaussian ARMA fields on graphs"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  app.add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  auto* rep_opt = app.add_option("--replicates", replicates, "number of replicates");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--workers", o.workers, "worker threads (0 = available parallelism)");
  app.add_option("--kind", o.kinds, "estimator kind: exact, bar, tilde, unbiased (repeatable)")
      ->check(CLI::IsMember({"exact", "bar", "tilde", "unbiased"}));
  app.add_flag("--legacy-section6-normalization", o.legacy,
               "normalize z by sqrt(m * int (f'/f)^2 dmu) instead of sqrt(m * J)");

  auto* graph = app.add_subcommand("graph", "write the host graph, subgraph and spectral measure");
  auto* simulate = app.add_subcommand("simulate", "draw fields at theta0 into samples.csv");
  auto* estimate = app.add_subcommand("estimate", "maximize the likelihoods on stored or fresh samples");
  estimate->add_option("--input", o.input, "samples.csv to estimate from")->check(CLI::ExistingFile);
  estimate->add_option("--replicate", o.replicate, "replicate index to simulate when no input is given");
  auto* mc = app.add_subcommand("mc", "Monte Carlo study with report files");
  auto* verify = app.add_subcommand("verify", "run the lemma checks as JSON lines");
  auto* reference = app.add_subcommand("reproduce-ref", "reference rhombus-chain experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    std::cerr << gw::error_tag(gw::ErrorCode::Config) << ": " << e.what() << '\n';
    return kExitConfig;
  }
  if (*seed_opt) o.seed = seed;
  if (*rep_opt) o.replicates = replicates;

  try {
    if (*graph) return cmd_graph(o);
    if (*simulate) return cmd_simulate(o);
    if (*estimate) return cmd_estimate(o);
    if (*mc) return cmd_mc(o);
    if (*verify) return cmd_verify(o);
    if (*reference) return cmd_reproduce(o);
  } catch (const gw::Error& e) {
    std::cerr << gw::error_tag(e.code()) << ": " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << gw::error_tag(gw::ErrorCode::Numerical) << ": " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}
