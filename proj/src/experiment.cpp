#include "graphwhittle/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "graphwhittle/covariance.hpp"
#include "graphwhittle/error.hpp"
#include "graphwhittle/sampling.hpp"

namespace graphwhittle {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("bad value for '" + std::string(key) + "' in " + where);
  }
}

template <class Parse, class T>
void read_enum(const json& j, const char* key, T& out, const std::string& where, Parse parse) {
  std::string name;
  if (!j.contains(key)) return;
  read(j, key, name, where);
  try {
    out = parse(name);
  } catch (const Error& e) {
    config_error(std::string(e.what()) + " in " + where);
  }
}

SubgraphKind parse_subgraph_kind(const std::string& name) {
  if (name == "ball") return SubgraphKind::ball;
  if (name == "box") return SubgraphKind::box;
  throw Error(ErrorCode::InvalidParameter, "unknown subgraph kind '" + name + "'");
}

std::string to_string(SubgraphKind kind) { return kind == SubgraphKind::ball ? "ball" : "box"; }

MeasureMethod parse_measure_method(const std::string& name) {
  if (name == "eigen") return MeasureMethod::eigen;
  if (name == "moments") return MeasureMethod::moments;
  throw Error(ErrorCode::InvalidParameter, "unknown measure method '" + name + "'");
}

std::string to_string(MeasureMethod m) { return m == MeasureMethod::eigen ? "eigen" : "moments"; }

Vertex default_center(const Graph& g, const GraphSpec& spec) {
  if (g.grid()) return g.grid()->at(g.grid()->rows / 2, g.grid()->cols / 2);
  if (spec.kind == GraphKind::rhombus_chain) return static_cast<Vertex>(4 * (spec.size / 2));
  if (spec.kind == GraphKind::cycle) return 0;
  return g.n_vertices() / 2;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  check_keys(j, "config",
             {"graph", "subgraph", "family", "truncation_order", "correction", "measure", "kinds", "replicates",
              "seed", "output_dir", "legacy_section6_normalization", "optimizer_tol"});
  if (j.contains("graph")) {
    const json& g = j["graph"];
    check_keys(g, "graph", {"kind", "size", "size2", "pattern"});
    read_enum(g, "kind", cfg.graph.kind, "graph", parse_graph_kind);
    read(g, "size", cfg.graph.size, "graph");
    read(g, "size2", cfg.graph.size2, "graph");
    if (g.contains("pattern")) {
      const json& p = g["pattern"];
      check_keys(p, "graph.pattern", {"n_vertices", "edges", "port_in", "port_out", "box_base"});
      read(p, "n_vertices", cfg.graph.pattern.n_vertices, "graph.pattern");
      read(p, "edges", cfg.graph.pattern.edges, "graph.pattern");
      read(p, "port_in", cfg.graph.pattern.port_in, "graph.pattern");
      read(p, "port_out", cfg.graph.pattern.port_out, "graph.pattern");
      read(p, "box_base", cfg.graph.pattern.box_base, "graph.pattern");
    }
  }
  if (j.contains("subgraph")) {
    const json& s = j["subgraph"];
    check_keys(s, "subgraph", {"kind", "center", "radius", "target_volume"});
    read_enum(s, "kind", cfg.subgraph.kind, "subgraph", parse_subgraph_kind);
    read(s, "center", cfg.subgraph.center, "subgraph");
    read(s, "radius", cfg.subgraph.radius, "subgraph");
    read(s, "target_volume", cfg.subgraph.target_volume, "subgraph");
  }
  if (j.contains("family")) {
    const json& f = j["family"];
    check_keys(f, "family", {"kind", "domain", "theta0", "rho"});
    read_enum(f, "kind", cfg.family.kind, "family", parse_family_kind);
    if (f.contains("domain")) {
      std::vector<double> d;
      read(f, "domain", d, "family");
      if (d.size() != 2) config_error("family.domain must be [lo, hi]");
      cfg.family.domain = {d[0], d[1]};
    }
    read(f, "theta0", cfg.family.theta0, "family");
    if (f.contains("rho") && !f["rho"].is_null()) {
      double rho = 0.0;
      read(f, "rho", rho, "family");
      cfg.family.rho = rho;
    }
  }
  read(j, "truncation_order", cfg.truncation_order, "config");
  if (j.contains("correction")) {
    const json& c = j["correction"];
    check_keys(c, "correction", {"P", "M"});
    read(c, "P", cfg.correction_radius, "correction");
    read(c, "M", cfg.signature_order, "correction");
  }
  if (j.contains("measure")) {
    const json& m = j["measure"];
    check_keys(m, "measure", {"method", "proxy_size", "moment_order"});
    read_enum(m, "method", cfg.measure.method, "measure", parse_measure_method);
    read(m, "proxy_size", cfg.measure.proxy_size, "measure");
    read(m, "moment_order", cfg.measure.moment_order, "measure");
  }
  if (j.contains("kinds")) {
    std::vector<std::string> names;
    read(j, "kinds", names, "config");
    cfg.kinds.clear();
    for (const auto& n : names) {
      try {
        cfg.kinds.push_back(parse_likelihood_kind(n));
      } catch (const Error& e) {
        config_error(e.what());
      }
    }
  }
  read(j, "replicates", cfg.replicates, "config");
  read(j, "seed", cfg.seed, "config");
  read(j, "output_dir", cfg.output_dir, "config");
  read(j, "legacy_section6_normalization", cfg.legacy_section6_normalization, "config");
  read(j, "optimizer_tol", cfg.optimizer_tol, "config");
  validate(cfg);
  return cfg;
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["graph"]["kind"] = to_string(cfg.graph.kind);
  j["graph"]["size"] = cfg.graph.size;
  j["graph"]["size2"] = cfg.graph.size2;
  if (cfg.graph.kind == GraphKind::pattern_lattice) {
    auto& p = j["graph"]["pattern"];
    p["n_vertices"] = cfg.graph.pattern.n_vertices;
    p["edges"] = cfg.graph.pattern.edges;
    p["port_in"] = cfg.graph.pattern.port_in;
    p["port_out"] = cfg.graph.pattern.port_out;
    p["box_base"] = cfg.graph.pattern.box_base;
  }
  j["subgraph"]["kind"] = to_string(cfg.subgraph.kind);
  j["subgraph"]["center"] = cfg.subgraph.center;
  j["subgraph"]["radius"] = cfg.subgraph.radius;
  j["subgraph"]["target_volume"] = cfg.subgraph.target_volume;
  j["family"]["kind"] = to_string(cfg.family.kind);
  j["family"]["domain"] = {cfg.family.domain.lo, cfg.family.domain.hi};
  j["family"]["theta0"] = cfg.family.theta0;
  j["family"]["rho"] = cfg.family.rho ? nlohmann::ordered_json(*cfg.family.rho) : nlohmann::ordered_json(nullptr);
  j["truncation_order"] = cfg.truncation_order;
  j["correction"]["P"] = cfg.correction_radius;
  j["correction"]["M"] = cfg.signature_order;
  j["measure"]["method"] = to_string(cfg.measure.method);
  j["measure"]["proxy_size"] = cfg.measure.proxy_size;
  j["measure"]["moment_order"] = cfg.measure.moment_order;
  std::vector<std::string> kinds;
  for (auto k : cfg.kinds) kinds.push_back(to_string(k));
  j["kinds"] = kinds;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["legacy_section6_normalization"] = cfg.legacy_section6_normalization;
  j["optimizer_tol"] = cfg.optimizer_tol;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.graph.size <= 0) config_error("graph.size must be positive");
  if (cfg.graph.size2 < 0) config_error("graph.size2 must be nonnegative");
  if (cfg.subgraph.radius < -1) config_error("subgraph.radius must be -1 or nonnegative");
  if (cfg.subgraph.radius < 0 && cfg.subgraph.target_volume <= 0) {
    config_error("subgraph.target_volume must be positive");
  }
  if (cfg.family.kind == FamilyKind::custom) config_error("family.kind 'custom' is only available from code");
  if (!(cfg.family.domain.lo < cfg.family.domain.hi)) config_error("family.domain must satisfy lo < hi");
  if (!cfg.family.domain.contains(cfg.family.theta0)) config_error("family.theta0 outside family.domain");
  if (cfg.family.rho && !(*cfg.family.rho > 0.0)) config_error("family.rho must be positive");
  if (cfg.truncation_order < 0) config_error("truncation_order must be nonnegative");
  if (cfg.correction_radius < 0) config_error("correction.P must be nonnegative");
  if (cfg.signature_order < 2 * cfg.correction_radius) config_error("correction.M must be at least 2P");
  if (cfg.measure.proxy_size <= 0) config_error("measure.proxy_size must be positive");
  if (cfg.measure.moment_order < 1) config_error("measure.moment_order must be positive");
  if (cfg.kinds.empty()) config_error("kinds must not be empty");
  if (std::set<LikelihoodKind>(cfg.kinds.begin(), cfg.kinds.end()).size() != cfg.kinds.size()) {
    config_error("kinds must not repeat");
  }
  if (!(cfg.optimizer_tol > 0.0)) config_error("optimizer_tol must be positive");
}

ParametricDensity make_family(const FamilyConfig& cfg) {
  ParametricDensity f = [&] {
    try {
      switch (cfg.kind) {
        case FamilyKind::ar_squared: return ParametricDensity::ar_squared(cfg.domain);
        case FamilyKind::ar1: return ParametricDensity::ar1(cfg.domain);
        case FamilyKind::ma_poly: return ParametricDensity::ma_poly(cfg.domain);
        case FamilyKind::constant: return ParametricDensity::constant(cfg.domain);
        case FamilyKind::custom: break;
      }
    } catch (const Error& e) {
      config_error(e.what());
    }
    config_error("family.kind 'custom' is only available from code");
  }();
  if (cfg.rho) f.set_rho(*cfg.rho);
  return f;
}

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentSetup s;
  s.host = normalize_weights(build_graph(cfg.graph));
  s.family = make_family(cfg.family);
  const FamilyCheck check = check_family(s.family, cfg.truncation_order);
  if (!check.positive) throw Error(ErrorCode::Config, "family is not positive on its parameter domain");
  if (!check.injective) s.warnings.push_back("family may not be injective on its domain");
  if (!check.within_rho) s.warnings.push_back("alpha(log f_theta) exceeds rho somewhere on the domain");

  const Graph& g = s.host;
  if (cfg.subgraph.kind == SubgraphKind::ball) {
    const Vertex center = cfg.subgraph.center >= 0 ? cfg.subgraph.center : default_center(g, cfg.graph);
    if (!g.contains(center)) config_error("subgraph.center outside the host");
    int radius = cfg.subgraph.radius;
    if (radius < 0) {
      const Vertex src[1] = {center};
      const auto dist = bfs_distances(g, std::span<const Vertex>(src));
      std::vector<std::size_t> cumulative;
      for (int d : dist) {
        if (d == kUnreachable) continue;
        if (cumulative.size() <= static_cast<std::size_t>(d)) cumulative.resize(static_cast<std::size_t>(d) + 1, 0);
        ++cumulative[static_cast<std::size_t>(d)];
      }
      for (std::size_t d = 1; d < cumulative.size(); ++d) cumulative[d] += cumulative[d - 1];
      const auto target = static_cast<std::size_t>(cfg.subgraph.target_volume);
      radius = 0;
      std::size_t best = cumulative[0] > target ? cumulative[0] - target : target - cumulative[0];
      for (std::size_t d = 1; d < cumulative.size(); ++d) {
        const std::size_t diff = cumulative[d] > target ? cumulative[d] - target : target - cumulative[d];
        if (diff < best) {
          best = diff;
          radius = static_cast<int>(d);
        }
      }
    }
    s.subset = ball(g, center, radius);
  } else {
    if (!g.grid()) config_error("box subgraphs need a grid host");
    const GridShape shape = *g.grid();
    int side = cfg.subgraph.radius;
    if (side < 0) side = std::max(1, static_cast<int>(std::lround(std::sqrt(cfg.subgraph.target_volume))));
    if (side > std::min(shape.rows, shape.cols)) config_error("box side exceeds the grid");
    int r0 = shape.rows / 2 - side / 2, c0 = shape.cols / 2 - side / 2;
    if (cfg.subgraph.center >= 0) {
      if (!g.contains(cfg.subgraph.center)) config_error("subgraph.center outside the host");
      r0 = cfg.subgraph.center / shape.cols - side / 2;
      c0 = cfg.subgraph.center % shape.cols - side / 2;
    }
    try {
      s.subset = box(g, Box{r0, c0, side});
    } catch (const Error& e) {
      config_error(e.what());
    }
  }
  if (cfg.subgraph.radius < 0 && s.subset.size() != static_cast<std::size_t>(cfg.subgraph.target_volume)) {
    s.warnings.push_back("subgraph volume " + std::to_string(s.subset.size()) + " differs from target " +
                         std::to_string(cfg.subgraph.target_volume));
  }
  s.boundary = boundary_size(g, s.subset);
  if (!padding_sufficient(g, s.subset, cfg.truncation_order)) {
    s.warnings.push_back("host padding is shorter than the truncation order");
  }

  if (cfg.measure.method == MeasureMethod::eigen) {
    GraphSpec proxy_spec = cfg.graph;
    proxy_spec.size = cfg.measure.proxy_size;
    if (proxy_spec.size2 > 0) proxy_spec.size2 = cfg.measure.proxy_size;
    const Graph proxy = normalize_weights(build_graph(proxy_spec));
    VertexSet all(static_cast<std::size_t>(proxy.n_vertices()));
    std::iota(all.begin(), all.end(), 0);
    s.measure = empirical_spectral_measure(proxy, all);
  } else {
    MeasureOptions opts;
    opts.method = MeasureMethod::moments;
    opts.moment_order = cfg.measure.moment_order;
    s.measure = empirical_spectral_measure(g, s.subset, opts);
  }

  if (std::find(cfg.kinds.begin(), cfg.kinds.end(), LikelihoodKind::unbiased) != cfg.kinds.end()) {
    const auto classes = pair_classes(g, s.subset, cfg.correction_radius, cfg.signature_order);
    if (!classes.padding_ok) s.warnings.push_back("host padding too short for the pair classification");
    s.correction = correction_matrix(classes, s.subset);
  }
  return s;
}

double ks_statistic(std::vector<double> sample) {
  if (sample.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = normal_cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<HistogramBin> z_histogram(const std::vector<double>& z) {
  constexpr double width = 2.0 * kHistogramRange / kHistogramBins;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<HistogramBin> bins;
  bins.push_back({-inf, -kHistogramRange, 0, 0.0});
  for (int b = 0; b < kHistogramBins; ++b) {
    const double lo = -kHistogramRange + b * width;
    const double hi = b == kHistogramBins - 1 ? kHistogramRange : lo + width;
    bins.push_back({lo, hi, 0, normal_pdf(0.5 * (lo + hi))});
  }
  bins.push_back({kHistogramRange, inf, 0, 0.0});
  for (double v : z) {
    if (std::isnan(v)) continue;
    std::size_t idx;
    if (v < -kHistogramRange) {
      idx = 0;
    } else if (v >= kHistogramRange) {
      idx = bins.size() - 1;
    } else {
      const auto b = std::min(kHistogramBins - 1, static_cast<int>(std::floor((v + kHistogramRange) / width)));
      idx = static_cast<std::size_t>(b) + 1;
    }
    ++bins[idx].count;
  }
  return bins;
}

KindSummary summarize(LikelihoodKind kind, const std::vector<ReplicateRow>& rows, double theta0) {
  KindSummary s;
  s.kind = kind;
  std::vector<double> z, err;
  double theta_sum = 0.0;
  std::size_t covered = 0;
  for (const auto& r : rows) {
    if (r.kind != kind) continue;
    if (r.status != "ok") {
      ++s.failed;
      continue;
    }
    ++s.ok;
    z.push_back(r.z);
    err.push_back(std::abs(r.theta_hat - theta0));
    theta_sum += r.theta_hat;
    covered += r.covered ? 1 : 0;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto n = static_cast<double>(s.ok);
  s.mean_theta = s.ok ? theta_sum / n : nan;
  s.median_abs_error = median(err);
  s.coverage95 = s.ok ? static_cast<double>(covered) / n : nan;
  s.ks = ks_statistic(z);
  if (s.ok) {
    double sum = 0.0, sq = 0.0;
    for (double v : z) sum += v;
    s.z_mean = sum / n;
    for (double v : z) sq += (v - s.z_mean) * (v - s.z_mean);
    s.z_sd = s.ok > 1 ? std::sqrt(sq / (n - 1.0)) : nan;
  } else {
    s.z_mean = s.z_sd = nan;
  }
  s.histogram = z_histogram(z);
  return s;
}

MonteCarloReport run_monte_carlo(const ExperimentConfig& cfg, unsigned workers) {
  const ExperimentSetup setup = prepare_experiment(cfg);
  MonteCarloReport report;
  report.config = cfg;
  report.volume = setup.subset.size();
  report.boundary = setup.boundary;
  report.warnings = setup.warnings;

  const ParametricDensity& family = setup.family;
  const double theta0 = cfg.family.theta0;
  const auto m = static_cast<double>(report.volume);
  const PowerSeries f0 = family.series(theta0, cfg.truncation_order);
  const CovarianceMatrix K0 = covariance_matrix(f0, setup.host, setup.subset);
  report.trace_gap = std::sqrt(m) * (K0.values.trace() / m - integrate(setup.measure, f0));
  const CovarianceFactor factor = factorize_covariance(K0);
  if (factor.jitter > 0.0) report.warnings.push_back("sampling covariance needed diagonal jitter");

  report.fisher_theta0 = fisher_information(family, theta0, setup.measure);
  report.z_scale = std::sqrt(m * report.fisher_theta0 * (cfg.legacy_section6_normalization ? 2.0 : 1.0));
  if (report.fisher_theta0 == 0.0) report.warnings.push_back("Fisher information vanishes at theta0");

  const EstimationContext ctx(family, setup.host, setup.subset, setup.measure, cfg.truncation_order,
                              setup.correction);
  const std::size_t R = cfg.replicates;
  const std::size_t nk = cfg.kinds.size();
  report.rows.resize(R * nk);

  auto run_one = [&](std::size_t r) {
    std::vector<ReplicateRow> out(nk);
    for (std::size_t k = 0; k < nk; ++k) {
      out[k].replicate = r;
      out[k].seed = cfg.seed;
      out[k].kind = cfg.kinds[k];
    }
    try {
      const auto sample = sample_field(factor, cfg.seed, 1, r, theta0).front();
      LikelihoodEvaluator eval(ctx, sample);
      for (std::size_t k = 0; k < nk; ++k) {
        ReplicateRow& row = out[k];
        try {
          const EstimationResult res = maximize_likelihood(cfg.kinds[k], eval, cfg.optimizer_tol);
          row.theta_hat = res.theta_hat;
          row.std_error = res.std_error;
          row.z = report.z_scale * (res.theta_hat - theta0);
          const ConfidenceInterval ci = confidence_interval(res, 0.95, family.domain());
          row.covered = ci.lo <= theta0 && theta0 <= ci.hi;
        } catch (const Error& e) {
          row.status = error_tag(e.code());
          row.theta_hat = row.std_error = row.z = std::numeric_limits<double>::quiet_NaN();
        }
      }
    } catch (const Error& e) {
      for (auto& row : out) {
        row.status = error_tag(e.code());
        row.theta_hat = row.std_error = row.z = std::numeric_limits<double>::quiet_NaN();
      }
    }
    std::copy(out.begin(), out.end(), report.rows.begin() + static_cast<std::ptrdiff_t>(r * nk));
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(R, 1)));
  if (workers <= 1) {
    for (std::size_t r = 0; r < R; ++r) run_one(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < R; r = next++) run_one(r);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (auto kind : cfg.kinds) report.summaries.push_back(summarize(kind, report.rows, theta0));
  return report;
}

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRow>& rows) {
  out << "replicate,seed,kind,theta_hat,std_error,z,status\n";
  for (const auto& r : rows) {
    out << r.replicate << ',' << r.seed << ',' << to_string(r.kind) << ',' << format_double(r.theta_hat) << ','
        << format_double(r.std_error) << ',' << format_double(r.z) << ',' << r.status << '\n';
  }
}

std::vector<ReplicateRow> read_replicates_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "replicate,seed,kind,theta_hat,std_error,z,status") {
    throw Error(ErrorCode::Io, "replicates.csv: missing or unexpected header");
  }
  std::vector<ReplicateRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw Error(ErrorCode::Io, "replicates.csv line " + std::to_string(lineno) + ": 7 fields expected");
    try {
      ReplicateRow r;
      r.replicate = std::stoull(cells[0]);
      r.seed = std::stoull(cells[1]);
      r.kind = parse_likelihood_kind(cells[2]);
      r.theta_hat = std::strtod(cells[3].c_str(), nullptr);
      r.std_error = std::strtod(cells[4].c_str(), nullptr);
      r.z = std::strtod(cells[5].c_str(), nullptr);
      r.status = cells[6];
      rows.push_back(r);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::Io, "replicates.csv line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

SampleTable read_samples_csv(std::istream& in) {
  SampleTable table;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "samples: empty input");
  auto header = split(line);
  if (header.empty() || header[0] != "replicate") throw Error(ErrorCode::Io, "samples: header must start with 'replicate'");
  try {
    for (std::size_t c = 1; c < header.size(); ++c) table.ids.push_back(static_cast<Vertex>(std::stol(header[c])));
  } catch (const std::exception&) {
    throw Error(ErrorCode::Io, "samples: non-integer vertex id in header");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::Io, "samples line " + std::to_string(lineno) + ": " + std::to_string(header.size()) +
                                     " fields expected");
    }
    GaussianSample s;
    try {
      s.replicate = std::stoull(cells[0]);
      s.values.resize(static_cast<Eigen::Index>(cells.size() - 1));
      for (std::size_t c = 1; c < cells.size(); ++c) s.values[static_cast<Eigen::Index>(c - 1)] = std::stod(cells[c]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Io, "samples line " + std::to_string(lineno) + ": malformed number");
    }
    table.samples.push_back(std::move(s));
  }
  return table;
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
  out << "bin_lo,bin_hi,count,normal_density_at_mid\n";
  for (const auto& b : bins) {
    out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << ','
        << format_double(b.normal_density) << '\n';
  }
}

nlohmann::ordered_json summary_json(const MonteCarloReport& report) {
  nlohmann::ordered_json j;
  j["replicates"] = report.config.replicates;
  j["volume"] = report.volume;
  j["boundary"] = report.boundary;
  j["theta0"] = report.config.family.theta0;
  j["fisher_theta0"] = nullable(report.fisher_theta0);
  j["z_normalization"] = report.config.legacy_section6_normalization ? "sqrt(m * int (f'/f)^2 dmu)"
                                                                     : "sqrt(m * J(theta0))";
  j["z_scale"] = nullable(report.z_scale);
  j["trace_gap_diagnostic"] = nullable(report.trace_gap);
  auto& kinds = j["kinds"];
  kinds = nlohmann::ordered_json::object();
  for (const auto& s : report.summaries) {
    nlohmann::ordered_json k;
    k["ok"] = s.ok;
    k["failed"] = s.failed;
    k["mean_theta_hat"] = nullable(s.mean_theta);
    k["median_abs_error"] = nullable(s.median_abs_error);
    k["z_mean"] = nullable(s.z_mean);
    k["z_sd"] = nullable(s.z_sd);
    k["ks"] = nullable(s.ks);
    k["coverage95"] = nullable(s.coverage95);
    kinds[to_string(s.kind)] = k;
  }
  j["warnings"] = report.warnings;
  return j;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void emit_report(const MonteCarloReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

  std::ostringstream rows;
  write_replicates_csv(rows, report.rows);
  write_file_atomic(dir / "replicates.csv", rows.str());
  write_file_atomic(dir / "summary.json", summary_json(report).dump(2) + "\n");

  const KindSummary* primary = nullptr;
  for (const auto& s : report.summaries) {
    std::ostringstream h;
    write_histogram_csv(h, s.histogram);
    write_file_atomic(dir / ("histogram_" + to_string(s.kind) + ".csv"), h.str());
    if (!primary || s.kind == LikelihoodKind::unbiased) primary = &s;
  }
  std::ostringstream h;
  write_histogram_csv(h, primary ? primary->histogram : z_histogram({}));
  write_file_atomic(dir / "histogram.csv", h.str());
  write_file_atomic(dir / "config.json", to_json(report.config).dump(2) + "\n");
}

MonteCarloReport reproduce_reference_experiment(const std::filesystem::path& output_dir, unsigned workers) {
  ExperimentConfig cfg = default_config();
  cfg.output_dir = output_dir.string();
  MonteCarloReport report = run_monte_carlo(cfg, workers);
  emit_report(report, output_dir);
  return report;
}

}  // namespace graphwhittle
