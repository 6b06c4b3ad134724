#include "graphwhittle/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "graphwhittle/error.hpp"
#include "graphwhittle/sampling.hpp"

namespace graphwhittle {

namespace {

std::string describe(std::span<const Vertex> subset, std::size_t delta) {
  std::ostringstream s;
  s << "m=" << subset.size() << " delta=" << delta;
  return s.str();
}

Eigen::MatrixXd restricted(const PowerSeries& f, const Graph& host, std::span<const Vertex> subset) {
  return covariance_matrix(f, host, subset).values;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& A, int p) {
  Eigen::MatrixXd out = A;
  for (int i = 1; i < p; ++i) out = out * A;
  return out;
}

}  // namespace

std::string to_string(LemmaId id) {
  switch (id) {
    case LemmaId::hom: return "hom";
    case LemmaId::det: return "det";
    case LemmaId::unbiased_trace: return "unbiased_trace";
    case LemmaId::correction: return "correction";
    case LemmaId::porosity: return "porosity";
    case LemmaId::concentration: return "concentration";
  }
  return "unknown";
}

LemmaReport make_report(LemmaId id, std::string instance, double measured, double bound) {
  LemmaReport r;
  r.lemma_id = id;
  r.instance = std::move(instance);
  r.measured = measured;
  r.bound = bound;
  r.passed = std::isfinite(measured) && measured <= bound + kBoundSlack;
  return r;
}

nlohmann::ordered_json to_json(const LemmaReport& r) {
  nlohmann::ordered_json j;
  j["lemma_id"] = to_string(r.lemma_id);
  j["instance"] = r.instance;
  j["measured"] = r.measured;
  j["bound"] = r.bound;
  j["passed"] = r.passed;
  return j;
}

void write_reports(std::ostream& out, std::span<const LemmaReport> reports) {
  for (const auto& r : reports) out << to_json(r).dump() << '\n';
}

double block_norm(const Eigen::MatrixXd& B, std::size_t delta) {
  if (delta == 0) throw Error(ErrorCode::InvalidParameter, "block norm needs a nonempty boundary");
  return B.cwiseAbs().sum() / static_cast<double>(delta);
}

LemmaReport szego_defect(std::span<const PowerSeries> densities, const Graph& host,
                         std::span<const Vertex> subset) {
  if (densities.size() < 2) throw Error(ErrorCode::InvalidParameter, "Szego defect needs at least two densities");
  Eigen::MatrixXd product = restricted(densities[0], host, subset);
  PowerSeries joint = densities[0];
  double bound = 0.5 * static_cast<double>(densities.size() - 1) * regularity_factor(densities[0]);
  for (std::size_t i = 1; i < densities.size(); ++i) {
    product = product * restricted(densities[i], host, subset);
    joint = series_multiply(joint, densities[i]);
    bound *= regularity_factor(densities[i]);
  }
  const std::size_t delta = boundary_size(host, subset);
  const double measured = block_norm(product - restricted(joint, host, subset), delta);
  std::ostringstream inst;
  inst << "k=" << densities.size() << ' ' << describe(subset, delta);
  return make_report(LemmaId::hom, inst.str(), measured, bound);
}

LogdetGap logdet_gap(const PowerSeries& f, const NestedSubgraphs& subsets, const SpectralMeasure& mu) {
  const double limit = integrate(mu, [&](double x) {
    const double v = f(x);
    if (!(v > 0.0)) throw Error(ErrorCode::SingularDensity, "density not positive on the spectrum");
    return std::log(v);
  });
  LogdetGap out;
  std::vector<double> xs, ys;
  double previous = 0.0;
  for (std::size_t n = 0; n < subsets.levels.size(); ++n) {
    const auto& level = subsets.levels[n];
    const Eigen::LLT<Eigen::MatrixXd> llt(restricted(f, subsets.host, level.vertices));
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "K_n(f) not positive definite at level " + std::to_string(n));
    }
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double m = static_cast<double>(level.volume);
    const double gap = std::abs(logdet / m - limit);
    const double ratio = static_cast<double>(level.boundary) / m;
    out.boundary_ratio.push_back(ratio);
    out.levels.push_back(make_report(LemmaId::det, describe(level.vertices, level.boundary), gap,
                                     n == 0 ? gap : previous));
    if (gap > 0.0 && ratio > 0.0) {
      xs.push_back(std::log(ratio));
      ys.push_back(std::log(gap));
    }
    previous = gap;
  }
  if (xs.size() >= 2) {
    const auto k = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double denom = k * sxx - sx * sx;
    out.slope = denom != 0.0 ? (k * sxy - sx * sy) / denom : 0.0;
  }
  out.decreasing = out.levels.size() >= 2 && out.levels.back().measured < out.levels.front().measured &&
                   out.slope > 0.0;
  return out;
}

LemmaReport exact_correction_residual(const PowerSeries& f, const PowerSeries& g, const Graph& host,
                                      std::span<const Vertex> subset, const CorrectionMatrix& B) {
  const Eigen::MatrixXd Kf = restricted(f, host, subset);
  const Eigen::MatrixXd Qg = unbiased_matrix(restricted(g, host, subset), B);
  const double lhs = (Kf.array() * Qg.transpose().array()).sum();
  const double rhs = restricted(series_multiply(f, g), host, subset).trace();
  const double measured = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
  return make_report(LemmaId::correction, describe(subset, boundary_size(host, subset)), measured,
                     kCorrectionTolerance);
}

LemmaReport porosity_factor(const NestedSubgraphs& subsets, int h) {
  if (h < 0) throw Error(ErrorCode::InvalidParameter, "negative walk length");
  const Graph& host = subsets.host;
  double worst = 0.0;
  std::string where = "no levels";
  const auto n = static_cast<std::size_t>(host.n_vertices());
  for (const auto& level : subsets.levels) {
    if (rim_distance(host, level.vertices) < h) {
      throw Error(ErrorCode::InvalidParameter,
                  "host not padded by " + std::to_string(h) + " around a level of volume " +
                      std::to_string(level.volume));
    }
    if (level.boundary == 0) continue;
    std::vector<char> inside(n, 0);
    for (Vertex v : level.vertices) inside[static_cast<std::size_t>(v)] = 1;
    double crossing = 0.0;
    std::vector<double> x(n), y(n);
    for (Vertex j : level.vertices) {
      std::fill(x.begin(), x.end(), 0.0);
      x[static_cast<std::size_t>(j)] = 1.0;
      for (int step = 0; step < h; ++step) {
        host.apply(x, y);
        std::swap(x, y);
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (!inside[k]) crossing += std::abs(x[k]);
      }
    }
    const double value = crossing / static_cast<double>(level.boundary);
    if (value >= worst) {
      worst = value;
      where = describe(level.vertices, level.boundary);
    }
  }
  std::ostringstream inst;
  inst << "h=" << h << " levels=" << subsets.levels.size() << " worst " << where;
  return make_report(LemmaId::porosity, inst.str(), worst, h + 1.0);
}

LemmaReport unbiased_trace_gap(const PowerSeries& f, const PowerSeries& g, const Graph& host,
                               std::span<const Vertex> subset, const CorrectionMatrix& B, int p) {
  if (p < 1) throw Error(ErrorCode::InvalidParameter, "trace power must be at least 1");
  const Eigen::MatrixXd Kf = restricted(f, host, subset);
  const Eigen::MatrixXd Kg = restricted(g, host, subset);
  const double m = static_cast<double>(subset.size());
  const double plain = matrix_power(Kf * Kg, p).trace() / m;
  const double corrected = matrix_power(Kf * unbiased_matrix(Kg, B), p).trace() / m;
  const double bound = B.u_n * std::pow(2.0 * regularity_factor(f) * regularity_factor(g), p);
  std::ostringstream inst;
  inst << "p=" << p << ' ' << describe(subset, boundary_size(host, subset)) << " u_n=" << B.u_n;
  return make_report(LemmaId::unbiased_trace, inst.str(), std::abs(plain - corrected), bound);
}

QuadraticForm parse_quadratic_form(const std::string& name) {
  if (name == "k_inv_density") return QuadraticForm::k_inv_density;
  if (name == "inv_k") return QuadraticForm::inv_k;
  if (name == "unbiased") return QuadraticForm::unbiased;
  throw Error(ErrorCode::InvalidParameter, "unknown quadratic form '" + name + "'");
}

std::string to_string(QuadraticForm form) {
  switch (form) {
    case QuadraticForm::k_inv_density: return "k_inv_density";
    case QuadraticForm::inv_k: return "inv_k";
    case QuadraticForm::unbiased: return "unbiased";
  }
  return "unknown";
}

LemmaReport quadratic_form_limit(const QuadraticFormSetup& setup, QuadraticForm form, const Graph& host,
                                 std::span<const Vertex> subset, const SpectralMeasure& mu,
                                 const CorrectionMatrix* B) {
  if (setup.replicates < 2) throw Error(ErrorCode::InvalidParameter, "need at least two replicates");
  const auto& family = setup.family;
  family.check_theta(setup.theta0);
  family.check_theta(setup.theta);
  const int K = setup.truncation_order;
  const PowerSeries f0 = family.series(setup.theta0, K);
  const auto m = static_cast<double>(subset.size());

  Eigen::MatrixXd Lambda;
  Eigen::LLT<Eigen::MatrixXd> inverse;
  switch (form) {
    case QuadraticForm::k_inv_density:
      Lambda = restricted(family.inverse_series(setup.theta, K), host, subset);
      break;
    case QuadraticForm::unbiased:
      if (B == nullptr) throw Error(ErrorCode::InvalidParameter, "unbiased form needs a correction matrix");
      Lambda = unbiased_matrix(restricted(family.inverse_series(setup.theta, K), host, subset), *B);
      break;
    case QuadraticForm::inv_k:
      inverse.compute(restricted(family.series(setup.theta, K), host, subset));
      if (inverse.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "K_n(f_theta) not positive definite");
      }
      break;
  }

  const auto factor = factorize_covariance(restricted(f0, host, subset));
  const auto samples = sample_field(factor, setup.seed, setup.replicates, 0, setup.theta0);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& s : samples) {
    const Eigen::VectorXd& x = s.values;
    const double q = form == QuadraticForm::inv_k ? x.dot(inverse.solve(x)) / m : x.dot(Lambda * x) / m;
    sum += q;
    sum_sq += q * q;
  }
  const auto R = static_cast<double>(setup.replicates);
  const double mean = sum / R;
  const double var = std::max(0.0, (sum_sq - R * mean * mean) / (R - 1.0));
  const double limit = integrate(mu, [&](double x) { return f0(x) / family.value(setup.theta, x); });

  std::ostringstream inst;
  inst << to_string(form) << " theta0=" << setup.theta0 << " theta=" << setup.theta << " R=" << setup.replicates
       << ' ' << describe(subset, boundary_size(host, subset)) << " mean=" << mean << " limit=" << limit;
  return make_report(LemmaId::concentration, inst.str(), std::abs(mean - limit), 3.0 * std::sqrt(var / R));
}

}  // namespace graphwhittle

namespace graphwhittle {

std::vector<LemmaReport> standard_suite(std::uint64_t seed, std::size_t replicates) {
  std::vector<LemmaReport> out;
  const auto family = ParametricDensity::ar_squared();
  const int K = 15;
  const PowerSeries f05 = family.series(0.5, K);

  const Graph g24 = normalize_weights(grid_graph(24, 24));
  const VertexSet box8 = box(g24, Box{8, 8, 8});
  const CorrectionMatrix B = correction_matrix(pair_classes(g24, box8, 2, 8), box8);
  out.push_back(exact_correction_residual(PowerSeries::monomial(2), f05, g24, box8, B));
  for (int p = 1; p <= 2; ++p) {
    out.push_back(unbiased_trace_gap(family.inverse_series(0.3, K), f05, g24, box8, B, p));
  }

  const std::vector<PowerSeries> pair{f05, family.series(0.3, K)};
  const std::vector<PowerSeries> triple{f05, family.series(0.3, K), family.inverse_series(0.4, K)};
  const Graph path = normalize_weights(path_graph(200));
  VertexSet interval(100);
  std::iota(interval.begin(), interval.end(), 50);
  out.push_back(szego_defect(pair, path, interval));
  out.push_back(szego_defect(triple, path, interval));

  const Graph g60 = normalize_weights(grid_graph(60, 60));
  std::vector<Box> boxes;
  for (int n = 4; n <= 12; ++n) boxes.push_back(Box{30 - n / 2, 30 - n / 2, n});
  const NestedSubgraphs grid_levels = nested_boxes(g60, boxes);
  for (const auto& level : grid_levels.levels) {
    out.push_back(szego_defect(pair, g60, level.vertices));
    out.push_back(szego_defect(triple, g60, level.vertices));
  }

  MeasureOptions moments;
  moments.method = MeasureMethod::moments;
  const SpectralMeasure grid_mu = empirical_spectral_measure(g60, grid_levels.levels.back().vertices, moments);
  for (auto& r : logdet_gap(f05, grid_levels, grid_mu).levels) out.push_back(std::move(r));

  const std::vector<int> radii{5, 10, 20, 40};
  const NestedSubgraphs path_levels = nested_balls(path, 100, radii);
  for (int h = 0; h <= 6; ++h) {
    out.push_back(porosity_factor(path_levels, h));
    out.push_back(porosity_factor(grid_levels, h));
  }

  const Graph chain = normalize_weights(rhombus_chain(600));
  const VertexSet chain_ball = ball(chain, 4 * 300, 150);
  const SpectralMeasure chain_mu = empirical_spectral_measure(chain, chain_ball, moments);
  const CorrectionMatrix chain_B = correction_matrix(pair_classes(chain, chain_ball, 2, 8), chain_ball);
  QuadraticFormSetup setup{family, 0.5, 0.3, K, replicates, seed};
  for (auto form : {QuadraticForm::k_inv_density, QuadraticForm::inv_k, QuadraticForm::unbiased}) {
    out.push_back(quadratic_form_limit(setup, form, chain, chain_ball, chain_mu, &chain_B));
  }
  return out;
}

}  // namespace graphwhittle
