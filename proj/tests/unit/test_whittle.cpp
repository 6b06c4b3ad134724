#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include <Eigen/Dense>

#include "graphwhittle/error.hpp"
#include "graphwhittle/whittle.hpp"

using namespace graphwhittle;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

VertexSet all_vertices(const Graph& g) {
  VertexSet s(static_cast<std::size_t>(g.n_vertices()));
  std::iota(s.begin(), s.end(), 0);
  return s;
}

GaussianSample draw(const Eigen::MatrixXd& K, std::uint64_t seed, std::uint64_t rep = 0) {
  return sample_field(factorize_covariance(K), seed, 1, rep)[0];
}

struct GridSetup {
  Graph host = normalize_weights(grid_graph(24, 24));
  VertexSet subset = box(host, {8, 8, 8});
  SpectralMeasure mu = empirical_spectral_measure(host, subset);
};

}  // namespace

TEST_CASE("likelihood kind names round trip") {
  for (auto k : {LikelihoodKind::exact, LikelihoodKind::bar, LikelihoodKind::tilde, LikelihoodKind::unbiased}) {
    CHECK(parse_likelihood_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_likelihood_kind("whittle"), Error);
}

TEST_CASE("white noise estimates are the mean square") {
  const auto host = normalize_weights(path_graph(140));
  VertexSet s(100);
  std::iota(s.begin(), s.end(), 20);
  const auto mu = empirical_spectral_measure(host, s);
  const EstimationContext ctx(ParametricDensity::constant({0.2, 5.0}), host, s, mu, 4);
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const auto x = draw(1.7 * Eigen::MatrixXd::Identity(100, 100), 11, rep);
    const double closed = x.values.squaredNorm() / 100.0;
    for (auto kind : {LikelihoodKind::exact, LikelihoodKind::bar, LikelihoodKind::tilde}) {
      const auto res = maximize_likelihood(kind, x, ctx, 1e-7);
      CHECK(res.theta_hat == doctest::Approx(closed).epsilon(1e-5));
      CHECK(res.std_error == doctest::Approx(res.theta_hat * std::sqrt(2.0 / 100.0)).epsilon(1e-6));
    }
  }
}

TEST_CASE("exact likelihood matches a dense Gaussian density") {
  const GridSetup g;
  const auto family = ParametricDensity::ar_squared();
  const EstimationContext ctx(family, g.host, g.subset, g.mu, 15);
  const auto K0 = covariance_matrix(family.series(0.5, 15), g.host, g.subset).values;
  const auto x = draw(K0, 3);
  for (double theta : {-0.3, 0.2, 0.5, 0.8}) {
    const auto K = covariance_matrix(family.series(theta, 15), g.host, g.subset).values;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    const double logdet = ldlt.vectorD().array().log().sum();
    const double quad = x.values.dot(ldlt.solve(x.values));
    const double m = static_cast<double>(g.subset.size());
    const double oracle = -0.5 * (m * kLog2Pi + logdet + quad);
    CHECK(log_likelihood(LikelihoodKind::exact, theta, x, ctx) == doctest::Approx(oracle).epsilon(1e-10));
    const double logint = integrate(g.mu, [&](double t) { return std::log(family.value(theta, t)); });
    CHECK(log_likelihood(LikelihoodKind::bar, theta, x, ctx) ==
          doctest::Approx(-0.5 * (m * kLog2Pi + m * logint + quad)).epsilon(1e-10));
  }
}

TEST_CASE("whittle quadratic forms use the inverse-density covariance") {
  const GridSetup g;
  const auto family = ParametricDensity::ar_squared();
  const auto B = correction_matrix(pair_classes(g.host, g.subset, 2, 8), g.subset);
  const EstimationContext ctx(family, g.host, g.subset, g.mu, 15, B);
  const auto x = draw(covariance_matrix(family.series(0.4, 15), g.host, g.subset).values, 8);
  const double m = static_cast<double>(g.subset.size());
  for (double theta : {-0.6, 0.1, 0.7}) {
    const auto Kinv = covariance_matrix(family.inverse_series(theta, 2), g.host, g.subset);
    const double logint = integrate(g.mu, [&](double t) { return family.log_value(theta, t); });
    const double tilde = -0.5 * (m * kLog2Pi + m * logint + x.values.dot(Kinv.values * x.values));
    const double unbiased =
        -0.5 * (m * kLog2Pi + m * logint + x.values.dot(unbiased_matrix(Kinv, B) * x.values));
    CHECK(log_likelihood(LikelihoodKind::tilde, theta, x, ctx) == doctest::Approx(tilde).epsilon(1e-11));
    CHECK(log_likelihood(LikelihoodKind::unbiased, theta, x, ctx) == doctest::Approx(unbiased).epsilon(1e-11));
  }
}

TEST_CASE("trivial correction makes unbiased equal tilde") {
  const auto host = normalize_weights(torus_graph(12, 12));
  const auto s = all_vertices(host);
  const auto mu = empirical_spectral_measure(host, s);
  const auto B = correction_matrix(pair_classes(host, s, 2, 4), s);
  const auto family = ParametricDensity::ar_squared();
  const EstimationContext ctx(family, host, s, mu, 15, B);
  const auto x = draw(covariance_matrix(family.series(0.5, 15), host, s).values, 21);
  LikelihoodEvaluator eval(ctx, x);
  for (double theta : {-0.5, 0.0, 0.45, 0.9}) {
    CHECK(eval(LikelihoodKind::unbiased, theta) == eval(LikelihoodKind::tilde, theta));
  }
  CHECK(maximize_likelihood(LikelihoodKind::unbiased, eval).theta_hat ==
        maximize_likelihood(LikelihoodKind::tilde, eval).theta_hat);
}

TEST_CASE("unbiased kind needs a correction matrix") {
  const GridSetup g;
  const EstimationContext ctx(ParametricDensity::ar_squared(), g.host, g.subset, g.mu, 15);
  const auto x = draw(Eigen::MatrixXd::Identity(64, 64), 1);
  CHECK_THROWS_AS(log_likelihood(LikelihoodKind::unbiased, 0.3, x, ctx), Error);
  CHECK_THROWS_AS(log_likelihood(LikelihoodKind::tilde, 0.95, x, ctx), Error);
  const auto short_x = draw(Eigen::MatrixXd::Identity(10, 10), 1);
  CHECK_THROWS_AS(LikelihoodEvaluator(ctx, short_x), Error);
  CorrectionMatrix wrong;
  wrong.values = Eigen::MatrixXd::Ones(3, 3);
  CHECK_THROWS_AS(EstimationContext(ParametricDensity::ar_squared(), g.host, g.subset, g.mu, 15, wrong), Error);
}

TEST_CASE("optimizer agrees with a fine grid search") {
  const GridSetup g;
  const auto family = ParametricDensity::ar_squared();
  const auto B = correction_matrix(pair_classes(g.host, g.subset, 2, 8), g.subset);
  const EstimationContext ctx(family, g.host, g.subset, g.mu, 15, B);
  const auto x = draw(covariance_matrix(family.series(0.5, 15), g.host, g.subset).values, 77);
  LikelihoodEvaluator eval(ctx, x);
  for (auto kind : {LikelihoodKind::exact, LikelihoodKind::bar, LikelihoodKind::tilde, LikelihoodKind::unbiased}) {
    double best = -1e300, arg = 0.0;
    std::optional<double> prev;
    for (int i = 0; i <= 1000; ++i) {
      const double theta = -0.9 + 1.8 * i / 1000.0;
      double v = 0.0;
      try {
        v = eval(kind, theta);
      } catch (const Error&) {
        prev.reset();
        continue;
      }
      if (prev && theta >= -0.5 && theta <= 0.7) CHECK(std::abs(v - *prev) < 1.0);
      prev = v;
      if (v > best) {
        best = v;
        arg = theta;
      }
    }
    const auto res = maximize_likelihood(kind, eval, 1e-6);
    CHECK(std::abs(res.theta_hat - arg) <= 1.8e-3);
    CHECK(res.loglik_at_max >= best - 1e-9);
    CHECK(res.bracket_hi - res.bracket_lo <= 1e-6);
    CHECK(res.fisher == doctest::Approx(fisher_information(family, res.theta_hat, g.mu)));
  }
}

TEST_CASE("boundary maxima are reported") {
  const auto host = normalize_weights(path_graph(60));
  VertexSet s(40);
  std::iota(s.begin(), s.end(), 10);
  const auto mu = empirical_spectral_measure(host, s);
  const EstimationContext ctx(ParametricDensity::constant({0.2, 0.5}), host, s, mu, 2);
  const auto x = draw(4.0 * Eigen::MatrixXd::Identity(40, 40), 2);
  const auto res = maximize_likelihood(LikelihoodKind::exact, x, ctx);
  CHECK(res.theta_hat == doctest::Approx(0.5));
  REQUIRE_FALSE(res.warnings.empty());
  CHECK(res.warnings.front().find("boundary") != std::string::npos);
  const auto ci = confidence_interval(res, 0.95, ctx.family().domain());
  CHECK(ci.clipped);
  CHECK(ci.hi == 0.5);
}

TEST_CASE("fisher information closed forms") {
  const SpectralMeasure mu({{-0.8, 0.25}, {0.0, 0.25}, {0.3, 0.5}});
  const auto ar = ParametricDensity::ar_squared();
  const double theta = 0.4;
  double oracle = 0.0;
  for (const auto& a : mu.atoms()) {
    const double r = 2.0 * a.lambda / (1.0 - theta * a.lambda);
    oracle += a.weight * r * r;
  }
  CHECK(fisher_information(ar, theta, mu) == doctest::Approx(0.5 * oracle));
  CHECK(fisher_information(ParametricDensity::constant(), 2.0, mu) == doctest::Approx(1.0 / 8.0));
  CHECK(fisher_information(ar, theta, SpectralMeasure({{0.0, 1.0}})) == 0.0);
}

TEST_CASE("kullback information is a divergence with fisher curvature") {
  const GridSetup g;
  const auto family = ParametricDensity::ar_squared();
  CHECK(kullback_information(family, 0.5, 0.5, g.mu) == doctest::Approx(0.0).scale(1.0));
  for (double theta : {-0.7, 0.0, 0.3, 0.6, 0.9}) CHECK(kullback_information(family, 0.5, theta, g.mu) >= 0.0);
  const double h = 1e-3;
  const double curvature = 2.0 * kullback_information(family, 0.5, 0.5 + h, g.mu) / (h * h);
  CHECK(curvature == doctest::Approx(fisher_information(family, 0.5, g.mu)).epsilon(1e-2));
  const auto f0 = family.series(0.5, 80);
  const auto f1 = family.series(0.2, 80);
  CHECK(kullback_information(f0, f1, g.mu) ==
        doctest::Approx(kullback_information(family, 0.5, 0.2, g.mu)).epsilon(1e-10));
  CHECK_THROWS_AS(kullback_information(PowerSeries({-1.0}), f1, g.mu), Error);
}

TEST_CASE("confidence intervals") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS_AS(normal_quantile(1.0), Error);

  EstimationResult res;
  res.theta_hat = 0.3;
  res.std_error = 0.05;
  res.fisher = 1.0;
  const Interval domain{-0.9, 0.9};
  const auto ci = confidence_interval(res, 0.95, domain);
  CHECK(ci.lo == doctest::Approx(0.3 - 1.959964 * 0.05).epsilon(1e-6));
  CHECK(ci.hi == doctest::Approx(0.3 + 1.959964 * 0.05).epsilon(1e-6));
  CHECK_FALSE(ci.clipped);

  res.theta_hat = -0.88;
  const auto clipped = confidence_interval(res, 0.95, domain);
  CHECK(clipped.clipped);
  CHECK(clipped.lo == -0.9);

  CHECK_THROWS_AS(confidence_interval(res, 1.5, domain), Error);
  res.fisher = 0.0;
  res.std_error = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(confidence_interval(res, 0.95, domain), Error);
}

TEST_CASE("estimates concentrate near the true parameter") {
  const auto host = normalize_weights(grid_graph(50, 50));
  const auto s = box(host, {15, 15, 20});
  const auto mu = empirical_spectral_measure(host, s);
  const auto family = ParametricDensity::ar_squared();
  const auto B = correction_matrix(pair_classes(host, s, 2, 8), s);
  const EstimationContext ctx(family, host, s, mu, 15, B);
  const auto factor = factorize_covariance(covariance_matrix(family.series(0.5, 15), host, s));
  double sum = 0.0;
  const auto samples = sample_field(factor, 2024, 8);
  for (const auto& x : samples) sum += maximize_likelihood(LikelihoodKind::unbiased, x, ctx).theta_hat;
  CHECK(std::abs(sum / 8.0 - 0.5) < 0.05);
}

TEST_CASE("estimation result json fields") {
  EstimationResult r;
  r.kind = LikelihoodKind::tilde;
  r.theta_hat = 0.25;
  r.warnings = {"w"};
  const auto j = to_json(r);
  CHECK(j["kind"] == "tilde");
  CHECK(j["theta_hat"] == 0.25);
  CHECK(j["warnings"].size() == 1);
}
