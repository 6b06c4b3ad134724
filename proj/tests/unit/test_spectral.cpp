#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "graphwhittle/error.hpp"
#include "graphwhittle/spectral.hpp"

using namespace graphwhittle;

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Eigen::MatrixXd dense(const Graph& g) { return Eigen::MatrixXd(g.to_sparse()); }

std::vector<double> linspace(int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = -1.0 + 2.0 * i / (n - 1);
  return x;
}

}  // namespace

TEST_CASE("series multiplication") {
  const PowerSeries g({0.3, -1.2, 0.7, 2.0});
  const auto id = series_multiply(PowerSeries::constant(1.0), g);
  for (int k = 0; k <= g.order(); ++k) CHECK(id.coeff(k) == g.coeff(k));

  const auto sq = series_multiply(PowerSeries::monomial(1), PowerSeries::monomial(1));
  CHECK(sq.coeffs() == std::vector<double>{0.0, 0.0, 1.0});

  const double theta = 0.6;
  const int K = 20;
  std::vector<double> geo(K + 1);
  for (int k = 0; k <= K; ++k) geo[k] = std::pow(theta, k);
  const auto prod = series_multiply(PowerSeries({1.0, -theta}), PowerSeries(geo));
  CHECK(prod.coeff(0) == doctest::Approx(1.0));
  for (int k = 1; k <= K; ++k) CHECK(std::abs(prod.coeff(k)) < 1e-14);
  CHECK(prod.coeff(K + 1) == doctest::Approx(-std::pow(theta, K + 1)));

  const auto cut = series_multiply(g, g, 2);
  CHECK(cut.order() == 2);
}

TEST_CASE("alpha is submultiplicative on exact products") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(6), b(4);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const PowerSeries f(a), g(b);
    CHECK(regularity_factor(series_multiply(f, g)) <= regularity_factor(f) * regularity_factor(g) + 1e-12);
  }
}

TEST_CASE("series reciprocal") {
  const double theta = 0.5;
  const int K = 25;
  const auto r1 = series_reciprocal(PowerSeries({1.0, -theta}), K);
  for (int k = 0; k <= K; ++k) CHECK(r1.coeff(k) == doctest::Approx(std::pow(theta, k)));

  const auto r2 = series_reciprocal(PowerSeries({1.0, -2 * theta, theta * theta}), K);
  for (int k = 0; k <= K; ++k) CHECK(r2.coeff(k) == doctest::Approx((k + 1) * std::pow(theta, k)));

  const auto rc = series_reciprocal(PowerSeries::constant(4.0), 5);
  CHECK(rc.coeff(0) == doctest::Approx(0.25));
  for (int k = 1; k <= 5; ++k) CHECK(rc.coeff(k) == 0.0);

  CHECK_THROWS_AS(series_reciprocal(PowerSeries({0.0, 1.0}), 5), Error);
  CHECK_THROWS_AS(series_reciprocal(PowerSeries({1.0, -2.0}), 5), Error);

  // round trip: coefficients 1..K-deg(f) of f * (1/f) vanish
  const PowerSeries f({2.0, 0.5, -0.3});
  const auto prod = series_multiply(f, series_reciprocal(f, 30));
  CHECK(prod.coeff(0) == doctest::Approx(1.0));
  for (int k = 1; k <= 28; ++k) CHECK(std::abs(prod.coeff(k)) <= 1e-10);
}

TEST_CASE("series logarithm") {
  const auto lc = series_log(PowerSeries::constant(3.0), 6);
  CHECK(lc.coeff(0) == doctest::Approx(std::log(3.0)));
  for (int k = 1; k <= 6; ++k) CHECK(lc.coeff(k) == 0.0);

  const double theta = 0.4;
  const int K = 30;
  const auto f = series_reciprocal(PowerSeries({1.0, -2 * theta, theta * theta}), 60);
  const auto lf = series_log(f, K);
  CHECK(std::abs(lf.coeff(0)) < 1e-15);
  double alpha = 0.0;
  for (int k = 1; k <= K; ++k) {
    CHECK(lf.coeff(k) == doctest::Approx(2.0 * std::pow(theta, k) / k));
    alpha += 2.0 * std::pow(theta, k) * (k + 1) / k;
  }
  CHECK(regularity_factor(lf) == doctest::Approx(alpha));

  const PowerSeries g({1.5, 0.2, -0.1});
  const auto sum = series_log(g, 20) + series_log(series_reciprocal(g, 40), 20);
  for (int k = 0; k <= 20; ++k) CHECK(std::abs(sum.coeff(k)) < 1e-12);

  CHECK_THROWS_AS(series_log(PowerSeries({-1.0, 0.1}), 5), Error);
  CHECK_THROWS_AS(series_log(PowerSeries({0.5, 1.0}), 5), Error);
}

TEST_CASE("exp of log reproduces the density on a grid") {
  for (const PowerSeries& f : {PowerSeries({1.0, 0.3, 0.2}), PowerSeries({2.0, -0.5, 0.1, 0.05})}) {
    const auto back = series_exp(series_log(f, 80), 80);
    for (double x : linspace(101)) CHECK(std::abs(std::exp(series_log(f, 80)(x)) - f(x)) <= 1e-8);
    for (double x : linspace(101)) CHECK(std::abs(back(x) - f(x)) <= 1e-8);
  }
}

TEST_CASE("regularity factor") {
  CHECK(regularity_factor(PowerSeries::monomial(2)) == 3.0);
  CHECK(regularity_factor(PowerSeries::constant(-2.5)) == 2.5);
  const double q = 0.5;
  std::vector<double> c(400);
  for (int k = 0; k < 400; ++k) c[k] = (k + 1) * std::pow(q, k);
  CHECK(regularity_factor(PowerSeries(c)) == doctest::Approx((1 + q) / std::pow(1 - q, 3)));
  CHECK(absolute_sum(PowerSeries({1.0, -2.0, 0.5})) == 3.5);
}

TEST_CASE("densities with alpha(log f) <= rho lie in [exp(-rho), exp(rho)]") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> c(5);
    for (auto& x : c) x = u(rng);
    const auto f = series_exp(PowerSeries(c), 60);
    const double rho = regularity_factor(series_log(f, 60));
    for (double x : linspace(201)) {
      CHECK(f(x) >= std::exp(-rho) - 1e-12);
      CHECK(f(x) <= std::exp(rho) + 1e-12);
    }
  }
}

TEST_CASE("spectral measures are normalized, sorted and validated") {
  const SpectralMeasure mu({{0.5, 2.0}, {-0.25, 1.0}, {0.1, 0.0}, {0.9, 1.0}});
  CHECK(mu.size() == 3);
  CHECK(mu.total_mass() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < mu.size(); ++i) CHECK(mu.atoms()[i - 1].lambda < mu.atoms()[i].lambda);
  for (const auto& a : mu.atoms()) CHECK(a.weight > 0.0);
  CHECK(integrate(mu, [](double) { return 1.0; }) == doctest::Approx(1.0));
  CHECK(mu.moment(1) == doctest::Approx((0.5 * 2 - 0.25 + 0.9) / 4));

  CHECK_THROWS_AS(SpectralMeasure({{1.5, 1.0}}), Error);
  CHECK_THROWS_AS(SpectralMeasure({{0.0, -1.0}}), Error);
  CHECK_THROWS_AS(SpectralMeasure({{0.0, 0.0}}), Error);
  CHECK_NOTHROW(SpectralMeasure({{1.0 + 1e-10, 1.0}}));
}

TEST_CASE("single isolated vertex gives a point mass at zero") {
  const Graph g(1);
  const VertexSet s{0};
  const auto mu = empirical_spectral_measure(g, s);
  REQUIRE(mu.size() == 1);
  CHECK(mu.atoms()[0].lambda == 0.0);
  MeasureOptions opts;
  opts.method = MeasureMethod::moments;
  opts.moment_order = 6;
  const auto mm = empirical_spectral_measure(g, s, opts);
  CHECK(mm.moment(2) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("path diagonal moments are central binomials") {
  const Graph g = normalize_weights(path_graph(201));
  const VertexSet centre{100};
  const auto moments = trace_moments(g, centre, 20);
  const Eigen::MatrixXd W = dense(g);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(201, 201);
  for (int k = 0; k <= 20; ++k) {
    const double expected = k % 2 ? 0.0 : binomial(k, k / 2) / std::pow(2.0, k);
    CHECK(moments[k] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(P(100, 100) == doctest::Approx(expected).epsilon(1e-12));
    P = P * W;
  }
  CHECK(moments[2] == doctest::Approx(0.5));
  CHECK(moments[4] == doctest::Approx(3.0 / 8.0));
}

TEST_CASE("grid interior vertex has second moment 1/4") {
  const Graph g = normalize_weights(grid_graph(9, 9));
  const VertexSet centre{g.grid()->at(4, 4)};
  CHECK(trace_moments(g, centre, 2)[2] == doctest::Approx(0.25));
}

TEST_CASE("moment-fitted measure reproduces the trace moments") {
  const Graph g = normalize_weights(grid_graph(61, 61));
  const VertexSet centre{g.grid()->at(30, 30)};
  MeasureOptions opts;
  opts.method = MeasureMethod::moments;
  opts.moment_order = 24;
  const auto mu = empirical_spectral_measure(g, centre, opts);
  const auto exact = trace_moments(g, centre, 24);
  CHECK(mu.total_mass() == doctest::Approx(1.0));
  for (int k = 0; k <= 24; ++k) CHECK(mu.moment(k) == doctest::Approx(exact[k]).epsilon(1e-6).scale(1.0));

  const Graph small = normalize_weights(path_graph(10));
  const VertexSet near_end{1};
  CHECK_THROWS_AS(empirical_spectral_measure(small, near_end, opts), Error);
  opts.require_padding = false;
  CHECK_NOTHROW(empirical_spectral_measure(small, near_end, opts));
}

TEST_CASE("path eigen-measure integrals match the closed-form spectrum") {
  for (int n : {7, 50, 300}) {
    const Graph g = normalize_weights(path_graph(n));
    VertexSet all(n);
    std::iota(all.begin(), all.end(), 0);
    const auto mu = empirical_spectral_measure(g, all);
    CHECK(mu.size() == static_cast<std::size_t>(n));
    CHECK(std::abs(integrate(mu, PowerSeries::monomial(1))) < 1e-12);
    double expected = 0.0;
    for (int k = 1; k <= n; ++k) expected += std::pow(std::cos(std::numbers::pi * k / (n + 1)), 2) / n;
    CHECK(integrate(mu, PowerSeries::monomial(2)) == doctest::Approx(expected).epsilon(1e-12));
    const auto ev = restricted_eigenvalues(g, all);
    for (int k = 1; k <= n; ++k) {
      CHECK(ev[k - 1] == doctest::Approx(std::cos(std::numbers::pi * (n + 1 - k) / (n + 1))).epsilon(1e-10));
    }
  }
}

TEST_CASE("banded and dense eigen paths agree on a long rhombus chain") {
  const Graph g = normalize_weights(rhombus_chain(100));
  VertexSet all(400);
  std::iota(all.begin(), all.end(), 0);
  const auto ev = restricted_eigenvalues(g, all);
  const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense(g)).eigenvalues();
  REQUIRE(ev.size() == 400);
  for (int i = 0; i < 400; ++i) CHECK(ev[i] == doctest::Approx(ref[i]).epsilon(1e-10).scale(1.0));
}

TEST_CASE("eigen and moment methods agree up to the boundary ratio") {
  const Graph g = normalize_weights(grid_graph(60, 60));
  double previous = 1.0;
  for (int side : {4, 8, 16}) {
    const VertexSet b = box(g, Box{30 - side / 2, 30 - side / 2, side});
    const auto mu = empirical_spectral_measure(g, b);
    const auto exact = trace_moments(g, b, 8);
    const double ratio = static_cast<double>(boundary_size(g, b)) / b.size();
    double worst = 0.0;
    for (int k = 0; k <= 8; ++k) {
      const double gap = std::abs(mu.moment(k) - exact[k]);
      CHECK(gap <= k * ratio + 1e-12);
      worst = std::max(worst, gap);
    }
    CHECK(worst < previous);
    previous = worst;
  }
}

TEST_CASE("measure CSV round-trips with full precision") {
  const SpectralMeasure mu({{-0.3, 0.1}, {1.0 / 3.0, 0.7}, {0.9, 0.2}});
  std::stringstream ss;
  write_measure_csv(ss, mu);
  CHECK(ss.str().rfind("lambda,weight\n", 0) == 0);
  const auto back = read_measure_csv(ss);
  REQUIRE(back.size() == mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    CHECK(back.atoms()[i].lambda == mu.atoms()[i].lambda);
    CHECK(back.atoms()[i].weight == mu.atoms()[i].weight);
  }
  std::stringstream bad("lambda;weight\n");
  CHECK_THROWS_AS(read_measure_csv(bad), Error);
}
