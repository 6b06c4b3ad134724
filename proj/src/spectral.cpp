#include "graphwhittle/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <lapacke.h>

#include "graphwhittle/error.hpp"
#include "local_patch.hpp"
#include "nnls.hpp"

namespace graphwhittle {

PowerSeries::PowerSeries(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) coeffs_.push_back(0.0);
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw Error(ErrorCode::Numerical, "non-finite power-series coefficient");
  }
}

PowerSeries PowerSeries::monomial(int k, double c) {
  if (k < 0) throw Error(ErrorCode::InvalidParameter, "negative monomial degree");
  std::vector<double> v(static_cast<std::size_t>(k) + 1, 0.0);
  v[static_cast<std::size_t>(k)] = c;
  return PowerSeries(std::move(v));
}

double PowerSeries::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

int PowerSeries::degree() const {
  for (int k = order(); k > 0; --k) {
    if (coeffs_[static_cast<std::size_t>(k)] != 0.0) return k;
  }
  return 0;
}

PowerSeries PowerSeries::truncated(int order) const {
  if (order < 0) throw Error(ErrorCode::InvalidParameter, "negative truncation order");
  std::vector<double> v(static_cast<std::size_t>(order) + 1, 0.0);
  for (int k = 0; k <= order; ++k) v[static_cast<std::size_t>(k)] = coeff(k);
  return PowerSeries(std::move(v));
}

PowerSeries operator+(const PowerSeries& a, const PowerSeries& b) {
  const int K = std::max(a.order(), b.order());
  std::vector<double> v(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) v[static_cast<std::size_t>(k)] = a.coeff(k) + b.coeff(k);
  return PowerSeries(std::move(v));
}

PowerSeries operator-(const PowerSeries& a, const PowerSeries& b) { return a + (-1.0) * b; }

PowerSeries operator*(double s, const PowerSeries& a) {
  std::vector<double> v = a.coeffs();
  for (double& c : v) c *= s;
  return PowerSeries(std::move(v));
}

PowerSeries series_multiply(const PowerSeries& f, const PowerSeries& g, std::optional<int> order) {
  const int K = order ? *order : f.order() + g.order();
  if (K < 0) throw Error(ErrorCode::InvalidParameter, "negative truncation order");
  std::vector<double> v(static_cast<std::size_t>(K) + 1, 0.0);
  for (int i = 0; i <= std::min(K, f.order()); ++i) {
    const double fi = f.coeff(i);
    if (fi == 0.0) continue;
    for (int j = 0; j <= std::min(K - i, g.order()); ++j) {
      v[static_cast<std::size_t>(i + j)] += fi * g.coeff(j);
    }
  }
  return PowerSeries(std::move(v));
}

double grid_minimum(const std::function<double(double)>& f, int points) {
  double m = std::numeric_limits<double>::infinity();
  for (int p = 0; p < points; ++p) {
    const double x = -1.0 + 2.0 * p / (points - 1);
    m = std::min(m, f(x));
  }
  return m;
}

namespace {

double grid_maximum(const PowerSeries& f, int points = 2001) {
  return -grid_minimum([&](double x) { return -f(x); }, points);
}

}  // namespace

PowerSeries series_reciprocal(const PowerSeries& f, int order) {
  if (order < 0) throw Error(ErrorCode::InvalidParameter, "negative truncation order");
  const double f0 = f.coeff(0);
  if (f0 == 0.0) throw Error(ErrorCode::SingularDensity, "reciprocal of a series with f_0 = 0");
  const double lo = grid_minimum([&](double x) { return f(x); });
  const double hi = grid_maximum(f);
  if (lo * hi <= 0.0) throw Error(ErrorCode::SingularDensity, "series vanishes or changes sign on [-1, 1]");
  std::vector<double> r(static_cast<std::size_t>(order) + 1, 0.0);
  r[0] = 1.0 / f0;
  for (int k = 1; k <= order; ++k) {
    double s = 0.0;
    for (int j = 1; j <= std::min(k, f.order()); ++j) s += f.coeff(j) * r[static_cast<std::size_t>(k - j)];
    r[static_cast<std::size_t>(k)] = -s / f0;
  }
  return PowerSeries(std::move(r));
}

PowerSeries series_log(const PowerSeries& f, int order) {
  if (order < 0) throw Error(ErrorCode::InvalidParameter, "negative truncation order");
  const double f0 = f.coeff(0);
  if (!(f0 > 0.0)) throw Error(ErrorCode::SingularDensity, "log of a series with f_0 <= 0");
  if (!(grid_minimum([&](double x) { return f(x); }) > 0.0)) {
    throw Error(ErrorCode::SingularDensity, "log of a series that is not positive on [-1, 1]");
  }
  // k g_k f_0 = k f_k - sum_{j=1}^{k-1} j g_j f_{k-j}
  std::vector<double> g(static_cast<std::size_t>(order) + 1, 0.0);
  g[0] = std::log(f0);
  for (int k = 1; k <= order; ++k) {
    double s = k * f.coeff(k);
    for (int j = 1; j < k; ++j) s -= j * g[static_cast<std::size_t>(j)] * f.coeff(k - j);
    g[static_cast<std::size_t>(k)] = s / (k * f0);
  }
  return PowerSeries(std::move(g));
}

PowerSeries series_exp(const PowerSeries& f, int order) {
  if (order < 0) throw Error(ErrorCode::InvalidParameter, "negative truncation order");
  std::vector<double> e(static_cast<std::size_t>(order) + 1, 0.0);
  e[0] = std::exp(f.coeff(0));
  for (int k = 1; k <= order; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * f.coeff(j) * e[static_cast<std::size_t>(k - j)];
    e[static_cast<std::size_t>(k)] = s / k;
  }
  return PowerSeries(std::move(e));
}

double regularity_factor(const PowerSeries& f) {
  double a = 0.0;
  for (int k = 0; k <= f.order(); ++k) a += std::abs(f.coeff(k)) * (k + 1);
  return a;
}

double absolute_sum(const PowerSeries& f) {
  double a = 0.0;
  for (double c : f.coeffs()) a += std::abs(c);
  return a;
}

SpectralMeasure::SpectralMeasure(std::vector<Atom> atoms) {
  constexpr double slack = 1e-9;
  double total = 0.0;
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.lambda) || !std::isfinite(a.weight) || a.weight < 0.0) {
      throw Error(ErrorCode::InvalidParameter, "spectral measure atoms need finite locations and weights >= 0");
    }
    if (a.lambda < -1.0 - slack || a.lambda > 1.0 + slack) {
      throw Error(ErrorCode::InvalidParameter,
                  "spectral measure atom at " + std::to_string(a.lambda) + " outside [-1, 1]");
    }
    total += a.weight;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidParameter, "spectral measure has zero mass");
  for (const Atom& a : atoms) {
    if (a.weight > 0.0) atoms_.push_back(Atom{a.lambda, a.weight / total});
  }
  std::stable_sort(atoms_.begin(), atoms_.end(),
                   [](const Atom& x, const Atom& y) { return x.lambda < y.lambda; });
}

double SpectralMeasure::total_mass() const {
  double s = 0.0;
  for (const Atom& a : atoms_) s += a.weight;
  return s;
}

double SpectralMeasure::moment(int k) const {
  return integrate(*this, [k](double x) { return std::pow(x, k); });
}

namespace {

Eigen::MatrixXd restricted_matrix(const Graph& host, std::span<const Vertex> subset) {
  const auto m = static_cast<Eigen::Index>(subset.size());
  std::vector<int> index(static_cast<std::size_t>(host.n_vertices()), -1);
  for (Eigen::Index a = 0; a < m; ++a) index[subset[a]] = static_cast<int>(a);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (const auto& nb : host.neighbors(subset[a])) {
      const int b = index[nb.v];
      if (b >= 0) W(a, b) = nb.w;
    }
  }
  return W;
}

void check_subset(const Graph& host, std::span<const Vertex> subset) {
  if (subset.empty()) throw Error(ErrorCode::InvalidParameter, "empty vertex subset");
  for (Vertex v : subset) {
    if (!host.contains(v)) throw Error(ErrorCode::InvalidParameter, "subset vertex outside host");
  }
}

}  // namespace

std::vector<double> restricted_eigenvalues(const Graph& host, std::span<const Vertex> subset) {
  check_subset(host, subset);
  const Eigen::MatrixXd W = restricted_matrix(host, subset);
  const Eigen::Index m = W.rows();
  Eigen::Index kd = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      if (W(i, j) != 0.0) {
        kd = std::max(kd, j - i);
        break;
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(m));
  if (m > 256 && kd * 8 <= m) {
    // banded storage, upper triangle, column-major
    const Eigen::Index ld = kd + 1;
    std::vector<double> ab(static_cast<std::size_t>(ld * m), 0.0);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = std::max<Eigen::Index>(0, j - kd); i <= j; ++i) {
        ab[static_cast<std::size_t>(kd + i - j + j * ld)] = W(i, j);
      }
    }
    const lapack_int info = LAPACKE_dsbev(LAPACK_COL_MAJOR, 'N', 'U', static_cast<lapack_int>(m),
                                          static_cast<lapack_int>(kd), ab.data(),
                                          static_cast<lapack_int>(ld), eig.data(), nullptr, 1);
    if (info != 0) {
      throw Error(ErrorCode::Numerical,
                  "banded eigensolver failed (info=" + std::to_string(info) + ", n=" + std::to_string(m) +
                      ", bandwidth=" + std::to_string(kd) + ")");
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(W, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorCode::Numerical, "eigensolver failed on " + std::to_string(m) + "x" + std::to_string(m) +
                                            " restriction (Frobenius norm " + std::to_string(W.norm()) + ")");
    }
    for (Eigen::Index i = 0; i < m; ++i) eig[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
  }
  std::sort(eig.begin(), eig.end());
  return eig;
}

std::vector<double> trace_moments(const Graph& host, std::span<const Vertex> subset, int max_order) {
  check_subset(host, subset);
  if (max_order < 0) throw Error(ErrorCode::InvalidParameter, "negative moment order");
  const auto patch = detail::make_patch(host, subset, max_order);
  std::vector<double> mom(static_cast<std::size_t>(max_order) + 1, 0.0);
  for (Vertex i : subset) {
    const int li = patch.local(i);
    Eigen::VectorXd v = patch.unit(i);
    for (int k = 0; k <= max_order; ++k) {
      mom[static_cast<std::size_t>(k)] += v[li];
      if (k < max_order) v = patch.W * v;
    }
  }
  for (double& x : mom) x /= static_cast<double>(subset.size());
  return mom;
}

namespace {

std::vector<double> chebyshev_moments(const Graph& host, std::span<const Vertex> subset, int max_order) {
  const auto patch = detail::make_patch(host, subset, max_order);
  std::vector<double> tau(static_cast<std::size_t>(max_order) + 1, 0.0);
  for (Vertex i : subset) {
    const int li = patch.local(i);
    Eigen::VectorXd prev = patch.unit(i);
    tau[0] += 1.0;
    if (max_order == 0) continue;
    Eigen::VectorXd cur = patch.W * prev;
    tau[1] += cur[li];
    for (int k = 2; k <= max_order; ++k) {
      Eigen::VectorXd next = 2.0 * (patch.W * cur) - prev;
      tau[static_cast<std::size_t>(k)] += next[li];
      prev = std::move(cur);
      cur = std::move(next);
    }
  }
  for (double& x : tau) x /= static_cast<double>(subset.size());
  return tau;
}

SpectralMeasure fit_moments(std::span<const double> tau, int nodes) {
  const auto M = static_cast<Eigen::Index>(tau.size());
  const auto N = static_cast<Eigen::Index>(nodes);
  Eigen::VectorXd x(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    x[j] = N == 1 ? 0.0 : -std::cos(std::numbers::pi * static_cast<double>(j) / static_cast<double>(N - 1));
  }
  Eigen::MatrixXd A(M, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    double t0 = 1.0;
    double t1 = x[j];
    A(0, j) = t0;
    if (M > 1) A(1, j) = t1;
    for (Eigen::Index k = 2; k < M; ++k) {
      const double t2 = 2.0 * x[j] * t1 - t0;
      A(k, j) = t2;
      t0 = t1;
      t1 = t2;
    }
  }
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(tau.data(), M);
  const Eigen::VectorXd w = detail::nnls(A, b);
  std::vector<Atom> atoms;
  for (Eigen::Index j = 0; j < N; ++j) {
    if (w[j] > 0.0) atoms.push_back(Atom{x[j], w[j]});
  }
  if (atoms.empty()) throw Error(ErrorCode::Numerical, "moment fit produced an empty measure");
  return SpectralMeasure(std::move(atoms));
}

}  // namespace

SpectralMeasure empirical_spectral_measure(const Graph& host, std::span<const Vertex> subset,
                                           const MeasureOptions& options) {
  check_subset(host, subset);
  if (options.method == MeasureMethod::eigen) {
    const auto eig = restricted_eigenvalues(host, subset);
    std::vector<Atom> atoms;
    atoms.reserve(eig.size());
    const double w = 1.0 / static_cast<double>(eig.size());
    for (double l : eig) atoms.push_back(Atom{std::clamp(l, -1.0, 1.0), w});
    return SpectralMeasure(std::move(atoms));
  }
  if (options.moment_order < 1) throw Error(ErrorCode::InvalidParameter, "moment order must be >= 1");
  if (options.require_padding && !padding_sufficient(host, subset, options.moment_order)) {
    throw Error(ErrorCode::InvalidParameter,
                "host too small: walks of length " + std::to_string(options.moment_order) +
                    " from the subset reach the truncated rim");
  }
  const auto tau = chebyshev_moments(host, subset, options.moment_order);
  const int nodes = options.nodes > 0 ? options.nodes : 4 * (options.moment_order + 1) + 1;
  return fit_moments(tau, nodes);
}

double integrate(const SpectralMeasure& mu, const std::function<double(double)>& f) {
  double s = 0.0;
  for (const Atom& a : mu.atoms()) s += a.weight * f(a.lambda);
  return s;
}

double integrate(const SpectralMeasure& mu, const PowerSeries& f) {
  double s = 0.0;
  for (const Atom& a : mu.atoms()) s += a.weight * f(a.lambda);
  return s;
}

void write_measure_csv(std::ostream& out, const SpectralMeasure& mu) {
  out << "lambda,weight\n";
  const auto old = out.precision(17);
  for (const Atom& a : mu.atoms()) out << a.lambda << ',' << a.weight << '\n';
  out.precision(old);
}

SpectralMeasure read_measure_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidParameter, "measure CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "lambda,weight") throw Error(ErrorCode::InvalidParameter, "measure CSV: unexpected header '" + line + "'");
  std::vector<Atom> atoms;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::InvalidParameter, "measure CSV: bad row '" + line + "'");
    try {
      atoms.push_back(Atom{std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidParameter, "measure CSV: bad row '" + line + "'");
    }
  }
  return SpectralMeasure(std::move(atoms));
}

}  // namespace graphwhittle
