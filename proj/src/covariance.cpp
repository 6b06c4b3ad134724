#include "graphwhittle/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "graphwhittle/error.hpp"
#include "local_patch.hpp"

namespace graphwhittle {

namespace {

void check_subset(const Graph& host, std::span<const Vertex> subset) {
  if (subset.empty()) throw Error(ErrorCode::InvalidParameter, "empty vertex subset");
  for (std::size_t a = 0; a < subset.size(); ++a) {
    if (!host.contains(subset[a])) throw Error(ErrorCode::InvalidParameter, "subset vertex outside host");
    if (a > 0 && subset[a] <= subset[a - 1]) {
      throw Error(ErrorCode::InvalidParameter, "subset must be sorted and free of duplicates");
    }
  }
}

}  // namespace

CovarianceMatrix covariance_matrix(const PowerSeries& f, const Graph& host, std::span<const Vertex> subset) {
  check_subset(host, subset);
  const int K = f.order();
  const auto m = static_cast<Eigen::Index>(subset.size());
  const auto patch = detail::make_patch(host, subset, K);
  std::vector<int> rows(subset.size());
  for (std::size_t a = 0; a < subset.size(); ++a) rows[a] = patch.local(subset[a]);

  CovarianceMatrix out;
  out.values = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index col = 0; col < m; ++col) {
    Eigen::VectorXd v = patch.unit(subset[static_cast<std::size_t>(col)]);
    for (int k = 0; k <= K; ++k) {
      const double fk = f.coeff(k);
      if (fk != 0.0) {
        for (Eigen::Index a = 0; a < m; ++a) out.values(a, col) += fk * v[rows[static_cast<std::size_t>(a)]];
      }
      if (k < K) v = patch.W * v;
    }
  }
  out.density = f;
  out.subset.assign(subset.begin(), subset.end());
  out.padding_radius = K;
  out.padding_ok = padding_sufficient(host, subset, K);
  return out;
}

RestrictedPowers::RestrictedPowers(const Graph& host, std::span<const Vertex> subset, int max_order) {
  check_subset(host, subset);
  if (max_order < 0) throw Error(ErrorCode::InvalidParameter, "negative power order");
  const auto m = static_cast<Eigen::Index>(subset.size());
  const auto patch = detail::make_patch(host, subset, max_order);
  std::vector<int> rows(subset.size());
  for (std::size_t a = 0; a < subset.size(); ++a) rows[a] = patch.local(subset[a]);
  powers_.assign(static_cast<std::size_t>(max_order) + 1, Eigen::MatrixXd::Zero(m, m));
  for (Eigen::Index col = 0; col < m; ++col) {
    Eigen::VectorXd v = patch.unit(subset[static_cast<std::size_t>(col)]);
    for (int k = 0; k <= max_order; ++k) {
      auto& P = powers_[static_cast<std::size_t>(k)];
      for (Eigen::Index a = 0; a < m; ++a) P(a, col) = v[rows[static_cast<std::size_t>(a)]];
      if (k < max_order) v = patch.W * v;
    }
  }
}

Eigen::MatrixXd RestrictedPowers::combine(const PowerSeries& f) const {
  if (f.degree() > max_order()) {
    throw Error(ErrorCode::InvalidParameter, "series degree " + std::to_string(f.degree()) +
                                                 " exceeds stored power order " + std::to_string(max_order()));
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size(), size());
  for (int k = 0; k <= std::min(f.order(), max_order()); ++k) {
    if (f.coeff(k) != 0.0) out.noalias() += f.coeff(k) * powers_[static_cast<std::size_t>(k)];
  }
  return out;
}

std::vector<double> local_signature(const Graph& host, Vertex i, Vertex j, int M) {
  if (!host.contains(i) || !host.contains(j)) throw Error(ErrorCode::InvalidParameter, "vertex out of range");
  if (M < 0) throw Error(ErrorCode::InvalidParameter, "negative signature order");
  const Vertex src[1] = {i};
  const auto patch = detail::make_patch(host, std::span<const Vertex>(src), M);
  std::vector<double> sig(static_cast<std::size_t>(M) + 1, 0.0);
  const int lj = patch.local(j);
  Eigen::VectorXd v = patch.unit(i);
  for (int m = 0; m <= M; ++m) {
    sig[static_cast<std::size_t>(m)] = lj >= 0 ? v[lj] : 0.0;
    if (m < M) v = patch.W * v;
  }
  return sig;
}

namespace {

struct RawPair {
  Vertex i;
  Vertex j;
  std::vector<double> sig;
};

bool within_tol(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > kSignatureTolerance) return false;
  }
  return true;
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

}  // namespace

LocalMeasureClasses pair_classes(const Graph& host, std::span<const Vertex> subset, int P, int M) {
  check_subset(host, subset);
  if (P < 0) throw Error(ErrorCode::InvalidParameter, "negative class radius P");
  if (M < 2 * P) {
    throw Error(ErrorCode::InvalidParameter,
                "signature order M=" + std::to_string(M) + " must be at least 2P=" + std::to_string(2 * P));
  }
  const auto patch = detail::make_patch(host, subset, P + M);
  std::vector<char> inside(static_cast<std::size_t>(host.n_vertices()), 0);
  for (Vertex v : subset) inside[v] = 1;

  std::vector<RawPair> raw;
  for (Vertex i : subset) {
    std::vector<Eigen::VectorXd> walks;
    walks.reserve(static_cast<std::size_t>(M) + 1);
    walks.push_back(patch.unit(i));
    for (int m = 1; m <= M; ++m) walks.push_back(patch.W * walks.back());
    const Vertex src[1] = {i};
    const auto dist = bfs_distances(host, std::span<const Vertex>(src), P);
    for (Vertex j : patch.vertices) {
      if (dist[j] > P) continue;
      RawPair rp{i, j, std::vector<double>(static_cast<std::size_t>(M) + 1)};
      const int lj = patch.local(j);
      for (int m = 0; m <= M; ++m) rp.sig[static_cast<std::size_t>(m)] = walks[static_cast<std::size_t>(m)][lj];
      raw.push_back(std::move(rp));
    }
  }

  // quantized buckets, then merge buckets whose representatives agree within tolerance
  std::map<std::vector<long long>, int> bucket_of;
  std::vector<int> bucket(raw.size());
  std::vector<std::size_t> bucket_rep;
  for (std::size_t p = 0; p < raw.size(); ++p) {
    std::vector<long long> key(raw[p].sig.size());
    for (std::size_t k = 0; k < key.size(); ++k) key[k] = std::llround(raw[p].sig[k] / kSignatureTolerance);
    auto [it, inserted] = bucket_of.emplace(std::move(key), static_cast<int>(bucket_rep.size()));
    if (inserted) bucket_rep.push_back(p);
    bucket[p] = it->second;
  }
  std::vector<int> parent(bucket_rep.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t a = 0; a < bucket_rep.size(); ++a) {
    for (std::size_t b = a + 1; b < bucket_rep.size(); ++b) {
      if (within_tol(raw[bucket_rep[a]].sig, raw[bucket_rep[b]].sig)) {
        parent[static_cast<std::size_t>(find_root(parent, static_cast<int>(b)))] = find_root(parent, static_cast<int>(a));
      }
    }
  }

  // canonical order: by lexicographically smallest member signature
  std::map<int, std::vector<double>> smallest;
  for (std::size_t p = 0; p < raw.size(); ++p) {
    const int root = find_root(parent, bucket[p]);
    auto it = smallest.find(root);
    if (it == smallest.end() || raw[p].sig < it->second) smallest[root] = raw[p].sig;
  }
  std::vector<std::pair<std::vector<double>, int>> order;
  for (auto& [root, sig] : smallest) order.emplace_back(sig, root);
  std::sort(order.begin(), order.end());
  std::map<int, int> class_of_root;
  LocalMeasureClasses out;
  for (std::size_t c = 0; c < order.size(); ++c) {
    class_of_root[order[c].second] = static_cast<int>(c);
    out.signatures.push_back(order[c].first);
  }

  out.radius = P;
  out.signature_order = M;
  out.subset.assign(subset.begin(), subset.end());
  out.count_host.assign(out.signatures.size(), 0);
  out.count_inner.assign(out.signatures.size(), 0);
  out.pairs.reserve(raw.size());
  for (std::size_t p = 0; p < raw.size(); ++p) {
    const int c = class_of_root[find_root(parent, bucket[p])];
    out.pairs.push_back(PairEntry{raw[p].i, raw[p].j, c});
    ++out.count_host[static_cast<std::size_t>(c)];
    if (inside[raw[p].j]) ++out.count_inner[static_cast<std::size_t>(c)];
  }
  out.padding_ok = padding_sufficient(host, subset, M, P);
  return out;
}

bool classes_stable(const Graph& host, std::span<const Vertex> subset, int P, int M, int extra) {
  const auto a = pair_classes(host, subset, P, M);
  const auto b = pair_classes(host, subset, P, M + extra);
  if (a.n_classes() != b.n_classes() || a.pairs.size() != b.pairs.size()) return false;
  // same partition: the class maps must be a bijection
  std::map<int, int> fwd, bwd;
  for (std::size_t p = 0; p < a.pairs.size(); ++p) {
    const int x = a.pairs[p].cls, y = b.pairs[p].cls;
    auto [fi, fnew] = fwd.emplace(x, y);
    auto [bi, bnew] = bwd.emplace(y, x);
    if (fi->second != y || bi->second != x) return false;
  }
  return true;
}

CorrectionMatrix correction_matrix(const LocalMeasureClasses& classes, std::span<const Vertex> subset) {
  if (!std::equal(subset.begin(), subset.end(), classes.subset.begin(), classes.subset.end())) {
    throw Error(ErrorCode::InvalidParameter, "correction matrix subset differs from the classified subset");
  }
  for (std::size_t c = 0; c < classes.n_classes(); ++c) {
    if (classes.count_inner[c] == 0) {
      std::string sig;
      for (double x : classes.signatures[c]) sig += (sig.empty() ? "" : ",") + std::to_string(x);
      throw Error(ErrorCode::AssumptionViolation,
                  "local-measure class " + std::to_string(c) + " (signature " + sig +
                      ") has no representative pair inside the subgraph");
    }
  }
  std::vector<int> index(static_cast<std::size_t>(*std::max_element(subset.begin(), subset.end())) + 1, -1);
  for (std::size_t a = 0; a < subset.size(); ++a) index[static_cast<std::size_t>(subset[a])] = static_cast<int>(a);

  const auto m = static_cast<Eigen::Index>(subset.size());
  CorrectionMatrix out;
  out.values = Eigen::MatrixXd::Ones(m, m);
  for (const PairEntry& p : classes.pairs) {
    if (static_cast<std::size_t>(p.j) >= index.size() || index[static_cast<std::size_t>(p.j)] < 0) continue;
    const auto c = static_cast<std::size_t>(p.cls);
    const double b = static_cast<double>(classes.count_host[c]) / static_cast<double>(classes.count_inner[c]);
    out.values(index[static_cast<std::size_t>(p.i)], index[static_cast<std::size_t>(p.j)]) = b;
    out.u_n = std::max(out.u_n, std::abs(b - 1.0));
  }
  return out;
}

Eigen::MatrixXd unbiased_matrix(const Eigen::MatrixXd& K, const CorrectionMatrix& B) {
  if (K.rows() != B.values.rows() || K.cols() != B.values.cols()) {
    throw Error(ErrorCode::InvalidParameter, "shape mismatch between covariance and correction matrices");
  }
  return K.cwiseProduct(B.values);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

}  // namespace graphwhittle
