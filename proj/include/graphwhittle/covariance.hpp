#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "graphwhittle/graph.hpp"
#include "graphwhittle/spectral.hpp"

namespace graphwhittle {

/// K_n(f): rows/columns of f(W) on the host restricted to the subset.
struct CovarianceMatrix {
  Eigen::MatrixXd values;
  PowerSeries density;
  VertexSet subset;
  int padding_radius = 0;
  bool padding_ok = true;
};

/// values_ij = sum_{k<=K} f_k (W^k)_ij with powers taken on the full host.
/// A host too small to hold every walk of length K is flagged, not rejected.
CovarianceMatrix covariance_matrix(const PowerSeries& f, const Graph& host, std::span<const Vertex> subset);

/// (W^k)_{subset}, k = 0..max_order, each an m x m dense matrix.
class RestrictedPowers {
 public:
  RestrictedPowers() = default;
  RestrictedPowers(const Graph& host, std::span<const Vertex> subset, int max_order);

  int max_order() const { return static_cast<int>(powers_.size()) - 1; }
  Eigen::Index size() const { return powers_.empty() ? 0 : powers_.front().rows(); }
  const Eigen::MatrixXd& operator[](int k) const { return powers_[static_cast<std::size_t>(k)]; }
  /// sum_k f_k (W^k)_{subset}; coefficients beyond max_order are an error.
  Eigen::MatrixXd combine(const PowerSeries& f) const;

 private:
  std::vector<Eigen::MatrixXd> powers_;
};

/// ((W^m)_ij)_{m=0..M}, the first moments of the local measure mu_ij.
std::vector<double> local_signature(const Graph& host, Vertex i, Vertex j, int M);

struct PairEntry {
  Vertex i;  // in the subset
  Vertex j;  // anywhere in the host, d(i, j) <= P
  int cls;
};

/// Pairs at distance <= P grouped by local-measure signature.
struct LocalMeasureClasses {
  int radius = 0;           // P
  int signature_order = 0;  // M
  VertexSet subset;
  std::vector<std::vector<double>> signatures;  // canonical representative per class
  std::vector<PairEntry> pairs;
  std::vector<std::size_t> count_host;   // Card{(k,l) in G_n x G, class}
  std::vector<std::size_t> count_inner;  // Card{(k,l) in G_n x G_n, class}
  bool padding_ok = true;

  std::size_t n_classes() const { return signatures.size(); }
};

inline constexpr double kSignatureTolerance = 1e-10;

/// Throws InvalidParameter when M < 2P.
LocalMeasureClasses pair_classes(const Graph& host, std::span<const Vertex> subset, int P, int M);

/// True when raising the signature order by `extra` leaves the partition unchanged.
bool classes_stable(const Graph& host, std::span<const Vertex> subset, int P, int M, int extra = 4);

/// Boundary correction B^(n); entries at distance > P are 1.
struct CorrectionMatrix {
  Eigen::MatrixXd values;
  double u_n = 0.0;  // sup |B_ij - 1|
};

/// Throws AssumptionViolation when a class has no representative inside G_n x G_n.
CorrectionMatrix correction_matrix(const LocalMeasureClasses& classes, std::span<const Vertex> subset);

/// Q_n = B (.) K_n, the entrywise product.
Eigen::MatrixXd unbiased_matrix(const Eigen::MatrixXd& K, const CorrectionMatrix& B);
inline Eigen::MatrixXd unbiased_matrix(const CovarianceMatrix& K, const CorrectionMatrix& B) {
  return unbiased_matrix(K.values, B);
}

/// Row-major CSV, 17 significant digits, no header.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

}  // namespace graphwhittle
