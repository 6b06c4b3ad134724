#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "graphwhittle/graph.hpp"

namespace graphwhittle::detail {

/// Induced subgraph on every vertex within `radius` hops of the sources.
/// Walks of length <= radius that start at a source never leave the patch,
/// so (W^k)_{ij} with k <= radius and j a source is exact on the patch.
struct LocalPatch {
  VertexSet vertices;                 // global ids, sorted
  std::vector<int> local_of;          // global -> local index, -1 if absent
  Eigen::SparseMatrix<double, Eigen::RowMajor> W;

  int local(Vertex v) const { return local_of[static_cast<std::size_t>(v)]; }
  Eigen::VectorXd unit(Vertex v) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vertices.size()));
    e[local(v)] = 1.0;
    return e;
  }
};

LocalPatch make_patch(const Graph& g, std::span<const Vertex> sources, int radius);

}  // namespace graphwhittle::detail
