#include "local_patch.hpp"

namespace graphwhittle::detail {

LocalPatch make_patch(const Graph& g, std::span<const Vertex> sources, int radius) {
  LocalPatch patch;
  const auto dist = bfs_distances(g, sources, radius);
  patch.local_of.assign(static_cast<std::size_t>(g.n_vertices()), -1);
  for (Vertex v = 0; v < g.n_vertices(); ++v) {
    if (dist[v] <= radius) {
      patch.local_of[v] = static_cast<int>(patch.vertices.size());
      patch.vertices.push_back(v);
    }
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (Vertex v : patch.vertices) {
    for (const auto& nb : g.neighbors(v)) {
      const int j = patch.local_of[nb.v];
      if (j >= 0) trips.emplace_back(patch.local_of[v], j, nb.w);
    }
  }
  const auto n = static_cast<Eigen::Index>(patch.vertices.size());
  patch.W.resize(n, n);
  patch.W.setFromTriplets(trips.begin(), trips.end());
  return patch;
}

}  // namespace graphwhittle::detail
