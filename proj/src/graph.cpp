#include "graphwhittle/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>

#include "graphwhittle/error.hpp"

namespace graphwhittle {

namespace {

void require_positive(int value, const char* what) {
  if (value <= 0) {
    throw Error(ErrorCode::InvalidParameter,
                std::string(what) + " must be positive, got " + std::to_string(value));
  }
}

}  // namespace

Graph::Graph(Vertex n_vertices) {
  if (n_vertices < 0) throw Error(ErrorCode::InvalidParameter, "negative vertex count");
  adj_.resize(static_cast<std::size_t>(n_vertices));
  rim_.assign(static_cast<std::size_t>(n_vertices), 0);
}

void Graph::add_edge(Vertex i, Vertex j, double w) {
  if (!contains(i) || !contains(j)) {
    throw Error(ErrorCode::InvalidParameter,
                "edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
  }
  if (!std::isfinite(w)) throw Error(ErrorCode::InvalidParameter, "non-finite edge weight");
  auto insert = [](std::vector<Neighbor>& list, Vertex v, double w) {
    auto it = std::lower_bound(list.begin(), list.end(), v,
                               [](const Neighbor& n, Vertex x) { return n.v < x; });
    if (it != list.end() && it->v == v) {
      it->w = w;
    } else {
      list.insert(it, Neighbor{v, w});
    }
  };
  insert(adj_[i], j, w);
  if (i != j) insert(adj_[j], i, w);
  normalized_ = false;
}

void Graph::mark_rim(Vertex v) {
  if (!contains(v)) throw Error(ErrorCode::InvalidParameter, "rim vertex out of range");
  rim_[v] = 1;
}

std::size_t Graph::n_edges() const {
  std::size_t twice = 0;
  std::size_t loops = 0;
  for (Vertex v = 0; v < n_vertices(); ++v) {
    for (const auto& nb : adj_[v]) {
      if (nb.v == v) ++loops; else ++twice;
    }
  }
  return twice / 2 + loops;
}

int Graph::degree_bound() const {
  int d = 0;
  for (const auto& list : adj_) d = std::max(d, static_cast<int>(list.size()));
  return d;
}

double Graph::weight(Vertex i, Vertex j) const {
  const auto& list = adj_[i];
  auto it = std::lower_bound(list.begin(), list.end(), j,
                             [](const Neighbor& n, Vertex x) { return n.v < x; });
  return (it != list.end() && it->v == j) ? it->w : 0.0;
}

bool Graph::has_rim() const {
  return std::any_of(rim_.begin(), rim_.end(), [](char c) { return c != 0; });
}

void Graph::apply(std::span<const double> x, std::span<double> y) const {
  for (Vertex i = 0; i < n_vertices(); ++i) {
    double s = 0.0;
    for (const auto& nb : adj_[i]) s += nb.w * x[nb.v];
    y[i] = s;
  }
}

Eigen::SparseMatrix<double> Graph::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (Vertex i = 0; i < n_vertices(); ++i) {
    for (const auto& nb : adj_[i]) trips.emplace_back(i, nb.v, nb.w);
  }
  Eigen::SparseMatrix<double> m(n_vertices(), n_vertices());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "path") return GraphKind::path;
  if (name == "cycle") return GraphKind::cycle;
  if (name == "grid2d") return GraphKind::grid2d;
  if (name == "torus2d") return GraphKind::torus2d;
  if (name == "rhombus_chain") return GraphKind::rhombus_chain;
  if (name == "pattern_lattice") return GraphKind::pattern_lattice;
  throw Error(ErrorCode::InvalidParameter, "unknown graph kind '" + name + "'");
}

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::path: return "path";
    case GraphKind::cycle: return "cycle";
    case GraphKind::grid2d: return "grid2d";
    case GraphKind::torus2d: return "torus2d";
    case GraphKind::rhombus_chain: return "rhombus_chain";
    case GraphKind::pattern_lattice: return "pattern_lattice";
  }
  return "?";
}

Graph path_graph(int length) {
  require_positive(length, "path length");
  Graph g(length);
  for (int i = 0; i + 1 < length; ++i) g.add_edge(i, i + 1);
  g.mark_rim(0);
  g.mark_rim(length - 1);
  return g;
}

Graph cycle_graph(int length) {
  require_positive(length, "cycle length");
  if (length < 3) throw Error(ErrorCode::InvalidParameter, "cycle needs at least 3 vertices");
  Graph g(length);
  for (int i = 0; i < length; ++i) g.add_edge(i, (i + 1) % length);
  return g;
}

Graph grid_graph(int rows, int cols) {
  require_positive(rows, "grid rows");
  require_positive(cols, "grid cols");
  GridShape shape{rows, cols};
  Graph g(rows * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) g.add_edge(shape.at(r, c), shape.at(r, c + 1));
      if (r + 1 < rows) g.add_edge(shape.at(r, c), shape.at(r + 1, c));
      if (r == 0 || c == 0 || r == rows - 1 || c == cols - 1) g.mark_rim(shape.at(r, c));
    }
  }
  g.set_grid(shape);
  return g;
}

Graph torus_graph(int rows, int cols) {
  require_positive(rows, "torus rows");
  require_positive(cols, "torus cols");
  if (rows < 3 || cols < 3) throw Error(ErrorCode::InvalidParameter, "torus sides must be >= 3");
  GridShape shape{rows, cols};
  Graph g(rows * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      g.add_edge(shape.at(r, c), shape.at(r, (c + 1) % cols));
      g.add_edge(shape.at(r, c), shape.at((r + 1) % rows, c));
    }
  }
  g.set_grid(shape);
  return g;
}

Graph rhombus_chain(int count) {
  require_positive(count, "rhombus count");
  Graph g(4 * count);
  for (int r = 0; r < count; ++r) {
    const Vertex left = 4 * r, top = 4 * r + 1, bottom = 4 * r + 2, right = 4 * r + 3;
    g.add_edge(left, top);
    g.add_edge(left, bottom);
    g.add_edge(top, right);
    g.add_edge(bottom, right);
    if (r + 1 < count) g.add_edge(right, 4 * (r + 1));
  }
  g.mark_rim(0);
  g.mark_rim(4 * count - 1);
  return g;
}

Graph pattern_lattice(const PatternSpec& pattern, int count) {
  require_positive(count, "replication count");
  require_positive(pattern.n_vertices, "pattern size");
  const Vertex p = pattern.n_vertices;
  if (pattern.port_in < 0 || pattern.port_in >= p || pattern.port_out < 0 ||
      pattern.port_out >= p) {
    throw Error(ErrorCode::InvalidParameter, "pattern port out of range");
  }
  const int copies = pattern.box_base ? count * count : count;
  Graph g(copies * p);
  for (int c = 0; c < copies; ++c) {
    for (auto [a, b] : pattern.edges) {
      if (a < 0 || a >= p || b < 0 || b >= p) {
        throw Error(ErrorCode::InvalidParameter, "pattern edge out of range");
      }
      g.add_edge(c * p + a, c * p + b);
    }
  }
  auto join = [&](int from, int to) { g.add_edge(from * p + pattern.port_out, to * p + pattern.port_in); };
  if (!pattern.box_base) {
    if (count < 3) throw Error(ErrorCode::InvalidParameter, "cycle base needs count >= 3");
    for (int c = 0; c < count; ++c) join(c, (c + 1) % count);
  } else {
    for (int r = 0; r < count; ++r) {
      for (int c = 0; c < count; ++c) {
        const int here = r * count + c;
        if (c + 1 < count) join(here, here + 1);
        if (r + 1 < count) join(here, here + count);
        if (r == 0 || c == 0 || r == count - 1 || c == count - 1) {
          for (Vertex v = 0; v < p; ++v) g.mark_rim(here * p + v);
        }
      }
    }
  }
  return g;
}

Graph build_graph(const GraphSpec& spec) {
  const int second = spec.size2 > 0 ? spec.size2 : spec.size;
  switch (spec.kind) {
    case GraphKind::path: return path_graph(spec.size);
    case GraphKind::cycle: return cycle_graph(spec.size);
    case GraphKind::grid2d: return grid_graph(spec.size, second);
    case GraphKind::torus2d: return torus_graph(spec.size, second);
    case GraphKind::rhombus_chain: return rhombus_chain(spec.size);
    case GraphKind::pattern_lattice: return pattern_lattice(spec.pattern, spec.size);
  }
  throw Error(ErrorCode::InvalidParameter, "unhandled graph kind");
}

Graph normalize_weights(const Graph& g) {
  if (g.n_vertices() == 0) throw Error(ErrorCode::InvalidParameter, "cannot normalize an empty graph");
  const int deg = g.degree_bound();
  if (deg < 1) {
    Graph out = g;
    out.normalized_ = true;
    return out;
  }
  double max_w = 0.0;
  for (const auto& list : g.adj_) {
    for (const auto& nb : list) max_w = std::max(max_w, std::abs(nb.w));
  }
  const double scale = std::max(1.0, deg * max_w);
  Graph out = g;
  for (auto& list : out.adj_) {
    for (auto& nb : list) nb.w /= scale;
  }
  out.normalized_ = true;
  return out;
}

std::vector<int> bfs_distances(const Graph& g, std::span<const Vertex> sources, int max_depth) {
  std::vector<int> dist(static_cast<std::size_t>(g.n_vertices()), kUnreachable);
  std::deque<Vertex> queue;
  for (Vertex s : sources) {
    if (!g.contains(s)) throw Error(ErrorCode::InvalidParameter, "source vertex out of range");
    if (dist[s] != 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const Vertex u = queue.front();
    queue.pop_front();
    if (dist[u] >= max_depth) continue;
    for (const auto& nb : g.neighbors(u)) {
      if (nb.w != 0.0 && dist[nb.v] == kUnreachable) {
        dist[nb.v] = dist[u] + 1;
        queue.push_back(nb.v);
      }
    }
  }
  return dist;
}

std::vector<int> bfs_distances(const Graph& g, Vertex source) {
  const Vertex s[1] = {source};
  return bfs_distances(g, std::span<const Vertex>(s));
}

int graph_distance(const Graph& g, Vertex i, Vertex j) {
  if (!g.contains(i) || !g.contains(j)) throw Error(ErrorCode::InvalidParameter, "vertex out of range");
  return bfs_distances(g, i)[j];
}

std::size_t boundary_size(const Graph& g, std::span<const Vertex> subset) {
  std::vector<char> inside(static_cast<std::size_t>(g.n_vertices()), 0);
  for (Vertex v : subset) inside[v] = 1;
  std::size_t count = 0;
  for (Vertex v : subset) {
    for (const auto& nb : g.neighbors(v)) {
      if (nb.w != 0.0 && !inside[nb.v]) {
        ++count;
        break;
      }
    }
  }
  return count;
}

int rim_distance(const Graph& g, std::span<const Vertex> subset) {
  if (!g.has_rim() || subset.empty()) return kUnreachable;
  const auto dist = bfs_distances(g, subset);
  int best = kUnreachable;
  for (Vertex v = 0; v < g.n_vertices(); ++v) {
    if (g.is_rim(v)) best = std::min(best, dist[v]);
  }
  return best;
}

bool padding_sufficient(const Graph& g, std::span<const Vertex> subset, int walk_length, int reach) {
  const int d = rim_distance(g, subset);
  if (d == kUnreachable) return true;
  return 2 * (static_cast<long>(d) - reach) + 2 > walk_length;
}

VertexSet ball(const Graph& g, Vertex center, int radius) {
  if (!g.contains(center)) {
    throw Error(ErrorCode::InvalidParameter, "ball center " + std::to_string(center) + " not in graph");
  }
  if (radius < 0) throw Error(ErrorCode::InvalidParameter, "negative ball radius");
  const Vertex s[1] = {center};
  const auto dist = bfs_distances(g, std::span<const Vertex>(s), radius);
  VertexSet out;
  for (Vertex v = 0; v < g.n_vertices(); ++v) {
    if (dist[v] <= radius) out.push_back(v);
  }
  return out;
}

VertexSet box(const Graph& g, const Box& b) {
  if (!g.grid()) throw Error(ErrorCode::InvalidParameter, "box subgraphs need a grid-structured graph");
  const GridShape& shape = *g.grid();
  if (b.side <= 0 || b.row0 < 0 || b.col0 < 0 || b.row0 + b.side > shape.rows ||
      b.col0 + b.side > shape.cols) {
    throw Error(ErrorCode::InvalidParameter, "box does not fit inside the grid");
  }
  VertexSet out;
  out.reserve(static_cast<std::size_t>(b.side) * b.side);
  for (int r = b.row0; r < b.row0 + b.side; ++r) {
    for (int c = b.col0; c < b.col0 + b.side; ++c) out.push_back(shape.at(r, c));
  }
  return out;
}

namespace {

NestedSubgraphs assemble(const Graph& g, std::vector<std::pair<VertexSet, int>> sets) {
  NestedSubgraphs out;
  out.host = g;
  for (std::size_t n = 0; n < sets.size(); ++n) {
    auto& [verts, param] = sets[n];
    if (n > 0) {
      const VertexSet& prev = out.levels.back().vertices;
      if (!std::includes(verts.begin(), verts.end(), prev.begin(), prev.end())) {
        throw Error(ErrorCode::InvalidParameter, "subgraph levels are not nested");
      }
      const bool exhausted = prev.size() == static_cast<std::size_t>(g.n_vertices());
      if (verts.size() == prev.size() && !exhausted) {
        throw Error(ErrorCode::InvalidParameter, "subgraph levels are not strictly increasing");
      }
    }
    SubgraphLevel level;
    level.volume = verts.size();
    level.boundary = boundary_size(g, verts);
    level.param = param;
    level.vertices = std::move(verts);
    out.levels.push_back(std::move(level));
  }
  return out;
}

}  // namespace

NestedSubgraphs nested_balls(const Graph& g, Vertex center, std::span<const int> radii) {
  std::vector<std::pair<VertexSet, int>> sets;
  for (int r : radii) sets.emplace_back(ball(g, center, r), r);
  return assemble(g, std::move(sets));
}

NestedSubgraphs nested_boxes(const Graph& g, std::span<const Box> boxes) {
  std::vector<std::pair<VertexSet, int>> sets;
  for (const Box& b : boxes) sets.emplace_back(box(g, b), b.side);
  return assemble(g, std::move(sets));
}

NestedSubgraphs centered_boxes(const Graph& g, std::span<const int> half_widths) {
  if (!g.grid()) throw Error(ErrorCode::InvalidParameter, "box subgraphs need a grid-structured graph");
  const GridShape& shape = *g.grid();
  std::vector<Box> boxes;
  for (int n : half_widths) {
    if (n < 0) throw Error(ErrorCode::InvalidParameter, "negative box half-width");
    boxes.push_back(Box{shape.rows / 2 - n, shape.cols / 2 - n, 2 * n + 1});
  }
  return nested_boxes(g, boxes);
}

void write_graph(std::ostream& out, const Graph& g) {
  out << g.n_vertices() << ' ' << g.degree_bound() << '\n';
  out.precision(17);
  for (Vertex i = 0; i < g.n_vertices(); ++i) {
    for (const auto& nb : g.neighbors(i)) {
      if (nb.v >= i) out << i << ' ' << nb.v << ' ' << nb.w << '\n';
    }
  }
}

Graph read_graph(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first != std::string::npos && line[first] != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw Error(ErrorCode::InvalidParameter, "graph file: missing header");
  long n = -1;
  long deg = -1;
  {
    std::istringstream hdr(line);
    if (!(hdr >> n >> deg) || n < 0 || deg < 0) {
      throw Error(ErrorCode::InvalidParameter, "graph file: bad header '" + line + "'");
    }
  }
  Graph g(static_cast<Vertex>(n));
  std::size_t lineno = 1;
  while (next_line()) {
    ++lineno;
    std::istringstream row(line);
    long i = 0, j = 0;
    double w = 0.0;
    if (!(row >> i >> j >> w)) {
      throw Error(ErrorCode::InvalidParameter, "graph file: bad edge line " + std::to_string(lineno));
    }
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw Error(ErrorCode::InvalidParameter, "graph file: vertex out of range on line " + std::to_string(lineno));
    }
    if (g.weight(static_cast<Vertex>(i), static_cast<Vertex>(j)) != 0.0) {
      throw Error(ErrorCode::InvalidParameter, "graph file: duplicate edge on line " + std::to_string(lineno));
    }
    g.add_edge(static_cast<Vertex>(i), static_cast<Vertex>(j), w);
  }
  if (g.degree_bound() > deg) {
    throw Error(ErrorCode::InvalidParameter, "graph file: header degree bound " + std::to_string(deg) +
                                                 " below actual maximum degree " +
                                                 std::to_string(g.degree_bound()));
  }
  return g;
}

}  // namespace graphwhittle
