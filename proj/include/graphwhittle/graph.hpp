#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

/// Weighted graphs, adjacency operators and nested subgraph sequences.
namespace graphwhittle {

using Vertex = std::int32_t;
using VertexSet = std::vector<Vertex>;  // sorted, unique

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct Neighbor {
  Vertex v;
  double w;
};

struct GridShape {
  int rows = 0;
  int cols = 0;
  Vertex at(int r, int c) const { return static_cast<Vertex>(r * cols + c); }
};

/// Undirected weighted graph with a symmetric weight matrix W.
///
/// Weights are kept as constructed; `normalize_weights` produces the
/// adjacency operator with |W_ij| <= 1/degree_bound. Vertices flagged as
/// "rim" have a truncated neighbourhood relative to the infinite graph the
/// finite host stands in for (path ends, grid border, chain ends).
class Graph {
 public:
  Graph() = default;
  explicit Graph(Vertex n_vertices);

  /// Adds an undirected edge; a repeated edge overwrites the weight.
  void add_edge(Vertex i, Vertex j, double w = 1.0);
  void mark_rim(Vertex v);

  Vertex n_vertices() const { return static_cast<Vertex>(adj_.size()); }
  std::size_t n_edges() const;
  int degree(Vertex v) const { return static_cast<int>(adj_[v].size()); }
  int degree_bound() const;
  double weight(Vertex i, Vertex j) const;
  bool is_rim(Vertex v) const { return rim_[v] != 0; }
  bool has_rim() const;
  bool normalized() const { return normalized_; }

  const std::vector<Neighbor>& neighbors(Vertex v) const { return adj_[v]; }
  const std::optional<GridShape>& grid() const { return grid_; }
  void set_grid(GridShape shape) { grid_ = shape; }

  /// y = W x
  void apply(std::span<const double> x, std::span<double> y) const;
  Eigen::SparseMatrix<double> to_sparse() const;

  bool contains(Vertex v) const { return v >= 0 && v < n_vertices(); }

 private:
  friend Graph normalize_weights(const Graph& g);

  std::vector<std::vector<Neighbor>> adj_;
  std::vector<char> rim_;
  std::optional<GridShape> grid_;
  bool normalized_ = false;
};

enum class GraphKind { path, cycle, grid2d, torus2d, rhombus_chain, pattern_lattice };

/// A finite pattern replicated at every vertex of a base cycle or square box.
/// Copies at adjacent base vertices are joined by one edge from
/// `port_out` of the lower-indexed copy to `port_in` of the other.
struct PatternSpec {
  Vertex n_vertices = 0;
  std::vector<std::pair<Vertex, Vertex>> edges;
  Vertex port_in = 0;
  Vertex port_out = 0;
  bool box_base = false;  // false: cycle of `count` copies; true: count x count box
};

struct GraphSpec {
  GraphKind kind = GraphKind::path;
  int size = 0;   // path/cycle length, grid/torus side, rhombus count, replication count
  int size2 = 0;  // optional second grid dimension (0 = square)
  PatternSpec pattern;
};

GraphKind parse_graph_kind(const std::string& name);
std::string to_string(GraphKind kind);

/// Unit-weight graph of the requested family.
Graph build_graph(const GraphSpec& spec);
Graph path_graph(int length);
Graph cycle_graph(int length);
Graph grid_graph(int rows, int cols);
Graph torus_graph(int rows, int cols);
/// Chain of `count` rhombi L-T-R-B-L, consecutive rhombi joined R_r -- L_{r+1}.
/// Vertex ids: 4r (left), 4r+1 (top), 4r+2 (bottom), 4r+3 (right).
Graph rhombus_chain(int count);
Graph pattern_lattice(const PatternSpec& pattern, int count);

/// Divides weights so that |W_ij| <= 1/degree_bound; idempotent.
Graph normalize_weights(const Graph& g);

/// BFS hop distances from `source` over nonzero-weight edges (kUnreachable if none).
std::vector<int> bfs_distances(const Graph& g, Vertex source);
/// Multi-source BFS; stops expanding beyond `max_depth`.
std::vector<int> bfs_distances(const Graph& g, std::span<const Vertex> sources,
                               int max_depth = kUnreachable);
int graph_distance(const Graph& g, Vertex i, Vertex j);

/// Card{i in subset : exists j outside subset with W_ij != 0}.
std::size_t boundary_size(const Graph& g, std::span<const Vertex> subset);

/// Hop distance from the subset to the nearest rim vertex (kUnreachable if no rim).
int rim_distance(const Graph& g, std::span<const Vertex> subset);

/// True when every walk of length <= walk_length between vertices within
/// `reach` hops of the subset sees the same edges it would in the
/// untruncated graph.
bool padding_sufficient(const Graph& g, std::span<const Vertex> subset,
                        int walk_length, int reach = 0);

VertexSet ball(const Graph& g, Vertex center, int radius);

struct Box {
  int row0 = 0;
  int col0 = 0;
  int side = 0;
};
VertexSet box(const Graph& g, const Box& b);

struct SubgraphLevel {
  VertexSet vertices;
  std::size_t volume = 0;    // m_n
  std::size_t boundary = 0;  // delta_n
  int param = 0;             // radius or side
};

struct NestedSubgraphs {
  Graph host;
  std::vector<SubgraphLevel> levels;
};

enum class SubgraphKind { ball, box };

NestedSubgraphs nested_balls(const Graph& g, Vertex center, std::span<const int> radii);
NestedSubgraphs nested_boxes(const Graph& g, std::span<const Box> boxes);
/// Boxes [-n, n]^2 around the grid centre, side 2n+1.
NestedSubgraphs centered_boxes(const Graph& g, std::span<const int> half_widths);

/// Edge-list text: header "n_vertices degree_bound", then "i j w" per edge.
void write_graph(std::ostream& out, const Graph& g);
Graph read_graph(std::istream& in);

}  // namespace graphwhittle
