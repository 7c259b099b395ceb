#ifndef PIGNN_MESH_HPP
#define PIGNN_MESH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pignn {

enum class NodeKind : int { Interior = 0, Boundary = 1 };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Triangular mesh over a planar domain. Immutable after construction.
struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // positively oriented
  std::vector<NodeKind> kinds;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int tri_count() const { return static_cast<int>(triangles.size()); }
};

/// Rectangular domain with a structured-lattice generator behind it.
/// `density` counts subdivisions per unit length; interior nodes are
/// perturbed by `jitter` (fraction of the cell width) before cells are
/// triangulated along their shorter diagonal.
struct DomainRect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  int density = 10;
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

TriMesh generate_mesh(const DomainRect& spec);

void save_mesh(const TriMesh& mesh, const std::string& path);
TriMesh load_mesh(const std::string& path);

/// A node is Boundary iff it is an endpoint of an edge that lies in
/// exactly one triangle. Throws on non-manifold edges (>2 triangles).
std::vector<NodeKind> detect_boundary(const TriMesh& mesh);

/// Consistency checks shared by the generator and the loader: index
/// ranges, positive triangle areas, duplicate nodes, boundary flags.
void validate_mesh(const TriMesh& mesh);

std::vector<int> interior_nodes(const TriMesh& mesh);

struct EdgeFeature {
  double dx = 0.0;   // x_sender - x_receiver
  double dy = 0.0;
  double dist = 0.0; // Euclidean norm of (dx, dy)
};

/// Bidirectional graph over the mesh: every undirected mesh edge appears
/// as both (i -> j) and (j -> i).
struct Graph {
  int node_count = 0;
  std::vector<std::array<int, 2>> edges;  // {sender, receiver}
  std::vector<std::vector<int>> neighbors; // per node, sorted ascending
  std::vector<EdgeFeature> edge_features;

  int edge_count() const { return static_cast<int>(edges.size()); }
};

Graph build_graph(const TriMesh& mesh);

}  // namespace pignn

#endif
