#include "pignn/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pignn {

namespace {

double tri_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Uniform double in [0, 1) from raw mt19937_64 bits, so the stream does not
// depend on the standard library's distribution implementation.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

TriMesh generate_mesh(const DomainRect& spec) {
  if (spec.density < 2) throw std::invalid_argument("generate_mesh: density must be >= 2");
  if (!(spec.x1 > spec.x0) || !(spec.y1 > spec.y0))
    throw std::invalid_argument("generate_mesh: domain bounds must satisfy x1 > x0, y1 > y0");
  if (!(spec.jitter >= 0.0) || spec.jitter >= 0.5)
    throw std::invalid_argument("generate_mesh: jitter must lie in [0, 0.5)");

  const double lx = spec.x1 - spec.x0;
  const double ly = spec.y1 - spec.y0;
  const int nx = std::max(2, static_cast<int>(std::lround(spec.density * lx)));
  const int ny = std::max(2, static_cast<int>(std::lround(spec.density * ly)));
  const double hx = lx / nx;
  const double hy = ly / ny;

  TriMesh mesh;
  mesh.nodes.resize(static_cast<size_t>((nx + 1) * (ny + 1)));
  mesh.kinds.resize(mesh.nodes.size());

  std::mt19937_64 rng(spec.seed);
  auto id = [nx](int ix, int iy) { return iy * (nx + 1) + ix; };

  for (int iy = 0; iy <= ny; ++iy) {
    for (int ix = 0; ix <= nx; ++ix) {
      // Boundary coordinates are taken from the bounds directly so the
      // perimeter lands exactly on the rectangle.
      double x = (ix == 0) ? spec.x0 : (ix == nx ? spec.x1 : spec.x0 + ix * hx);
      double y = (iy == 0) ? spec.y0 : (iy == ny ? spec.y1 : spec.y0 + iy * hy);
      const bool boundary = (ix == 0 || ix == nx || iy == 0 || iy == ny);
      if (!boundary && spec.jitter > 0.0) {
        x += (2.0 * uniform01(rng) - 1.0) * spec.jitter * hx;
        y += (2.0 * uniform01(rng) - 1.0) * spec.jitter * hy;
      }
      mesh.nodes[id(ix, iy)] = {x, y};
      mesh.kinds[id(ix, iy)] = boundary ? NodeKind::Boundary : NodeKind::Interior;
    }
  }

  mesh.triangles.reserve(static_cast<size_t>(2 * nx * ny));
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int c00 = id(ix, iy), c10 = id(ix + 1, iy);
      const int c11 = id(ix + 1, iy + 1), c01 = id(ix, iy + 1);
      const Vec2 &p00 = mesh.nodes[c00], &p10 = mesh.nodes[c10];
      const Vec2 &p11 = mesh.nodes[c11], &p01 = mesh.nodes[c01];
      const double d1 = std::hypot(p11.x - p00.x, p11.y - p00.y);
      const double d2 = std::hypot(p01.x - p10.x, p01.y - p10.y);

      using Tri = std::array<int, 3>;
      const std::array<Tri, 2> split1 = {Tri{c00, c10, c11}, Tri{c00, c11, c01}};
      const std::array<Tri, 2> split2 = {Tri{c00, c10, c01}, Tri{c10, c11, c01}};
      auto valid = [&](const std::array<Tri, 2>& s) {
        for (const Tri& t : s)
          if (tri_area2(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]) <= 0.0) return false;
        return true;
      };

      const bool prefer1 = d1 <= d2;
      const auto& first = prefer1 ? split1 : split2;
      const auto& second = prefer1 ? split2 : split1;
      const auto& chosen = valid(first) ? first : second;
      if (!valid(chosen))
        throw std::runtime_error("generate_mesh: degenerate cell at (" + std::to_string(ix) +
                                 ", " + std::to_string(iy) + ")");
      mesh.triangles.push_back(chosen[0]);
      mesh.triangles.push_back(chosen[1]);
    }
  }

  validate_mesh(mesh);
  return mesh;
}

std::vector<NodeKind> detect_boundary(const TriMesh& mesh) {
  std::map<std::pair<int, int>, int> edge_tris;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_tris[{a, b}];
    }
  }
  std::vector<NodeKind> kinds(mesh.nodes.size(), NodeKind::Interior);
  for (const auto& [edge, count] : edge_tris) {
    if (count > 2)
      throw std::runtime_error("detect_boundary: non-manifold edge (" +
                               std::to_string(edge.first) + ", " + std::to_string(edge.second) +
                               ") lies in " + std::to_string(count) + " triangles");
    if (count == 1) {
      kinds[edge.first] = NodeKind::Boundary;
      kinds[edge.second] = NodeKind::Boundary;
    }
  }
  return kinds;
}

void validate_mesh(const TriMesh& mesh) {
  const int n = mesh.node_count();
  if (n < 3) throw std::runtime_error("mesh: fewer than 3 nodes");
  if (mesh.triangles.empty()) throw std::runtime_error("mesh: no connectivity");
  if (static_cast<int>(mesh.kinds.size()) != n)
    throw std::runtime_error("mesh: node kind count mismatch");

  for (const auto& t : mesh.triangles) {
    for (int v : t)
      if (v < 0 || v >= n) throw std::runtime_error("mesh: triangle index out of range");
    if (tri_area2(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]) <= 0.0)
      throw std::runtime_error("mesh: non-positive triangle area");
  }

  // Duplicate detection: sort by x, compare against neighbours in the strip.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return mesh.nodes[a].x < mesh.nodes[b].x;
  });
  constexpr double tol = 1e-12;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vec2& a = mesh.nodes[order[i]];
      const Vec2& b = mesh.nodes[order[j]];
      if (b.x - a.x > tol) break;
      if (std::abs(b.y - a.y) <= tol && std::abs(b.x - a.x) <= tol)
        throw std::runtime_error("mesh: duplicate nodes " + std::to_string(order[i]) + " and " +
                                 std::to_string(order[j]));
    }
  }

  const std::vector<NodeKind> detected = detect_boundary(mesh);
  for (int i = 0; i < n; ++i)
    if (detected[i] != mesh.kinds[i])
      throw std::runtime_error("mesh: boundary flag of node " + std::to_string(i) +
                               " does not match topology");
}

std::vector<int> interior_nodes(const TriMesh& mesh) {
  std::vector<int> out;
  for (int i = 0; i < mesh.node_count(); ++i)
    if (mesh.kinds[i] == NodeKind::Interior) out.push_back(i);
  return out;
}

void save_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_mesh: cannot open " + path);
  f << "pignn-mesh v1\n";
  f << mesh.node_count() << ' ' << mesh.tri_count() << '\n';
  char buf[80];
  for (int i = 0; i < mesh.node_count(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %d", mesh.nodes[i].x, mesh.nodes[i].y,
                  static_cast<int>(mesh.kinds[i]));
    f << buf << '\n';
  }
  for (const auto& t : mesh.triangles) f << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (!f) throw std::runtime_error("save_mesh: write failed for " + path);
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

TriMesh load_mesh(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_mesh: cannot open " + path);

  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(f, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };

  if (!next_line() || line != "pignn-mesh v1")
    parse_fail(path, lineno == 0 ? 1 : lineno, "malformed header (expected 'pignn-mesh v1')");

  if (!next_line()) parse_fail(path, lineno + 1, "missing count line");
  long node_count = -1, tri_count = -1;
  {
    std::istringstream ss(line);
    if (!(ss >> node_count >> tri_count) || node_count < 0 || tri_count < 0)
      parse_fail(path, lineno, "malformed count line");
  }
  if (node_count < 3) parse_fail(path, lineno, "fewer than 3 nodes");
  if (tri_count == 0) parse_fail(path, lineno, "no connectivity (empty triangle section)");

  TriMesh mesh;
  mesh.nodes.resize(static_cast<size_t>(node_count));
  mesh.kinds.resize(static_cast<size_t>(node_count));
  for (long i = 0; i < node_count; ++i) {
    if (!next_line()) parse_fail(path, lineno + 1, "unexpected end of node section");
    std::istringstream ss(line);
    double x, y;
    int kind;
    if (!(ss >> x >> y >> kind) || (kind != 0 && kind != 1))
      parse_fail(path, lineno, "malformed node line");
    mesh.nodes[static_cast<size_t>(i)] = {x, y};
    mesh.kinds[static_cast<size_t>(i)] = static_cast<NodeKind>(kind);
  }
  for (long i = 0; i < tri_count; ++i) {
    if (!next_line()) parse_fail(path, lineno + 1, "unexpected end of triangle section");
    std::istringstream ss(line);
    long a, b, c;
    if (!(ss >> a >> b >> c)) parse_fail(path, lineno, "malformed triangle line");
    for (long v : {a, b, c})
      if (v < 0 || v >= node_count) parse_fail(path, lineno, "triangle index out of range");
    const auto& pa = mesh.nodes[static_cast<size_t>(a)];
    const auto& pb = mesh.nodes[static_cast<size_t>(b)];
    const auto& pc = mesh.nodes[static_cast<size_t>(c)];
    if (tri_area2(pa, pb, pc) <= 0.0) parse_fail(path, lineno, "degenerate triangle");
    mesh.triangles.push_back({static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)});
  }

  validate_mesh(mesh);
  return mesh;
}

Graph build_graph(const TriMesh& mesh) {
  const int n = mesh.node_count();
  std::map<std::pair<int, int>, bool> undirected;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      undirected[{a, b}] = true;
    }
  }

  Graph g;
  g.node_count = n;
  g.edges.reserve(2 * undirected.size());
  g.neighbors.assign(static_cast<size_t>(n), {});
  for (const auto& [edge, unused] : undirected) {
    (void)unused;
    g.edges.push_back({edge.first, edge.second});
    g.edges.push_back({edge.second, edge.first});
    g.neighbors[static_cast<size_t>(edge.first)].push_back(edge.second);
    g.neighbors[static_cast<size_t>(edge.second)].push_back(edge.first);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());

  g.edge_features.reserve(g.edges.size());
  for (const auto& e : g.edges) {
    const Vec2& s = mesh.nodes[static_cast<size_t>(e[0])];
    const Vec2& r = mesh.nodes[static_cast<size_t>(e[1])];
    EdgeFeature feat{s.x - r.x, s.y - r.y, 0.0};
    feat.dist = std::hypot(feat.dx, feat.dy);
    if (!(feat.dist > 0.0))
      throw std::runtime_error("build_graph: zero-length edge (" + std::to_string(e[0]) + ", " +
                               std::to_string(e[1]) + ")");
    g.edge_features.push_back(feat);
  }
  return g;
}

}  // namespace pignn
