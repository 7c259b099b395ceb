#include "pignn/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "pignn/util.hpp"

namespace pignn {

namespace {

struct InfeasibleNeighborhood : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double ipow(double x, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= x;
  return r;
}

double max_offset_norm(const std::vector<Vec2>& offsets) {
  double r = 0.0;
  for (const auto& o : offsets) r = std::max(r, std::hypot(o.x, o.y));
  return r;
}

// Monomial rows evaluated at the given offsets; B holds the Laplacian of
// each monomial at the origin (2 for x^2 and y^2, zero otherwise).
void assemble_system(const std::vector<Vec2>& offsets, const TestBasis& basis,
                     Eigen::MatrixXd& C, Eigen::VectorXd& B) {
  const int p = static_cast<int>(offsets.size());
  const int K = basis.count();
  C.resize(K, p);
  B.resize(K);
  for (int k = 0; k < K; ++k) {
    const auto [a, b] = basis.exponents[static_cast<size_t>(k)];
    for (int j = 0; j < p; ++j)
      C(k, j) = ipow(offsets[static_cast<size_t>(j)].x, a) * ipow(offsets[static_cast<size_t>(j)].y, b);
    B(k) = ((a == 2 && b == 0) || (a == 0 && b == 2)) ? 2.0 : 0.0;
  }
}

std::vector<double> constrained_weights(const std::vector<Vec2>& offsets, int degree) {
  const int p = static_cast<int>(offsets.size());
  const double r = max_offset_norm(offsets);
  if (!(r > 0.0)) throw std::runtime_error("laplacian_weights: zero-size neighborhood");

  std::vector<Vec2> unit(offsets.size());
  for (size_t j = 0; j < offsets.size(); ++j) unit[j] = {offsets[j].x / r, offsets[j].y / r};

  const TestBasis basis = make_test_basis(degree);
  Eigen::MatrixXd C;
  Eigen::VectorXd B;
  assemble_system(unit, basis, C, B);

  // Degree <= 2 rows are the consistency conditions; they come first in the
  // basis ordering.
  const int n_lo = 5;
  const Eigen::MatrixXd C_lo = C.topRows(n_lo);
  const Eigen::VectorXd B_lo = B.head(n_lo);
  const Eigen::MatrixXd C_hi = C.bottomRows(C.rows() - n_lo);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(C_lo);
  Eigen::VectorXd w = cod.solve(B_lo);
  if ((C_lo * w - B_lo).lpNorm<Eigen::Infinity>() > 1e-9)
    throw InfeasibleNeighborhood("quadratic reproduction infeasible for this neighborhood");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C_lo, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * sv(0)) ++rank;
  const int null_dim = p - rank;
  if (null_dim > 0 && C_hi.rows() > 0) {
    const Eigen::MatrixXd N = svd.matrixV().rightCols(null_dim);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> hi(C_hi * N);
    w += N * hi.solve(-(C_hi * w));
  }

  std::vector<double> out(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) out[static_cast<size_t>(j)] = w(j) / (r * r);
  return out;
}

std::vector<double> plain_weights(const std::vector<Vec2>& offsets, int degree) {
  const int p = static_cast<int>(offsets.size());
  const TestBasis basis = make_test_basis(degree);
  Eigen::MatrixXd C;
  Eigen::VectorXd B;
  assemble_system(offsets, basis, C, B);

  const Eigen::MatrixXd M = C.transpose() * C;
  const Eigen::VectorXd rhs = C.transpose() * B;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  Eigen::VectorXd w;
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    w = ldlt.solve(rhs);
    ok = (M * w - rhs).norm() <= 1e-8 * (1.0 + rhs.norm());
  }
  if (!ok) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(C);
    if (cod.rank() < p)
      throw std::runtime_error("singular normal matrix (rank " + std::to_string(cod.rank()) +
                               " of " + std::to_string(p) + ")");
    w = cod.solve(B);
  }

  std::vector<double> out(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) out[static_cast<size_t>(j)] = w(j);
  return out;
}

}  // namespace

TestBasis make_test_basis(int degree) {
  if (degree < 1) throw std::invalid_argument("make_test_basis: degree must be >= 1");
  TestBasis basis;
  basis.degree = degree;
  for (int d = 1; d <= degree; ++d)
    for (int a = d; a >= 0; --a) basis.exponents.push_back({a, d - a});
  return basis;
}

int select_degree(int neighbor_count) {
  if (neighbor_count < 1) throw std::invalid_argument("select_degree: need at least one neighbor");
  int m = 2;
  while ((m + 1) * (m + 2) / 2 < neighbor_count + 1) ++m;
  return m;
}

namespace {

// Runs body(i) for all nodes, possibly on several threads, and rethrows the
// lowest-index failure so errors stay deterministic.
void for_each_node(int n, int threads, const std::function<void(int)>& body) {
  std::vector<std::string> errors(static_cast<size_t>(n));
  parallel_for(n, threads, [&](int i) {
    try {
      body(i);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
}

}  // namespace

GradientStencil build_gradient_stencils(const Graph& graph, const std::vector<Vec2>& coords,
                                        int threads) {
  if (static_cast<int>(coords.size()) != graph.node_count)
    throw std::invalid_argument("build_gradient_stencils: coordinate count mismatch");

  GradientStencil st;
  st.neighbors = graph.neighbors;
  st.pinv.resize(coords.size());
  for_each_node(graph.node_count, threads, [&](int i) {
    const auto& nb = st.neighbors[static_cast<size_t>(i)];
    const int p = static_cast<int>(nb.size());
    if (p < 2)
      throw std::runtime_error("build_gradient_stencils: node " + std::to_string(i) +
                               " has fewer than 2 neighbors");
    Eigen::MatrixXd A(p, 2);
    double r = 0.0;
    for (int j = 0; j < p; ++j) {
      const Vec2& xj = coords[static_cast<size_t>(nb[static_cast<size_t>(j)])];
      const Vec2& xi = coords[static_cast<size_t>(i)];
      A(j, 0) = xj.x - xi.x;
      A(j, 1) = xj.y - xi.y;
      r = std::max(r, std::hypot(A(j, 0), A(j, 1)));
    }
    A /= r;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(1) <= 1e-10 * sv(0))
      throw std::runtime_error("build_gradient_stencils: collinear neighborhood at node " +
                               std::to_string(i));
    const Eigen::MatrixXd M = A.transpose() * A;  // 2x2, well conditioned after scaling
    st.pinv[static_cast<size_t>(i)] = M.inverse() * A.transpose() / r;
  });
  return st;
}

std::vector<Vec2> apply_gradient(const GradientStencil& st, std::span<const double> field) {
  const size_t n = st.neighbors.size();
  if (field.size() != n) throw std::invalid_argument("apply_gradient: field length mismatch");
  std::vector<Vec2> out(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& nb = st.neighbors[i];
    double gx = 0.0, gy = 0.0;
    for (size_t j = 0; j < nb.size(); ++j) {
      const double du = field[static_cast<size_t>(nb[j])] - field[i];
      gx += st.pinv[i](0, static_cast<Eigen::Index>(j)) * du;
      gy += st.pinv[i](1, static_cast<Eigen::Index>(j)) * du;
    }
    out[i] = {gx, gy};
  }
  return out;
}

std::vector<double> laplacian_weights(const std::vector<Vec2>& offsets, int degree,
                                      WeightFit fit) {
  if (degree < 2) throw std::invalid_argument("laplacian_weights: degree must be >= 2");
  if (offsets.empty()) throw std::invalid_argument("laplacian_weights: empty neighborhood");
  return fit == WeightFit::ConstrainedExact ? constrained_weights(offsets, degree)
                                            : plain_weights(offsets, degree);
}

LaplacianStencil build_laplacian_stencils(const Graph& graph, const std::vector<Vec2>& coords,
                                          const LaplacianOptions& opts, int threads) {
  if (static_cast<int>(coords.size()) != graph.node_count)
    throw std::invalid_argument("build_laplacian_stencils: coordinate count mismatch");
  if (opts.degree_override != 0 && opts.degree_override < 2)
    throw std::invalid_argument("build_laplacian_stencils: degree override must be >= 2");

  LaplacianStencil st;
  st.neighbors.resize(coords.size());
  st.weights.resize(coords.size());
  st.degree.resize(coords.size());

  for_each_node(graph.node_count, threads, [&](int i) {
    std::vector<int> nb = graph.neighbors[static_cast<size_t>(i)];

    // Second-ring candidates by distance, used only when the one-ring cannot
    // reproduce quadratics (boundary nodes, sparse interior rings).
    std::vector<int> pool;
    if (opts.allow_augment && opts.fit == WeightFit::ConstrainedExact) {
      std::set<int> seen(nb.begin(), nb.end());
      seen.insert(i);
      for (int j : graph.neighbors[static_cast<size_t>(i)])
        for (int k : graph.neighbors[static_cast<size_t>(j)])
          if (seen.insert(k).second) pool.push_back(k);
      const Vec2& xi = coords[static_cast<size_t>(i)];
      std::sort(pool.begin(), pool.end(), [&](int a, int b) {
        const Vec2& pa = coords[static_cast<size_t>(a)];
        const Vec2& pb = coords[static_cast<size_t>(b)];
        const double da = (pa.x - xi.x) * (pa.x - xi.x) + (pa.y - xi.y) * (pa.y - xi.y);
        const double db = (pb.x - xi.x) * (pb.x - xi.x) + (pb.y - xi.y) * (pb.y - xi.y);
        return da != db ? da < db : a < b;
      });
    }

    size_t next_candidate = 0;
    for (;;) {
      std::vector<Vec2> offsets(nb.size());
      for (size_t j = 0; j < nb.size(); ++j) {
        const Vec2& xj = coords[static_cast<size_t>(nb[j])];
        const Vec2& xi = coords[static_cast<size_t>(i)];
        offsets[j] = {xj.x - xi.x, xj.y - xi.y};
      }
      const int m = opts.degree_override != 0 ? opts.degree_override
                                              : select_degree(static_cast<int>(nb.size()));
      try {
        st.weights[static_cast<size_t>(i)] = laplacian_weights(offsets, m, opts.fit);
        st.neighbors[static_cast<size_t>(i)] = nb;
        st.degree[static_cast<size_t>(i)] = m;
        break;
      } catch (const InfeasibleNeighborhood&) {
        if (next_candidate >= pool.size())
          throw std::runtime_error("build_laplacian_stencils: degenerate neighborhood at node " +
                                   std::to_string(i));
        nb.push_back(pool[next_candidate++]);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("build_laplacian_stencils: node " + std::to_string(i) + ": " +
                                 e.what());
      }
    }
  });
  return st;
}

std::vector<double> apply_laplacian(const LaplacianStencil& st, std::span<const double> field) {
  const size_t n = st.neighbors.size();
  if (field.size() != n) throw std::invalid_argument("apply_laplacian: field length mismatch");
  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const auto& nb = st.neighbors[i];
    const auto& w = st.weights[i];
    for (size_t j = 0; j < nb.size(); ++j)
      acc += w[j] * (field[static_cast<size_t>(nb[j])] - field[i]);
    out[i] = acc;
  }
  return out;
}

void write_stencil_dump(const LaplacianStencil& st, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_stencil_dump: cannot open " + path);
  char buf[48];
  for (size_t i = 0; i < st.neighbors.size(); ++i) {
    f << i << " :";
    for (size_t j = 0; j < st.neighbors[i].size(); ++j) {
      std::snprintf(buf, sizeof(buf), " %d %.17g", st.neighbors[i][j], st.weights[i][j]);
      f << buf;
    }
    f << '\n';
  }
}

namespace {

void check_scales(std::span<const double> scales) {
  if (scales.size() < 4)
    throw std::invalid_argument("order_test: need at least 4 scales");
  for (size_t k = 0; k < scales.size(); ++k) {
    if (!(scales[k] > 0.0)) throw std::invalid_argument("order_test: scales must be positive");
    if (k > 0 && !(scales[k] < scales[k - 1]))
      throw std::invalid_argument("order_test: scales must decrease");
  }
}

std::vector<Vec2> base_offsets(const Vec2& center, const std::vector<Vec2>& points) {
  std::vector<Vec2> out(points.size());
  for (size_t j = 0; j < points.size(); ++j)
    out[j] = {points[j].x - center.x, points[j].y - center.y};
  return out;
}

}  // namespace

OrderTestResult order_test(const Vec2& center, const std::vector<Vec2>& points,
                           const std::function<double(double, double)>& u,
                           double lap_u_at_center, std::span<const double> scales,
                           const LaplacianOptions& opts) {
  check_scales(scales);
  const std::vector<Vec2> offsets = base_offsets(center, points);
  const int m = opts.degree_override != 0 ? opts.degree_override
                                          : select_degree(static_cast<int>(points.size()));

  OrderTestResult res;
  res.errors.reserve(scales.size());
  const double u0 = u(center.x, center.y);
  for (double r : scales) {
    std::vector<Vec2> scaled(offsets.size());
    for (size_t j = 0; j < offsets.size(); ++j) scaled[j] = {r * offsets[j].x, r * offsets[j].y};
    const std::vector<double> w = laplacian_weights(scaled, m, opts.fit);
    double acc = 0.0;
    for (size_t j = 0; j < scaled.size(); ++j)
      acc += w[j] * (u(center.x + scaled[j].x, center.y + scaled[j].y) - u0);
    res.errors.push_back(std::abs(lap_u_at_center - acc));
  }

  res.exact = std::all_of(res.errors.begin(), res.errors.end(),
                          [](double e) { return e < 1e-13; });
  if (res.exact) return res;

  // least-squares slope of log|error| against log r
  const size_t k = scales.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t j = 0; j < k; ++j) {
    const double lx = std::log(scales[j]);
    const double ly = std::log(std::max(res.errors[j], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  res.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return res;
}

EtaBoundednessResult eta_boundedness(const Vec2& center, const std::vector<Vec2>& points,
                                     std::span<const double> scales,
                                     const LaplacianOptions& opts) {
  check_scales(scales);
  const std::vector<Vec2> offsets = base_offsets(center, points);
  const int m = opts.degree_override != 0 ? opts.degree_override
                                          : select_degree(static_cast<int>(points.size()));

  EtaBoundednessResult res;
  for (double r : scales) {
    std::vector<Vec2> scaled(offsets.size());
    for (size_t j = 0; j < offsets.size(); ++j) scaled[j] = {r * offsets[j].x, r * offsets[j].y};
    const std::vector<double> w = laplacian_weights(scaled, m, opts.fit);
    double sq = 0.0;
    for (double wi : w) sq += wi * wi;
    res.norms.push_back(r * r * std::sqrt(sq));
  }
  res.max_norm = *std::max_element(res.norms.begin(), res.norms.end());
  return res;
}

namespace {

// Assembles Q (2l x 4) and the bracketing node set for one query point.
struct InterpSystem {
  std::vector<int> nodes;
  Eigen::MatrixXd Q;
};

InterpSystem interp_system(const std::vector<Vec2>& coords, double t_p, double t_next,
                           Vec2 query, double t_query, int l) {
  const int n = static_cast<int>(coords.size());
  if (l < 4) throw std::invalid_argument("interpolate_spacetime: need l >= d+2 = 4");
  if (l > n) throw std::invalid_argument("interpolate_spacetime: l exceeds node count");
  if (!(t_next > t_p)) throw std::invalid_argument("interpolate_spacetime: t_next must exceed t_p");
  if (!(t_query >= t_p) || !(t_query <= t_next))
    throw std::invalid_argument("interpolate_spacetime: query time outside bracket");

  std::vector<std::pair<double, int>> dist(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double dx = coords[static_cast<size_t>(i)].x - query.x;
    const double dy = coords[static_cast<size_t>(i)].y - query.y;
    dist[static_cast<size_t>(i)] = {dx * dx + dy * dy, i};
  }
  std::sort(dist.begin(), dist.end());

  InterpSystem sys;
  sys.nodes.resize(static_cast<size_t>(l));
  sys.Q.resize(2 * l, 4);
  for (int k = 0; k < l; ++k) {
    const int idx = dist[static_cast<size_t>(k)].second;
    sys.nodes[static_cast<size_t>(k)] = idx;
    const double dx = coords[static_cast<size_t>(idx)].x - query.x;
    const double dy = coords[static_cast<size_t>(idx)].y - query.y;
    sys.Q(k, 0) = 1.0;
    sys.Q(k, 1) = t_p - t_query;
    sys.Q(k, 2) = dx;
    sys.Q(k, 3) = dy;
    sys.Q(l + k, 0) = 1.0;
    sys.Q(l + k, 1) = t_next - t_query;
    sys.Q(l + k, 2) = dx;
    sys.Q(l + k, 3) = dy;
  }
  return sys;
}

}  // namespace

SpaceTimeSample interpolate_spacetime(const Eigen::MatrixXd& field_p,
                                      const Eigen::MatrixXd& field_next,
                                      const std::vector<Vec2>& coords, double t_p, double t_next,
                                      Vec2 query, double t_query, int l) {
  const int n = static_cast<int>(coords.size());
  if (field_p.rows() != n || field_next.rows() != n || field_p.cols() != field_next.cols())
    throw std::invalid_argument("interpolate_spacetime: field shape mismatch");

  const InterpSystem sys = interp_system(coords, t_p, t_next, query, t_query, l);
  const int nc = static_cast<int>(field_p.cols());
  Eigen::MatrixXd Z(2 * l, nc);
  for (int k = 0; k < l; ++k) {
    Z.row(k) = field_p.row(sys.nodes[static_cast<size_t>(k)]);
    Z.row(l + k) = field_next.row(sys.nodes[static_cast<size_t>(k)]);
  }

  const Eigen::MatrixXd M = sys.Q.transpose() * sys.Q;
  const Eigen::MatrixXd rhs = sys.Q.transpose() * Z;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  Eigen::MatrixXd H;
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    H = ldlt.solve(rhs);
    ok = (M * H - rhs).norm() <= 1e-8 * (1.0 + rhs.norm());
  }
  if (!ok) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys.Q);
    if (cod.rank() < 4)
      throw std::runtime_error("interpolate_spacetime: degenerate node cloud (rank " +
                               std::to_string(cod.rank()) + ")");
    H = cod.solve(Z);
  }

  SpaceTimeSample out;
  out.value = H.row(0).transpose();
  out.dudt = H.row(1).transpose();
  out.grad = H.middleRows(2, 2);
  return out;
}

InterpWeights interpolation_weights(const std::vector<Vec2>& coords, double t_p, double t_next,
                                    Vec2 query, double t_query, int l) {
  const InterpSystem sys = interp_system(coords, t_p, t_next, query, t_query, l);
  const Eigen::MatrixXd M = sys.Q.transpose() * sys.Q;

  Eigen::Vector4d e0 = Eigen::Vector4d::Zero();
  e0(0) = 1.0;
  Eigen::LDLT<Eigen::Matrix4d> ldlt(M);
  Eigen::VectorXd row;
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    const Eigen::Vector4d y = ldlt.solve(e0);
    ok = (M * y - e0).norm() <= 1e-8;
    if (ok) row = sys.Q * y;  // row k = weight of sample k in the value estimate
  }
  if (!ok) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys.Q);
    if (cod.rank() < 4)
      throw std::runtime_error("interpolation_weights: degenerate node cloud");
    row = cod.pseudoInverse().row(0).transpose();
  }

  InterpWeights out;
  out.nodes = sys.nodes;
  out.w_p.resize(static_cast<size_t>(l));
  out.w_next.resize(static_cast<size_t>(l));
  for (int k = 0; k < l; ++k) {
    out.w_p[static_cast<size_t>(k)] = row(k);
    out.w_next[static_cast<size_t>(k)] = row(l + k);
  }
  return out;
}

}  // namespace pignn
