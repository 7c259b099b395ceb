#include "pignn/loss.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pignn {

namespace {

// Interior-row restriction of a per-node linear operator as CSR.
std::shared_ptr<SparseMap> restrict_rows(const std::vector<int>& rows, int n_total,
                                         const std::vector<std::vector<int>>& neighbors,
                                         const std::function<double(int, size_t)>& weight,
                                         const std::function<double(int)>& diag) {
  auto map = std::make_shared<SparseMap>();
  map->rows = static_cast<int>(rows.size());
  map->cols = n_total;
  map->row_ptr.push_back(0);
  for (int i : rows) {
    const auto& nb = neighbors[static_cast<size_t>(i)];
    for (size_t j = 0; j < nb.size(); ++j) {
      map->col_idx.push_back(nb[j]);
      map->vals.push_back(weight(i, j));
    }
    map->col_idx.push_back(i);
    map->vals.push_back(diag(i));
    map->row_ptr.push_back(static_cast<int>(map->col_idx.size()));
  }
  return map;
}

}  // namespace

CollocationSet build_collocation(const TriMesh& mesh, int time_steps) {
  CollocationSet set;
  set.nodes = interior_nodes(mesh);
  set.time_steps = time_steps;
  if (set.nodes.empty()) throw std::runtime_error("build_collocation: mesh has no interior nodes");
  if (time_steps < 1) throw std::invalid_argument("build_collocation: need at least one step");
  return set;
}

ProblemOps build_problem_ops(const TriMesh& mesh, const Graph& graph,
                             const GradientStencil& grad_st, const LaplacianStencil& lap_st,
                             const PdeSpec& spec) {
  const int n = mesh.node_count();
  ProblemOps ops;
  ops.coords = mesh.nodes;
  ops.kinds = mesh.kinds;

  auto senders = std::make_shared<std::vector<int>>();
  auto receivers = std::make_shared<std::vector<int>>();
  senders->reserve(graph.edges.size());
  receivers->reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    senders->push_back(e[0]);
    receivers->push_back(e[1]);
  }
  ops.gi = {n, senders, receivers};

  ops.edge_feats.resize(graph.edge_count(), 3);
  for (int e = 0; e < graph.edge_count(); ++e) {
    const auto& f = graph.edge_features[static_cast<size_t>(e)];
    ops.edge_feats(e, 0) = f.dx;
    ops.edge_feats(e, 1) = f.dy;
    ops.edge_feats(e, 2) = f.dist;
  }

  ops.onehot.setZero(n, 2);
  ops.interior_mask.setZero(n, spec.n);
  ops.xs.resize(n, 1);
  ops.ys.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    const bool interior = mesh.kinds[static_cast<size_t>(i)] == NodeKind::Interior;
    ops.onehot(i, interior ? 0 : 1) = 1.0;
    if (interior) {
      ops.interior_mask.row(i).setOnes();
      ops.interior.push_back(i);
    }
    ops.xs(i, 0) = mesh.nodes[static_cast<size_t>(i)].x;
    ops.ys(i, 0) = mesh.nodes[static_cast<size_t>(i)].y;
  }
  if (ops.interior.empty()) throw std::runtime_error("build_problem_ops: no interior nodes");
  ops.interior_idx = std::make_shared<const std::vector<int>>(ops.interior);

  const int ni = static_cast<int>(ops.interior.size());
  ops.xy_int.resize(static_cast<size_t>(ni));
  ops.xs_int.resize(ni, 1);
  ops.ys_int.resize(ni, 1);
  for (int k = 0; k < ni; ++k) {
    const Vec2& p = mesh.nodes[static_cast<size_t>(ops.interior[static_cast<size_t>(k)])];
    ops.xy_int[static_cast<size_t>(k)] = p;
    ops.xs_int(k, 0) = p.x;
    ops.ys_int(k, 0) = p.y;
  }

  ops.ddx_int = restrict_rows(
      ops.interior, n, grad_st.neighbors,
      [&](int i, size_t j) { return grad_st.pinv[static_cast<size_t>(i)](0, static_cast<Eigen::Index>(j)); },
      [&](int i) { return -grad_st.pinv[static_cast<size_t>(i)].row(0).sum(); });
  ops.ddy_int = restrict_rows(
      ops.interior, n, grad_st.neighbors,
      [&](int i, size_t j) { return grad_st.pinv[static_cast<size_t>(i)](1, static_cast<Eigen::Index>(j)); },
      [&](int i) { return -grad_st.pinv[static_cast<size_t>(i)].row(1).sum(); });
  ops.lap_int = restrict_rows(
      ops.interior, n, lap_st.neighbors,
      [&](int i, size_t j) { return lap_st.weights[static_cast<size_t>(i)][j]; },
      [&](int i) {
        double s = 0.0;
        for (double w : lap_st.weights[static_cast<size_t>(i)]) s += w;
        return -s;
      });
  return ops;
}

ad::Tensor build_node_features(ad::Tape& tape, const ProblemOps& ops, const FeatureLayout& layout,
                               const PdeSpec& spec, ad::Tensor u_t, double t,
                               const std::vector<ad::Tensor>& lam) {
  if (u_t.cols() != layout.components || u_t.rows() != static_cast<int>(ops.coords.size()))
    throw std::invalid_argument("build_node_features: state shape does not match layout");
  ad::Tensor feats = tape.concat_columns(u_t, tape.constant(ops.onehot));
  if (layout.has_source) {
    if (!spec.has_source)
      throw std::invalid_argument("build_node_features: layout expects a source term");
    feats = tape.concat_columns(feats, spec.source_tape(tape, ops.xs, ops.ys, t, lam));
  }
  return feats;
}

ad::Tensor apply_bc(ad::Tape& tape, const ProblemOps& ops, const PdeSpec& spec, ad::Tensor u,
                    double t) {
  ad::Mat bc = ad::Mat::Zero(static_cast<Eigen::Index>(ops.coords.size()), spec.n);
  std::vector<double> buf(static_cast<size_t>(spec.n));
  for (size_t i = 0; i < ops.coords.size(); ++i) {
    if (ops.kinds[i] != NodeKind::Boundary) continue;
    spec.bc(ops.coords[i].x, ops.coords[i].y, t, buf.data());
    for (int c = 0; c < spec.n; ++c) bc(static_cast<Eigen::Index>(i), c) = buf[static_cast<size_t>(c)];
  }
  return tape.add(tape.mul(u, tape.constant(ops.interior_mask)), tape.constant(std::move(bc)));
}

void apply_bc_inplace(ad::Mat& u, const PdeSpec& spec, const std::vector<Vec2>& coords,
                      const std::vector<NodeKind>& kinds, double t) {
  std::vector<double> buf(static_cast<size_t>(spec.n));
  for (size_t i = 0; i < coords.size(); ++i) {
    if (kinds[i] != NodeKind::Boundary) continue;
    spec.bc(coords[i].x, coords[i].y, t, buf.data());
    for (int c = 0; c < spec.n; ++c) u(static_cast<Eigen::Index>(i), c) = buf[static_cast<size_t>(c)];
  }
}

ad::Tensor pde_residual(ad::Tape& tape, const ProblemOps& ops, const PdeSpec& spec,
                        const ad::Mat& u_t, ad::Tensor u_next, double dt, double t_next,
                        const std::vector<ad::Tensor>& lam) {
  if (!(dt > 0.0)) throw std::invalid_argument("pde_residual: dt must be positive");
  const int ni = static_cast<int>(ops.interior.size());

  ad::Mat u_t_int(ni, spec.n);
  for (int k = 0; k < ni; ++k) u_t_int.row(k) = u_t.row(ops.interior[static_cast<size_t>(k)]);

  ad::Tensor u_int = tape.gather_rows(u_next, ops.interior_idx);
  ad::Tensor gx = tape.sparse_apply(ops.ddx_int, u_next);
  ad::Tensor gy = tape.sparse_apply(ops.ddy_int, u_next);
  ad::Tensor lap = tape.sparse_apply(ops.lap_int, u_next);

  ad::Tensor time_term = tape.scale(tape.sub(u_int, tape.constant(std::move(u_t_int))), 1.0 / dt);
  ad::Tensor spatial =
      spec.spatial_residual_tape(tape, u_int, gx, gy, lap, ops.xs_int, ops.ys_int, t_next, lam);
  ad::Tensor res = tape.add(time_term, spatial);
  if (!tape.value(res).allFinite())
    throw std::runtime_error("pde_residual: non-finite residual at t = " + std::to_string(t_next));
  return res;
}

ad::Tensor pde_loss(ad::Tape& tape, ad::Tensor residual) {
  return tape.mean_all(tape.square(residual));
}

std::vector<Observation> load_observations_csv(const std::string& path, int components) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_observations_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path + ": empty observation file");

  std::vector<Observation> out;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != 3 + components)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected x,y,t plus " + std::to_string(components) +
                               " value(s)");
    Observation o;
    o.x = {vals[0], vals[1]};
    o.t = vals[2];
    o.y.assign(vals.begin() + 3, vals.end());
    out.push_back(std::move(o));
  }
  if (out.empty()) throw std::runtime_error(path + ": no observations");
  return out;
}

void save_observations_csv(const std::string& path, const std::vector<Observation>& obs) {
  if (obs.empty()) throw std::invalid_argument("save_observations_csv: no observations");
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_observations_csv: cannot open " + path);
  f << (obs[0].y.size() == 1 ? "x,y,t,u" : "x,y,t,u,v") << '\n';
  char buf[64];
  for (const auto& o : obs) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", o.x.x, o.x.y, o.t);
    f << buf;
    for (double v : o.y) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      f << buf;
    }
    f << '\n';
  }
}

ObservationPlan plan_observations(const std::vector<Observation>& obs,
                                  const std::vector<Vec2>& coords, double dt, int steps,
                                  int neighbors) {
  if (obs.empty()) throw std::invalid_argument("plan_observations: no observations");
  const double horizon = steps * dt;
  const int n = static_cast<int>(obs[0].y.size());

  // bucket per bracketing step
  std::vector<std::vector<const Observation*>> buckets(static_cast<size_t>(steps));
  for (const auto& o : obs) {
    if (o.t < 0.0 || o.t > horizon * (1.0 + 1e-12))
      throw std::runtime_error("plan_observations: observation at t = " + std::to_string(o.t) +
                               " outside the training horizon [0, " + std::to_string(horizon) +
                               "]");
    int p = static_cast<int>(std::floor(o.t / dt));
    p = std::min(p, steps - 1);
    buckets[static_cast<size_t>(p)].push_back(&o);
  }

  ObservationPlan plan;
  plan.total = static_cast<int>(obs.size());
  for (int p = 0; p < steps; ++p) {
    const auto& bucket = buckets[static_cast<size_t>(p)];
    if (bucket.empty()) continue;
    ObsGroup group;
    group.step = p;
    auto wp = std::make_shared<SparseMap>();
    auto wn = std::make_shared<SparseMap>();
    wp->rows = wn->rows = static_cast<int>(bucket.size());
    wp->cols = wn->cols = static_cast<int>(coords.size());
    wp->row_ptr.push_back(0);
    wn->row_ptr.push_back(0);
    group.y.resize(static_cast<Eigen::Index>(bucket.size()), n);
    for (size_t r = 0; r < bucket.size(); ++r) {
      const Observation& o = *bucket[r];
      const InterpWeights w =
          interpolation_weights(coords, p * dt, (p + 1) * dt, o.x, o.t, neighbors);
      for (size_t k = 0; k < w.nodes.size(); ++k) {
        wp->col_idx.push_back(w.nodes[k]);
        wp->vals.push_back(w.w_p[k]);
        wn->col_idx.push_back(w.nodes[k]);
        wn->vals.push_back(w.w_next[k]);
      }
      wp->row_ptr.push_back(static_cast<int>(wp->col_idx.size()));
      wn->row_ptr.push_back(static_cast<int>(wn->col_idx.size()));
      for (int c = 0; c < n; ++c) group.y(static_cast<Eigen::Index>(r), c) = o.y[static_cast<size_t>(c)];
    }
    group.w_p = wp;
    group.w_next = wn;
    plan.groups.push_back(std::move(group));
  }
  return plan;
}

ad::Tensor data_loss(ad::Tape& tape, const ObservationPlan& plan,
                     const std::vector<ad::Tensor>& fields) {
  if (plan.groups.empty()) throw std::invalid_argument("data_loss: empty observation plan");
  ad::Tensor acc;
  bool first = true;
  int components = 0;
  for (const auto& g : plan.groups) {
    if (g.step + 1 >= static_cast<int>(fields.size()))
      throw std::invalid_argument("data_loss: rollout too short for observation bracket");
    ad::Tensor pred = tape.add(tape.sparse_apply(g.w_p, fields[static_cast<size_t>(g.step)]),
                               tape.sparse_apply(g.w_next, fields[static_cast<size_t>(g.step) + 1]));
    ad::Tensor sq = tape.sum_all(tape.square(tape.sub(pred, tape.constant(g.y))));
    acc = first ? sq : tape.add(acc, sq);
    first = false;
    components = static_cast<int>(g.y.cols());
  }
  return tape.scale(acc, 1.0 / (static_cast<double>(plan.total) * components));
}

ad::Tensor total_loss(ad::Tape& tape, ad::Tensor pde, ad::Tensor data, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("total_loss: gamma outside [0, 1]");
  return tape.add(tape.scale(pde, 1.0 - gamma), tape.scale(data, gamma));
}

}  // namespace pignn
