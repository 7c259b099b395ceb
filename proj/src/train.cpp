#include "pignn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include "pignn/util.hpp"

namespace pignn {

double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw std::invalid_argument("lr_schedule: negative epoch");
  const double lr = cfg.lr_start * std::pow(0.99, static_cast<double>(epoch / 10));
  return std::max(cfg.lr_floor, lr);
}

double gamma_schedule(int epoch, const TrainConfig& cfg) {
  const int half = std::max(1, cfg.epochs / 2);
  if (epoch >= half) return cfg.gamma_end;
  return cfg.gamma_start +
         (cfg.gamma_end - cfg.gamma_start) * (static_cast<double>(epoch) / half);
}

// ---------------------------------------------------------------------------
// checkpoint container and binary format
// ---------------------------------------------------------------------------

void Checkpoint::set(const std::string& name, ad::Mat value) {
  for (auto& [n, v] : arrays)
    if (n == name) {
      v = std::move(value);
      return;
    }
  arrays.emplace_back(name, std::move(value));
}

const ad::Mat* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return &v;
  return nullptr;
}

const ad::Mat& Checkpoint::get(const std::string& name) const {
  const ad::Mat* m = find(name);
  if (!m) throw std::runtime_error("checkpoint: missing array '" + name + "'");
  return *m;
}

double Checkpoint::scalar(const std::string& name) const {
  const ad::Mat& m = get(name);
  if (m.size() != 1) throw std::runtime_error("checkpoint: '" + name + "' is not a scalar");
  return m(0, 0);
}

namespace {

constexpr char kMagic[4] = {'P', 'G', 'N', 'N'};

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!f) throw std::runtime_error(path + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f.write(kMagic, 4);
  write_u32(f, ckpt.version);
  write_u32(f, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& [name, mat] : ckpt.arrays) {
    write_u32(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(f, static_cast<std::uint32_t>(mat.rows()));
    write_u32(f, static_cast<std::uint32_t>(mat.cols()));
    f.write(reinterpret_cast<const char*>(mat.data()),
            static_cast<std::streamsize>(sizeof(double)) * mat.size());
  }
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not a PGNN checkpoint (bad magic)");
  Checkpoint ckpt;
  ckpt.version = read_u32(f, path);
  if (ckpt.version != 1)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(ckpt.version));
  const std::uint32_t count = read_u32(f, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(f, path);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    if (!f) throw std::runtime_error(path + ": truncated checkpoint");
    const std::uint32_t rows = read_u32(f, path);
    const std::uint32_t cols = read_u32(f, path);
    ad::Mat mat(rows, cols);
    f.read(reinterpret_cast<char*>(mat.data()),
           static_cast<std::streamsize>(sizeof(double)) * mat.size());
    if (!f) throw std::runtime_error(path + ": truncated checkpoint");
    ckpt.arrays.emplace_back(std::move(name), std::move(mat));
  }
  return ckpt;
}

// ---------------------------------------------------------------------------
// shared training context
// ---------------------------------------------------------------------------

namespace {

int pde_id(const std::string& key) {
  if (key == "heat") return 0;
  if (key == "burgers") return 1;
  if (key == "fn") return 2;
  if (key == "heat_inverse") return 3;
  throw std::invalid_argument("unknown pde key '" + key + "'");
}

std::string pde_key(int id) {
  switch (id) {
    case 0: return "heat";
    case 1: return "burgers";
    case 2: return "fn";
    case 3: return "heat_inverse";
    default: throw std::runtime_error("checkpoint: unknown pde id " + std::to_string(id));
  }
}

struct TrainContext {
  Graph graph;
  GradientStencil grad_st;
  LaplacianStencil lap_st;
  ProblemOps ops;
  FeatureLayout layout;
  ad::Mat u0;
};

TrainContext build_context(const TriMesh& mesh, const PdeSpec& spec, const TrainConfig& cfg) {
  TrainContext ctx;
  ctx.graph = build_graph(mesh);
  ctx.grad_st = build_gradient_stencils(ctx.graph, mesh.nodes, cfg.threads);
  ctx.lap_st = build_laplacian_stencils(ctx.graph, mesh.nodes, {}, cfg.threads);
  ctx.ops = build_problem_ops(mesh, ctx.graph, ctx.grad_st, ctx.lap_st, spec);
  ctx.layout = FeatureLayout{spec.n, spec.has_source && cfg.source_feature};
  ctx.u0 = eval_ic(spec, mesh.nodes);

  // Stability guidance dt ~ (dx)^2 from the hyperparameter discussion.
  double h = 0.0;
  for (const auto& e : ctx.graph.edge_features) h += e.dist;
  h /= std::max<size_t>(1, ctx.graph.edge_features.size());
  if (cfg.dt > h * h * (1.0 + 1e-9))
    std::fprintf(stderr,
                 "warning: dt = %.3g exceeds the squared mean mesh width %.3g; "
                 "training may be unstable\n",
                 cfg.dt, h * h);
  return ctx;
}

void validate_config(const TrainConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("train: dt must be positive");
  if (cfg.steps < 1) throw std::invalid_argument("train: need at least one training step");
  if (cfg.epochs < 0) throw std::invalid_argument("train: negative epoch budget");
  if (!(cfg.lr_start >= cfg.lr_floor))
    throw std::invalid_argument("train: lr_start must be >= lr_floor");
}

std::vector<ad::Mat*> param_ptrs(ModelParams& params) {
  std::vector<ad::Mat*> out;
  for (auto& [name, mat] : named_params(params)) {
    (void)name;
    out.push_back(mat);
  }
  return out;
}

std::vector<ad::Tensor> lift_lambda(ad::Tape& tape, const PdeSpec& spec,
                                    const std::vector<double>& values, bool trainable_live) {
  std::vector<ad::Tensor> lam;
  lam.reserve(spec.params.size());
  for (size_t i = 0; i < spec.params.size(); ++i)
    lam.push_back(tape.scalar(values[i], trainable_live && spec.params[i].trainable));
  return lam;
}

}  // namespace

// ---------------------------------------------------------------------------
// forward training: physics loss only, one tape per step, gradients
// accumulated across steps (exact under per-step detachment)
// ---------------------------------------------------------------------------

TrainResult train_forward(const TriMesh& mesh, const PdeSpec& spec, const TrainConfig& cfg,
                          const Checkpoint* resume) {
  validate_config(cfg);
  if (spec.any_trainable())
    throw std::invalid_argument("train_forward: spec has trainable parameters; use train_inverse");

  TrainContext ctx = build_context(mesh, spec, cfg);
  const std::vector<double> lam_values = spec.param_values();

  TrainResult result;
  if (resume) {
    CheckpointContents c = unpack_checkpoint(*resume);
    result.params = std::move(c.params);
    result.best_params = std::move(c.best_params);
    result.adam = std::move(c.adam);
    result.best_loss = c.best_loss;
    result.best_epoch = c.best_epoch;
    result.next_epoch = c.next_epoch;
  } else {
    result.params = init_params(ctx.layout, cfg.blocks, cfg.seed);
    result.best_params = result.params;
    result.adam = make_adam_state(param_ptrs(result.params));
    result.best_loss = std::numeric_limits<double>::infinity();
  }
  result.lambda_final = lam_values;
  result.lambda_best = lam_values;

  std::vector<ad::Mat*> ptrs = param_ptrs(result.params);
  const size_t np = ptrs.size();

  for (int epoch = result.next_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    std::vector<ad::Mat> grads(np);
    for (size_t i = 0; i < np; ++i) grads[i] = ad::Mat::Zero(ptrs[i]->rows(), ptrs[i]->cols());

    ad::Mat u_t = ctx.u0;
    double loss_sum = 0.0;
    for (int step = 0; step < cfg.steps; ++step) {
      const double t = step * cfg.dt;
      const double t_next = (step + 1) * cfg.dt;
      ad::Tape tape;
      tape.reserve(128);
      ModelVars vars = lift_params(tape, result.params, true);
      std::vector<ad::Tensor> lam = lift_lambda(tape, spec, lam_values, false);
      ad::Tensor u_t_tensor = tape.constant(u_t);
      ad::Tensor feats = build_node_features(tape, ctx.ops, ctx.layout, spec, u_t_tensor, t, lam);
      ad::Tensor u_next = model_step(tape, vars, ctx.ops.gi, u_t_tensor, feats,
                                     tape.constant(ctx.ops.edge_feats));
      ad::Tensor u_bc = apply_bc(tape, ctx.ops, spec, u_next, t_next);
      ad::Tensor residual = pde_residual(tape, ctx.ops, spec, u_t, u_bc, cfg.dt, t_next, lam);
      ad::Tensor step_loss = pde_loss(tape, residual);

      const double lv = tape.value(step_loss)(0, 0);
      if (!std::isfinite(lv))
        throw std::runtime_error("train_forward: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", step " + std::to_string(step));
      loss_sum += lv;
      tape.backward(step_loss);
      for (size_t i = 0; i < np; ++i)
        if (tape.has_grad(vars.flat[i])) grads[i] += tape.grad(vars.flat[i]) / cfg.steps;

      u_t = tape.value(u_bc);  // detached input for the next step
    }

    const double loss_epoch = loss_sum / cfg.steps;
    result.history.push_back({epoch, loss_epoch, loss_epoch, 0.0, lr, 0.0, {}});
    if (loss_epoch < result.best_loss) {
      result.best_loss = loss_epoch;
      result.best_epoch = epoch;
      result.best_params = result.params;
    }
    adam_step(ptrs, grads, result.adam, lr);
    result.next_epoch = epoch + 1;
  }
  return result;
}

// ---------------------------------------------------------------------------
// inverse training: one tape over the whole rollout so the data loss can
// interpolate between consecutive live states
// ---------------------------------------------------------------------------

TrainResult train_inverse(const TriMesh& mesh, const PdeSpec& spec,
                          const std::vector<Observation>& obs, const TrainConfig& cfg,
                          const Checkpoint* resume) {
  validate_config(cfg);
  if (!spec.any_trainable())
    throw std::invalid_argument("train_inverse: spec has no trainable parameters");
  if (obs.empty()) throw std::invalid_argument("train_inverse: no observations");

  TrainContext ctx = build_context(mesh, spec, cfg);
  const ObservationPlan plan =
      plan_observations(obs, mesh.nodes, cfg.dt, cfg.steps, cfg.interp_neighbors);

  std::vector<double> lam_values = spec.param_values();
  std::vector<int> trainable;  // indices into spec.params
  for (size_t i = 0; i < spec.params.size(); ++i)
    if (spec.params[i].trainable) trainable.push_back(static_cast<int>(i));

  TrainResult result;
  if (resume) {
    CheckpointContents c = unpack_checkpoint(*resume);
    result.params = std::move(c.params);
    result.best_params = std::move(c.best_params);
    result.adam = std::move(c.adam);
    result.best_loss = c.best_loss;
    result.best_epoch = c.best_epoch;
    result.next_epoch = c.next_epoch;
    lam_values = c.spec.param_values();
    result.lambda_best = c.lambda_best;
  } else {
    result.params = init_params(ctx.layout, cfg.blocks, cfg.seed);
    result.best_params = result.params;
    result.best_loss = std::numeric_limits<double>::infinity();
    result.lambda_best = lam_values;
  }

  // Trainable parameters ride along as 1x1 entries after the model weights.
  std::vector<ad::Mat> lambda_mats;
  for (int idx : trainable) {
    ad::Mat m(1, 1);
    m(0, 0) = lam_values[static_cast<size_t>(idx)];
    lambda_mats.push_back(std::move(m));
  }
  std::vector<ad::Mat*> ptrs = param_ptrs(result.params);
  const size_t np = ptrs.size();
  for (auto& m : lambda_mats) ptrs.push_back(&m);
  if (!resume) result.adam = make_adam_state(ptrs);

  for (int epoch = result.next_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg);
    const double gamma = gamma_schedule(epoch, cfg);

    ad::Tape tape;
    tape.reserve(256);
    ModelVars vars = lift_params(tape, result.params, true);
    std::vector<ad::Tensor> lam = lift_lambda(tape, spec, lam_values, true);

    std::vector<ad::Tensor> fields;
    fields.push_back(tape.constant(ctx.u0));
    ad::Mat u_t = ctx.u0;
    ad::Tensor pde_acc;
    for (int step = 0; step < cfg.steps; ++step) {
      const double t = step * cfg.dt;
      const double t_next = (step + 1) * cfg.dt;
      ad::Tensor u_t_tensor = tape.constant(u_t);
      ad::Tensor feats = build_node_features(tape, ctx.ops, ctx.layout, spec, u_t_tensor, t, lam);
      ad::Tensor u_next = model_step(tape, vars, ctx.ops.gi, u_t_tensor, feats,
                                     tape.constant(ctx.ops.edge_feats));
      ad::Tensor u_bc = apply_bc(tape, ctx.ops, spec, u_next, t_next);
      fields.push_back(u_bc);
      ad::Tensor residual = pde_residual(tape, ctx.ops, spec, u_t, u_bc, cfg.dt, t_next, lam);
      ad::Tensor step_loss = pde_loss(tape, residual);
      pde_acc = step == 0 ? step_loss : tape.add(pde_acc, step_loss);
      u_t = tape.value(u_bc);
    }
    ad::Tensor pde = tape.scale(pde_acc, 1.0 / cfg.steps);
    ad::Tensor data = data_loss(tape, plan, fields);
    ad::Tensor total = total_loss(tape, pde, data, gamma);

    const double total_v = tape.value(total)(0, 0);
    if (!std::isfinite(total_v))
      throw std::runtime_error("train_inverse: non-finite loss at epoch " +
                               std::to_string(epoch));

    EpochRecord rec{epoch, total_v, tape.value(pde)(0, 0), tape.value(data)(0, 0), lr, gamma, {}};
    for (int idx : trainable) rec.lambda.push_back(lam_values[static_cast<size_t>(idx)]);
    result.history.push_back(std::move(rec));

    if (total_v < result.best_loss) {
      result.best_loss = total_v;
      result.best_epoch = epoch;
      result.best_params = result.params;
      result.lambda_best = lam_values;
    }

    tape.backward(total);
    std::vector<ad::Mat> grads;
    grads.reserve(ptrs.size());
    for (size_t i = 0; i < np; ++i)
      grads.push_back(tape.has_grad(vars.flat[i])
                          ? tape.grad(vars.flat[i])
                          : ad::Mat::Zero(ptrs[i]->rows(), ptrs[i]->cols()));
    for (size_t k = 0; k < trainable.size(); ++k) {
      const ad::Tensor lt = lam[static_cast<size_t>(trainable[k])];
      grads.push_back(tape.has_grad(lt) ? tape.grad(lt) : ad::Mat::Zero(1, 1));
    }
    adam_step(ptrs, grads, result.adam, lr);
    for (size_t k = 0; k < trainable.size(); ++k)
      lam_values[static_cast<size_t>(trainable[k])] = lambda_mats[k](0, 0);
    result.next_epoch = epoch + 1;
  }

  result.lambda_final = lam_values;
  if (result.best_epoch < 0) result.lambda_best = lam_values;
  return result;
}

std::vector<Observation> make_observations(const TriMesh& mesh, const PdeSpec& spec, int count,
                                           std::uint64_t seed, int steps, double dt,
                                           const std::vector<double>& lam_true) {
  if (!spec.has_analytic)
    throw std::invalid_argument("make_observations: pde has no analytic solution");
  if (count < 1 || steps < 1) throw std::invalid_argument("make_observations: bad count/steps");

  std::vector<int> pool = interior_nodes(mesh);
  if (pool.empty()) throw std::runtime_error("make_observations: no interior nodes");
  std::mt19937_64 rng(seed);
  for (size_t i = pool.size() - 1; i > 0; --i)
    std::swap(pool[i], pool[rng() % (i + 1)]);

  std::vector<Observation> obs;
  obs.reserve(static_cast<size_t>(count));
  std::vector<double> buf(static_cast<size_t>(spec.n));
  for (int j = 0; j < count; ++j) {
    const int node = pool[static_cast<size_t>(j) % pool.size()];
    const double t = ((j % steps) + 1) * dt;
    const Vec2& p = mesh.nodes[static_cast<size_t>(node)];
    spec.analytic(p.x, p.y, t, lam_true, buf.data());
    obs.push_back({p, t, buf});
  }
  return obs;
}

// ---------------------------------------------------------------------------
// checkpoint assembly
// ---------------------------------------------------------------------------

Checkpoint make_checkpoint(const TrainResult& result, const PdeSpec& spec,
                           const TrainConfig& cfg) {
  Checkpoint ckpt;
  auto scalar = [&ckpt](const std::string& name, double v) {
    ad::Mat m(1, 1);
    m(0, 0) = v;
    ckpt.set(name, std::move(m));
  };
  scalar("cfg.dt", cfg.dt);
  scalar("cfg.steps", cfg.steps);
  scalar("cfg.epochs", cfg.epochs);
  scalar("cfg.lr_start", cfg.lr_start);
  scalar("cfg.lr_floor", cfg.lr_floor);
  scalar("cfg.gamma_start", cfg.gamma_start);
  scalar("cfg.gamma_end", cfg.gamma_end);
  scalar("cfg.seed", static_cast<double>(cfg.seed));
  scalar("cfg.blocks", cfg.blocks);
  scalar("cfg.source_feature", cfg.source_feature ? 1.0 : 0.0);
  scalar("cfg.interp_neighbors", cfg.interp_neighbors);
  scalar("pde.id", pde_id(spec.key));
  scalar("layout.components", result.params.layout.components);
  scalar("layout.has_source", result.params.layout.has_source ? 1.0 : 0.0);
  scalar("epoch.next", result.next_epoch);
  scalar("best.loss", result.best_loss);
  scalar("best.epoch", result.best_epoch);
  scalar("adam.step", static_cast<double>(result.adam.step));

  auto vec_row = [](const std::vector<double>& v) {
    ad::Mat m(1, std::max<size_t>(1, v.size()));
    m.setZero();
    for (size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
    return m;
  };
  ckpt.set("lambda.cur", vec_row(result.lambda_final));
  ckpt.set("lambda.best", vec_row(result.lambda_best));

  ModelParams cur = result.params;
  ModelParams best = result.best_params;
  auto cur_named = named_params(cur);
  auto best_named = named_params(best);
  for (size_t i = 0; i < cur_named.size(); ++i) {
    ckpt.set("cur." + cur_named[i].first, *cur_named[i].second);
    ckpt.set("best." + best_named[i].first, *best_named[i].second);
    ckpt.set("adam.m." + cur_named[i].first, result.adam.m[i]);
    ckpt.set("adam.v." + cur_named[i].first, result.adam.v[i]);
  }
  for (size_t k = cur_named.size(); k < result.adam.m.size(); ++k) {
    const std::string suffix = "lambda" + std::to_string(k - cur_named.size());
    ckpt.set("adam.m." + suffix, result.adam.m[k]);
    ckpt.set("adam.v." + suffix, result.adam.v[k]);
  }
  return ckpt;
}

CheckpointContents unpack_checkpoint(const Checkpoint& ckpt) {
  CheckpointContents out;
  out.cfg.dt = ckpt.scalar("cfg.dt");
  out.cfg.steps = static_cast<int>(ckpt.scalar("cfg.steps"));
  out.cfg.epochs = static_cast<int>(ckpt.scalar("cfg.epochs"));
  out.cfg.lr_start = ckpt.scalar("cfg.lr_start");
  out.cfg.lr_floor = ckpt.scalar("cfg.lr_floor");
  out.cfg.gamma_start = ckpt.scalar("cfg.gamma_start");
  out.cfg.gamma_end = ckpt.scalar("cfg.gamma_end");
  out.cfg.seed = static_cast<std::uint64_t>(ckpt.scalar("cfg.seed"));
  out.cfg.blocks = static_cast<int>(ckpt.scalar("cfg.blocks"));
  out.cfg.source_feature = ckpt.scalar("cfg.source_feature") != 0.0;
  out.cfg.interp_neighbors = static_cast<int>(ckpt.scalar("cfg.interp_neighbors"));

  const ad::Mat& lam_cur = ckpt.get("lambda.cur");
  const std::string key = pde_key(static_cast<int>(ckpt.scalar("pde.id")));
  {
    std::map<std::string, double> overrides;
    PdeSpec defaults = make_pde(key);
    for (size_t i = 0; i < defaults.params.size(); ++i)
      overrides[defaults.params[i].name] = lam_cur(0, static_cast<Eigen::Index>(i));
    out.spec = make_pde(key, overrides);
  }
  const ad::Mat& lam_best = ckpt.get("lambda.best");
  for (Eigen::Index i = 0; i < lam_best.cols(); ++i) out.lambda_best.push_back(lam_best(0, i));
  if (out.spec.params.empty()) out.lambda_best.clear();

  FeatureLayout layout{static_cast<int>(ckpt.scalar("layout.components")),
                       ckpt.scalar("layout.has_source") != 0.0};
  out.params = init_params(layout, out.cfg.blocks, 0);
  out.best_params = init_params(layout, out.cfg.blocks, 0);
  out.adam.step = static_cast<long>(ckpt.scalar("adam.step"));

  auto cur_named = named_params(out.params);
  auto best_named = named_params(out.best_params);
  for (size_t i = 0; i < cur_named.size(); ++i) {
    const ad::Mat& c = ckpt.get("cur." + cur_named[i].first);
    const ad::Mat& b = ckpt.get("best." + best_named[i].first);
    if (c.rows() != cur_named[i].second->rows() || c.cols() != cur_named[i].second->cols())
      throw std::runtime_error("checkpoint: shape mismatch for '" + cur_named[i].first + "'");
    *cur_named[i].second = c;
    *best_named[i].second = b;
    out.adam.m.push_back(ckpt.get("adam.m." + cur_named[i].first));
    out.adam.v.push_back(ckpt.get("adam.v." + cur_named[i].first));
  }
  for (size_t k = 0;; ++k) {
    const std::string suffix = "lambda" + std::to_string(k);
    const ad::Mat* m = ckpt.find("adam.m." + suffix);
    if (!m) break;
    out.adam.m.push_back(*m);
    out.adam.v.push_back(ckpt.get("adam.v." + suffix));
  }

  out.best_loss = ckpt.scalar("best.loss");
  out.best_epoch = static_cast<int>(ckpt.scalar("best.epoch"));
  out.next_epoch = static_cast<int>(ckpt.scalar("epoch.next"));
  return out;
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history,
                       const std::vector<std::string>& lambda_names) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_history_csv: cannot open " + path);
  f << "epoch,loss_total,loss_pde,loss_data,lr,gamma";
  for (const auto& n : lambda_names) f << ',' << n;
  f << '\n';
  char buf[64];
  for (const auto& r : history) {
    f << r.epoch;
    for (double v : {r.loss_total, r.loss_pde, r.loss_data, r.lr, r.gamma}) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      f << buf;
    }
    for (double v : r.lambda) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      f << buf;
    }
    f << '\n';
  }
}

}  // namespace pignn
