#include "pignn/pde.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pignn {

namespace {

constexpr double kPi = std::numbers::pi;

ad::Mat col_mat(const std::vector<Vec2>& xy, bool take_x) {
  ad::Mat m(static_cast<Eigen::Index>(xy.size()), 1);
  for (size_t i = 0; i < xy.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = take_x ? xy[i].x : xy[i].y;
  return m;
}

}  // namespace

double PdeSpec::param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p.value;
  throw std::invalid_argument("pde '" + key + "' has no parameter '" + name + "'");
}

std::vector<double> PdeSpec::param_values() const {
  std::vector<double> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.value);
  return out;
}

bool PdeSpec::any_trainable() const {
  for (const auto& p : params)
    if (p.trainable) return true;
  return false;
}

PdeSpec heat_spec(double a, double b, double c, double d) {
  PdeSpec s;
  s.key = "heat";
  s.n = 1;
  s.has_source = true;
  s.params = {{"a", a, false}, {"b", b, false}, {"c", c, false}, {"d", d, false}};

  s.source = [a, b, c, d](double x, double y, double t, const std::vector<double>&, double* out) {
    const double th = b * kPi * (x - d) * t + c * y * y;
    out[0] = a * std::cos(th) * (b * kPi * (x - d) - 2.0 * c) +
             a * std::sin(th) * (b * b * kPi * kPi * t * t + 4.0 * c * c * y * y);
  };
  s.analytic = [a, b, c, d](double x, double y, double t, const std::vector<double>&,
                            double* out) {
    out[0] = a * std::sin(b * kPi * (x - d) * t + c * y * y);
  };
  s.has_analytic = true;
  s.bc = [s_analytic = s.analytic](double x, double y, double t, double* out) {
    s_analytic(x, y, t, {}, out);
  };
  s.ic = [a, c](double x, double y, double* out) {
    (void)x;
    out[0] = a * std::sin(c * y * y);
  };
  s.spatial_residual = [src = s.source](const double*, const double*, const double*,
                                        const double* lap, double x, double y, double t,
                                        const std::vector<double>& lam, double* out) {
    double f;
    src(x, y, t, lam, &f);
    out[0] = -lap[0] - f;
  };
  s.source_tape = [src = s.source](ad::Tape& tape, const ad::Mat& xs, const ad::Mat& ys,
                                   double t, const std::vector<ad::Tensor>&) {
    ad::Mat f(xs.rows(), 1);
    for (Eigen::Index i = 0; i < xs.rows(); ++i) f(i, 0) = [&] {
      double v;
      src(xs(i, 0), ys(i, 0), t, {}, &v);
      return v;
    }();
    return tape.constant(std::move(f));
  };
  s.spatial_residual_tape = [st = s.source_tape](ad::Tape& tape, ad::Tensor, ad::Tensor,
                                                 ad::Tensor, ad::Tensor lap, const ad::Mat& xs,
                                                 const ad::Mat& ys, double t,
                                                 const std::vector<ad::Tensor>& lam) {
    return tape.scale(tape.add(lap, st(tape, xs, ys, t, lam)), -1.0);
  };
  return s;
}

PdeSpec burgers_spec(double re) {
  if (!(re > 0.0)) throw std::invalid_argument("burgers_spec: Reynolds number must be positive");
  PdeSpec s;
  s.key = "burgers";
  s.n = 2;
  s.has_source = false;
  s.params = {{"re", re, false}};

  auto exact = [re](double x, double y, double t, double* out) {
    const double w = std::exp((-t - 4.0 * x + 4.0 * y) * re / 32.0);
    out[0] = 0.75 - 0.25 / (1.0 + w);
    out[1] = 0.75 + 0.25 / (1.0 + w);
  };
  s.analytic = [exact](double x, double y, double t, const std::vector<double>&, double* out) {
    exact(x, y, t, out);
  };
  s.has_analytic = true;
  s.bc = [exact](double x, double y, double t, double* out) { exact(x, y, t, out); };
  s.ic = [exact](double x, double y, double* out) { exact(x, y, 0.0, out); };
  s.source = [](double, double, double, const std::vector<double>&, double* out) {
    out[0] = out[1] = 0.0;
  };
  s.spatial_residual = [re](const double* u, const double* gx, const double* gy,
                            const double* lap, double, double, double,
                            const std::vector<double>&, double* out) {
    out[0] = u[0] * gx[0] + u[1] * gy[0] - lap[0] / re;
    out[1] = u[0] * gx[1] + u[1] * gy[1] - lap[1] / re;
  };
  s.spatial_residual_tape = [re](ad::Tape& tape, ad::Tensor u, ad::Tensor gx, ad::Tensor gy,
                                 ad::Tensor lap, const ad::Mat&, const ad::Mat&, double,
                                 const std::vector<ad::Tensor>&) {
    ad::Tensor uc = tape.slice_columns(u, 0, 1);
    ad::Tensor vc = tape.slice_columns(u, 1, 1);
    ad::Tensor ru = tape.sub(tape.add(tape.mul(uc, tape.slice_columns(gx, 0, 1)),
                                      tape.mul(vc, tape.slice_columns(gy, 0, 1))),
                             tape.scale(tape.slice_columns(lap, 0, 1), 1.0 / re));
    ad::Tensor rv = tape.sub(tape.add(tape.mul(uc, tape.slice_columns(gx, 1, 1)),
                                      tape.mul(vc, tape.slice_columns(gy, 1, 1))),
                             tape.scale(tape.slice_columns(lap, 1, 1), 1.0 / re));
    return tape.concat_columns(ru, rv);
  };
  s.source_tape = [](ad::Tape& tape, const ad::Mat& xs, const ad::Mat&, double,
                     const std::vector<ad::Tensor>&) {
    return tape.constant(ad::Mat::Zero(xs.rows(), 2));
  };
  return s;
}

PdeSpec fn_spec(double gamma_u, double gamma_v, double alpha, double beta, double ic_a,
                double ic_b, double ic_c, double ic_d) {
  if (!(gamma_u > 0.0) || !(gamma_v > 0.0))
    throw std::invalid_argument("fn_spec: diffusivities must be positive");
  PdeSpec s;
  s.key = "fn";
  s.n = 2;
  s.has_source = alpha != 0.0;
  s.params = {{"gu", gamma_u, false}, {"gv", gamma_v, false}, {"alpha", alpha, false},
              {"beta", beta, false},  {"ic_a", ic_a, false},  {"ic_b", ic_b, false},
              {"ic_c", ic_c, false},  {"ic_d", ic_d, false}};

  s.bc = [](double, double, double, double* out) { out[0] = out[1] = 0.0; };
  s.ic = [ic_a, ic_b, ic_c, ic_d](double x, double y, double* out) {
    const double damp = std::exp(-ic_c * (x * x + y * y));
    out[0] = std::sin(ic_b * kPi * x) * std::cos(ic_a * kPi * (y - ic_d)) * damp;
    out[1] = std::cos(ic_a * kPi * (x - ic_d)) * std::sin(ic_b * kPi * y) * damp;
  };
  s.source = [alpha](double, double, double, const std::vector<double>&, double* out) {
    out[0] = alpha;
    out[1] = 0.0;
  };
  s.spatial_residual = [gamma_u, gamma_v, alpha, beta](const double* u, const double*,
                                                       const double*, const double* lap, double,
                                                       double, double,
                                                       const std::vector<double>&, double* out) {
    out[0] = -gamma_u * lap[0] - u[0] + u[0] * u[0] * u[0] + u[1] - alpha;
    out[1] = -gamma_v * lap[1] - beta * (u[0] - u[1]);
  };
  s.spatial_residual_tape = [gamma_u, gamma_v, alpha, beta](
                                ad::Tape& tape, ad::Tensor u, ad::Tensor, ad::Tensor,
                                ad::Tensor lap, const ad::Mat&, const ad::Mat&, double,
                                const std::vector<ad::Tensor>&) {
    ad::Tensor uc = tape.slice_columns(u, 0, 1);
    ad::Tensor vc = tape.slice_columns(u, 1, 1);
    ad::Tensor cubic = tape.mul(tape.square(uc), uc);
    ad::Tensor ru = tape.add(tape.scale(tape.slice_columns(lap, 0, 1), -gamma_u),
                             tape.add(tape.sub(cubic, uc), tape.add_const(vc, -alpha)));
    ad::Tensor rv = tape.sub(tape.scale(tape.slice_columns(lap, 1, 1), -gamma_v),
                             tape.scale(tape.sub(uc, vc), beta));
    return tape.concat_columns(ru, rv);
  };
  s.source_tape = [alpha](ad::Tape& tape, const ad::Mat& xs, const ad::Mat&, double,
                          const std::vector<ad::Tensor>&) {
    ad::Mat f(xs.rows(), 2);
    f.col(0).setConstant(alpha);
    f.col(1).setZero();
    return tape.constant(std::move(f));
  };
  return s;
}

PdeSpec heat_inverse_spec(double k_init) {
  PdeSpec s;
  s.key = "heat_inverse";
  s.n = 1;
  s.has_source = true;
  s.params = {{"k", k_init, true}};

  s.source = [](double x, double y, double t, const std::vector<double>& lam, double* out) {
    const double k = lam.at(0);
    const double th = k * t * x + y;
    out[0] = -k * x * std::sin(th) + std::cos(th) * (k * k * t * t + 1.0);
  };
  s.analytic = [](double x, double y, double t, const std::vector<double>& lam, double* out) {
    out[0] = std::cos(lam.at(0) * t * x + y);
  };
  s.has_analytic = true;
  // Boundary data corresponds to the true parameter value k = 4.
  s.bc = [](double x, double y, double t, double* out) { out[0] = std::cos(4.0 * t * x + y); };
  s.ic = [](double x, double y, double* out) {
    (void)x;
    out[0] = std::cos(y);
  };
  s.spatial_residual = [src = s.source](const double*, const double*, const double*,
                                        const double* lap, double x, double y, double t,
                                        const std::vector<double>& lam, double* out) {
    double f;
    src(x, y, t, lam, &f);
    out[0] = -lap[0] - f;
  };
  s.source_tape = [](ad::Tape& tape, const ad::Mat& xs, const ad::Mat& ys, double t,
                     const std::vector<ad::Tensor>& lam) {
    // f = -k x sin(k t x + y) + cos(k t x + y) (k^2 t^2 + 1), with k live.
    ad::Tensor k = lam.at(0);
    ad::Tensor tx = tape.constant(t * xs);
    ad::Tensor x = tape.constant(xs);
    ad::Tensor y = tape.constant(ys);
    ad::Tensor theta = tape.add(tape.scalar_mul(k, tx), y);
    ad::Tensor term1 = tape.scalar_mul(tape.scale(k, -1.0), tape.mul(x, tape.sin(theta)));
    ad::Tensor k2t2p1 = tape.add_const(tape.square(tape.scale(k, t)), 1.0);
    ad::Tensor term2 = tape.scalar_mul(k2t2p1, tape.cos(theta));
    return tape.add(term1, term2);
  };
  s.spatial_residual_tape = [st = s.source_tape](ad::Tape& tape, ad::Tensor, ad::Tensor,
                                                 ad::Tensor, ad::Tensor lap, const ad::Mat& xs,
                                                 const ad::Mat& ys, double t,
                                                 const std::vector<ad::Tensor>& lam) {
    return tape.scale(tape.add(lap, st(tape, xs, ys, t, lam)), -1.0);
  };
  return s;
}

PdeSpec make_pde(const std::string& key, const std::map<std::string, double>& ov) {
  auto get = [&ov](const std::string& name, double fallback) {
    auto it = ov.find(name);
    return it == ov.end() ? fallback : it->second;
  };
  PdeSpec s;
  if (key == "heat") {
    s = heat_spec(get("a", 4.0), get("b", 2.0), get("c", 0.5), get("d", 0.3));
  } else if (key == "burgers") {
    s = burgers_spec(get("re", 80.0));
  } else if (key == "fn") {
    s = fn_spec(get("gu", 1e-3), get("gv", 1e-3), get("alpha", 0.0), get("beta", 1.0),
                get("ic_a", 1.0), get("ic_b", 1.0), get("ic_c", 6.0), get("ic_d", 0.0));
  } else if (key == "heat_inverse") {
    s = heat_inverse_spec(get("k", 1.0));
  } else {
    throw std::invalid_argument("unknown pde key '" + key +
                                "' (expected heat|burgers|fn|heat_inverse)");
  }
  for (const auto& [name, unused] : ov) {
    (void)unused;
    s.param(name);  // reject unknown override names
  }
  return s;
}

ad::Mat eval_residual_terms(const PdeSpec& spec, const ad::Mat& u, const ad::Mat& gx,
                            const ad::Mat& gy, const ad::Mat& lap, const std::vector<Vec2>& xy,
                            double t, const std::vector<double>& lam) {
  const Eigen::Index n = static_cast<Eigen::Index>(xy.size());
  if (u.rows() != n || gx.rows() != n || gy.rows() != n || lap.rows() != n ||
      u.cols() != spec.n || gx.cols() != spec.n || gy.cols() != spec.n || lap.cols() != spec.n)
    throw std::invalid_argument("eval_residual_terms: shape mismatch");

  ad::Mat out(n, spec.n);
  std::vector<double> uu(static_cast<size_t>(spec.n)), gxx(uu.size()), gyy(uu.size()),
      ll(uu.size()), res(uu.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < spec.n; ++c) {
      uu[static_cast<size_t>(c)] = u(i, c);
      gxx[static_cast<size_t>(c)] = gx(i, c);
      gyy[static_cast<size_t>(c)] = gy(i, c);
      ll[static_cast<size_t>(c)] = lap(i, c);
    }
    spec.spatial_residual(uu.data(), gxx.data(), gyy.data(), ll.data(),
                          xy[static_cast<size_t>(i)].x, xy[static_cast<size_t>(i)].y, t, lam,
                          res.data());
    for (int c = 0; c < spec.n; ++c) {
      if (!std::isfinite(res[static_cast<size_t>(c)]))
        throw std::runtime_error("eval_residual_terms: non-finite residual at node " +
                                 std::to_string(i));
      out(i, c) = res[static_cast<size_t>(c)];
    }
  }
  return out;
}

namespace {

ad::Mat eval_pointwise(int n, const std::vector<Vec2>& xy,
                       const std::function<void(double, double, double*)>& f) {
  ad::Mat out(static_cast<Eigen::Index>(xy.size()), n);
  std::vector<double> buf(static_cast<size_t>(n));
  for (size_t i = 0; i < xy.size(); ++i) {
    f(xy[i].x, xy[i].y, buf.data());
    for (int c = 0; c < n; ++c) out(static_cast<Eigen::Index>(i), c) = buf[static_cast<size_t>(c)];
  }
  return out;
}

}  // namespace

ad::Mat eval_ic(const PdeSpec& spec, const std::vector<Vec2>& xy) {
  return eval_pointwise(spec.n, xy,
                        [&](double x, double y, double* out) { spec.ic(x, y, out); });
}

ad::Mat eval_bc(const PdeSpec& spec, const std::vector<Vec2>& xy, double t) {
  return eval_pointwise(spec.n, xy,
                        [&](double x, double y, double* out) { spec.bc(x, y, t, out); });
}

ad::Mat eval_source(const PdeSpec& spec, const std::vector<Vec2>& xy, double t,
                    const std::vector<double>& lam) {
  return eval_pointwise(spec.n, xy,
                        [&](double x, double y, double* out) { spec.source(x, y, t, lam, out); });
}

ad::Mat eval_analytic(const PdeSpec& spec, const std::vector<Vec2>& xy, double t,
                      const std::vector<double>& lam) {
  if (!spec.has_analytic)
    throw std::runtime_error("pde '" + spec.key + "' has no analytic solution");
  return eval_pointwise(spec.n, xy, [&](double x, double y, double* out) {
    spec.analytic(x, y, t, lam, out);
  });
}

}  // namespace pignn
