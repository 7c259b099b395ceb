#ifndef PIGNN_PDE_HPP
#define PIGNN_PDE_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pignn/mesh.hpp"
#include "pignn/tape.hpp"

namespace pignn {

struct PdeParam {
  std::string name;
  double value = 0.0;
  bool trainable = false;
};

/// A concrete PDE problem: component count, parameters, source/BC/IC
/// callbacks, the spatial residual functional F[...] - f (the time term is
/// supplied by the loss), and an optional analytic solution.
///
/// Pointwise callbacks receive the current parameter values `lam` in
/// `params` order so trainable parameters take effect. The `_tape`
/// counterparts build the same expressions on a tape, with `lam` tensors
/// aligned the same way; they are used wherever gradients must flow.
struct PdeSpec {
  std::string key;
  int n = 1;
  bool has_source = false;
  std::vector<PdeParam> params;

  std::function<void(double x, double y, double t, const std::vector<double>& lam, double* out)>
      source;
  std::function<void(double x, double y, double t, double* out)> bc;
  std::function<void(double x, double y, double* out)> ic;
  bool has_analytic = false;
  std::function<void(double x, double y, double t, const std::vector<double>& lam, double* out)>
      analytic;

  std::function<void(const double* u, const double* gx, const double* gy, const double* lap,
                     double x, double y, double t, const std::vector<double>& lam, double* out)>
      spatial_residual;

  std::function<ad::Tensor(ad::Tape&, ad::Tensor u, ad::Tensor gx, ad::Tensor gy, ad::Tensor lap,
                           const ad::Mat& xs, const ad::Mat& ys, double t,
                           const std::vector<ad::Tensor>& lam)>
      spatial_residual_tape;
  std::function<ad::Tensor(ad::Tape&, const ad::Mat& xs, const ad::Mat& ys, double t,
                           const std::vector<ad::Tensor>& lam)>
      source_tape;

  double param(const std::string& name) const;
  std::vector<double> param_values() const;
  bool any_trainable() const;
};

/// Heat equation with manufactured solution u = a sin(b pi (x-d) t + c y^2).
PdeSpec heat_spec(double a = 4.0, double b = 2.0, double c = 0.5, double d = 0.3);

/// Coupled 2D Burgers system with the traveling-front analytic solution.
PdeSpec burgers_spec(double re = 80.0);

/// FitzHugh-Nagumo reaction-diffusion system; no analytic solution.
PdeSpec fn_spec(double gamma_u = 1e-3, double gamma_v = 1e-3, double alpha = 0.0,
                double beta = 1.0, double ic_a = 1.0, double ic_b = 1.0, double ic_c = 6.0,
                double ic_d = 0.0);

/// Heat problem with unknown diffusion-source parameter k (trainable);
/// boundary data corresponds to the true value k = 4.
PdeSpec heat_inverse_spec(double k_init = 1.0);

/// Factory by key ("heat", "burgers", "fn", "heat_inverse") with named
/// parameter overrides.
PdeSpec make_pde(const std::string& key, const std::map<std::string, double>& overrides = {});

/// Spatial residual terms (F combined with the source) for a batch of nodes.
/// All matrices are (N x n). Throws on non-finite output.
ad::Mat eval_residual_terms(const PdeSpec& spec, const ad::Mat& u, const ad::Mat& gx,
                            const ad::Mat& gy, const ad::Mat& lap, const std::vector<Vec2>& xy,
                            double t, const std::vector<double>& lam);

ad::Mat eval_ic(const PdeSpec& spec, const std::vector<Vec2>& xy);
ad::Mat eval_bc(const PdeSpec& spec, const std::vector<Vec2>& xy, double t);
ad::Mat eval_source(const PdeSpec& spec, const std::vector<Vec2>& xy, double t,
                    const std::vector<double>& lam);
ad::Mat eval_analytic(const PdeSpec& spec, const std::vector<Vec2>& xy, double t,
                      const std::vector<double>& lam);

}  // namespace pignn

#endif
