#ifndef PIGNN_STENCIL_HPP
#define PIGNN_STENCIL_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pignn/mesh.hpp"

namespace pignn {

/// Monomial test functions x^a y^b with 1 <= a+b <= degree (constant term
/// excluded), ordered by total degree, then by descending x-exponent.
struct TestBasis {
  int dim = 2;
  int degree = 0;
  std::vector<std::array<int, 2>> exponents;

  int count() const { return static_cast<int>(exponents.size()); }
};

TestBasis make_test_basis(int degree);

/// Minimal m >= 2 with (m+1)(m+2)/2 >= p+1 (binomial solvability rule).
int select_degree(int neighbor_count);

/// Per-node least-squares gradient reconstruction: pinv[i] is the d x p
/// pseudo-inverse applied to one-ring solution differences.
struct GradientStencil {
  std::vector<std::vector<int>> neighbors;
  std::vector<Eigen::MatrixXd> pinv;
};

GradientStencil build_gradient_stencils(const Graph& graph, const std::vector<Vec2>& coords,
                                        int threads = 1);

/// Gradient of a scalar field at every node; exact on affine fields.
std::vector<Vec2> apply_gradient(const GradientStencil& st, std::span<const double> field);

enum class WeightFit {
  /// Degree <= 2 monomial rows enforced exactly, higher rows least squares.
  /// Scale-invariant; coincides with the plain fit wherever that fit has a
  /// zero residual (e.g. the symmetric cross stencil).
  ConstrainedExact,
  /// Normal-equations least squares over all rows at the true scale.
  PlainLeastSquares,
};

struct LaplacianOptions {
  int degree_override = 0;  // 0: select_degree(p) per node
  WeightFit fit = WeightFit::ConstrainedExact;
  /// Extend deficient neighborhoods (boundary one-rings, degree-4 interior
  /// nodes) with nearest second-ring nodes until quadratic reproduction is
  /// feasible. Only meaningful for ConstrainedExact.
  bool allow_augment = true;
};

struct LaplacianStencil {
  std::vector<std::vector<int>> neighbors;  // may extend beyond the one-ring
  std::vector<std::vector<double>> weights;
  std::vector<int> degree;  // test-basis degree used per node
};

/// Weight vector for a single neighborhood given offsets x_j - x_i.
/// Throws on degenerate geometry or (ConstrainedExact) infeasible
/// quadratic-reproduction constraints.
std::vector<double> laplacian_weights(const std::vector<Vec2>& offsets, int degree,
                                      WeightFit fit);

LaplacianStencil build_laplacian_stencils(const Graph& graph, const std::vector<Vec2>& coords,
                                          const LaplacianOptions& opts = {}, int threads = 1);

std::vector<double> apply_laplacian(const LaplacianStencil& st, std::span<const double> field);

void write_stencil_dump(const LaplacianStencil& st, const std::string& path);

struct OrderTestResult {
  bool exact = false;   // all errors below 1e-13: stencil exact for this field
  double slope = 0.0;   // least-squares slope of log|error| vs log r
  std::vector<double> errors;
};

/// Empirical approximation order: weights are refitted at each scale from
/// the scaled neighborhood and the Laplacian error measured against the
/// supplied analytic value.
OrderTestResult order_test(const Vec2& center, const std::vector<Vec2>& points,
                           const std::function<double(double, double)>& u,
                           double lap_u_at_center, std::span<const double> scales,
                           const LaplacianOptions& opts = {});

struct EtaBoundednessResult {
  double max_norm = 0.0;
  std::vector<double> norms;  // ||r^2 w(r)||_2 per scale
};

EtaBoundednessResult eta_boundedness(const Vec2& center, const std::vector<Vec2>& points,
                                     std::span<const double> scales,
                                     const LaplacianOptions& opts = {});

/// Space-time least-squares interpolation between two consecutive rollout
/// steps; exact for fields affine in (x, y, t).
struct SpaceTimeSample {
  Eigen::VectorXd value;  // n components
  Eigen::VectorXd dudt;
  Eigen::MatrixXd grad;   // 2 x n
};

SpaceTimeSample interpolate_spacetime(const Eigen::MatrixXd& field_p,
                                      const Eigen::MatrixXd& field_next,
                                      const std::vector<Vec2>& coords, double t_p, double t_next,
                                      Vec2 query, double t_query, int l = 6);

/// The interpolation reduced to fixed weights over the bracketing fields:
/// value = sum_k w_p[k] * field_p(nodes[k]) + w_next[k] * field_next(nodes[k]).
struct InterpWeights {
  std::vector<int> nodes;
  std::vector<double> w_p;
  std::vector<double> w_next;
};

InterpWeights interpolation_weights(const std::vector<Vec2>& coords, double t_p, double t_next,
                                    Vec2 query, double t_query, int l = 6);

}  // namespace pignn

#endif
