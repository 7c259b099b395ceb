#include "pignn/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pignn {

AdamState make_adam_state(const std::vector<ad::Mat*>& params) {
  AdamState st;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const auto* p : params) {
    st.m.push_back(ad::Mat::Zero(p->rows(), p->cols()));
    st.v.push_back(ad::Mat::Zero(p->rows(), p->cols()));
  }
  return st;
}

void adam_step(const std::vector<ad::Mat*>& params, const std::vector<ad::Mat>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (size_t i = 0; i < params.size(); ++i) {
    ad::Mat& p = *params[i];
    const ad::Mat& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw std::invalid_argument("adam_step: gradient shape mismatch at parameter " +
                                  std::to_string(i));
    if (!g.allFinite())
      throw std::runtime_error("adam_step: non-finite gradient at parameter " +
                               std::to_string(i));
    ad::Mat& m = state.m[i];
    ad::Mat& v = state.v[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
  }
}

}  // namespace pignn
