#ifndef PIGNN_ADAM_HPP
#define PIGNN_ADAM_HPP

#include <vector>

#include "pignn/tape.hpp"

namespace pignn {

/// Adam moment accumulators, one pair per parameter, plus the shared step
/// counter. Moment shapes always match the parameter shapes.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<ad::Mat> m;
  std::vector<ad::Mat> v;
};

AdamState make_adam_state(const std::vector<ad::Mat*>& params);

/// One bias-corrected Adam update, in place. Throws on shape mismatch or
/// non-finite gradients (training divergence signal).
void adam_step(const std::vector<ad::Mat*>& params, const std::vector<ad::Mat>& grads,
               AdamState& state, double lr);

}  // namespace pignn

#endif
