#pragma once

#include <functional>

#include "hctagger/tensor.hpp"

namespace hct {

// Central finite-difference verification of analytic gradients.
// params[i].tensor->g must already hold the analytic gradient of loss_fn.
// Up to max_samples coordinates are checked (all of them when fewer exist).
// The relative error uses a 1e-4 denominator floor so coordinates whose true
// gradient is at the finite-difference noise floor do not dominate.
template <typename T>
double max_rel_grad_error(const ParamList<T>& params, const std::function<double()>& loss_fn,
                          int max_samples, double step, Rng& rng);

struct GradCheckReport {
  double max_rel_error = 0.0;
  int samples = 0;
  double tolerance = 1e-4;
  bool passed() const { return max_rel_error <= tolerance; }
};

// Tiny double-precision models exercised end to end.
GradCheckReport lm_grad_check(uint64_t seed);      // LM pretraining loss
GradCheckReport tagger_grad_check(uint64_t seed);  // hierarchical tagger loss incl. LM fine-tuning

}  // namespace hct
