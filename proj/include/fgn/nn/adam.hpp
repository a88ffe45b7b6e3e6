#pragma once

#include <vector>

#include "fgn/nn/tensor.hpp"

namespace fgn::nn {

struct AdamOptions {
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Parameters with trainable == false are never
// moved; every gradient is zeroed after a step.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options = {});

  void step();
  void zero_grad();

  std::size_t step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
  AdamOptions options_;
  std::size_t step_ = 0;
};

}  // namespace fgn::nn
