#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fgn/nn/tape.hpp"

namespace fgn::nn {

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error, so coordinates whose true
  // gradient is ~0 are judged by absolute error instead. Central differences
  // carry roundoff of about 1e-16 |f| / epsilon, ~1e-10 for losses near 10.
  double abs_floor = 1e-5;
  // Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 7;
};

struct CoordinateError {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Coordinates whose +/- evaluation changed a max-type routing decision.
  std::size_t skipped_ties = 0;
  CoordinateError worst;
  bool passed = false;
};

// Builds the scalar loss on a fresh tape from the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

// Compares the tape gradient with central differences
// (f(θ+ε) − f(θ−ε)) / 2ε per coordinate. Throws ArgumentError when the builder
// does not return a single-element loss.
GradCheckReport grad_check(const LossBuilder& build, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options = {});

}  // namespace fgn::nn
