#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fgn/nn/grad_check.hpp"

namespace fgn::harness {

struct GradCheckCase {
  std::string module;
  std::string name;
  nn::GradCheckReport report;
  double seconds = 0.0;
};

// Module names accepted by run_gradcheck besides "all".
const std::vector<std::string>& gradcheck_modules();

// Finite-difference checks on fixed random inputs: every differentiable op
// ("nn"), each CGS-CNN variant ("cnn"), each fusion variant ("fusion"), the
// LSTM encoders and CRF ("tagger") and the full loss of a small model on a
// 3-character sentence ("model"). Throws ArgumentError for an unknown module.
std::vector<GradCheckCase> run_gradcheck(const std::string& module, const nn::GradCheckOptions& options = {});

bool all_passed(const std::vector<GradCheckCase>& cases);

// One line per case, then a summary line.
void write_gradcheck_report(std::ostream& out, const std::vector<GradCheckCase>& cases);

}  // namespace fgn::harness
