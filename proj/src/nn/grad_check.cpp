#include "fgn/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fgn/errors.hpp"

namespace fgn::nn {
namespace {

struct Evaluation {
  double loss;
  std::uint64_t routing;
};

Evaluation evaluate(const LossBuilder& build) {
  Tape tape;
  Var loss = build(tape);
  if (loss.size() != 1)
    throw ArgumentError("grad_check requires a scalar loss, got shape " + shape_string(loss.shape()));
  return {loss.value()[0], tape.routing_signature()};
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& build, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  std::uint64_t base_routing;
  {
    Tape tape;
    Var loss = build(tape);
    if (loss.size() != 1)
      throw ArgumentError("grad_check requires a scalar loss, got shape " + shape_string(loss.shape()));
    tape.backward(loss);
    base_routing = tape.routing_signature();
  }

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (Parameter* p : params) {
    std::vector<std::size_t> coords(p->value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t idx : coords) {
      double& theta = p->value[idx];
      const double saved = theta;
      theta = saved + options.epsilon;
      Evaluation plus = evaluate(build);
      theta = saved - options.epsilon;
      Evaluation minus = evaluate(build);
      theta = saved;
      if (plus.routing != base_routing || minus.routing != base_routing) {
        ++report.skipped_ties;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * options.epsilon);
      const double analytic = p->grad[idx];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.abs_floor});
      double rel = std::abs(analytic - numeric) / denom;
      if (!std::isfinite(rel)) rel = std::numeric_limits<double>::infinity();
      ++report.checked;
      if (report.checked == 1 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = {p->name, idx, analytic, numeric, rel};
      }
    }
  }
  report.passed = report.checked > 0 && report.max_rel_error < options.tolerance;
  for (Parameter* p : params) p->zero_grad();
  return report;
}

}  // namespace fgn::nn
