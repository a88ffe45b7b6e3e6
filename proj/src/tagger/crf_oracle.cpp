#include "fgn/tagger/crf_oracle.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "fgn/errors.hpp"

namespace fgn::tagger::oracle {
namespace {

void for_each_sequence(std::size_t length, std::size_t labels,
                       const std::function<void(const std::vector<std::size_t>&)>& visit) {
  double total = std::pow(static_cast<double>(labels), static_cast<double>(length));
  if (total > static_cast<double>(kMaxSequences))
    throw ArgumentError("brute force over " + std::to_string(labels) + "^" + std::to_string(length) +
                        " sequences exceeds the enumeration guard");
  std::vector<std::size_t> y(length, 0);
  while (true) {
    visit(y);
    std::size_t pos = 0;
    while (pos < length && ++y[pos] == labels) y[pos++] = 0;
    if (pos == length) return;
  }
}

}  // namespace

double brute_force_score(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start,
                         const std::vector<std::size_t>& y) {
  const std::size_t L = start.size();
  double s = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    s += emissions.at({t, y[t]});
    s += t == 0 ? start[y[0]] : transitions[y[t - 1] * L + y[t]];
  }
  return s;
}

double brute_force_log_partition(const nn::Tensor& emissions, const nn::Tensor& transitions,
                                 const nn::Tensor& start) {
  // Two passes: find the max score, then sum exp(score - max).
  double best = -std::numeric_limits<double>::infinity();
  for_each_sequence(emissions.dim(0), start.size(), [&](const std::vector<std::size_t>& y) {
    best = std::max(best, brute_force_score(emissions, transitions, start, y));
  });
  double total = 0.0;
  for_each_sequence(emissions.dim(0), start.size(), [&](const std::vector<std::size_t>& y) {
    total += std::exp(brute_force_score(emissions, transitions, start, y) - best);
  });
  return best + std::log(total);
}

double brute_force_loglik(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start,
                          const std::vector<std::size_t>& labels) {
  return brute_force_score(emissions, transitions, start, labels) -
         brute_force_log_partition(emissions, transitions, start);
}

double brute_force_total_probability(const nn::Tensor& emissions, const nn::Tensor& transitions,
                                     const nn::Tensor& start) {
  const double log_z = brute_force_log_partition(emissions, transitions, start);
  double total = 0.0;
  for_each_sequence(emissions.dim(0), start.size(), [&](const std::vector<std::size_t>& y) {
    total += std::exp(brute_force_score(emissions, transitions, start, y) - log_z);
  });
  return total;
}

std::vector<std::size_t> brute_force_best(const nn::Tensor& emissions, const nn::Tensor& transitions,
                                          const nn::Tensor& start) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> arg;
  for_each_sequence(emissions.dim(0), start.size(), [&](const std::vector<std::size_t>& y) {
    double s = brute_force_score(emissions, transitions, start, y);
    if (arg.empty() || s > best) {
      best = s;
      arg = y;
    }
  });
  return arg;
}

}  // namespace fgn::tagger::oracle
