#pragma once

#include <vector>

#include "fgn/nn/tensor.hpp"

// Exhaustive enumeration over all L^tau label sequences, used to check the
// dynamic programs in crf.hpp. Deliberately shares no code with them.
namespace fgn::tagger::oracle {

inline constexpr std::size_t kMaxSequences = 100000;

// Throws ArgumentError when L^tau exceeds kMaxSequences.
double brute_force_log_partition(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start);
double brute_force_loglik(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start,
                          const std::vector<std::size_t>& labels);
// Sum over all sequences of P(y | s); 1 up to rounding.
double brute_force_total_probability(const nn::Tensor& emissions, const nn::Tensor& transitions,
                                     const nn::Tensor& start);
std::vector<std::size_t> brute_force_best(const nn::Tensor& emissions, const nn::Tensor& transitions,
                                          const nn::Tensor& start);
double brute_force_score(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start,
                         const std::vector<std::size_t>& labels);

}  // namespace fgn::tagger::oracle
