#pragma once

#include <random>
#include <span>
#include <vector>

#include "fgn/nn/tape.hpp"
#include "fgn/tagger/labels.hpp"

namespace fgn::tagger {

// Linear-chain CRF over per-position emission scores [tau, L]. The score of a
// label sequence y is
//   start[y_0] + sum_t emissions[t][y_t] + sum_{t>0} transitions[y_{t-1}][y_t].
// All routines below work on that decomposition; CrfParams produces the
// emissions from hidden states.

double sequence_score(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start,
                      std::span<const std::size_t> labels);
// log Z by the forward recursion in log space (max-subtracted log-sum-exp).
double log_partition(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start);
// log P(labels | emissions). Throws ArgumentError on length mismatch or a label
// index >= L.
double crf_log_likelihood(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start,
                          std::span<const std::size_t> labels);
// Highest-scoring sequence; ties resolve to the lowest label index.
std::vector<std::size_t> viterbi_decode(const nn::Tensor& emissions, const nn::Tensor& transitions,
                                        const nn::Tensor& start);

// Differentiable log P(labels | emissions); gradients come from the
// forward-backward marginals.
nn::Var crf_log_likelihood(const nn::Var& emissions, const nn::Var& transitions, const nn::Var& start,
                           std::span<const std::size_t> labels);

struct CrfParams {
  nn::Parameter emission;     // [L, d_h]
  nn::Parameter transitions;  // [L, L], from row to column
  nn::Parameter start;        // [L]

  CrfParams() = default;
  CrfParams(std::size_t labels, std::size_t hidden_dim, std::mt19937_64& rng);
  std::vector<nn::Parameter*> parameters() { return {&emission, &transitions, &start}; }
  std::size_t label_count() const { return start.value.size(); }
};

// Additive -inf masks for BMES-invalid bigrams and first labels.
struct TransitionMask {
  nn::Tensor transitions;
  nn::Tensor start;
};
TransitionMask bmes_mask(const LabelScheme& scheme);

// [tau, L] emission matrix: row t = emission_weight * h_t.
nn::Var emission_scores(const std::vector<nn::Var>& hidden, const nn::Var& emission_weight);

struct SentenceScores {
  nn::Var emissions;
  std::vector<std::size_t> labels;
};

// -sum_i log P(y_i | s_i) over the batch. Throws ArgumentError for an empty batch.
nn::Var nll_loss(const std::vector<SentenceScores>& batch, const nn::Var& transitions, const nn::Var& start);

}  // namespace fgn::tagger
