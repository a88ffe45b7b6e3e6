#include "fgn/tagger/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fgn/errors.hpp"
#include "fgn/nn/ops.hpp"

namespace fgn::tagger {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Dims {
  std::size_t length;
  std::size_t labels;
};

Dims check_dims(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start) {
  if (emissions.rank() != 2) throw ShapeError("CRF emissions must be [tau, L], got " + nn::shape_string(emissions.shape()));
  const std::size_t L = emissions.dim(1);
  if (transitions.shape() != nn::Shape{L, L} || start.size() != L)
    throw ShapeError("CRF transitions/start do not match " + std::to_string(L) + " labels");
  return {emissions.dim(0), L};
}

void check_labels(const Dims& d, std::span<const std::size_t> labels) {
  if (labels.size() != d.length)
    throw ArgumentError("label sequence has length " + std::to_string(labels.size()) + ", expected " +
                        std::to_string(d.length));
  for (std::size_t y : labels)
    if (y >= d.labels) throw ArgumentError("label index " + std::to_string(y) + " out of range");
}

double log_sum_exp(const double* v, std::size_t n) {
  double m = *std::max_element(v, v + n);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

// alpha[t][j]: log-sum of all prefixes ending in j at t.
std::vector<double> forward_table(const nn::Tensor& em, const nn::Tensor& tr, const nn::Tensor& st, const Dims& d) {
  const std::size_t T = d.length, L = d.labels;
  std::vector<double> alpha(T * L);
  for (std::size_t j = 0; j < L; ++j) alpha[j] = st[j] + em[j];
  std::vector<double> buf(L);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t i = 0; i < L; ++i) buf[i] = alpha[(t - 1) * L + i] + tr[i * L + j];
      alpha[t * L + j] = em[t * L + j] + log_sum_exp(buf.data(), L);
    }
  }
  return alpha;
}

// beta[t][i]: log-sum of all suffixes after t given label i at t.
std::vector<double> backward_table(const nn::Tensor& em, const nn::Tensor& tr, const Dims& d) {
  const std::size_t T = d.length, L = d.labels;
  std::vector<double> beta(T * L, 0.0);
  std::vector<double> buf(L);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) buf[j] = tr[i * L + j] + em[(t + 1) * L + j] + beta[(t + 1) * L + j];
      beta[t * L + i] = log_sum_exp(buf.data(), L);
    }
  }
  return beta;
}

}  // namespace

double sequence_score(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start,
                      std::span<const std::size_t> labels) {
  const Dims d = check_dims(emissions, transitions, start);
  check_labels(d, labels);
  if (d.length == 0) return 0.0;
  double s = start[labels[0]];
  for (std::size_t t = 0; t < d.length; ++t) {
    s += emissions[t * d.labels + labels[t]];
    if (t > 0) s += transitions[labels[t - 1] * d.labels + labels[t]];
  }
  return s;
}

double log_partition(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start) {
  const Dims d = check_dims(emissions, transitions, start);
  auto alpha = forward_table(emissions, transitions, start, d);
  return log_sum_exp(alpha.data() + (d.length - 1) * d.labels, d.labels);
}

double crf_log_likelihood(const nn::Tensor& emissions, const nn::Tensor& transitions, const nn::Tensor& start,
                          std::span<const std::size_t> labels) {
  return sequence_score(emissions, transitions, start, labels) - log_partition(emissions, transitions, start);
}

std::vector<std::size_t> viterbi_decode(const nn::Tensor& emissions, const nn::Tensor& transitions,
                                        const nn::Tensor& start) {
  const Dims d = check_dims(emissions, transitions, start);
  const std::size_t T = d.length, L = d.labels;
  std::vector<double> delta(L);
  std::vector<double> next(L);
  std::vector<std::size_t> back(T * L, 0);
  for (std::size_t j = 0; j < L; ++j) delta[j] = start[j] + emissions[j];
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      std::size_t best = 0;
      double best_score = delta[0] + transitions[j];
      for (std::size_t i = 1; i < L; ++i) {
        const double s = delta[i] + transitions[i * L + j];
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      next[j] = best_score + emissions[t * L + j];
      back[t * L + j] = best;
    }
    std::swap(delta, next);
  }
  std::vector<std::size_t> path(T);
  path[T - 1] = static_cast<std::size_t>(std::max_element(delta.begin(), delta.end()) - delta.begin());
  for (std::size_t t = T - 1; t > 0; --t) path[t - 1] = back[t * L + path[t]];
  return path;
}

nn::Var crf_log_likelihood(const nn::Var& emissions, const nn::Var& transitions, const nn::Var& start,
                           std::span<const std::size_t> labels) {
  const Dims d = check_dims(emissions.value(), transitions.value(), start.value());
  check_labels(d, labels);
  std::vector<std::size_t> gold(labels.begin(), labels.end());
  const double ll = crf_log_likelihood(emissions.value(), transitions.value(), start.value(), gold);
  return emissions.tape().record(
      nn::Tensor::scalar(ll), {emissions, transitions, start},
      [emissions, transitions, start, gold, d](nn::Tape& tape, const nn::Tensor& go) {
        const nn::Tensor& em = emissions.value();
        const nn::Tensor& tr = transitions.value();
        const nn::Tensor& st = start.value();
        const std::size_t T = d.length, L = d.labels;
        auto alpha = forward_table(em, tr, st, d);
        auto beta = backward_table(em, tr, d);
        const double log_z = log_sum_exp(alpha.data() + (T - 1) * L, L);
        const double g = go[0];
        if (emissions.requires_grad()) {
          auto ge = tape.grad(emissions).data();
          for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t j = 0; j < L; ++j)
              ge[t * L + j] -= g * std::exp(alpha[t * L + j] + beta[t * L + j] - log_z);
            ge[t * L + gold[t]] += g;
          }
        }
        if (start.requires_grad()) {
          auto gs = tape.grad(start).data();
          for (std::size_t j = 0; j < L; ++j) gs[j] -= g * std::exp(alpha[j] + beta[j] - log_z);
          gs[gold[0]] += g;
        }
        if (transitions.requires_grad()) {
          auto gt = tape.grad(transitions).data();
          for (std::size_t t = 1; t < T; ++t) {
            for (std::size_t i = 0; i < L; ++i)
              for (std::size_t j = 0; j < L; ++j)
                gt[i * L + j] -=
                    g * std::exp(alpha[(t - 1) * L + i] + tr[i * L + j] + em[t * L + j] + beta[t * L + j] - log_z);
            gt[gold[t - 1] * L + gold[t]] += g;
          }
        }
      });
}

CrfParams::CrfParams(std::size_t labels, std::size_t hidden_dim, std::mt19937_64& rng)
    : emission("crf.emission", nn::Tensor({labels, hidden_dim})),
      transitions("crf.transitions", nn::Tensor({labels, labels})),
      start("crf.start", nn::Tensor({labels})) {
  nn::glorot_uniform(emission.value, hidden_dim, labels, rng);
}

TransitionMask bmes_mask(const LabelScheme& scheme) {
  const std::size_t L = scheme.size();
  TransitionMask mask{nn::Tensor({L, L}), nn::Tensor({L})};
  for (std::size_t i = 0; i < L; ++i) {
    if (!scheme.valid_start(i)) mask.start[i] = kNegInf;
    for (std::size_t j = 0; j < L; ++j)
      if (!scheme.valid_transition(i, j)) mask.transitions[i * L + j] = kNegInf;
  }
  return mask;
}

nn::Var emission_scores(const std::vector<nn::Var>& hidden, const nn::Var& emission_weight) {
  if (hidden.empty()) throw ArgumentError("emission_scores: empty hidden sequence");
  std::vector<nn::Var> rows;
  rows.reserve(hidden.size());
  for (const nn::Var& h : hidden) rows.push_back(nn::matvec(emission_weight, h));
  return nn::stack(rows);
}

nn::Var nll_loss(const std::vector<SentenceScores>& batch, const nn::Var& transitions, const nn::Var& start) {
  if (batch.empty()) throw ArgumentError("nll_loss: empty batch");
  std::vector<nn::Var> terms;
  terms.reserve(batch.size());
  for (const auto& s : batch) terms.push_back(crf_log_likelihood(s.emissions, transitions, start, s.labels));
  return nn::scale(nn::sum(nn::concat(terms)), -1.0);
}

}  // namespace fgn::tagger
