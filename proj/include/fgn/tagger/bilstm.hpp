#pragma once

#include <random>
#include <string>
#include <vector>

#include "fgn/nn/ops.hpp"

namespace fgn::tagger {

enum class TaggerVariant {
  bilstm,  // h_t = forward_t + backward_t (summed, not concatenated)
  lstm,    // forward direction only
  none,    // h = x, CRF directly on the character representation
};

std::string to_string(TaggerVariant v);
TaggerVariant parse_tagger_variant(const std::string& name);

struct LstmVars {
  nn::Var weight;
  nn::Var bias;
};

// Output dimension is the hidden size for bilstm/lstm and the input size for none.
std::vector<nn::Var> bilstm_encode(const std::vector<nn::Var>& inputs, TaggerVariant variant, const LstmVars& forward,
                                   const LstmVars& backward);

// Parameters of both directions; `backward` is unused for TaggerVariant::lstm.
class BiLstm {
 public:
  BiLstm(std::size_t input_dim, std::size_t hidden_dim, TaggerVariant variant, std::mt19937_64& rng);

  std::vector<nn::Var> encode(nn::Tape& tape, const std::vector<nn::Var>& inputs);
  std::size_t output_dim() const { return variant_ == TaggerVariant::none ? input_dim_ : hidden_dim_; }
  std::vector<nn::Parameter*> parameters();
  TaggerVariant variant() const { return variant_; }

 private:
  TaggerVariant variant_;
  std::size_t input_dim_;
  std::size_t hidden_dim_;
  nn::LstmParams forward_;
  nn::LstmParams backward_;
};

}  // namespace fgn::tagger
