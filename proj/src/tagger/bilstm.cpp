#include "fgn/tagger/bilstm.hpp"

#include "fgn/errors.hpp"

namespace fgn::tagger {

std::string to_string(TaggerVariant v) {
  switch (v) {
    case TaggerVariant::bilstm:
      return "bilstm";
    case TaggerVariant::lstm:
      return "lstm";
    case TaggerVariant::none:
      return "none";
  }
  return "?";
}

TaggerVariant parse_tagger_variant(const std::string& name) {
  if (name == "bilstm") return TaggerVariant::bilstm;
  if (name == "lstm") return TaggerVariant::lstm;
  if (name == "none") return TaggerVariant::none;
  throw ValidationError("unknown tagger variant '" + name + "' (expected bilstm, lstm or none)");
}

namespace {

std::vector<nn::Var> run_direction(const std::vector<nn::Var>& inputs, const LstmVars& params, bool reverse) {
  const std::size_t H = params.bias.size() / 4;
  nn::Tape& tape = inputs.front().tape();
  nn::LstmState state{tape.constant(nn::Tensor({H})), tape.constant(nn::Tensor({H}))};
  std::vector<nn::Var> hidden(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::size_t t = reverse ? inputs.size() - 1 - k : k;
    state = nn::lstm_step(inputs[t], state, params.weight, params.bias);
    hidden[t] = state.h;
  }
  return hidden;
}

}  // namespace

std::vector<nn::Var> bilstm_encode(const std::vector<nn::Var>& inputs, TaggerVariant variant, const LstmVars& forward,
                                   const LstmVars& backward) {
  if (inputs.empty()) throw ArgumentError("bilstm_encode: empty input sequence");
  if (variant == TaggerVariant::none) return inputs;
  auto fwd = run_direction(inputs, forward, false);
  if (variant == TaggerVariant::lstm) return fwd;
  auto bwd = run_direction(inputs, backward, true);
  std::vector<nn::Var> out;
  out.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) out.push_back(nn::add(fwd[t], bwd[t]));
  return out;
}

BiLstm::BiLstm(std::size_t input_dim, std::size_t hidden_dim, TaggerVariant variant, std::mt19937_64& rng)
    : variant_(variant), input_dim_(input_dim), hidden_dim_(hidden_dim) {
  if (variant_ == TaggerVariant::none) return;
  forward_ = nn::LstmParams("tagger.lstm.forward", input_dim, hidden_dim, rng);
  if (variant_ == TaggerVariant::bilstm) backward_ = nn::LstmParams("tagger.lstm.backward", input_dim, hidden_dim, rng);
}

std::vector<nn::Var> BiLstm::encode(nn::Tape& tape, const std::vector<nn::Var>& inputs) {
  if (variant_ == TaggerVariant::none) return bilstm_encode(inputs, variant_, {}, {});
  LstmVars fwd{tape.parameter(forward_.weight), tape.parameter(forward_.bias)};
  LstmVars bwd = fwd;
  if (variant_ == TaggerVariant::bilstm) bwd = {tape.parameter(backward_.weight), tape.parameter(backward_.bias)};
  return bilstm_encode(inputs, variant_, fwd, bwd);
}

std::vector<nn::Parameter*> BiLstm::parameters() {
  switch (variant_) {
    case TaggerVariant::bilstm:
      return {&forward_.weight, &forward_.bias, &backward_.weight, &backward_.bias};
    case TaggerVariant::lstm:
      return {&forward_.weight, &forward_.bias};
    case TaggerVariant::none:
      break;
  }
  return {};
}

}  // namespace fgn::tagger
