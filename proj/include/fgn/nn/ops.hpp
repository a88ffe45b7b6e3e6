#pragma once

#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "fgn/nn/tape.hpp"

namespace fgn::nn {

enum class PoolMode { max, avg };

// Convolutions are cross-correlations with zero "same" padding (kernel extent
// must be odd on every axis), so spatial and temporal extents are preserved.

// input [C_in, T, H, W], kernels [C_out, C_in, kt, kh, kw], bias [C_out] -> [C_out, T, H, W]
Var conv3d(const Var& input, const Var& kernels, std::optional<Var> bias = std::nullopt);
// input [C_in, H, W], kernels [C_out, C_in, k, k], bias [C_out] -> [C_out, H, W]
Var conv2d(const Var& input, const Var& kernels, std::optional<Var> bias = std::nullopt);

// Applies the same [C_out, C_in, k, k] kernels to every frame of [C_in, T, H, W]
// independently (no mixing along T) -> [C_out, T, H, W].
Var conv2d_frames(const Var& input, const Var& kernels, std::optional<Var> bias = std::nullopt);

// Pools the last two axes: [C, H, W] -> [C, (H-w)/t+1, (W-w)/t+1], and any
// leading axes are carried along ([C, T, H, W] pools each frame). Backward
// goes to the first maximal element in row-major window order.
Var maxpool2d(const Var& input, std::size_t window, std::size_t stride);
// Flat view of input; output length (D-w)/t+1.
Var pool1d(const Var& input, std::size_t window, std::size_t stride, PoolMode mode);

// y = W x + b; W [D_out, D_in], x [D_in], b [D_out].
Var affine(const Var& x, const Var& weight, const Var& bias);
Var matvec(const Var& weight, const Var& x);

Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var softmax(const Var& x);

// Inverted dropout: survivors are scaled by 1/(1-rate). Identity when not
// training or rate == 0. Throws ArgumentError unless 0 <= rate < 1.
Var dropout(const Var& x, double rate, bool training, std::mt19937_64& rng);

Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
Var sum(const Var& x);
Var dot(const Var& a, const Var& b);
// Outer product flattened row-major: out[i*|b| + j] = a[i] * b[j].
Var outer(const Var& a, const Var& b);

Var reshape(const Var& x, Shape shape);
Var concat(const std::vector<Var>& parts);
Var slice(const Var& x, std::size_t offset, std::size_t length);
// Row `index` of a rank-2 table.
Var row(const Var& table, std::size_t index);
// Stacks equal-length vectors into [n, D].
Var stack(const std::vector<Var>& rows);
// Frame t of a [C, T, H, W] tensor -> [C, H, W].
Var frame(const Var& x, std::size_t t);

// sum_i weights[i] * items[i]
Var weighted_sum(const Var& weights, const std::vector<Var>& items);
Var mean_of(const std::vector<Var>& items);
// Elementwise max; ties resolve to the earliest item.
Var max_of(const std::vector<Var>& items);

struct LstmParams {
  // Gate rows are stacked as [input; forget; candidate; output], each hidden rows.
  Parameter weight;  // [4H, D + H]
  Parameter bias;    // [4H]

  LstmParams() = default;
  LstmParams(const std::string& name, std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng);
  std::size_t hidden_dim() const { return bias.value.size() / 4; }
  std::size_t input_dim() const { return weight.value.dim(1) - hidden_dim(); }
};

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_step(const Var& x, const LstmState& prev, const Var& weight, const Var& bias);

}  // namespace fgn::nn
