#pragma once

#include <random>
#include <string>
#include <vector>

#include "fgn/nn/ops.hpp"

namespace fgn::fusion {

// Paired sliding windows over the character vector (size char_dim) and the
// glyph vector (size glyph_dim). Both streams must produce the same number of
// slices: (char_dim - char_window) / char_stride == (glyph_dim - glyph_window) / glyph_stride,
// with both divisions exact.
struct WindowSpec {
  std::size_t char_dim = 32;
  std::size_t char_window = 8;
  std::size_t char_stride = 4;
  std::size_t glyph_dim = 64;
  std::size_t glyph_window = 16;
  std::size_t glyph_stride = 8;

  std::size_t slice_dim() const { return char_window * glyph_window; }
};

// Number of slice pairs n, or ValidationError reporting both slice counts.
std::size_t validate_window(const WindowSpec& spec);

// Windows of size k at offsets 0, s, 2s, ... (n of them).
std::vector<nn::Var> extract_slices(const nn::Var& vec, std::size_t window, std::size_t stride, std::size_t count);

// Row-major flattened outer product of a character slice and a glyph slice.
nn::Var fuse_pair(const nn::Var& char_slice, const nn::Var& glyph_slice);

struct FusionParams {
  nn::Parameter weight;  // [D, D], D = char_window * glyph_window
  nn::Parameter bias;    // [D]
  nn::Parameter query;   // [D]

  FusionParams() = default;
  FusionParams(std::size_t slice_dim, std::mt19937_64& rng);
  std::vector<nn::Parameter*> parameters() { return {&weight, &bias, &query}; }
};

struct SliceAttention {
  nn::Var fused;    // sum_i a_i m'_i
  nn::Var weights;  // a, softmax over slice scores
};

// score_i = sigmoid(query) . sigmoid(weight m'_i + bias); a = softmax(score).
SliceAttention slice_attention(const std::vector<nn::Var>& slices, const nn::Var& weight, const nn::Var& bias,
                               const nn::Var& query);

enum class FusionVariant { slice_attention, avg_pool, max_pool, concat };
// augment: x = [c_v ; g_v ; f_v]. fused_only: x = f_v.
enum class FusionOutput { augment, fused_only };

std::string to_string(FusionVariant v);
FusionVariant parse_fusion_variant(const std::string& name);
std::string to_string(FusionOutput v);
FusionOutput parse_fusion_output(const std::string& name);

class Fusion {
 public:
  Fusion(const WindowSpec& spec, FusionVariant variant, FusionOutput output, std::mt19937_64& rng);

  // Per-character representation fed to the tagger.
  nn::Var fuse_character(nn::Tape& tape, const nn::Var& char_vec, const nn::Var& glyph_vec);
  std::size_t output_dim() const;
  std::size_t slice_count() const { return slice_count_; }

  std::vector<nn::Parameter*> parameters();
  FusionParams& params() { return params_; }
  const WindowSpec& spec() const { return spec_; }
  FusionVariant variant() const { return variant_; }

 private:
  WindowSpec spec_;
  FusionVariant variant_;
  FusionOutput output_;
  std::size_t slice_count_ = 0;
  FusionParams params_;
};

}  // namespace fgn::fusion
