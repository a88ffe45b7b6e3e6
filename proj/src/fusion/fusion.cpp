#include "fgn/fusion/fusion.hpp"

#include <sstream>

#include "fgn/errors.hpp"

namespace fgn::fusion {

namespace {

std::string slice_count_text(std::size_t dim, std::size_t window, std::size_t stride) {
  if (window > dim) return "none (window " + std::to_string(window) + " > size " + std::to_string(dim) + ")";
  std::ostringstream os;
  const std::size_t span = dim - window;
  if (span % stride == 0)
    os << span / stride + 1;
  else
    os << static_cast<double>(span) / static_cast<double>(stride) + 1.0 << " (non-integral)";
  return os.str();
}

}  // namespace

std::size_t validate_window(const WindowSpec& s) {
  if (s.char_dim == 0 || s.char_window == 0 || s.char_stride == 0 || s.glyph_dim == 0 || s.glyph_window == 0 ||
      s.glyph_stride == 0)
    throw ValidationError("window fields must be positive");
  const bool char_ok = s.char_window <= s.char_dim && (s.char_dim - s.char_window) % s.char_stride == 0;
  const bool glyph_ok = s.glyph_window <= s.glyph_dim && (s.glyph_dim - s.glyph_window) % s.glyph_stride == 0;
  if (char_ok && glyph_ok) {
    const std::size_t n_char = (s.char_dim - s.char_window) / s.char_stride + 1;
    const std::size_t n_glyph = (s.glyph_dim - s.glyph_window) / s.glyph_stride + 1;
    if (n_char == n_glyph) return n_char;
  }
  throw ValidationError("sliding windows disagree: character stream yields " +
                        slice_count_text(s.char_dim, s.char_window, s.char_stride) + " slices vs glyph stream " +
                        slice_count_text(s.glyph_dim, s.glyph_window, s.glyph_stride));
}

std::vector<nn::Var> extract_slices(const nn::Var& vec, std::size_t window, std::size_t stride, std::size_t count) {
  if (count == 0 || window == 0 || (count - 1) * stride + window > vec.size())
    throw ShapeError("extract_slices: " + std::to_string(count) + " windows of " + std::to_string(window) +
                     " with stride " + std::to_string(stride) + " exceed size " + std::to_string(vec.size()));
  std::vector<nn::Var> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(nn::slice(vec, i * stride, window));
  return out;
}

nn::Var fuse_pair(const nn::Var& char_slice, const nn::Var& glyph_slice) { return nn::outer(char_slice, glyph_slice); }

FusionParams::FusionParams(std::size_t d, std::mt19937_64& rng)
    : weight("fusion.slice.weight", nn::Tensor({d, d})),
      bias("fusion.slice.bias", nn::Tensor({d})),
      query("fusion.slice.query", nn::Tensor({d})) {
  nn::glorot_uniform(weight.value, d, d, rng);
  nn::glorot_uniform(query.value, d, 1, rng);
}

SliceAttention slice_attention(const std::vector<nn::Var>& slices, const nn::Var& weight, const nn::Var& bias,
                               const nn::Var& query) {
  if (slices.empty()) throw ShapeError("slice_attention: no slices");
  const std::size_t d = slices.front().size();
  if (weight.shape() != nn::Shape{d, d} || bias.size() != d || query.size() != d)
    throw ShapeError("slice_attention: parameters do not match slice size " + std::to_string(d));
  nn::Var gate = nn::sigmoid(query);
  std::vector<nn::Var> scores;
  scores.reserve(slices.size());
  for (const nn::Var& m : slices) scores.push_back(nn::dot(gate, nn::sigmoid(nn::affine(m, weight, bias))));
  nn::Var weights = nn::softmax(nn::concat(scores));
  return {nn::weighted_sum(weights, slices), weights};
}

std::string to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::slice_attention:
      return "slice_attention";
    case FusionVariant::avg_pool:
      return "avg_pool";
    case FusionVariant::max_pool:
      return "max_pool";
    case FusionVariant::concat:
      return "concat";
  }
  return "?";
}

FusionVariant parse_fusion_variant(const std::string& name) {
  if (name == "slice_attention") return FusionVariant::slice_attention;
  if (name == "avg_pool") return FusionVariant::avg_pool;
  if (name == "max_pool") return FusionVariant::max_pool;
  if (name == "concat") return FusionVariant::concat;
  throw ValidationError("unknown fusion variant '" + name + "' (expected slice_attention, avg_pool, max_pool or concat)");
}

std::string to_string(FusionOutput v) { return v == FusionOutput::augment ? "augment" : "fused_only"; }

FusionOutput parse_fusion_output(const std::string& name) {
  if (name == "augment") return FusionOutput::augment;
  if (name == "fused_only") return FusionOutput::fused_only;
  throw ValidationError("unknown fusion output '" + name + "' (expected augment or fused_only)");
}

Fusion::Fusion(const WindowSpec& spec, FusionVariant variant, FusionOutput output, std::mt19937_64& rng)
    : spec_(spec), variant_(variant), output_(output) {
  if (variant_ == FusionVariant::concat) return;
  slice_count_ = validate_window(spec_);
  if (variant_ == FusionVariant::slice_attention) params_ = FusionParams(spec_.slice_dim(), rng);
}

std::size_t Fusion::output_dim() const {
  if (variant_ == FusionVariant::concat) return spec_.char_dim + spec_.glyph_dim;
  if (output_ == FusionOutput::fused_only) return spec_.slice_dim();
  return spec_.char_dim + spec_.glyph_dim + spec_.slice_dim();
}

nn::Var Fusion::fuse_character(nn::Tape& tape, const nn::Var& char_vec, const nn::Var& glyph_vec) {
  if (char_vec.size() != spec_.char_dim || glyph_vec.size() != spec_.glyph_dim)
    throw ShapeError("fuse_character: expected vectors of size " + std::to_string(spec_.char_dim) + " and " +
                     std::to_string(spec_.glyph_dim) + ", got " + std::to_string(char_vec.size()) + " and " +
                     std::to_string(glyph_vec.size()));
  if (variant_ == FusionVariant::concat) return nn::concat({char_vec, glyph_vec});

  auto char_slices = extract_slices(char_vec, spec_.char_window, spec_.char_stride, slice_count_);
  auto glyph_slices = extract_slices(glyph_vec, spec_.glyph_window, spec_.glyph_stride, slice_count_);
  std::vector<nn::Var> pairs;
  pairs.reserve(slice_count_);
  for (std::size_t i = 0; i < slice_count_; ++i) pairs.push_back(fuse_pair(char_slices[i], glyph_slices[i]));

  nn::Var fused;
  switch (variant_) {
    case FusionVariant::slice_attention:
      fused = slice_attention(pairs, tape.parameter(params_.weight), tape.parameter(params_.bias),
                              tape.parameter(params_.query))
                  .fused;
      break;
    case FusionVariant::avg_pool:
      fused = nn::mean_of(pairs);
      break;
    case FusionVariant::max_pool:
      fused = nn::max_of(pairs);
      break;
    case FusionVariant::concat:
      break;
  }
  if (output_ == FusionOutput::fused_only) return fused;
  return nn::concat({char_vec, glyph_vec, fused});
}

std::vector<nn::Parameter*> Fusion::parameters() {
  if (variant_ == FusionVariant::slice_attention) return params_.parameters();
  return {};
}

}  // namespace fgn::fusion
