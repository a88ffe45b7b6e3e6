#include "fgn/cgs/cgs_cnn.hpp"

#include "fgn/errors.hpp"

namespace fgn::cgs {

namespace {
constexpr std::size_t kKernel = 3;
constexpr std::size_t kGroupPool = 2;
}  // namespace

std::string to_string(CnnVariant v) {
  switch (v) {
    case CnnVariant::cgs:
      return "cgs";
    case CnnVariant::cgs_2d:
      return "cgs_2d";
    case CnnVariant::cgs_avg:
      return "cgs_avg";
  }
  return "?";
}

CnnVariant parse_cnn_variant(const std::string& name) {
  if (name == "cgs") return CnnVariant::cgs;
  if (name == "cgs_2d") return CnnVariant::cgs_2d;
  if (name == "cgs_avg") return CnnVariant::cgs_avg;
  throw ValidationError("unknown cnn variant '" + name + "' (expected cgs, cgs_2d or cgs_avg)");
}

void CgsCnnConfig::validate() const {
  if (pyramid_channels.empty()) throw ValidationError("cnn pyramid needs at least one group");
  if (conv3d_channels == 0) throw ValidationError("cnn conv3d_channels must be positive");
  std::size_t extent = glyph::kGlyphHeight;
  for (std::size_t c : pyramid_channels) {
    if (c == 0) throw ValidationError("cnn pyramid channels must be positive");
    if (extent < kGroupPool) throw ValidationError("cnn pyramid pools below 2x2");
    extent = (extent - kGroupPool) / kGroupPool + 1;
  }
  if (extent != 3)
    throw ValidationError("cnn pyramid must end at 3x3 before the 2x2 Tianzige pool, got " + std::to_string(extent));
  const std::size_t flat = 4 * tianzige_channels();
  if (pool1d_window == 0 || pool1d_stride == 0 || pool1d_window > flat || (flat - pool1d_window) % pool1d_stride != 0 ||
      (flat - pool1d_window) / pool1d_stride + 1 != kGlyphVectorDim)
    throw ValidationError("cnn 1D pooling over " + std::to_string(flat) + " Tianzige features must yield 64 values");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("cnn dropout must lie in [0, 1)");
}

CgsCnn::CgsCnn(const CgsCnnConfig& config, std::mt19937_64& rng) : config_(config) {
  config_.validate();
  std::size_t channels = 1;
  if (config_.variant != CnnVariant::cgs_2d) {
    for (int layer = 0; layer < 2; ++layer) {
      const std::size_t out = config_.conv3d_channels;
      const std::string name = "cnn.conv3d." + std::to_string(layer);
      ConvLayer l{nn::Parameter(name + ".kernels", nn::Tensor({out, channels, kKernel, kKernel, kKernel})),
                  nn::Parameter(name + ".bias", nn::Tensor({out}))};
      const std::size_t taps = kKernel * kKernel * kKernel;
      nn::glorot_uniform(l.kernels.value, channels * taps, out * taps, rng);
      conv3d_.push_back(std::move(l));
      channels = out;
    }
  }
  for (std::size_t g = 0; g < config_.pyramid_channels.size(); ++g) {
    const std::size_t out = config_.pyramid_channels[g];
    const std::string name = "cnn.conv2d." + std::to_string(g);
    ConvLayer l{nn::Parameter(name + ".kernels", nn::Tensor({out, channels, kKernel, kKernel})),
                nn::Parameter(name + ".bias", nn::Tensor({out}))};
    const std::size_t taps = kKernel * kKernel;
    nn::glorot_uniform(l.kernels.value, channels * taps, out * taps, rng);
    conv2d_.push_back(std::move(l));
    channels = out;
  }
}

std::vector<nn::Var> CgsCnn::encode(nn::Tape& tape, const glyph::GraphSequence& graphs, bool training,
                                    std::mt19937_64& rng) {
  if (graphs.length() == 0) throw ShapeError("encode: empty graph sequence");
  nn::Var x = tape.constant(graphs.to_tensor());
  for (ConvLayer& l : conv3d_) x = nn::tanh(nn::conv3d(x, tape.parameter(l.kernels), tape.parameter(l.bias)));

  // The 2D pyramid runs on all frames at once; kernels never mix frames.
  for (ConvLayer& l : conv2d_) {
    x = nn::tanh(nn::conv2d_frames(x, tape.parameter(l.kernels), tape.parameter(l.bias)));
    x = nn::maxpool2d(x, kGroupPool, kGroupPool);
  }
  x = nn::maxpool2d(x, 2, 1);  // 3x3 -> 2x2 Tianzige cells

  const nn::PoolMode mode = config_.variant == CnnVariant::cgs_avg ? nn::PoolMode::avg : nn::PoolMode::max;
  std::vector<nn::Var> out;
  out.reserve(graphs.length());
  for (std::size_t t = 0; t < graphs.length(); ++t) {
    nn::Var cells = nn::frame(x, t);  // [C, 2, 2], flattened channel-major
    nn::Var flat = nn::reshape(cells, {cells.size()});
    nn::Var g = nn::pool1d(flat, config_.pool1d_window, config_.pool1d_stride, mode);
    out.push_back(nn::dropout(g, config_.dropout_rate, training, rng));
  }
  return out;
}

std::vector<nn::Parameter*> CgsCnn::parameters() {
  std::vector<nn::Parameter*> params;
  for (ConvLayer& l : conv3d_) {
    params.push_back(&l.kernels);
    params.push_back(&l.bias);
  }
  for (ConvLayer& l : conv2d_) {
    params.push_back(&l.kernels);
    params.push_back(&l.bias);
  }
  return params;
}

}  // namespace fgn::cgs
