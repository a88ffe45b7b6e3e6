#pragma once

#include <random>
#include <string>
#include <vector>

#include "fgn/glyph/atlas.hpp"
#include "fgn/nn/ops.hpp"

namespace fgn::cgs {

inline constexpr std::size_t kGlyphVectorDim = 64;

enum class CnnVariant {
  cgs,      // 3D convolution over the graph sequence, then the 2D pyramid
  cgs_2d,   // 2D pyramid only; each glyph vector sees its own graph
  cgs_avg,  // as cgs, with average instead of max in the final 1D pooling
};

std::string to_string(CnnVariant v);
CnnVariant parse_cnn_variant(const std::string& name);

struct CgsCnnConfig {
  CnnVariant variant = CnnVariant::cgs;
  std::size_t conv3d_channels = 8;
  // One entry per (conv2d 3x3 + maxpool 2/2) group; the last is the
  // Tianzige channel count. 50 -> 25 -> 12 -> 6 -> 3, then a 2/1 pool gives 2x2.
  std::vector<std::size_t> pyramid_channels{16, 32, 64, 64};
  std::size_t pool1d_window = 4;
  std::size_t pool1d_stride = 4;
  double dropout_rate = 0.2;

  std::size_t tianzige_channels() const { return pyramid_channels.back(); }
  // Throws ValidationError unless the pipeline ends in 2x2 cells and
  // the pooled glyph vector has exactly 64 entries.
  void validate() const;
};

// Glyph encoder: graph sequence [T x 50 x 50] -> T glyph vectors of size 64.
class CgsCnn {
 public:
  CgsCnn(const CgsCnnConfig& config, std::mt19937_64& rng);

  // One 64-d vector per graph, in order. Dropout is applied only when training.
  std::vector<nn::Var> encode(nn::Tape& tape, const glyph::GraphSequence& graphs, bool training,
                              std::mt19937_64& rng);

  std::vector<nn::Parameter*> parameters();
  const CgsCnnConfig& config() const { return config_; }

 private:
  struct ConvLayer {
    nn::Parameter kernels;
    nn::Parameter bias;
  };

  CgsCnnConfig config_;
  std::vector<ConvLayer> conv3d_;
  std::vector<ConvLayer> conv2d_;
};

}  // namespace fgn::cgs
