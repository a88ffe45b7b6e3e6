#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fgn/cgs/cgs_cnn.hpp"
#include "fgn/embedding/embedding.hpp"
#include "fgn/fusion/fusion.hpp"
#include "fgn/tagger/bilstm.hpp"

namespace fgn::harness {

struct DataPaths {
  std::string train;
  std::string dev;
  std::string atlas;
  // FGNEMB1 files, required when embedding.kind == file_backed.
  std::string train_embeddings;
  std::string dev_embeddings;
};

struct RunConfig {
  cgs::CgsCnnConfig cnn;

  fusion::FusionVariant fusion_variant = fusion::FusionVariant::slice_attention;
  fusion::FusionOutput fusion_output = fusion::FusionOutput::augment;
  std::size_t char_window = 8;
  std::size_t char_stride = 4;
  std::size_t glyph_window = 16;
  std::size_t glyph_stride = 8;

  tagger::TaggerVariant tagger_variant = tagger::TaggerVariant::bilstm;
  std::size_t hidden_dim = 128;
  double lstm_dropout = 0.5;
  bool hard_mask = false;

  embedding::EmbeddingProviderSpec embedding;

  double learning_rate = 0.002;
  // Not used by training; the rate for external encoder fine-tuning runs that
  // produce FGNEMB1 files.
  double fine_tune_learning_rate = 1e-5;
  std::size_t epochs = 50;
  std::size_t batch_size = 1;
  std::uint64_t seed = 13;
  std::uint64_t atlas_fallback_seed = 0;

  DataPaths data;

  fusion::WindowSpec window_spec() const;
  // Throws ValidationError (window, rates, dims) before any training happens.
  void validate() const;

  // Unknown keys are rejected with ValidationError.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Large setting: 768-d character vectors, window 96/12 over them and 8/1
  // over the glyph vector (57 slices), LSTM hidden size 764.
  static RunConfig large_preset();
};

}  // namespace fgn::harness
