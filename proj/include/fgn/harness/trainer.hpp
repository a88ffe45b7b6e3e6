#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <vector>

#include "fgn/harness/entities.hpp"
#include "fgn/harness/model.hpp"

namespace fgn::harness {

struct TrainData {
  const Corpus* train = nullptr;
  const Corpus* dev = nullptr;
  std::shared_ptr<const glyph::GlyphAtlas> atlas;
  // Only for file_backed configs.
  std::shared_ptr<embedding::FileBackedEmbedding> train_embeddings;
  std::shared_ptr<embedding::FileBackedEmbedding> dev_embeddings;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  Prf dev;
};

struct TrainResult {
  std::vector<EpochMetrics> log;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  Prf best_dev;
  // Parameters of the best dev-F1 epoch (initialization when epochs == 0).
  std::unique_ptr<FgnModel> model;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Seeded shuffle, per-batch NLL + Adam, dev evaluation after every epoch and
// best-F1 checkpointing. Bit-reproducible for a fixed config and seed.
// Throws ValidationError / DataError before the first step on bad input.
TrainResult train(const RunConfig& config, const TrainData& data, const EpochCallback& on_epoch = {});

// Viterbi-decodes every sentence and scores entity-level P/R/F1.
Prf evaluate_model(FgnModel& model, const Corpus& corpus);

// "epoch, train_loss, dev_P, dev_R, dev_F1"
void write_metrics_line(std::ostream& out, const EpochMetrics& m);

}  // namespace fgn::harness
