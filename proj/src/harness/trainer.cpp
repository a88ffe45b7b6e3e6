#include "fgn/harness/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include "fgn/errors.hpp"
#include "fgn/nn/adam.hpp"
#include "fgn/nn/serialize.hpp"

namespace fgn::harness {

namespace {

void check_data(const RunConfig& config, const TrainData& data) {
  if (!data.train || data.train->sentences.empty()) throw DataError("training set is empty");
  if (!data.dev) throw DataError("no dev set");
  if (!(data.dev->scheme == data.train->scheme))
    throw DataError("dev set label scheme differs from the training set");
  if (!data.atlas) throw DataError("no glyph atlas");
  if (config.embedding.kind == embedding::ProviderKind::file_backed) {
    if (!data.train_embeddings || !data.dev_embeddings)
      throw DataError("file_backed embeddings need embedding files for both train and dev");
    // Check every record up front so a mismatch never surfaces mid-epoch.
    auto check = [](const Corpus& c, embedding::FileBackedEmbedding& e, const char* which) {
      if (e.sentence_count() != c.sentences.size())
        throw DataError(std::string(which) + " embedding file has " + std::to_string(e.sentence_count()) +
                        " records for " + std::to_string(c.sentences.size()) + " sentences");
      nn::Tape tape;
      for (const auto& s : c.sentences) e.embed_sentence(tape, s.index, s.chars);
    };
    check(*data.train, *data.train_embeddings, "train");
    check(*data.dev, *data.dev_embeddings, "dev");
  }
}

}  // namespace

Prf evaluate_model(FgnModel& model, const Corpus& corpus) {
  std::vector<std::vector<std::size_t>> gold, pred;
  gold.reserve(corpus.sentences.size());
  pred.reserve(corpus.sentences.size());
  for (const auto& s : corpus.sentences) {
    gold.push_back(s.labels);
    pred.push_back(model.predict(s.chars, s.index));
  }
  return evaluate(gold, pred, model.scheme());
}

TrainResult train(const RunConfig& config, const TrainData& data, const EpochCallback& on_epoch) {
  config.validate();
  check_data(config, data);

  TrainResult result;
  result.model = std::make_unique<FgnModel>(config, data.train->scheme, corpus_vocabulary(*data.train), data.atlas);
  FgnModel& model = *result.model;
  auto params = model.parameters();
  nn::Adam adam(params, {.learning_rate = config.learning_rate});

  std::mt19937_64 shuffle_rng(config.seed ^ 0x5eedf00dULL);
  std::mt19937_64 dropout_rng(config.seed ^ 0xd50d0u);
  std::vector<std::size_t> order(data.train->sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<nn::NamedTensor> best;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    model.set_file_embeddings(data.train_embeddings);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<const TaggedSentence*> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(&data.train->sentences[order[k]]);
      nn::Tape tape;
      nn::Var loss = model.loss(tape, batch, true, dropout_rng);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) throw DataError("training loss became non-finite at epoch " + std::to_string(epoch));
      epoch_loss += value;
      tape.backward(loss);
      adam.step();
    }
    model.set_file_embeddings(data.dev_embeddings);
    EpochMetrics m{epoch, epoch_loss, evaluate_model(model, *data.dev)};
    result.log.push_back(m);
    if (result.best_epoch == 0 || m.dev.f1 > result.best_dev.f1) {
      result.best_epoch = epoch;
      result.best_dev = m.dev;
      best = nn::snapshot_parameters(params);
    }
    if (on_epoch) on_epoch(m);
  }
  if (!best.empty()) {
    nn::ModelFile snapshot;
    snapshot.records = std::move(best);
    nn::assign_parameters(snapshot, params);
  }
  model.set_file_embeddings(data.dev_embeddings);
  return result;
}

void write_metrics_line(std::ostream& out, const EpochMetrics& m) {
  out << m.epoch << ", " << std::setprecision(10) << m.train_loss << ", " << std::setprecision(6) << m.dev.precision
      << ", " << m.dev.recall << ", " << m.dev.f1 << '\n';
}

}  // namespace fgn::harness
