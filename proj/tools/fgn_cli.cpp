#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fgn/errors.hpp"
#include "fgn/harness/ablation.hpp"
#include "fgn/harness/gradcheck_suite.hpp"
#include "fgn/harness/synthetic.hpp"
#include "fgn/harness/trainer.hpp"
#include "fgn/utf8.hpp"

namespace fs = std::filesystem;
using namespace fgn;
using namespace fgn::harness;

namespace {

// Exit codes: 0 ok, 1 a check ran and failed, 2 an error stopped the command.
constexpr int kCheckFailed = 1;
constexpr int kError = 2;

std::string pick(const std::string& flag, const std::string& from_config, const char* what) {
  const std::string& path = flag.empty() ? from_config : flag;
  if (path.empty()) throw ArgumentError(std::string("no ") + what + " given (flag or config data section)");
  return path;
}

std::shared_ptr<embedding::FileBackedEmbedding> maybe_embeddings(const std::string& path) {
  if (path.empty()) return nullptr;
  return embedding::FileBackedEmbedding::load(path);
}

void print_prf(std::ostream& out, const Prf& p) {
  out << std::fixed << std::setprecision(4) << "P " << p.precision << "  R " << p.recall << "  F1 " << p.f1 << "\n";
  out.unsetf(std::ios::floatfield);
}

struct TrainArgs {
  std::string config, train, dev, atlas, out, metrics, train_embeddings, dev_embeddings;
  std::size_t repeat = 1;
};

int run_train(const TrainArgs& a) {
  RunConfig config = RunConfig::load(a.config);
  config.data.train = pick(a.train, config.data.train, "training corpus");
  config.data.dev = pick(a.dev, config.data.dev, "dev corpus");
  config.data.atlas = fs::absolute(pick(a.atlas, config.data.atlas, "atlas directory")).string();
  if (!a.train_embeddings.empty()) config.data.train_embeddings = a.train_embeddings;
  if (!a.dev_embeddings.empty()) config.data.dev_embeddings = a.dev_embeddings;
  if (a.repeat == 0) throw ArgumentError("--repeat must be at least 1");
  config.validate();

  const Corpus train_set = load_conll(config.data.train);
  const Corpus dev_set = load_conll(config.data.dev, &train_set.scheme);
  TrainData data{&train_set, &dev_set, glyph::GlyphAtlas::load(config.data.atlas, config.atlas_fallback_seed),
                 maybe_embeddings(config.data.train_embeddings), maybe_embeddings(config.data.dev_embeddings)};

  const std::string metrics_path = a.metrics.empty() ? a.out + ".metrics.log" : a.metrics;
  std::ofstream metrics(metrics_path);
  if (!metrics) throw IoError("cannot write " + metrics_path);

  Prf mean;
  for (std::size_t run = 0; run < a.repeat; ++run) {
    RunConfig c = config;
    c.seed = config.seed + run;
    if (a.repeat > 1) {
      std::cout << "# run " << run + 1 << "/" << a.repeat << " seed " << c.seed << "\n";
      metrics << "# run " << run + 1 << " seed " << c.seed << "\n";
    }
    TrainResult result = train(c, data, [&](const EpochMetrics& m) {
      write_metrics_line(std::cout, m);
      write_metrics_line(metrics, m);
      std::cout.flush();
      metrics.flush();
    });
    std::cout << "best epoch " << result.best_epoch << ": ";
    print_prf(std::cout, result.best_dev);
    // Later runs only contribute to the mean; the saved model is the first run's.
    if (run == 0) result.model->save(a.out);
    mean.precision += result.best_dev.precision / a.repeat;
    mean.recall += result.best_dev.recall / a.repeat;
    mean.f1 += result.best_dev.f1 / a.repeat;
  }
  if (a.repeat > 1) {
    std::cout << "mean over " << a.repeat << " runs: ";
    print_prf(std::cout, mean);
  }
  std::cout << "model written to " << a.out << ", metrics to " << metrics_path << "\n";
  return 0;
}

std::unique_ptr<FgnModel> open_model(const std::string& path, const std::string& atlas_dir,
                                     const std::string& embeddings) {
  std::shared_ptr<const glyph::GlyphAtlas> atlas;
  if (!atlas_dir.empty()) atlas = glyph::GlyphAtlas::load(atlas_dir);
  auto model = FgnModel::load(path, atlas);
  if (model->config().embedding.kind == embedding::ProviderKind::file_backed) {
    if (embeddings.empty()) throw ArgumentError("this model reads FGNEMB1 embeddings; pass --embeddings");
    model->set_file_embeddings(maybe_embeddings(embeddings));
  }
  return model;
}

int run_eval(const std::string& model_path, const std::string& data_path, const std::string& atlas,
             const std::string& embeddings) {
  auto model = open_model(model_path, atlas, embeddings);
  const Corpus corpus = load_conll(data_path, &model->scheme());
  print_prf(std::cout, evaluate_model(*model, corpus));
  return 0;
}

void print_prediction(std::ostream& out, const FgnModel& model, const std::u32string& chars,
                      const std::vector<std::size_t>& labels) {
  const auto& scheme = model.scheme();
  for (std::size_t i = 0; i < chars.size(); ++i) out << utf8_encode(chars[i]) << "\t" << scheme.name(labels[i]) << "\n";
  out << "# entities\n";
  for (const EntitySpan& e : decode_entities(labels, scheme))
    out << e.start << "-" << e.end << "\t" << scheme.entity_types()[e.type] << "\t"
        << utf8_encode(std::u32string_view(chars).substr(e.start, e.end - e.start + 1)) << "\n";
}

int run_predict(const std::string& model_path, const std::optional<std::string>& text, const std::string& data_path,
                const std::string& atlas, const std::string& embeddings) {
  if (text.has_value() == !data_path.empty()) throw ArgumentError("pass exactly one of --text and --data");
  if (!data_path.empty()) {
    auto model = open_model(model_path, atlas, embeddings);
    const Corpus corpus = load_conll(data_path, &model->scheme());
    for (const auto& s : corpus.sentences) {
      print_prediction(std::cout, *model, s.chars, model->predict(s.chars, s.index));
      std::cout << "\n";
    }
    return 0;
  }
  std::string line = *text;
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  const std::u32string chars = utf8_decode(line);
  if (chars.empty()) throw ArgumentError("empty input text");
  auto model = open_model(model_path, atlas, embeddings);
  print_prediction(std::cout, *model, chars, model->predict(chars, 0));
  return 0;
}

int run_gradcheck_cmd(const std::string& module) {
  const auto cases = run_gradcheck(module);
  write_gradcheck_report(std::cout, cases);
  return all_passed(cases) ? 0 : kCheckFailed;
}

struct AblateArgs {
  std::string config, grid, train, dev, atlas, out;
  std::size_t threads = 1;
};

int run_ablate(const AblateArgs& a) {
  const RunConfig base = RunConfig::load(a.config);
  std::ifstream grid_in(a.grid);
  if (!grid_in) throw IoError("cannot open grid file " + a.grid);
  nlohmann::json grid_json;
  try {
    grid_in >> grid_json;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(a.grid + ": " + e.what());
  }
  const AblationGrid grid = AblationGrid::from_json(grid_json, base);

  const Corpus train_set = load_conll(pick(a.train, base.data.train, "training corpus"));
  const Corpus dev_set = load_conll(pick(a.dev, base.data.dev, "dev corpus"), &train_set.scheme);
  TrainData data{&train_set, &dev_set,
                 glyph::GlyphAtlas::load(pick(a.atlas, base.data.atlas, "atlas directory"), base.atlas_fallback_seed),
                 maybe_embeddings(base.data.train_embeddings), maybe_embeddings(base.data.dev_embeddings)};

  const auto rows = ablate(base, grid, data, a.threads);
  write_ablation_report(std::cout, base, rows);
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write " + a.out);
    write_ablation_report(out, base, rows);
  }
  return 0;
}

int run_synth(const std::string& out, std::uint64_t seed) {
  SyntheticOptions options;
  options.seed = seed;
  const SyntheticCorpus corpus = make_synthetic_corpus(options);
  write_synthetic_corpus(corpus, out);
  std::cout << "wrote " << corpus.glyphs.size() << " glyphs, " << corpus.train.sentences.size() << " train and "
            << corpus.dev.sentences.size() << " dev sentences to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FGN: glyph-aware Chinese NER (CGS-CNN + sliding-window fusion + BiLSTM-CRF)"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a model and write the best-dev checkpoint");
  train_cmd->add_option("--config", ta.config, "run config (JSON)")->required();
  train_cmd->add_option("--train", ta.train, "training corpus (CoNLL)");
  train_cmd->add_option("--dev", ta.dev, "dev corpus (CoNLL)");
  train_cmd->add_option("--atlas", ta.atlas, "directory of U+XXXX.pgm glyphs");
  train_cmd->add_option("--out", ta.out, "model file to write")->required();
  train_cmd->add_option("--repeat", ta.repeat, "runs with seeds seed, seed+1, ...; prints the mean");
  train_cmd->add_option("--metrics", ta.metrics, "metrics log (default: <out>.metrics.log)");
  train_cmd->add_option("--train-embeddings", ta.train_embeddings, "FGNEMB1 file for file_backed configs");
  train_cmd->add_option("--dev-embeddings", ta.dev_embeddings, "FGNEMB1 file for file_backed configs");

  std::string model_path, data_path, text, atlas, embeddings;
  auto* eval_cmd = app.add_subcommand("eval", "entity-level P/R/F1 of a model on a corpus");
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--data", data_path)->required();
  eval_cmd->add_option("--atlas", atlas, "override the atlas directory stored in the model");
  eval_cmd->add_option("--embeddings", embeddings, "FGNEMB1 file for file_backed models");

  auto* predict_cmd = app.add_subcommand("predict", "tag text or a corpus");
  predict_cmd->add_option("--model", model_path)->required();
  auto* text_opt = predict_cmd->add_option("--text", text, "one sentence");
  auto* data_opt = predict_cmd->add_option("--data", data_path, "CoNLL corpus");
  text_opt->excludes(data_opt);
  predict_cmd->add_option("--atlas", atlas, "override the atlas directory stored in the model");
  predict_cmd->add_option("--embeddings", embeddings, "FGNEMB1 file for file_backed models");

  std::string module = "all";
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gradcheck_cmd->add_option("--module", module, "all, nn, cnn, fusion, tagger or model");

  AblateArgs aa;
  auto* ablate_cmd = app.add_subcommand("ablate", "train every variant combination of a grid");
  ablate_cmd->add_option("--config", aa.config, "base run config (JSON)")->required();
  ablate_cmd->add_option("--grid", aa.grid, "grid JSON: {\"cnn\": [...], \"fusion\": [...], \"tagger\": [...]}")
      ->required();
  ablate_cmd->add_option("--train", aa.train);
  ablate_cmd->add_option("--dev", aa.dev);
  ablate_cmd->add_option("--atlas", aa.atlas);
  ablate_cmd->add_option("--threads", aa.threads, "cells trained concurrently");
  ablate_cmd->add_option("--out", aa.out, "also write the report here");

  std::string synth_out;
  std::uint64_t synth_seed = SyntheticOptions{}.seed;
  auto* synth_cmd = app.add_subcommand("synth", "write the synthetic glyph corpus");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--seed", synth_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; usage mistakes share the error code.
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kError;
  }

  try {
    if (*train_cmd) return run_train(ta);
    if (*eval_cmd) return run_eval(model_path, data_path, atlas, embeddings);
    if (*predict_cmd)
      return run_predict(model_path, text_opt->count() ? std::optional(text) : std::nullopt, data_path, atlas,
                         embeddings);
    if (*gradcheck_cmd) return run_gradcheck_cmd(module);
    if (*ablate_cmd) return run_ablate(aa);
    if (*synth_cmd) return run_synth(synth_out, synth_seed);
  } catch (const std::exception& e) {
    std::cerr << "fgn: error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
