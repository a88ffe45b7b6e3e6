#include <fstream>
#include <set>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "fgn/errors.hpp"
#include "fgn/harness/ablation.hpp"
#include "fgn/harness/config.hpp"
#include "fgn/harness/entities.hpp"
#include "fgn/harness/gradcheck_suite.hpp"
#include "fgn/harness/model.hpp"
#include "fgn/harness/synthetic.hpp"
#include "fgn/harness/trainer.hpp"
#include "test_util.hpp"

using namespace fgn;
using namespace fgn::harness;

namespace {

std::vector<std::size_t> labels(const tagger::LabelScheme& scheme, std::initializer_list<const char*> names) {
  std::vector<std::size_t> out;
  for (const char* n : names) out.push_back(scheme.index_of(n).value());
  return out;
}

// Small enough to train in well under a second per epoch.
RunConfig tiny_config() {
  RunConfig c;
  c.embedding.dim = 8;
  c.char_window = 2;
  c.char_stride = 1;
  c.hidden_dim = 16;
  c.epochs = 2;
  c.seed = 3;
  return c;
}

SyntheticCorpus small_corpus() { return make_synthetic_corpus({.seed = 5, .glyphs = 9, .sentences = 8, .train_sentences = 6}); }

}  // namespace

TEST_CASE("entity decoding") {
  const tagger::LabelScheme scheme({"LOC", "PER"});
  CHECK(decode_entities(labels(scheme, {"B-PER", "E-PER", "O"}), scheme) == std::vector<EntitySpan>{{0, 1, 1}});
  CHECK(decode_entities(labels(scheme, {"S-LOC"}), scheme) == std::vector<EntitySpan>{{0, 0, 0}});
  CHECK(decode_entities(labels(scheme, {"B-PER", "O", "E-PER"}), scheme).empty());
  CHECK(decode_entities(labels(scheme, {"M-PER", "E-PER"}), scheme).empty());
  CHECK(decode_entities(labels(scheme, {"B-PER", "M-LOC", "E-PER"}), scheme).empty());
  CHECK(decode_entities(labels(scheme, {"B-LOC", "M-LOC", "M-LOC", "E-LOC", "S-PER", "B-PER"}), scheme) ==
        std::vector<EntitySpan>{{0, 3, 0}, {4, 4, 1}});
  // A fresh B restarts the run.
  CHECK(decode_entities(labels(scheme, {"B-PER", "B-PER", "E-PER"}), scheme) == std::vector<EntitySpan>{{1, 2, 1}});
}

TEST_CASE("entity encoding inverts decoding") {
  const tagger::LabelScheme scheme({"LOC", "ORG", "PER"});
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t length = 1 + rng() % 15;
    std::vector<EntitySpan> spans;
    std::size_t pos = rng() % 3;
    while (pos < length) {
      const std::size_t end = std::min(length - 1, pos + rng() % 4);
      spans.push_back({pos, end, static_cast<std::size_t>(rng() % 3)});
      pos = end + 1 + rng() % 3;
    }
    CHECK(decode_entities(encode_entities(spans, length, scheme), scheme) == spans);
  }
  CHECK_THROWS_AS(encode_entities({{0, 2, 0}, {2, 3, 0}}, 5, scheme), ArgumentError);
  CHECK_THROWS_AS(encode_entities({{3, 5, 0}}, 5, scheme), ArgumentError);
  CHECK(encode_entities({{1, 1, 2}}, 3, scheme) == labels(scheme, {"O", "S-PER", "O"}));
}

TEST_CASE("entity-level scoring") {
  const tagger::LabelScheme scheme({"PER"});
  const auto gold = labels(scheme, {"B-PER", "E-PER", "O", "O"});
  Prf same = evaluate({gold}, {gold}, scheme);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);

  Prf extra = evaluate({gold}, {labels(scheme, {"B-PER", "E-PER", "O", "S-PER"})}, scheme);
  CHECK(extra.precision == 0.5);
  CHECK(extra.recall == 1.0);
  CHECK(extra.f1 == doctest::Approx(2.0 / 3.0));

  const auto empty = labels(scheme, {"O", "O"});
  Prf none = evaluate({empty}, {empty}, scheme);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  // Boundary mismatch counts as both a miss and a false alarm.
  Prf shifted = evaluate({gold}, {labels(scheme, {"O", "B-PER", "E-PER", "O"})}, scheme);
  CHECK(shifted.f1 == 0.0);

  CHECK_THROWS_AS(evaluate({gold}, {}, scheme), ArgumentError);
  CHECK_THROWS_AS(evaluate({gold}, {empty}, scheme), ArgumentError);
}

TEST_CASE("run config json") {
  RunConfig c = tiny_config();
  c.fusion_variant = fusion::FusionVariant::max_pool;
  c.tagger_variant = tagger::TaggerVariant::lstm;
  c.cnn.variant = cgs::CnnVariant::cgs_avg;
  c.hard_mask = true;
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.fusion_variant == fusion::FusionVariant::max_pool);
  CHECK(back.char_window == 2);

  CHECK_THROWS_AS(RunConfig::from_json({{"epoch", 3}}), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json({{"tagger", {{"hidden", 3}}}}), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json({{"epochs", "three"}}), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json({{"fusion", {{"variant", "attention"}}}}), ValidationError);

  RunConfig bad = tiny_config();
  bad.char_stride = 4;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  RunConfig rate = tiny_config();
  rate.lstm_dropout = 1.0;
  CHECK_THROWS_AS(rate.validate(), ValidationError);

  const RunConfig preset = RunConfig::large_preset();
  CHECK(fusion::validate_window(preset.window_spec()) == 57);
  CHECK_NOTHROW(preset.validate());
}

TEST_CASE("config files resolve relative data paths") {
  test::TempDir dir;
  {
    std::ofstream out(dir / "cfg.json");
    out << R"({"epochs": 4, "data": {"train": "t.conll", "atlas": "/abs/atlas"}})";
  }
  const RunConfig c = RunConfig::load(dir / "cfg.json");
  CHECK(c.epochs == 4);
  CHECK(std::filesystem::path(c.data.train) == dir / "t.conll");
  CHECK(c.data.atlas == "/abs/atlas");
  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(RunConfig::load(dir / "broken.json"), ValidationError);
  CHECK_THROWS_AS(RunConfig::load(dir / "absent.json"), IoError);
}

TEST_CASE("synthetic corpus") {
  const SyntheticCorpus a = make_synthetic_corpus();
  const SyntheticCorpus b = make_synthetic_corpus();
  CHECK(a.glyphs.size() == 30);
  CHECK(a.train.sentences.size() == 40);
  CHECK(a.dev.sentences.size() == 10);
  CHECK(a.glyphs == b.glyphs);
  CHECK(a.classes == b.classes);

  std::set<char32_t> seen;
  for (const auto& s : a.train.sentences) seen.insert(s.chars.begin(), s.chars.end());
  for (const auto& s : a.dev.sentences)
    for (char32_t ch : s.chars) CHECK(seen.count(ch) == 1);

  // Labels agree with the glyph classes and every entity has 1-3 characters.
  for (const auto& s : a.train.sentences) {
    for (const EntitySpan& e : decode_entities(s.labels, a.train.scheme)) {
      CHECK(e.end - e.start < 3);
      const auto want = a.train.scheme.entity_types()[e.type] == "PER" ? SyntheticClass::PER : SyntheticClass::LOC;
      for (std::size_t i = e.start; i <= e.end; ++i) CHECK(a.classes.at(s.chars[i]) == want);
    }
  }
  CHECK(make_synthetic_corpus({.seed = 8}).train.sentences[0].chars != a.train.sentences[0].chars);
  CHECK_THROWS_AS(make_synthetic_corpus({.glyphs = 2}), ArgumentError);
  CHECK_THROWS_AS(make_synthetic_corpus({.sentences = 5, .train_sentences = 6}), ArgumentError);

  test::TempDir dir;
  write_synthetic_corpus(a, dir.path());
  const auto atlas = glyph::GlyphAtlas::load(dir / "atlas");
  CHECK(atlas->size() == 30);
  for (const auto& [ch, m] : a.glyphs) CHECK(atlas->lookup(ch) == m);
  CHECK(load_conll(dir / "train.conll").sentences.size() == 40);
}

TEST_CASE("training is deterministic and checkpoints the best epoch") {
  const SyntheticCorpus corpus = small_corpus();
  const TrainData data{&corpus.train, &corpus.dev, corpus.atlas(), nullptr, nullptr};
  std::vector<std::string> lines;
  const TrainResult a = train(tiny_config(), data, [&](const EpochMetrics& m) {
    std::ostringstream out;
    write_metrics_line(out, m);
    lines.push_back(out.str());
  });
  const TrainResult b = train(tiny_config(), data);
  REQUIRE(a.log.size() == 2);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].rfind("1, ", 0) == 0);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(std::isfinite(a.log[i].train_loss));
    CHECK(a.log[i].dev.f1 == b.log[i].dev.f1);
  }
  CHECK(a.best_epoch >= 1);
  CHECK(a.best_dev.f1 == a.log[a.best_epoch - 1].dev.f1);
  const Prf again = evaluate_model(*a.model, corpus.dev);
  CHECK(again.f1 == a.best_dev.f1);

  RunConfig none = tiny_config();
  none.epochs = 0;
  const TrainResult zero = train(none, data);
  CHECK(zero.log.empty());
  CHECK(zero.best_epoch == 0);
  REQUIRE(zero.model);

  RunConfig bad = tiny_config();
  bad.char_stride = 3;
  CHECK_THROWS_AS(train(bad, data), ValidationError);
}

TEST_CASE("models survive a save and load") {
  const SyntheticCorpus corpus = small_corpus();
  const auto atlas = corpus.atlas();
  TrainResult r = train(tiny_config(), {&corpus.train, &corpus.dev, atlas, nullptr, nullptr});
  test::TempDir dir;
  r.model->save(dir / "m.bin");
  const auto loaded = FgnModel::load(dir / "m.bin", atlas);
  CHECK(loaded->scheme() == r.model->scheme());
  CHECK(loaded->vocabulary() == r.model->vocabulary());
  for (const auto& s : corpus.dev.sentences) CHECK(loaded->predict(s.chars) == r.model->predict(s.chars));

  // Unseen characters take the UNK row and fallback glyphs; output is still a label per char.
  const auto out = loaded->predict(U"甲乙丙丁");
  CHECK(out.size() == 4);
  for (std::size_t l : out) CHECK(l < loaded->scheme().size());

  CHECK_THROWS_AS(FgnModel::load(dir / "missing.bin", atlas), IoError);
  CHECK_THROWS_AS(loaded->predict(U""), ArgumentError);
}

TEST_CASE("ablation grid and report") {
  const RunConfig base = tiny_config();
  CHECK(AblationGrid::full().size() == 36);
  const AblationGrid one = AblationGrid::from_json({{"fusion", {"concat"}}}, base);
  CHECK(one.size() == 1);
  CHECK(one.cnn == std::vector<cgs::CnnVariant>{base.cnn.variant});
  CHECK(one.fusion == std::vector<fusion::FusionVariant>{fusion::FusionVariant::concat});
  CHECK_THROWS_AS(AblationGrid::from_json({{"cnn", nlohmann::json::array()}}, base), ValidationError);
  CHECK_THROWS_AS(AblationGrid::from_json({{"cnn", {3}}}, base), ValidationError);
  CHECK_THROWS_AS(AblationGrid::from_json({{"crf", {"bilstm"}}}, base), ValidationError);
  CHECK_THROWS_AS(AblationGrid::from_json({{"tagger", {"transformer"}}}, base), ValidationError);

  RunConfig short_run = base;
  short_run.epochs = 1;
  const SyntheticCorpus corpus = small_corpus();
  const TrainData data{&corpus.train, &corpus.dev, corpus.atlas(), nullptr, nullptr};
  const auto rows = ablate(short_run, AblationGrid::from_json({{"fusion", {"concat", "slice_attention"}}}, base), data);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.ok);
    CHECK(row.dev.f1 >= 0.0);
    CHECK(row.dev.f1 <= 1.0);
  }
  std::ostringstream report;
  write_ablation_report(report, short_run, rows);
  const std::string text = report.str();
  CHECK(text.find("concat") != std::string::npos);
  CHECK(text.find("FGN") != std::string::npos);

  RunConfig broken = base;
  broken.char_stride = 3;
  CHECK_THROWS_AS(ablate(broken, AblationGrid::from_json({{"fusion", {"avg_pool"}}}, broken), data), ValidationError);
}

TEST_CASE("gradcheck suite modules") {
  CHECK(gradcheck_modules() == std::vector<std::string>{"nn", "cnn", "fusion", "tagger", "model"});
  CHECK_THROWS_AS(run_gradcheck("bogus"), ArgumentError);
  const auto cases = run_gradcheck("tagger");
  CHECK(all_passed(cases));
  std::ostringstream out;
  write_gradcheck_report(out, cases);
  CHECK(out.str().find(std::to_string(cases.size()) + "/" + std::to_string(cases.size()) + " cases passed") !=
        std::string::npos);
}
