#include "fgn/harness/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "fgn/errors.hpp"
#include "fgn/harness/entities.hpp"

namespace fgn::harness {
namespace {

using glyph::kGlyphWidth;

void fill(glyph::GlyphMatrix& m, std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1) {
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) m[y * kGlyphWidth + x] = 1.0;
}

// Three dashes beside a vertical stroke, top-left quadrant.
void person_mark(glyph::GlyphMatrix& m) {
  for (std::size_t y : {5, 12, 19}) fill(m, y, y + 2, 4, 11);
  fill(m, 4, 22, 15, 17);
}

// Square outline, bottom-right quadrant.
void location_mark(glyph::GlyphMatrix& m) {
  fill(m, 28, 30, 28, 46);
  fill(m, 44, 46, 28, 46);
  fill(m, 28, 46, 28, 30);
  fill(m, 28, 46, 44, 46);
}

// Horizontal and vertical bars confined to the top-right and bottom-left
// quadrants, away from both class marks.
void noise_strokes(glyph::GlyphMatrix& m, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> count(3, 5), length(6, 16), coin(0, 1);
  const std::size_t strokes = count(rng);
  for (std::size_t s = 0; s < strokes; ++s) {
    const bool top_right = coin(rng) == 0;
    const std::size_t oy = top_right ? 2 : 27, ox = top_right ? 27 : 2;
    const std::size_t len = length(rng);
    std::uniform_int_distribution<std::size_t> along(0, 21 - len), across(0, 19);
    if (coin(rng) == 0) {
      const std::size_t y = oy + across(rng), x = ox + along(rng);
      fill(m, y, y + 2, x, x + len);
    } else {
      const std::size_t y = oy + along(rng), x = ox + across(rng);
      fill(m, y, y + len, x, x + 2);
    }
  }
}

// Class layout of one sentence: [O?] E ([O O?] E)? [O?].
std::vector<SyntheticClass> sentence_layout(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 1), entity_len(1, 3);
  std::vector<SyntheticClass> layout;
  if (coin(rng)) layout.push_back(SyntheticClass::O);
  const int entities = 1 + coin(rng);
  for (int e = 0; e < entities; ++e) {
    if (e > 0) layout.insert(layout.end(), 1 + coin(rng), SyntheticClass::O);
    const SyntheticClass type = coin(rng) ? SyntheticClass::PER : SyntheticClass::LOC;
    layout.insert(layout.end(), entity_len(rng), type);
  }
  if (coin(rng)) layout.push_back(SyntheticClass::O);
  return layout;
}

}  // namespace

std::shared_ptr<glyph::GlyphAtlas> SyntheticCorpus::atlas() const {
  auto a = std::make_shared<glyph::GlyphAtlas>();
  for (const auto& [cp, m] : glyphs) a->insert(cp, m);
  return a;
}

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options) {
  if (options.glyphs < 3) throw ArgumentError("synthetic corpus needs at least 3 glyphs");
  if (options.train_sentences > options.sentences)
    throw ArgumentError("synthetic corpus: " + std::to_string(options.train_sentences) + " train sentences out of " +
                        std::to_string(options.sentences));

  std::mt19937_64 rng(options.seed);
  SyntheticCorpus out;
  std::map<SyntheticClass, std::vector<char32_t>> by_class;
  for (std::size_t i = 0; i < options.glyphs; ++i) {
    const char32_t cp = options.first_codepoint + static_cast<char32_t>(i);
    const auto cls = static_cast<SyntheticClass>(i * 3 / options.glyphs);
    glyph::GlyphMatrix m{};
    if (cls == SyntheticClass::PER) person_mark(m);
    if (cls == SyntheticClass::LOC) location_mark(m);
    noise_strokes(m, rng);
    out.glyphs[cp] = m;
    out.classes[cp] = cls;
    by_class[cls].push_back(cp);
  }

  // Characters not yet used in training; drawn first so the training split
  // covers the whole alphabet.
  std::map<SyntheticClass, std::deque<char32_t>> unseen;
  for (auto& [cls, chars] : by_class) {
    std::vector<char32_t> order = chars;
    std::shuffle(order.begin(), order.end(), rng);
    unseen[cls].assign(order.begin(), order.end());
  }

  const tagger::LabelScheme scheme({"LOC", "PER"});
  const std::size_t loc = 0, per = 1;  // entity_types() is sorted
  out.train.scheme = scheme;
  out.dev.scheme = scheme;
  for (std::size_t s = 0; s < options.sentences; ++s) {
    const bool is_train = s < options.train_sentences;
    const auto layout = sentence_layout(rng);
    TaggedSentence sentence;
    std::vector<EntitySpan> spans;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const SyntheticClass cls = layout[i];
      auto& pending = unseen[cls];
      char32_t cp;
      if (is_train && !pending.empty()) {
        cp = pending.front();
        pending.pop_front();
      } else {
        const auto& pool = by_class[cls];
        cp = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      }
      sentence.chars.push_back(cp);
      if (cls == SyntheticClass::O) continue;
      const std::size_t type = cls == SyntheticClass::PER ? per : loc;
      if (i > 0 && layout[i - 1] == cls)
        spans.back().end = i;
      else
        spans.push_back({i, i, type});
    }
    sentence.labels = encode_entities(spans, layout.size(), scheme);
    Corpus& target = is_train ? out.train : out.dev;
    sentence.index = target.sentences.size();
    target.sentences.push_back(std::move(sentence));
  }
  for (const auto& [cls, pending] : unseen)
    if (!pending.empty())
      throw ArgumentError("synthetic corpus: " + std::to_string(options.train_sentences) +
                          " train sentences cannot cover all " + std::to_string(options.glyphs) + " glyphs");
  return out;
}

void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  const auto atlas_dir = dir / "atlas";
  std::error_code ec;
  std::filesystem::create_directories(atlas_dir, ec);
  if (ec) throw IoError("cannot create " + atlas_dir.string() + ": " + ec.message());
  for (const auto& [cp, m] : corpus.glyphs) {
    std::vector<std::uint8_t> pixels(m.size());
    std::transform(m.begin(), m.end(), pixels.begin(),
                   [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); });
    glyph::write_pgm(atlas_dir / glyph::pgm_filename(cp), pixels, glyph::kGlyphWidth, glyph::kGlyphHeight);
  }
  write_conll(dir / "train.conll", corpus.train);
  write_conll(dir / "dev.conll", corpus.dev);
}

}  // namespace fgn::harness
