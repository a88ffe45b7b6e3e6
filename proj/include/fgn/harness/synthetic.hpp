#pragma once

#include <cstdint>
#include <filesystem>
#include <map>

#include "fgn/glyph/atlas.hpp"
#include "fgn/harness/corpus.hpp"

namespace fgn::harness {

// A toy NER task whose answer is written in the glyphs: every PER character
// carries the same mark in its top-left quadrant, every LOC character the same
// mark in its bottom-right quadrant, and O characters carry neither. The rest
// of each glyph is character-specific noise strokes.
struct SyntheticOptions {
  std::uint64_t seed = 7;
  std::size_t glyphs = 30;  // split evenly over PER, LOC and O
  std::size_t sentences = 50;
  std::size_t train_sentences = 40;
  char32_t first_codepoint = 0x4E00;
};

enum class SyntheticClass { O, PER, LOC };

struct SyntheticCorpus {
  std::map<char32_t, glyph::GlyphMatrix> glyphs;
  std::map<char32_t, SyntheticClass> classes;
  Corpus train;
  Corpus dev;

  // Atlas over `glyphs` (no PGM round trip).
  std::shared_ptr<glyph::GlyphAtlas> atlas() const;
};

// Deterministic in the options. Every character occurs in the training split,
// entities are 1-3 characters long and always separated by at least one O.
// Throws ArgumentError for fewer than 3 glyphs or more train sentences than
// sentences.
SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options = {});

// dir/atlas/U+XXXX.pgm, dir/train.conll, dir/dev.conll. Pixels are quantized
// to 8 bits, so the glyphs read back are exactly those written.
void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace fgn::harness
