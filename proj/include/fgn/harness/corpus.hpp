#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "fgn/tagger/labels.hpp"

namespace fgn::harness {

struct TaggedSentence {
  std::u32string chars;
  std::vector<std::size_t> labels;
  std::size_t index = 0;  // position in its corpus
};

struct Corpus {
  std::vector<TaggedSentence> sentences;
  tagger::LabelScheme scheme;
};

// CoNLL-style text: one "<char> <label>" per line (whitespace separated),
// blank line between sentences. Labels are O or {B,M,E,S}-<type>. The scheme
// is inferred from the labels, or fixed by `scheme` (unknown types are then
// an error). Throws ParseError carrying the 1-based line number.
Corpus parse_conll(std::istream& in, const tagger::LabelScheme* scheme = nullptr);
Corpus load_conll(const std::filesystem::path& path, const tagger::LabelScheme* scheme = nullptr);
void write_conll(const std::filesystem::path& path, const Corpus& corpus);

}  // namespace fgn::harness
