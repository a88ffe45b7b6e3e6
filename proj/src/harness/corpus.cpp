#include "fgn/harness/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fgn/errors.hpp"
#include "fgn/utf8.hpp"

namespace fgn::harness {
namespace {

struct RawToken {
  char32_t ch;
  std::string label;
  std::size_t line;
};

}  // namespace

Corpus parse_conll(std::istream& in, const tagger::LabelScheme* scheme) {
  std::vector<std::vector<RawToken>> raw(1);
  std::set<std::string> types;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string token, label, extra;
    if (!(fields >> token)) {
      if (!raw.back().empty()) raw.emplace_back();
      continue;
    }
    if (!(fields >> label) || (fields >> extra)) throw ParseError("expected '<char> <label>'", line_no);
    std::u32string chars;
    try {
      chars = utf8_decode(token);
    } catch (const ArgumentError&) {
      throw ParseError("invalid UTF-8", line_no);
    }
    if (chars.size() != 1) throw ParseError("token '" + token + "' is not a single character", line_no);
    auto parts = tagger::split_label(label);
    if (!parts) throw ParseError("label '" + label + "' is not O or {B,M,E,S}-<type>", line_no);
    if (parts->first != tagger::Prefix::O) types.insert(parts->second);
    raw.back().push_back({chars[0], label, line_no});
  }
  if (raw.back().empty()) raw.pop_back();
  if (raw.empty()) throw ParseError("corpus contains no sentences", line_no == 0 ? 1 : line_no);

  Corpus corpus;
  corpus.scheme = scheme ? *scheme : tagger::LabelScheme(std::vector<std::string>(types.begin(), types.end()));
  for (const auto& tokens : raw) {
    TaggedSentence s;
    s.index = corpus.sentences.size();
    for (const RawToken& tok : tokens) {
      auto idx = corpus.scheme.index_of(tok.label);
      if (!idx) throw ParseError("label '" + tok.label + "' has an entity type unknown to the model", tok.line);
      s.chars.push_back(tok.ch);
      s.labels.push_back(*idx);
    }
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

Corpus load_conll(const std::filesystem::path& path, const tagger::LabelScheme* scheme) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return parse_conll(in, scheme);
}

void write_conll(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write corpus " + path.string());
  for (const TaggedSentence& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.chars.size(); ++i)
      out << utf8_encode(s.chars[i]) << ' ' << corpus.scheme.name(s.labels[i]) << '\n';
    out << '\n';
  }
}

}  // namespace fgn::harness
