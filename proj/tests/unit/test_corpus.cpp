#include <sstream>

#include <doctest.h>

#include "fgn/errors.hpp"
#include "fgn/harness/corpus.hpp"
#include "test_util.hpp"

using namespace fgn;
using namespace fgn::harness;

namespace {

Corpus parse(const std::string& text, const tagger::LabelScheme* scheme = nullptr) {
  std::istringstream in(text);
  return parse_conll(in, scheme);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("conll parsing") {
  const Corpus plain = parse("我 O\n爱 O\n\n");
  REQUIRE(plain.sentences.size() == 1);
  CHECK(plain.sentences[0].chars == U"我爱");
  CHECK(plain.sentences[0].labels == std::vector<std::size_t>{0, 0});
  CHECK(plain.scheme.entity_types().empty());

  const Corpus loc = parse("北 B-LOC\n京 E-LOC\n\n");
  CHECK(loc.scheme.entity_types() == std::vector<std::string>{"LOC"});
  CHECK(loc.sentences[0].labels == std::vector<std::size_t>{1, 3});

  // No trailing blank line, tabs and CRLF, several sentences.
  const Corpus multi = parse("张\tS-PER\r\n\r\n\n北 B-LOC\n京 E-LOC\n在 O");
  REQUIRE(multi.sentences.size() == 2);
  CHECK(multi.sentences[1].index == 1);
  CHECK(multi.sentences[1].chars == U"北京在");
  CHECK(multi.scheme.entity_types() == std::vector<std::string>{"LOC", "PER"});
  CHECK(multi.sentences[0].labels == std::vector<std::size_t>{multi.scheme.index_of("S-PER").value()});
}

TEST_CASE("conll errors carry line numbers") {
  CHECK(parse_error_line("北 X-LOC\n") == 1);
  CHECK(parse_error_line("我 O\n爱\n") == 2);
  CHECK(parse_error_line("我 O\n爱 O extra\n") == 2);
  CHECK(parse_error_line("我们 O\n") == 1);
  CHECK(parse_error_line("我 O\n\n我 B-\n") == 3);
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("\n\n"), ParseError);

  const tagger::LabelScheme scheme({"PER"});
  CHECK_THROWS_AS(parse("北 B-LOC\n京 E-LOC\n", &scheme), ParseError);
  const Corpus fixed = parse("张 S-PER\n", &scheme);
  CHECK(fixed.scheme == scheme);
}

TEST_CASE("conll files round trip") {
  test::TempDir dir;
  const Corpus original = parse("张 B-PER\n三 E-PER\n在 O\n\n上 B-LOC\n海 E-LOC\n");
  write_conll(dir / "c.conll", original);
  const Corpus back = load_conll(dir / "c.conll");
  REQUIRE(back.sentences.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.sentences[i].chars == original.sentences[i].chars);
    CHECK(back.sentences[i].labels == original.sentences[i].labels);
  }
  CHECK_THROWS_AS(load_conll(dir / "missing.conll"), IoError);
}
