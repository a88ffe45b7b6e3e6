#include <fstream>

#include <doctest.h>

#include "fgn/embedding/embedding.hpp"
#include "fgn/errors.hpp"
#include "fgn/nn/adam.hpp"
#include "test_util.hpp"

using namespace fgn;
using namespace fgn::embedding;

TEST_CASE("lookup table shares rows per character") {
  std::mt19937_64 rng(1);
  LookupTableEmbedding table({U'我', U'爱'}, 16, false, rng);
  nn::Tape tape;
  const auto out = table.embed_sentence(tape, 0, U"我我");
  REQUIRE(out.size() == 2);
  CHECK(out[0].size() == 16);
  CHECK(out[0].value() == out[1].value());

  CHECK(table.row_of(U'我') != table.row_of(U'爱'));
  CHECK(table.row_of(U'球') == 0);
  CHECK(table.row_of(U'踢') == 0);
  const auto unk = table.embed_sentence(tape, 0, U"球踢");
  CHECK(unk[0].value() == unk[1].value());
}

TEST_CASE("frozen tables survive training steps unchanged") {
  std::mt19937_64 rng(2);
  LookupTableEmbedding table({U'我', U'爱'}, 8, true, rng);
  const nn::Tensor initial = table.table().value;
  nn::Adam adam(table.parameters());
  for (int step = 0; step < 10; ++step) {
    nn::Tape tape;
    const auto out = table.embed_sentence(tape, 0, U"我爱");
    tape.backward(nn::sum(nn::tanh(nn::add(out[0], out[1]))));
    adam.step();
  }
  CHECK(table.table().value == initial);

  LookupTableEmbedding trainable({U'我'}, 8, false, rng);
  const nn::Tensor start = trainable.table().value;
  nn::Adam adam2(trainable.parameters());
  nn::Tape tape;
  tape.backward(nn::sum(trainable.embed_sentence(tape, 0, U"我")[0]));
  adam2.step();
  CHECK(trainable.table().value != start);
}

TEST_CASE("embedding files round trip and replay verbatim") {
  test::TempDir dir;
  EmbeddingFile file;
  file.sentences = {{{0.5f, -1.0f, 2.0f}, {0.25f, 0.0f, 1.0f}}, {{1.0f, 2.0f, 3.0f}}};
  write_embedding_file(dir / "e.bin", file);
  const EmbeddingFile read = read_embedding_file(dir / "e.bin");
  CHECK(read.sentences == file.sentences);

  const auto provider = FileBackedEmbedding::load(dir / "e.bin");
  CHECK(provider->dim() == 3);
  CHECK(provider->sentence_count() == 2);
  CHECK(provider->parameters().empty());
  nn::Tape tape;
  // Same character, different vectors: contextual records are allowed.
  const auto out = provider->embed_sentence(tape, 0, U"我我");
  CHECK(out[0].value() == nn::Tensor::vector({0.5, -1.0, 2.0}));
  CHECK(out[1].value() == nn::Tensor::vector({0.25, 0.0, 1.0}));

  try {
    provider->embed_sentence(tape, 1, U"我我");
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find('1') != std::string::npos);
  }
  CHECK_THROWS_AS(provider->embed_sentence(tape, 2, U"我"), DataError);
}

TEST_CASE("malformed embedding files") {
  test::TempDir dir;
  CHECK_THROWS_AS(read_embedding_file(dir / "absent.bin"), IoError);
  {
    std::ofstream out(dir / "bad.bin", std::ios::binary);
    out << "FGNEMB0";
  }
  CHECK_THROWS_AS(read_embedding_file(dir / "bad.bin"), FormatError);

  EmbeddingFile mixed;
  mixed.sentences = {{{1.0f, 2.0f}}, {{1.0f, 2.0f, 3.0f}}};
  write_embedding_file(dir / "mixed.bin", mixed);
  CHECK_THROWS_AS(read_embedding_file(dir / "mixed.bin"), FormatError);
}

TEST_CASE("provider spec validation") {
  EmbeddingProviderSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.kind = ProviderKind::file_backed;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.frozen = true;
  CHECK_NOTHROW(spec.validate());
  spec.dim = 0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}
