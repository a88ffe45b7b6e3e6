#include "fgn/embedding/embedding.hpp"

#include <algorithm>
#include <fstream>

#include "fgn/binary_io.hpp"
#include "fgn/errors.hpp"

namespace fgn::embedding {

namespace {
constexpr std::string_view kMagic = "FGNEMB1";
}

std::string to_string(ProviderKind kind) { return kind == ProviderKind::lookup_table ? "lookup_table" : "file_backed"; }

ProviderKind parse_provider_kind(const std::string& name) {
  if (name == "lookup_table") return ProviderKind::lookup_table;
  if (name == "file_backed") return ProviderKind::file_backed;
  throw ValidationError("unknown embedding kind '" + name + "' (expected lookup_table or file_backed)");
}

void EmbeddingProviderSpec::validate() const {
  if (dim == 0) throw ValidationError("embedding dim must be positive");
  if (kind == ProviderKind::file_backed && !frozen)
    throw ValidationError("file_backed embeddings are always frozen; set embedding.frozen = true");
}

LookupTableEmbedding::LookupTableEmbedding(std::vector<char32_t> vocabulary, std::size_t dim, bool frozen,
                                           std::mt19937_64& rng)
    : vocabulary_(std::move(vocabulary)) {
  std::sort(vocabulary_.begin(), vocabulary_.end());
  vocabulary_.erase(std::unique(vocabulary_.begin(), vocabulary_.end()), vocabulary_.end());
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) rows_[vocabulary_[i]] = i + 1;
  table_ = nn::Parameter("embedding.table", nn::Tensor({vocabulary_.size() + 1, dim}), !frozen);
  nn::glorot_uniform(table_.value, vocabulary_.size() + 1, dim, rng);
}

std::size_t LookupTableEmbedding::row_of(char32_t ch) const {
  auto it = rows_.find(ch);
  return it == rows_.end() ? 0 : it->second;
}

std::vector<nn::Var> LookupTableEmbedding::embed_sentence(nn::Tape& tape, std::size_t, std::u32string_view sentence) {
  nn::Var table = tape.parameter(table_);
  std::vector<nn::Var> out;
  out.reserve(sentence.size());
  for (char32_t ch : sentence) out.push_back(nn::row(table, row_of(ch)));
  return out;
}

void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.sentences.size()));
  for (const auto& sentence : file.sentences) {
    const std::size_t dim = sentence.empty() ? 0 : sentence.front().size();
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(sentence.size()));
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
    for (const auto& vec : sentence) {
      if (vec.size() != dim) throw ArgumentError("embedding rows of one sentence must share a dimension");
      for (float v : vec) binary::write_f32(out, v);
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  const std::string name = path.string();
  binary::expect_magic(in, std::string(kMagic), name);
  EmbeddingFile file;
  const auto count = binary::read_le<std::uint32_t>(in, name + " sentence count");
  std::size_t dim_seen = 0;
  for (std::uint32_t s = 0; s < count; ++s) {
    const auto tau = binary::read_le<std::uint32_t>(in, name + " sentence length");
    const auto dim = binary::read_le<std::uint32_t>(in, name + " dimension");
    if (dim == 0 || (dim_seen != 0 && dim != dim_seen))
      throw FormatError(name + ": sentence " + std::to_string(s) + " has dimension " + std::to_string(dim));
    dim_seen = dim;
    std::vector<std::vector<float>> sentence(tau, std::vector<float>(dim));
    for (auto& vec : sentence)
      for (float& v : vec) v = binary::read_f32(in, name + " payload");
    file.sentences.push_back(std::move(sentence));
  }
  return file;
}

FileBackedEmbedding::FileBackedEmbedding(EmbeddingFile file) : file_(std::move(file)) {
  for (const auto& s : file_.sentences)
    if (!s.empty()) {
      dim_ = s.front().size();
      break;
    }
}

std::unique_ptr<FileBackedEmbedding> FileBackedEmbedding::load(const std::filesystem::path& path) {
  return std::make_unique<FileBackedEmbedding>(read_embedding_file(path));
}

std::vector<nn::Var> FileBackedEmbedding::embed_sentence(nn::Tape& tape, std::size_t sentence_index,
                                                         std::u32string_view sentence) {
  if (sentence_index >= file_.sentences.size())
    throw DataError("embedding file has no record for sentence " + std::to_string(sentence_index));
  const auto& record = file_.sentences[sentence_index];
  if (record.size() != sentence.size())
    throw DataError("embedding record for sentence " + std::to_string(sentence_index) + " has " +
                    std::to_string(record.size()) + " vectors but the sentence has " +
                    std::to_string(sentence.size()) + " characters");
  std::vector<nn::Var> out;
  out.reserve(record.size());
  for (const auto& vec : record)
    out.push_back(tape.constant(nn::Tensor::vector(std::vector<double>(vec.begin(), vec.end()))));
  return out;
}

}  // namespace fgn::embedding
