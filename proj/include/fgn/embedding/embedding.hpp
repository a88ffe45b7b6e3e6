#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fgn/nn/ops.hpp"

namespace fgn::embedding {

enum class ProviderKind { lookup_table, file_backed };

std::string to_string(ProviderKind kind);
ProviderKind parse_provider_kind(const std::string& name);

struct EmbeddingProviderSpec {
  ProviderKind kind = ProviderKind::lookup_table;
  std::size_t dim = 32;
  bool frozen = false;

  // file_backed must be frozen; dim must be positive.
  void validate() const;
};

// Source of the per-character vectors c_v.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  // One vector of size dim() per character. `sentence_index` addresses the
  // record of file-backed providers and is ignored by the lookup table.
  virtual std::vector<nn::Var> embed_sentence(nn::Tape& tape, std::size_t sentence_index,
                                              std::u32string_view sentence) = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<nn::Parameter*> parameters() = 0;
};

// Trainable table with a shared UNK row (row 0) for unseen characters.
class LookupTableEmbedding : public EmbeddingProvider {
 public:
  LookupTableEmbedding(std::vector<char32_t> vocabulary, std::size_t dim, bool frozen, std::mt19937_64& rng);

  std::vector<nn::Var> embed_sentence(nn::Tape& tape, std::size_t sentence_index,
                                      std::u32string_view sentence) override;
  std::size_t dim() const override { return table_.value.dim(1); }
  std::vector<nn::Parameter*> parameters() override { return {&table_}; }

  std::size_t row_of(char32_t ch) const;
  const std::vector<char32_t>& vocabulary() const { return vocabulary_; }
  const nn::Parameter& table() const { return table_; }

 private:
  std::vector<char32_t> vocabulary_;
  std::map<char32_t, std::size_t> rows_;
  nn::Parameter table_;
};

// FGNEMB1 embedding file:
//   "FGNEMB1", u32 sentence count, then per sentence u32 tau, u32 dim and
//   tau*dim float32 values (row-major, one row per character), in dataset order.
// All little-endian.
struct EmbeddingFile {
  std::vector<std::vector<std::vector<float>>> sentences;  // [sentence][char][dim]
};

void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file);
// Throws IoError when unreadable, FormatError on bad magic, truncation, or
// inconsistent dims across records.
EmbeddingFile read_embedding_file(const std::filesystem::path& path);

// Replays externally produced contextual vectors verbatim; never trained.
class FileBackedEmbedding : public EmbeddingProvider {
 public:
  explicit FileBackedEmbedding(EmbeddingFile file);
  static std::unique_ptr<FileBackedEmbedding> load(const std::filesystem::path& path);

  // Throws DataError naming the index when the record is missing or its
  // length differs from the sentence.
  std::vector<nn::Var> embed_sentence(nn::Tape& tape, std::size_t sentence_index,
                                      std::u32string_view sentence) override;
  std::size_t dim() const override { return dim_; }
  std::vector<nn::Parameter*> parameters() override { return {}; }
  std::size_t sentence_count() const { return file_.sentences.size(); }

 private:
  EmbeddingFile file_;
  std::size_t dim_ = 0;
};

}  // namespace fgn::embedding
