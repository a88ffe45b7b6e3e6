#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fgn/cgs/cgs_cnn.hpp"
#include "fgn/embedding/embedding.hpp"
#include "fgn/fusion/fusion.hpp"
#include "fgn/glyph/atlas.hpp"
#include "fgn/harness/config.hpp"
#include "fgn/harness/corpus.hpp"
#include "fgn/tagger/bilstm.hpp"
#include "fgn/tagger/crf.hpp"

namespace fgn::harness {

// The full tagger: embeddings and CGS-CNN glyph vectors per character, fused,
// encoded by the (Bi)LSTM and scored by the CRF.
class FgnModel {
 public:
  // `vocabulary` feeds the lookup-table provider and is ignored for file_backed.
  FgnModel(const RunConfig& config, tagger::LabelScheme scheme, std::vector<char32_t> vocabulary,
           std::shared_ptr<const glyph::GlyphAtlas> atlas);

  // file_backed models read c_v from here; switch per dataset.
  void set_file_embeddings(std::shared_ptr<embedding::FileBackedEmbedding> embeddings);

  // Per-character representation x_t (before the tagger).
  std::vector<nn::Var> represent(nn::Tape& tape, const std::u32string& chars, std::size_t index, bool training,
                                 std::mt19937_64& rng);
  // [tau, L] CRF emission scores.
  nn::Var emissions(nn::Tape& tape, const std::u32string& chars, std::size_t index, bool training,
                    std::mt19937_64& rng);
  // -sum log P(y|s) over the batch.
  nn::Var loss(nn::Tape& tape, const std::vector<const TaggedSentence*>& batch, bool training, std::mt19937_64& rng);
  // Viterbi labels with dropout off.
  std::vector<std::size_t> predict(const std::u32string& chars, std::size_t index = 0);

  std::vector<nn::Parameter*> parameters();

  const RunConfig& config() const { return config_; }
  const tagger::LabelScheme& scheme() const { return scheme_; }
  const std::vector<char32_t>& vocabulary() const { return vocabulary_; }
  const glyph::GlyphAtlas& atlas() const { return *atlas_; }

  // FGNMDL1 with the config, label scheme and vocabulary in the JSON metadata.
  void save(const std::filesystem::path& path);
  // The atlas is not stored in the model; pass one (or nullptr to load the
  // directory recorded at training time).
  static std::unique_ptr<FgnModel> load(const std::filesystem::path& path,
                                        std::shared_ptr<const glyph::GlyphAtlas> atlas = nullptr);

 private:
  std::pair<nn::Var, nn::Var> crf_boundary(nn::Tape& tape);

  RunConfig config_;
  tagger::LabelScheme scheme_;
  std::vector<char32_t> vocabulary_;
  std::shared_ptr<const glyph::GlyphAtlas> atlas_;
  std::unique_ptr<embedding::LookupTableEmbedding> table_;
  std::shared_ptr<embedding::FileBackedEmbedding> file_embeddings_;
  std::unique_ptr<cgs::CgsCnn> cnn_;
  std::unique_ptr<fusion::Fusion> fusion_;
  std::unique_ptr<tagger::BiLstm> encoder_;
  tagger::CrfParams crf_;
  tagger::TransitionMask mask_;
};

// Characters of the corpus, sorted and unique.
std::vector<char32_t> corpus_vocabulary(const Corpus& corpus);

}  // namespace fgn::harness
