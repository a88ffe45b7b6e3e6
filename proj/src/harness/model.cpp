#include "fgn/harness/model.hpp"

#include <algorithm>

#include "fgn/errors.hpp"
#include "fgn/nn/serialize.hpp"

namespace fgn::harness {

FgnModel::FgnModel(const RunConfig& config, tagger::LabelScheme scheme, std::vector<char32_t> vocabulary,
                   std::shared_ptr<const glyph::GlyphAtlas> atlas)
    : config_(config), scheme_(std::move(scheme)), vocabulary_(std::move(vocabulary)), atlas_(std::move(atlas)) {
  config_.validate();
  if (!atlas_) throw ArgumentError("FgnModel needs a glyph atlas");
  std::sort(vocabulary_.begin(), vocabulary_.end());
  vocabulary_.erase(std::unique(vocabulary_.begin(), vocabulary_.end()), vocabulary_.end());
  // Parameter order is fixed so a seed always gives the same initialization.
  std::mt19937_64 rng(config_.seed);
  if (config_.embedding.kind == embedding::ProviderKind::lookup_table)
    table_ = std::make_unique<embedding::LookupTableEmbedding>(vocabulary_, config_.embedding.dim,
                                                               config_.embedding.frozen, rng);
  cnn_ = std::make_unique<cgs::CgsCnn>(config_.cnn, rng);
  fusion_ = std::make_unique<fusion::Fusion>(config_.window_spec(), config_.fusion_variant, config_.fusion_output, rng);
  encoder_ = std::make_unique<tagger::BiLstm>(fusion_->output_dim(), config_.hidden_dim, config_.tagger_variant, rng);
  crf_ = tagger::CrfParams(scheme_.size(), encoder_->output_dim(), rng);
  mask_ = tagger::bmes_mask(scheme_);
}

void FgnModel::set_file_embeddings(std::shared_ptr<embedding::FileBackedEmbedding> embeddings) {
  if (embeddings && embeddings->sentence_count() > 0 && embeddings->dim() != config_.embedding.dim)
    throw DataError("embedding file has dimension " + std::to_string(embeddings->dim()) + ", model expects " +
                    std::to_string(config_.embedding.dim));
  file_embeddings_ = std::move(embeddings);
}

std::vector<nn::Var> FgnModel::represent(nn::Tape& tape, const std::u32string& chars, std::size_t index, bool training,
                                         std::mt19937_64& rng) {
  if (chars.empty()) throw ArgumentError("cannot tag an empty sentence");
  std::vector<nn::Var> char_vecs;
  if (table_) {
    char_vecs = table_->embed_sentence(tape, index, chars);
  } else {
    if (!file_embeddings_) throw DataError("file_backed model has no embedding file attached");
    char_vecs = file_embeddings_->embed_sentence(tape, index, chars);
  }
  auto glyph_vecs = cnn_->encode(tape, glyph::sentence_to_graphs(*atlas_, chars), training, rng);
  std::vector<nn::Var> xs;
  xs.reserve(chars.size());
  for (std::size_t t = 0; t < chars.size(); ++t) xs.push_back(fusion_->fuse_character(tape, char_vecs[t], glyph_vecs[t]));
  return xs;
}

nn::Var FgnModel::emissions(nn::Tape& tape, const std::u32string& chars, std::size_t index, bool training,
                            std::mt19937_64& rng) {
  auto hidden = encoder_->encode(tape, represent(tape, chars, index, training, rng));
  if (config_.tagger_variant != tagger::TaggerVariant::none)
    for (nn::Var& h : hidden) h = nn::dropout(h, config_.lstm_dropout, training, rng);
  return tagger::emission_scores(hidden, tape.parameter(crf_.emission));
}

std::pair<nn::Var, nn::Var> FgnModel::crf_boundary(nn::Tape& tape) {
  nn::Var transitions = tape.parameter(crf_.transitions);
  nn::Var start = tape.parameter(crf_.start);
  if (config_.hard_mask) {
    transitions = nn::add(transitions, tape.constant(mask_.transitions));
    start = nn::add(start, tape.constant(mask_.start));
  }
  return {transitions, start};
}

nn::Var FgnModel::loss(nn::Tape& tape, const std::vector<const TaggedSentence*>& batch, bool training,
                       std::mt19937_64& rng) {
  std::vector<tagger::SentenceScores> scores;
  scores.reserve(batch.size());
  for (const TaggedSentence* s : batch) scores.push_back({emissions(tape, s->chars, s->index, training, rng), s->labels});
  auto [transitions, start] = crf_boundary(tape);
  return tagger::nll_loss(scores, transitions, start);
}

std::vector<std::size_t> FgnModel::predict(const std::u32string& chars, std::size_t index) {
  nn::Tape tape;
  std::mt19937_64 unused(0);
  nn::Var em = emissions(tape, chars, index, false, unused);
  auto [transitions, start] = crf_boundary(tape);
  return tagger::viterbi_decode(em.value(), transitions.value(), start.value());
}

std::vector<nn::Parameter*> FgnModel::parameters() {
  std::vector<nn::Parameter*> params;
  auto append = [&](std::vector<nn::Parameter*> more) { params.insert(params.end(), more.begin(), more.end()); };
  if (table_) append(table_->parameters());
  append(cnn_->parameters());
  append(fusion_->parameters());
  append(encoder_->parameters());
  append(crf_.parameters());
  return params;
}

void FgnModel::save(const std::filesystem::path& path) {
  nlohmann::json meta;
  meta["config"] = config_.to_json();
  meta["entity_types"] = scheme_.entity_types();
  std::vector<std::uint32_t> vocab(vocabulary_.begin(), vocabulary_.end());
  meta["vocabulary"] = vocab;
  nn::ModelFile file;
  file.metadata = meta.dump();
  file.records = nn::snapshot_parameters(parameters());
  nn::save_model_file(path, file);
}

std::unique_ptr<FgnModel> FgnModel::load(const std::filesystem::path& path,
                                         std::shared_ptr<const glyph::GlyphAtlas> atlas) {
  nn::ModelFile file = nn::load_model_file(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(file.metadata);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": metadata is not JSON");
  }
  if (!meta.contains("config") || !meta.contains("entity_types") || !meta.contains("vocabulary"))
    throw FormatError(path.string() + ": metadata lacks config, entity_types or vocabulary");
  RunConfig config = RunConfig::from_json(meta["config"]);
  tagger::LabelScheme scheme(meta["entity_types"].get<std::vector<std::string>>());
  auto vocab32 = meta["vocabulary"].get<std::vector<std::uint32_t>>();
  std::vector<char32_t> vocabulary(vocab32.begin(), vocab32.end());
  if (!atlas) {
    if (config.data.atlas.empty()) {
      atlas = std::make_shared<glyph::GlyphAtlas>(config.atlas_fallback_seed);
    } else {
      atlas = glyph::GlyphAtlas::load(config.data.atlas, config.atlas_fallback_seed);
    }
  }
  auto model = std::make_unique<FgnModel>(config, std::move(scheme), std::move(vocabulary), std::move(atlas));
  nn::assign_parameters(file, model->parameters());
  return model;
}

std::vector<char32_t> corpus_vocabulary(const Corpus& corpus) {
  std::vector<char32_t> vocab;
  for (const auto& s : corpus.sentences) vocab.insert(vocab.end(), s.chars.begin(), s.chars.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  return vocab;
}

}  // namespace fgn::harness
