#include "fgn/harness/config.hpp"

#include <fstream>
#include <set>

#include "fgn/errors.hpp"

namespace fgn::harness {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError("config section '" + where + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ValidationError("unknown config key '" + where + (where.empty() ? "" : ".") + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("config key '" + where + "." + key + "': " + e.what());
  }
}

void check_rate(double r, const std::string& name) {
  if (!(r >= 0.0 && r < 1.0)) throw ValidationError(name + " must lie in [0, 1)");
}

}  // namespace

fusion::WindowSpec RunConfig::window_spec() const {
  return {embedding.dim, char_window, char_stride, cgs::kGlyphVectorDim, glyph_window, glyph_stride};
}

void RunConfig::validate() const {
  cnn.validate();
  embedding.validate();
  if (fusion_variant != fusion::FusionVariant::concat) fusion::validate_window(window_spec());
  if (hidden_dim == 0) throw ValidationError("tagger.hidden_dim must be positive");
  check_rate(lstm_dropout, "tagger.dropout");
  check_rate(cnn.dropout_rate, "cnn.dropout");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  reject_unknown(j, {"cnn", "fusion", "tagger", "embedding", "learning_rate", "fine_tune_learning_rate", "epochs",
                     "batch_size", "seed", "atlas_fallback_seed", "data"},
                 "");
  if (j.contains("cnn")) {
    const json& s = j["cnn"];
    reject_unknown(s, {"variant", "conv3d_channels", "pyramid_channels", "pool1d_window", "pool1d_stride", "dropout"},
                   "cnn");
    std::string variant = cgs::to_string(c.cnn.variant);
    read(s, "variant", variant, "cnn");
    c.cnn.variant = cgs::parse_cnn_variant(variant);
    read(s, "conv3d_channels", c.cnn.conv3d_channels, "cnn");
    read(s, "pyramid_channels", c.cnn.pyramid_channels, "cnn");
    read(s, "pool1d_window", c.cnn.pool1d_window, "cnn");
    read(s, "pool1d_stride", c.cnn.pool1d_stride, "cnn");
    read(s, "dropout", c.cnn.dropout_rate, "cnn");
  }
  if (j.contains("fusion")) {
    const json& s = j["fusion"];
    reject_unknown(s, {"variant", "output", "window"}, "fusion");
    std::string variant = fusion::to_string(c.fusion_variant), output = fusion::to_string(c.fusion_output);
    read(s, "variant", variant, "fusion");
    read(s, "output", output, "fusion");
    c.fusion_variant = fusion::parse_fusion_variant(variant);
    c.fusion_output = fusion::parse_fusion_output(output);
    if (s.contains("window")) {
      const json& w = s["window"];
      reject_unknown(w, {"k_c", "s_c", "k_g", "s_g"}, "fusion.window");
      read(w, "k_c", c.char_window, "fusion.window");
      read(w, "s_c", c.char_stride, "fusion.window");
      read(w, "k_g", c.glyph_window, "fusion.window");
      read(w, "s_g", c.glyph_stride, "fusion.window");
    }
  }
  if (j.contains("tagger")) {
    const json& s = j["tagger"];
    reject_unknown(s, {"variant", "hidden_dim", "dropout", "hard_mask"}, "tagger");
    std::string variant = tagger::to_string(c.tagger_variant);
    read(s, "variant", variant, "tagger");
    c.tagger_variant = tagger::parse_tagger_variant(variant);
    read(s, "hidden_dim", c.hidden_dim, "tagger");
    read(s, "dropout", c.lstm_dropout, "tagger");
    read(s, "hard_mask", c.hard_mask, "tagger");
  }
  if (j.contains("embedding")) {
    const json& s = j["embedding"];
    reject_unknown(s, {"kind", "dim", "frozen"}, "embedding");
    std::string kind = embedding::to_string(c.embedding.kind);
    read(s, "kind", kind, "embedding");
    c.embedding.kind = embedding::parse_provider_kind(kind);
    read(s, "dim", c.embedding.dim, "embedding");
    // file-backed vectors are frozen unless the file says otherwise (and then validation fails)
    if (c.embedding.kind == embedding::ProviderKind::file_backed) c.embedding.frozen = true;
    read(s, "frozen", c.embedding.frozen, "embedding");
  }
  read(j, "learning_rate", c.learning_rate, "");
  read(j, "fine_tune_learning_rate", c.fine_tune_learning_rate, "");
  read(j, "epochs", c.epochs, "");
  read(j, "batch_size", c.batch_size, "");
  read(j, "seed", c.seed, "");
  read(j, "atlas_fallback_seed", c.atlas_fallback_seed, "");
  if (j.contains("data")) {
    const json& s = j["data"];
    reject_unknown(s, {"train", "dev", "atlas", "train_embeddings", "dev_embeddings"}, "data");
    read(s, "train", c.data.train, "data");
    read(s, "dev", c.data.dev, "data");
    read(s, "atlas", c.data.atlas, "data");
    read(s, "train_embeddings", c.data.train_embeddings, "data");
    read(s, "dev_embeddings", c.data.dev_embeddings, "data");
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c = from_json(j);
  // Relative data paths resolve against the config file's directory.
  const auto base = path.parent_path();
  for (std::string* p : {&c.data.train, &c.data.dev, &c.data.atlas, &c.data.train_embeddings, &c.data.dev_embeddings})
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
  return c;
}

json RunConfig::to_json() const {
  return {
      {"cnn",
       {{"variant", cgs::to_string(cnn.variant)},
        {"conv3d_channels", cnn.conv3d_channels},
        {"pyramid_channels", cnn.pyramid_channels},
        {"pool1d_window", cnn.pool1d_window},
        {"pool1d_stride", cnn.pool1d_stride},
        {"dropout", cnn.dropout_rate}}},
      {"fusion",
       {{"variant", fusion::to_string(fusion_variant)},
        {"output", fusion::to_string(fusion_output)},
        {"window", {{"k_c", char_window}, {"s_c", char_stride}, {"k_g", glyph_window}, {"s_g", glyph_stride}}}}},
      {"tagger",
       {{"variant", tagger::to_string(tagger_variant)},
        {"hidden_dim", hidden_dim},
        {"dropout", lstm_dropout},
        {"hard_mask", hard_mask}}},
      {"embedding", {{"kind", embedding::to_string(embedding.kind)}, {"dim", embedding.dim}, {"frozen", embedding.frozen}}},
      {"learning_rate", learning_rate},
      {"fine_tune_learning_rate", fine_tune_learning_rate},
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"seed", seed},
      {"atlas_fallback_seed", atlas_fallback_seed},
      {"data",
       {{"train", data.train},
        {"dev", data.dev},
        {"atlas", data.atlas},
        {"train_embeddings", data.train_embeddings},
        {"dev_embeddings", data.dev_embeddings}}},
  };
}

RunConfig RunConfig::large_preset() {
  RunConfig c;
  c.embedding = {embedding::ProviderKind::file_backed, 768, true};
  c.char_window = 96;
  c.char_stride = 12;
  c.glyph_window = 8;
  c.glyph_stride = 1;
  c.hidden_dim = 764;
  return c;
}

}  // namespace fgn::harness
