#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fgn/nn/tensor.hpp"

namespace fgn::glyph {

inline constexpr std::size_t kGlyphHeight = 50;
inline constexpr std::size_t kGlyphWidth = 50;

// Row-major 50x50 grayscale glyph, entries in [0, 1].
using GlyphMatrix = std::array<double, kGlyphHeight * kGlyphWidth>;

// Codepoint -> glyph graph. Characters missing from the atlas get a uniform
// [0,1] matrix generated from (fallback_seed, codepoint) and cached, so every
// lookup of the same character returns the same matrix. Lookups are safe to
// call from several threads.
class GlyphAtlas {
 public:
  explicit GlyphAtlas(std::uint64_t fallback_seed = 0);
  GlyphAtlas(const GlyphAtlas&) = delete;
  GlyphAtlas& operator=(const GlyphAtlas&) = delete;

  // Reads every `U+XXXX.pgm` in `dir` (binary P5, 50x50, maxval 255); pixels
  // are normalized as p/255. Throws IoError for an unreadable directory and
  // FormatError naming the file for a bad header or wrong dimensions.
  static std::unique_ptr<GlyphAtlas> load(const std::filesystem::path& dir, std::uint64_t fallback_seed = 0);

  void insert(char32_t codepoint, const GlyphMatrix& matrix);
  const GlyphMatrix& lookup(char32_t codepoint) const;
  bool contains(char32_t codepoint) const { return entries_.count(codepoint) != 0; }

  std::size_t size() const { return entries_.size(); }
  std::uint64_t fallback_seed() const { return fallback_seed_; }

 private:
  std::unordered_map<char32_t, GlyphMatrix> entries_;
  std::uint64_t fallback_seed_;
  mutable std::shared_mutex fallback_mutex_;
  // Node-based map: references stay valid while other threads insert.
  mutable std::unordered_map<char32_t, std::unique_ptr<GlyphMatrix>> fallback_;
};

// Glyph graphs of one sentence, in character order.
struct GraphSequence {
  std::vector<const GlyphMatrix*> graphs;

  std::size_t length() const { return graphs.size(); }
  // Dense [1, T, 50, 50] tensor, the CGS-CNN input layout.
  nn::Tensor to_tensor() const;
};

// Throws ArgumentError for an empty sentence.
GraphSequence sentence_to_graphs(const GlyphAtlas& atlas, std::u32string_view sentence);

// Binary P5 writer used for fixtures and the synthetic atlas.
void write_pgm(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels, std::size_t width,
               std::size_t height);
std::string pgm_filename(char32_t codepoint);

}  // namespace fgn::glyph
