#include "fgn/glyph/atlas.hpp"

#include <cctype>
#include <fstream>
#include <mutex>
#include <random>
#include <regex>

#include "fgn/errors.hpp"

namespace fgn::glyph {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in, const std::string& file) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw FormatError(file + ": truncated PGM header");
  return tok;
}

std::size_t header_number(std::istream& in, const std::string& file, const char* field) {
  std::string tok = next_token(in, file);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw FormatError(file + ": malformed PGM " + field + " '" + tok + "'");
  return std::stoul(tok);
}

GlyphMatrix read_pgm(const std::filesystem::path& path) {
  const std::string file = path.filename().string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (next_token(in, file) != "P5") throw FormatError(file + ": not a binary PGM (P5)");
  std::size_t width = header_number(in, file, "width");
  std::size_t height = header_number(in, file, "height");
  std::size_t maxval = header_number(in, file, "maxval");
  if (width != kGlyphWidth || height != kGlyphHeight)
    throw FormatError(file + ": glyph must be 50x50, got " + std::to_string(width) + "x" + std::to_string(height));
  if (maxval != 255) throw FormatError(file + ": PGM maxval must be 255, got " + std::to_string(maxval));
  std::vector<unsigned char> pixels(width * height);
  if (!in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    throw FormatError(file + ": truncated pixel payload");
  GlyphMatrix m;
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = pixels[i] / 255.0;
  return m;
}

}  // namespace

GlyphAtlas::GlyphAtlas(std::uint64_t fallback_seed) : fallback_seed_(fallback_seed) {}

std::unique_ptr<GlyphAtlas> GlyphAtlas::load(const std::filesystem::path& dir, std::uint64_t fallback_seed) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("atlas directory unreadable: " + dir.string());
  auto atlas = std::make_unique<GlyphAtlas>(fallback_seed);
  static const std::regex name_re("U\\+([0-9A-F]{4,6})\\.pgm");
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw IoError("atlas directory unreadable: " + dir.string() + ": " + ec.message());
  for (const auto& entry : it) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || !std::regex_match(name, m, name_re)) continue;
    auto cp = static_cast<char32_t>(std::stoul(m[1].str(), nullptr, 16));
    atlas->insert(cp, read_pgm(entry.path()));
  }
  return atlas;
}

void GlyphAtlas::insert(char32_t codepoint, const GlyphMatrix& matrix) {
  for (double v : matrix)
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("glyph entries must lie in [0,1]");
  entries_[codepoint] = matrix;
}

const GlyphMatrix& GlyphAtlas::lookup(char32_t codepoint) const {
  if (auto it = entries_.find(codepoint); it != entries_.end()) return it->second;
  {
    std::shared_lock lock(fallback_mutex_);
    if (auto it = fallback_.find(codepoint); it != fallback_.end()) return *it->second;
  }
  std::unique_lock lock(fallback_mutex_);
  auto& slot = fallback_[codepoint];
  if (!slot) {
    std::seed_seq seq{static_cast<std::uint32_t>(fallback_seed_), static_cast<std::uint32_t>(fallback_seed_ >> 32),
                      static_cast<std::uint32_t>(codepoint)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    auto m = std::make_unique<GlyphMatrix>();
    for (double& v : *m) v = dist(rng);
    slot = std::move(m);
  }
  return *slot;
}

nn::Tensor GraphSequence::to_tensor() const {
  nn::Tensor t({1, graphs.size(), kGlyphHeight, kGlyphWidth});
  auto data = t.data();
  for (std::size_t i = 0; i < graphs.size(); ++i)
    std::copy(graphs[i]->begin(), graphs[i]->end(), data.begin() + i * kGlyphHeight * kGlyphWidth);
  return t;
}

GraphSequence sentence_to_graphs(const GlyphAtlas& atlas, std::u32string_view sentence) {
  if (sentence.empty()) throw ArgumentError("sentence_to_graphs: empty sentence");
  GraphSequence seq;
  seq.graphs.reserve(sentence.size());
  for (char32_t ch : sentence) seq.graphs.push_back(&atlas.lookup(ch));
  return seq;
}

void write_pgm(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels, std::size_t width,
               std::size_t height) {
  if (pixels.size() != width * height) throw ArgumentError("write_pgm: pixel count does not match dimensions");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

std::string pgm_filename(char32_t codepoint) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "U+%04X.pgm", static_cast<unsigned>(codepoint));
  return buf;
}

}  // namespace fgn::glyph
