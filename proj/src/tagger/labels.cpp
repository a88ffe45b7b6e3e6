#include "fgn/tagger/labels.hpp"

#include <algorithm>

#include "fgn/errors.hpp"

namespace fgn::tagger {

LabelScheme::LabelScheme(std::vector<std::string> entity_types) : types_(std::move(entity_types)) {
  std::sort(types_.begin(), types_.end());
  types_.erase(std::unique(types_.begin(), types_.end()), types_.end());
  for (const auto& t : types_)
    if (t.empty()) throw ArgumentError("entity type names must be non-empty");
}

std::string LabelScheme::name(std::size_t label) const {
  if (label >= size()) throw ArgumentError("label index " + std::to_string(label) + " out of range");
  if (label == 0) return "O";
  static constexpr char kPrefix[] = {'B', 'M', 'E', 'S'};
  return std::string(1, kPrefix[(label - 1) % 4]) + "-" + types_[type(label)];
}

std::optional<std::size_t> LabelScheme::index_of(const std::string& text) const {
  auto parts = split_label(text);
  if (!parts) return std::nullopt;
  if (parts->first == Prefix::O) return 0;
  auto it = std::lower_bound(types_.begin(), types_.end(), parts->second);
  if (it == types_.end() || *it != parts->second) return std::nullopt;
  return label(parts->first, static_cast<std::size_t>(it - types_.begin()));
}

std::size_t LabelScheme::label(Prefix prefix, std::size_t t) const {
  if (prefix == Prefix::O) return 0;
  if (t >= types_.size()) throw ArgumentError("entity type index out of range");
  return 1 + 4 * t + static_cast<std::size_t>(prefix);
}

Prefix LabelScheme::prefix(std::size_t label) const {
  if (label >= size()) throw ArgumentError("label index " + std::to_string(label) + " out of range");
  if (label == 0) return Prefix::O;
  return static_cast<Prefix>((label - 1) % 4);
}

bool LabelScheme::valid_transition(std::size_t from, std::size_t to) const {
  const Prefix pf = prefix(from), pt = prefix(to);
  if (pf == Prefix::B || pf == Prefix::M) return (pt == Prefix::M || pt == Prefix::E) && type(from) == type(to);
  return pt == Prefix::B || pt == Prefix::S || pt == Prefix::O;
}

bool LabelScheme::valid_start(std::size_t label) const {
  const Prefix p = prefix(label);
  return p == Prefix::B || p == Prefix::S || p == Prefix::O;
}

bool LabelScheme::valid_end(std::size_t label) const {
  const Prefix p = prefix(label);
  return p == Prefix::E || p == Prefix::S || p == Prefix::O;
}

std::optional<std::pair<Prefix, std::string>> split_label(const std::string& label) {
  if (label == "O") return std::make_pair(Prefix::O, std::string());
  if (label.size() < 3 || label[1] != '-') return std::nullopt;
  Prefix p;
  switch (label[0]) {
    case 'B':
      p = Prefix::B;
      break;
    case 'M':
      p = Prefix::M;
      break;
    case 'E':
      p = Prefix::E;
      break;
    case 'S':
      p = Prefix::S;
      break;
    default:
      return std::nullopt;
  }
  return std::make_pair(p, label.substr(2));
}

}  // namespace fgn::tagger
