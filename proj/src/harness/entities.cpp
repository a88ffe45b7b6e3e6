#include "fgn/harness/entities.hpp"

#include <algorithm>

#include "fgn/errors.hpp"

namespace fgn::harness {

using tagger::Prefix;

std::vector<EntitySpan> decode_entities(const std::vector<std::size_t>& labels, const tagger::LabelScheme& scheme) {
  std::vector<EntitySpan> spans;
  bool open = false;
  EntitySpan current;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Prefix p = scheme.prefix(labels[i]);
    const std::size_t type = p == Prefix::O ? 0 : scheme.type(labels[i]);
    switch (p) {
      case Prefix::B:
        open = true;
        current = {i, i, type};
        break;
      case Prefix::M:
        if (!open || type != current.type) open = false;
        break;
      case Prefix::E:
        if (open && type == current.type) {
          current.end = i;
          spans.push_back(current);
        }
        open = false;
        break;
      case Prefix::S:
        spans.push_back({i, i, type});
        open = false;
        break;
      case Prefix::O:
        open = false;
        break;
    }
  }
  return spans;
}

std::vector<std::size_t> encode_entities(const std::vector<EntitySpan>& spans, std::size_t length,
                                         const tagger::LabelScheme& scheme) {
  std::vector<std::size_t> labels(length, 0);
  std::vector<bool> used(length, false);
  for (const EntitySpan& s : spans) {
    if (s.start > s.end || s.end >= length) throw ArgumentError("entity span out of range");
    for (std::size_t i = s.start; i <= s.end; ++i) {
      if (used[i]) throw ArgumentError("entity spans overlap at position " + std::to_string(i));
      used[i] = true;
    }
    if (s.start == s.end) {
      labels[s.start] = scheme.label(Prefix::S, s.type);
      continue;
    }
    labels[s.start] = scheme.label(Prefix::B, s.type);
    for (std::size_t i = s.start + 1; i < s.end; ++i) labels[i] = scheme.label(Prefix::M, s.type);
    labels[s.end] = scheme.label(Prefix::E, s.type);
  }
  return labels;
}

Prf evaluate(const std::vector<std::vector<std::size_t>>& gold, const std::vector<std::vector<std::size_t>>& predicted,
             const tagger::LabelScheme& scheme) {
  if (gold.size() != predicted.size())
    throw ArgumentError("evaluate: " + std::to_string(gold.size()) + " gold vs " + std::to_string(predicted.size()) +
                        " predicted sentences");
  std::size_t tp = 0, n_gold = 0, n_pred = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != predicted[s].size())
      throw ArgumentError("evaluate: sentence " + std::to_string(s) + " has misaligned label sequences");
    auto g = decode_entities(gold[s], scheme);
    auto p = decode_entities(predicted[s], scheme);
    n_gold += g.size();
    n_pred += p.size();
    std::sort(g.begin(), g.end());
    for (const EntitySpan& e : p)
      if (std::binary_search(g.begin(), g.end(), e)) ++tp;
  }
  Prf r;
  r.precision = n_pred ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
  r.recall = n_gold ? static_cast<double>(tp) / static_cast<double>(n_gold) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace fgn::harness
