#pragma once

#include <string>
#include <vector>

#include "fgn/tagger/labels.hpp"

namespace fgn::harness {

struct EntitySpan {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // inclusive
  std::size_t type = 0;   // index into LabelScheme::entity_types()

  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

// B (M)* E runs of one type and S singletons. Malformed runs are dropped.
std::vector<EntitySpan> decode_entities(const std::vector<std::size_t>& labels, const tagger::LabelScheme& scheme);

// Inverse of decode_entities for non-overlapping spans inside [0, length).
// Throws ArgumentError on overlap or out-of-range spans.
std::vector<std::size_t> encode_entities(const std::vector<EntitySpan>& spans, std::size_t length,
                                         const tagger::LabelScheme& scheme);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Entity-level exact-match scores; 0 wherever a denominator is 0. Throws
// ArgumentError when gold and predicted sequences are misaligned.
Prf evaluate(const std::vector<std::vector<std::size_t>>& gold, const std::vector<std::vector<std::size_t>>& predicted,
             const tagger::LabelScheme& scheme);

}  // namespace fgn::harness
