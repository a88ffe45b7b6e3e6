#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fgn::tagger {

enum class Prefix { B, M, E, S, O };

// BMES x entity types plus O. Label 0 is O; type t (in sorted order) owns
// labels 1+4t .. 4+4t as B, M, E, S.
class LabelScheme {
 public:
  LabelScheme() = default;
  explicit LabelScheme(std::vector<std::string> entity_types);

  std::size_t size() const { return 4 * types_.size() + 1; }
  const std::vector<std::string>& entity_types() const { return types_; }

  std::string name(std::size_t label) const;
  std::optional<std::size_t> index_of(const std::string& label) const;
  std::size_t label(Prefix prefix, std::size_t type) const;
  Prefix prefix(std::size_t label) const;
  // Entity type index; meaningless for O.
  std::size_t type(std::size_t label) const { return (label - 1) / 4; }

  // BMES well-formedness of the bigram (from, to).
  bool valid_transition(std::size_t from, std::size_t to) const;
  bool valid_start(std::size_t label) const;
  bool valid_end(std::size_t label) const;

  friend bool operator==(const LabelScheme&, const LabelScheme&) = default;

 private:
  std::vector<std::string> types_;
};

// Splits "B-PER" into (B, "PER") and "O" into (O, ""). Returns nullopt for any
// other shape.
std::optional<std::pair<Prefix, std::string>> split_label(const std::string& label);

}  // namespace fgn::tagger
