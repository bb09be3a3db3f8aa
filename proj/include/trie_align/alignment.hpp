#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trie_align/event_model.hpp"
#include "trie_align/trie.hpp"

namespace trie_align {

class AlignmentError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Move {
  ActivityCode log = kSkip;
  ActivityCode model = kSkip;

  [[nodiscard]] bool is_sync() const noexcept { return log != kSkip && model != kSkip; }
  [[nodiscard]] bool is_log_move() const noexcept { return log != kSkip && model == kSkip; }
  [[nodiscard]] bool is_model_move() const noexcept { return log == kSkip && model != kSkip; }

  static constexpr Move sync(ActivityCode a) noexcept { return {a, a}; }
  static constexpr Move log_move(ActivityCode a) noexcept { return {a, kSkip}; }
  static constexpr Move model_move(ActivityCode a) noexcept { return {kSkip, a}; }

  friend constexpr bool operator==(const Move&, const Move&) = default;
};

enum class AlignmentKind { prefix, complete };

struct Alignment {
  std::vector<Move> moves;
  AlignmentKind kind = AlignmentKind::prefix;

  friend bool operator==(const Alignment&, const Alignment&) = default;
};

// Unit cost per log or model move. Throws AlignmentError on a (>>,>>) step or
// a synchronous pair with different labels.
[[nodiscard]] int cost(std::span<const Move> moves);
[[nodiscard]] inline int cost(const Alignment& a) { return cost(std::span<const Move>(a.moves)); }

// True iff the log projection equals observed and the model projection spells
// a root-anchored trie path (ending at an end node for complete alignments).
[[nodiscard]] bool validate(const Alignment& alignment, std::span<const ActivityCode> observed, const Trie& trie);

// Extends a prefix-alignment whose model projection ends at node with model
// moves along the node's shortest completion.
[[nodiscard]] Alignment complete_from(const Alignment& prefix, NodeId node, const Trie& trie);

// Two-row text form:
//   trace | a | b | b  | c | >> |
//   model | a | b | >> | c | e  |
[[nodiscard]] std::string render(const Alignment& alignment, const ActivityTable& labels);
[[nodiscard]] nlohmann::json to_json(const Alignment& alignment, const ActivityTable& labels);

}  // namespace trie_align
