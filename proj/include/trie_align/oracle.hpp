#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

#include "trie_align/alignment.hpp"
#include "trie_align/trie.hpp"

namespace trie_align::oracle {

// Cells allowed in one cost table (|trace| + 1) x |nodes|.
inline constexpr std::size_t kMaxCells = 10'000'000;

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimalResult {
  int cost = 0;
  NodeId node = kRoot;  // model-side end of the prefix part
  Alignment alignment;
};

// Dense edit-distance table over trie nodes x trace positions.
//   cost[root][0] = 0
//   cost[n][i] = min(cost[parent][i-1] + (label(n) == trace[i] ? 0 : 2),
//                    cost[parent][i] + 1,       model move
//                    cost[n][i-1] + 1)          log move
class CostTable {
 public:
  CostTable(std::span<const ActivityCode> trace, const Trie& trie);

  [[nodiscard]] int at(NodeId node, std::size_t position) const {
    return cells_[static_cast<std::size_t>(node) * columns_ + position];
  }
  [[nodiscard]] std::size_t positions() const noexcept { return columns_; }

  // Moves of an optimal prefix-alignment ending at (node, |trace|).
  [[nodiscard]] std::vector<Move> backtrack(NodeId node) const;

 private:
  std::span<const ActivityCode> trace_;
  const Trie& trie_;
  std::size_t columns_;
  std::vector<int> cells_;
};

// Throws OracleError when the table would exceed kMaxCells.
[[nodiscard]] OptimalResult optimal_prefix(std::span<const ActivityCode> trace, const Trie& trie);
[[nodiscard]] OptimalResult optimal_complete(std::span<const ActivityCode> trace, const Trie& trie);

// Branch-and-bound enumeration of move sequences of at most depth_bound steps.
// An optimal prefix-alignment never needs more than 2 * |trace| moves, so a
// smaller bound is rejected.
[[nodiscard]] int exhaustive_prefix(std::span<const ActivityCode> trace, const Trie& trie, std::size_t depth_bound);

}  // namespace trie_align::oracle
