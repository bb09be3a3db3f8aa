#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trie_align/event_model.hpp"
#include "trie_align/rational.hpp"

namespace trie_align {

using NodeId = std::int32_t;

inline constexpr NodeId kNoNode = -1;
inline constexpr NodeId kRoot = 0;

class TrieError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrieNode {
  NodeId id = kNoNode;
  ActivityCode label = kSkip;  // root carries kSkip
  std::int32_t level = 0;
  NodeId parent = kNoNode;
  bool is_end = false;
  std::int32_t min_to_end = 0;
  std::int32_t max_to_end = 0;

  friend bool operator==(const TrieNode&, const TrieNode&) = default;
};

// Immutable prefix tree over a proxy log. Node ids are dense, the root is id 0
// and every parent id is smaller than its children's ids. Children of a node
// are kept sorted by activity code.
class Trie {
 public:
  static Trie build(const ProxyLog& proxy);

  [[nodiscard]] NodeId root() const noexcept { return kRoot; }
  [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::size_t end_count() const noexcept { return end_count_; }
  [[nodiscard]] const Rational& avg_leaf_depth() const noexcept { return avg_leaf_depth_; }
  [[nodiscard]] std::size_t max_branching() const noexcept { return max_branching_; }
  [[nodiscard]] std::int32_t depth() const noexcept { return depth_; }
  [[nodiscard]] const ActivityTable& alphabet() const noexcept { return alphabet_; }

  [[nodiscard]] const TrieNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] std::span<const NodeId> children(NodeId id) const;
  [[nodiscard]] bool is_leaf(NodeId id) const { return children(id).empty(); }

  [[nodiscard]] std::optional<NodeId> get_child(NodeId id, ActivityCode activity) const;

  // Terminal node of the downward path start, start.child(seq[1]), ...
  // spelling seq, where start itself must carry seq[0].
  [[nodiscard]] std::optional<NodeId> path_match(NodeId start, std::span<const ActivityCode> seq) const;

  // Shortest label path from id to an end node. Ties resolve to the smallest
  // child activity code.
  [[nodiscard]] std::vector<ActivityCode> min_completion_path(NodeId id) const;

  // Activity labels spelled by root -> id.
  [[nodiscard]] std::vector<ActivityCode> path_to(NodeId id) const;
  // Node reached by walking seq from the root, if any.
  [[nodiscard]] std::optional<NodeId> walk(std::span<const ActivityCode> seq) const;

  [[nodiscard]] std::string serialize() const;
  static Trie load(std::string_view payload);

  friend bool operator==(const Trie& a, const Trie& b);

  static constexpr int kFormatVersion = 1;

 private:
  Trie() = default;
  void finalize(std::vector<std::vector<NodeId>> child_lists);

  std::vector<TrieNode> nodes_;
  std::vector<std::uint32_t> child_offset_;  // size node_count + 1
  std::vector<NodeId> child_ids_;
  std::vector<ActivityCode> child_labels_;
  ActivityTable alphabet_;
  std::size_t end_count_ = 0;
  std::size_t max_branching_ = 0;
  std::int32_t depth_ = 0;
  Rational avg_leaf_depth_;
};

}  // namespace trie_align
