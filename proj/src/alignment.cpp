#include "trie_align/alignment.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace trie_align {

int cost(std::span<const Move> moves) {
  int total = 0;
  for (const auto& m : moves) {
    if (m.log == kSkip && m.model == kSkip) throw AlignmentError("illegal (>>, >>) move");
    if (m.is_sync()) {
      if (m.log != m.model) throw AlignmentError("synchronous move with different labels");
    } else {
      ++total;
    }
  }
  return total;
}

bool validate(const Alignment& alignment, std::span<const ActivityCode> observed, const Trie& trie) {
  std::size_t next_log = 0;
  NodeId node = trie.root();
  for (const auto& m : alignment.moves) {
    if (m.log == kSkip && m.model == kSkip) return false;
    if (m.is_sync() && m.log != m.model) return false;
    if (m.log != kSkip) {
      if (next_log >= observed.size() || observed[next_log] != m.log) return false;
      ++next_log;
    }
    if (m.model != kSkip) {
      auto child = trie.get_child(node, m.model);
      if (!child) return false;
      node = *child;
    }
  }
  if (next_log != observed.size()) return false;
  if (alignment.kind == AlignmentKind::complete && !trie.node(node).is_end) return false;
  return true;
}

Alignment complete_from(const Alignment& prefix, NodeId node, const Trie& trie) {
  Alignment out = prefix;
  out.kind = AlignmentKind::complete;
  for (ActivityCode a : trie.min_completion_path(node)) out.moves.push_back(Move::model_move(a));
  return out;
}

namespace {

std::string label_or_skip(ActivityCode code, const ActivityTable& labels) {
  return code == kSkip ? std::string(">>") : labels.label(code);
}

}  // namespace

std::string render(const Alignment& alignment, const ActivityTable& labels) {
  std::string top = "trace |";
  std::string bottom = "model |";
  for (const auto& m : alignment.moves) {
    const auto a = label_or_skip(m.log, labels);
    const auto b = label_or_skip(m.model, labels);
    const auto width = std::max(a.size(), b.size());
    top += " " + a + std::string(width - a.size(), ' ') + " |";
    bottom += " " + b + std::string(width - b.size(), ' ') + " |";
  }
  return top + "\n" + bottom + "\n";
}

nlohmann::json to_json(const Alignment& alignment, const ActivityTable& labels) {
  auto moves = nlohmann::json::array();
  for (const auto& m : alignment.moves) {
    moves.push_back({{"log", label_or_skip(m.log, labels)}, {"model", label_or_skip(m.model, labels)}});
  }
  return moves;
}

}  // namespace trie_align
