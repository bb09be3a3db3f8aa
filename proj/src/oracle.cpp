#include "trie_align/oracle.hpp"

#include <algorithm>
#include <limits>

namespace trie_align::oracle {

CostTable::CostTable(std::span<const ActivityCode> trace, const Trie& trie)
    : trace_(trace), trie_(trie), columns_(trace.size() + 1) {
  if (columns_ * trie.node_count() > kMaxCells) {
    throw OracleError("instance too large for the oracle: " + std::to_string(trace.size()) + " events x " +
                      std::to_string(trie.node_count()) + " nodes exceeds " + std::to_string(kMaxCells) +
                      " cells; use shorter traces or a smaller trie");
  }
  cells_.assign(columns_ * trie.node_count(), 0);
  for (std::size_t i = 0; i < columns_; ++i) cells_[i] = static_cast<int>(i);
  // Ids are topologically ordered, so parents are filled first.
  for (std::size_t id = 1; id < trie.node_count(); ++id) {
    const auto& node = trie.node(static_cast<NodeId>(id));
    const int* parent = &cells_[static_cast<std::size_t>(node.parent) * columns_];
    int* row = &cells_[id * columns_];
    row[0] = parent[0] + 1;
    for (std::size_t i = 1; i < columns_; ++i) {
      const int diagonal = parent[i - 1] + (node.label == trace[i - 1] ? 0 : 2);
      row[i] = std::min({diagonal, parent[i] + 1, row[i - 1] + 1});
    }
  }
}

std::vector<Move> CostTable::backtrack(NodeId node) const {
  std::vector<Move> reversed;
  std::size_t i = columns_ - 1;
  NodeId n = node;
  while (n != kRoot || i > 0) {
    const int here = at(n, i);
    if (n == kRoot) {
      reversed.push_back(Move::log_move(trace_[i - 1]));
      --i;
      continue;
    }
    const auto& tn = trie_.node(n);
    // Walking backwards, asynchronous moves are taken first so that deviations
    // sit as late as possible in the forward alignment.
    if (i > 0 && at(n, i - 1) + 1 == here) {
      reversed.push_back(Move::log_move(trace_[i - 1]));
      --i;
    } else if (at(tn.parent, i) + 1 == here) {
      reversed.push_back(Move::model_move(tn.label));
      n = tn.parent;
    } else if (i > 0 && tn.label == trace_[i - 1] && at(tn.parent, i - 1) == here) {
      reversed.push_back(Move::sync(tn.label));
      n = tn.parent;
      --i;
    } else {
      // Substitution: log move then model move.
      reversed.push_back(Move::model_move(tn.label));
      reversed.push_back(Move::log_move(trace_[i - 1]));
      n = tn.parent;
      --i;
    }
  }
  std::reverse(reversed.begin(), reversed.end());
  return reversed;
}

OptimalResult optimal_prefix(std::span<const ActivityCode> trace, const Trie& trie) {
  const CostTable table(trace, trie);
  const std::size_t last = trace.size();
  OptimalResult best;
  best.cost = std::numeric_limits<int>::max();
  for (std::size_t id = 0; id < trie.node_count(); ++id) {
    const int c = table.at(static_cast<NodeId>(id), last);
    if (c < best.cost) {
      best.cost = c;
      best.node = static_cast<NodeId>(id);
    }
  }
  best.alignment.moves = table.backtrack(best.node);
  best.alignment.kind = AlignmentKind::prefix;
  return best;
}

OptimalResult optimal_complete(std::span<const ActivityCode> trace, const Trie& trie) {
  const CostTable table(trace, trie);
  const std::size_t last = trace.size();
  OptimalResult best;
  best.cost = std::numeric_limits<int>::max();
  for (std::size_t id = 0; id < trie.node_count(); ++id) {
    const auto nid = static_cast<NodeId>(id);
    const int c = table.at(nid, last) + trie.node(nid).min_to_end;
    if (c < best.cost) {
      best.cost = c;
      best.node = nid;
    }
  }
  Alignment prefix{table.backtrack(best.node), AlignmentKind::prefix};
  best.alignment = complete_from(prefix, best.node, trie);
  return best;
}

namespace {

struct Enumerator {
  std::span<const ActivityCode> trace;
  const Trie& trie;
  std::size_t depth_bound;
  int best = std::numeric_limits<int>::max();

  void visit(NodeId node, std::size_t position, std::size_t depth, int cost) {
    if (cost >= best) return;
    if (position == trace.size()) best = cost;  // any node may end a prefix
    if (depth == depth_bound) return;
    if (position < trace.size()) {
      if (auto child = trie.get_child(node, trace[position])) visit(*child, position + 1, depth + 1, cost);
      visit(node, position + 1, depth + 1, cost + 1);
    }
    for (NodeId child : trie.children(node)) visit(child, position, depth + 1, cost + 1);
  }
};

}  // namespace

int exhaustive_prefix(std::span<const ActivityCode> trace, const Trie& trie, std::size_t depth_bound) {
  if (depth_bound < 2 * trace.size()) {
    throw OracleError("bound too small: exhaustive search over " + std::to_string(trace.size()) +
                      " events needs a depth bound of at least " + std::to_string(2 * trace.size()));
  }
  Enumerator e{trace, trie, depth_bound};
  e.visit(trie.root(), 0, 0, 0);
  return e.best;
}

}  // namespace trie_align::oracle
