#include "trie_align/trie.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace trie_align {

using nlohmann::json;

Trie Trie::build(const ProxyLog& proxy) {
  if (proxy.traces.empty()) throw TrieError("cannot build a trie from an empty proxy log");

  Trie trie;
  trie.nodes_.push_back(TrieNode{kRoot, kSkip, 0, kNoNode, false, 0, 0});
  std::vector<std::vector<NodeId>> child_lists(1);
  std::unordered_map<std::uint64_t, NodeId> edges;

  for (const auto& trace : proxy.traces) {
    if (trace.empty()) throw TrieError("proxy log contains an empty trace");
    NodeId current = kRoot;
    for (const auto& label : trace) {
      if (label.empty()) throw TrieError("proxy log contains an empty activity");
      const ActivityCode code = trie.alphabet_.intern(label);
      const std::uint64_t key = (static_cast<std::uint64_t>(current) << 32) | static_cast<std::uint32_t>(code);
      auto [it, inserted] = edges.try_emplace(key, static_cast<NodeId>(trie.nodes_.size()));
      if (inserted) {
        const auto& parent = trie.nodes_[static_cast<std::size_t>(current)];
        trie.nodes_.push_back(TrieNode{it->second, code, parent.level + 1, current, false, 0, 0});
        child_lists[static_cast<std::size_t>(current)].push_back(it->second);
        child_lists.emplace_back();
      }
      current = it->second;
    }
    trie.nodes_[static_cast<std::size_t>(current)].is_end = true;
  }
  trie.finalize(std::move(child_lists));
  return trie;
}

void Trie::finalize(std::vector<std::vector<NodeId>> child_lists) {
  const std::size_t n = nodes_.size();
  child_offset_.assign(n + 1, 0);
  child_ids_.clear();
  child_labels_.clear();
  child_ids_.reserve(n > 0 ? n - 1 : 0);
  child_labels_.reserve(n > 0 ? n - 1 : 0);
  max_branching_ = 0;
  for (std::size_t id = 0; id < n; ++id) {
    auto& list = child_lists[id];
    std::sort(list.begin(), list.end(), [&](NodeId a, NodeId b) {
      return nodes_[static_cast<std::size_t>(a)].label < nodes_[static_cast<std::size_t>(b)].label;
    });
    child_offset_[id] = static_cast<std::uint32_t>(child_ids_.size());
    for (NodeId c : list) {
      child_ids_.push_back(c);
      child_labels_.push_back(nodes_[static_cast<std::size_t>(c)].label);
    }
    max_branching_ = std::max(max_branching_, list.size());
  }
  child_offset_[n] = static_cast<std::uint32_t>(child_ids_.size());

  // Parents precede children, so a reverse sweep is a bottom-up pass.
  constexpr std::int32_t kUnreached = std::numeric_limits<std::int32_t>::max();
  for (std::size_t k = n; k-- > 0;) {
    auto& node = nodes_[k];
    std::int32_t lo = node.is_end ? 0 : kUnreached;
    std::int32_t hi = node.is_end ? 0 : -1;
    for (NodeId c : children(static_cast<NodeId>(k))) {
      const auto& child = nodes_[static_cast<std::size_t>(c)];
      lo = std::min(lo, child.min_to_end + 1);
      hi = std::max(hi, child.max_to_end + 1);
    }
    if (lo == kUnreached) throw TrieError("node " + std::to_string(k) + " cannot reach an end node");
    node.min_to_end = lo;
    node.max_to_end = hi;
  }

  end_count_ = 0;
  depth_ = 0;
  std::int64_t leaf_depth_sum = 0;
  std::int64_t leaf_count = 0;
  for (std::size_t id = 0; id < n; ++id) {
    const auto& node = nodes_[id];
    if (node.is_end) ++end_count_;
    depth_ = std::max(depth_, node.level);
    if (child_offset_[id] == child_offset_[id + 1]) {
      leaf_depth_sum += node.level;
      ++leaf_count;
    }
  }
  avg_leaf_depth_ = leaf_count ? Rational(leaf_depth_sum, leaf_count) : Rational(0);
}

std::span<const NodeId> Trie::children(NodeId id) const {
  const auto k = static_cast<std::size_t>(id);
  return {child_ids_.data() + child_offset_[k], child_ids_.data() + child_offset_[k + 1]};
}

std::optional<NodeId> Trie::get_child(NodeId id, ActivityCode activity) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) return std::nullopt;
  const auto k = static_cast<std::size_t>(id);
  const auto first = child_labels_.begin() + child_offset_[k];
  const auto last = child_labels_.begin() + child_offset_[k + 1];
  const auto it = std::lower_bound(first, last, activity);
  if (it == last || *it != activity) return std::nullopt;
  return child_ids_[static_cast<std::size_t>(it - child_labels_.begin())];
}

std::optional<NodeId> Trie::path_match(NodeId start, std::span<const ActivityCode> seq) const {
  if (seq.empty() || nodes_[static_cast<std::size_t>(start)].label != seq.front()) return std::nullopt;
  NodeId current = start;
  for (std::size_t k = 1; k < seq.size(); ++k) {
    auto next = get_child(current, seq[k]);
    if (!next) return std::nullopt;
    current = *next;
  }
  return current;
}

std::vector<ActivityCode> Trie::min_completion_path(NodeId id) const {
  std::vector<ActivityCode> path;
  NodeId current = id;
  while (!nodes_[static_cast<std::size_t>(current)].is_end) {
    const auto want = nodes_[static_cast<std::size_t>(current)].min_to_end - 1;
    for (NodeId c : children(current)) {
      if (nodes_[static_cast<std::size_t>(c)].min_to_end == want) {
        current = c;
        break;
      }
    }
    path.push_back(nodes_[static_cast<std::size_t>(current)].label);
  }
  return path;
}

std::vector<ActivityCode> Trie::path_to(NodeId id) const {
  std::vector<ActivityCode> path;
  for (NodeId cur = id; cur != kRoot; cur = nodes_[static_cast<std::size_t>(cur)].parent) {
    path.push_back(nodes_[static_cast<std::size_t>(cur)].label);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::optional<NodeId> Trie::walk(std::span<const ActivityCode> seq) const {
  NodeId current = kRoot;
  for (ActivityCode a : seq) {
    auto next = get_child(current, a);
    if (!next) return std::nullopt;
    current = *next;
  }
  return current;
}

bool operator==(const Trie& a, const Trie& b) {
  return a.nodes_ == b.nodes_ && a.child_offset_ == b.child_offset_ && a.child_ids_ == b.child_ids_ &&
         a.alphabet_ == b.alphabet_ && a.end_count_ == b.end_count_ && a.max_branching_ == b.max_branching_ &&
         a.avg_leaf_depth_ == b.avg_leaf_depth_;
}

// Payload layout:
//   {"format": "trie-align", "version": 1, "node_count", "end_count",
//    "avg_leaf_depth": {"num", "den", "value"}, "max_branching",
//    "alphabet": [labels...],
//    "nodes": [[label, parent, is_end, min_to_end, max_to_end], ...]}
// Root is node 0 and carries label -1.
std::string Trie::serialize() const {
  json nodes = json::array();
  for (const auto& n : nodes_) {
    nodes.push_back(json::array({n.label, n.parent, n.is_end ? 1 : 0, n.min_to_end, n.max_to_end}));
  }
  json doc = {
      {"format", "trie-align"},
      {"version", kFormatVersion},
      {"node_count", nodes_.size()},
      {"end_count", end_count_},
      {"avg_leaf_depth", {{"num", avg_leaf_depth_.num}, {"den", avg_leaf_depth_.den}, {"value", avg_leaf_depth_.to_double()}}},
      {"max_branching", max_branching_},
      {"alphabet", alphabet_.labels()},
      {"nodes", std::move(nodes)},
  };
  return doc.dump();
}

Trie Trie::load(std::string_view payload) {
  json doc;
  try {
    doc = json::parse(payload);
  } catch (const json::parse_error& e) {
    throw TrieError(std::string("corrupt trie payload: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != "trie-align") throw TrieError("corrupt trie payload: not a trie file");
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion) {
      throw TrieError("unsupported trie version " + std::to_string(version) + " (expected " +
                      std::to_string(kFormatVersion) + ")");
    }
    Trie trie;
    for (const auto& label : doc.at("alphabet")) trie.alphabet_.intern(label.get<std::string>());
    const auto& nodes = doc.at("nodes");
    const auto node_count = doc.at("node_count").get<std::size_t>();
    if (nodes.size() != node_count || node_count == 0) throw TrieError("corrupt trie payload: node count mismatch");

    std::vector<std::vector<NodeId>> child_lists(node_count);
    std::vector<TrieNode> stored;
    stored.reserve(node_count);
    for (std::size_t id = 0; id < node_count; ++id) {
      const auto& row = nodes[id];
      TrieNode n;
      n.id = static_cast<NodeId>(id);
      n.label = row.at(0).get<ActivityCode>();
      n.parent = row.at(1).get<NodeId>();
      n.is_end = row.at(2).get<int>() != 0;
      n.min_to_end = row.at(3).get<std::int32_t>();
      n.max_to_end = row.at(4).get<std::int32_t>();
      if (id == 0) {
        if (n.parent != kNoNode || n.label != kSkip) throw TrieError("corrupt trie payload: bad root");
      } else {
        if (n.parent < 0 || static_cast<std::size_t>(n.parent) >= id) throw TrieError("corrupt trie payload: bad parent");
        if (n.label < 0 || static_cast<std::size_t>(n.label) >= trie.alphabet_.size())
          throw TrieError("corrupt trie payload: bad label");
        n.level = stored[static_cast<std::size_t>(n.parent)].level + 1;
        child_lists[static_cast<std::size_t>(n.parent)].push_back(n.id);
      }
      stored.push_back(n);
      TrieNode fresh = n;
      fresh.min_to_end = fresh.max_to_end = 0;
      trie.nodes_.push_back(fresh);
    }
    for (const auto& list : child_lists) {
      for (std::size_t i = 0; i < list.size(); ++i)
        for (std::size_t j = i + 1; j < list.size(); ++j)
          if (stored[static_cast<std::size_t>(list[i])].label == stored[static_cast<std::size_t>(list[j])].label)
            throw TrieError("corrupt trie payload: duplicate child label");
    }
    trie.finalize(std::move(child_lists));
    if (trie.nodes_ != stored) throw TrieError("corrupt trie payload: annotations disagree with structure");
    if (trie.end_count_ != doc.at("end_count").get<std::size_t>() ||
        trie.max_branching_ != doc.at("max_branching").get<std::size_t>() ||
        trie.avg_leaf_depth_ != Rational(doc.at("avg_leaf_depth").at("num").get<std::int64_t>(),
                                         doc.at("avg_leaf_depth").at("den").get<std::int64_t>())) {
      throw TrieError("corrupt trie payload: header disagrees with nodes");
    }
    return trie;
  } catch (const json::exception& e) {
    throw TrieError(std::string("corrupt trie payload: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw TrieError(std::string("corrupt trie payload: ") + e.what());
  }
}

}  // namespace trie_align
