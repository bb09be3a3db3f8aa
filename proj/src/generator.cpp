#include "trie_align/generator.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace trie_align::gen {

ProcessTree ProcessTree::random(const ModelOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::size_t next_label = 0;
  auto label = [&] {
    const std::size_t k = next_label++ % std::max<std::size_t>(options.activities, 1);
    return "t" + std::to_string(k);
  };
  std::function<Node(int)> grow = [&](int depth) {
    Node n;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (depth >= options.max_depth || (depth > 1 && coin(rng) < 0.25)) {
      n.label = label();
      return n;
    }
    std::uniform_int_distribution<int> pick_op(1, 4);
    n.op = depth == 0 ? Op::sequence : static_cast<Op>(pick_op(rng));
    const std::size_t width = n.op == Op::loop ? 1 : std::uniform_int_distribution<std::size_t>(2, std::max<std::size_t>(options.max_children, 2))(rng);
    for (std::size_t k = 0; k < width; ++k) n.children.push_back(grow(depth + 1));
    return n;
  };
  ProcessTree tree;
  tree.options_ = options;
  tree.root_ = grow(0);
  return tree;
}

void ProcessTree::play(const Node& n, std::mt19937_64& rng, const ModelOptions& o, std::vector<std::string>& out) {
  switch (n.op) {
    case Op::activity:
      out.push_back(n.label);
      break;
    case Op::sequence:
      for (const auto& c : n.children) play(c, rng, o, out);
      break;
    case Op::choice:
      play(n.children[std::uniform_int_distribution<std::size_t>(0, n.children.size() - 1)(rng)], rng, o, out);
      break;
    case Op::loop: {
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      int iterations = 1;
      while (iterations < o.max_loop_iterations && coin(rng) < o.loop_repeat) ++iterations;
      for (int k = 0; k < iterations; ++k) play(n.children.front(), rng, o, out);
      break;
    }
    case Op::parallel: {
      std::vector<std::vector<std::string>> branches;
      for (const auto& c : n.children) {
        branches.emplace_back();
        play(c, rng, o, branches.back());
      }
      std::vector<std::size_t> pos(branches.size(), 0);
      std::vector<std::size_t> live;
      for (std::size_t b = 0; b < branches.size(); ++b) {
        if (!branches[b].empty()) live.push_back(b);
      }
      while (!live.empty()) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng);
        const std::size_t b = live[k];
        out.push_back(branches[b][pos[b]++]);
        if (pos[b] == branches[b].size()) live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
      }
      break;
    }
  }
}

std::vector<std::string> ProcessTree::playout(std::mt19937_64& rng) const {
  std::vector<std::string> out;
  play(root_, rng, options_, out);
  return out;
}

void ProcessTree::print(const Node& n, std::string& out) {
  static constexpr const char* names[] = {"", "seq", "xor", "and", "loop"};
  if (n.op == Op::activity) {
    out += n.label;
    return;
  }
  out += names[static_cast<int>(n.op)];
  out += '(';
  for (std::size_t k = 0; k < n.children.size(); ++k) {
    if (k) out += ", ";
    print(n.children[k], out);
  }
  out += ')';
}

std::string ProcessTree::to_string() const {
  std::string out;
  print(root_, out);
  return out;
}

std::vector<std::string> ProcessTree::activities() const {
  std::set<std::string> seen;
  std::function<void(const Node&)> visit = [&](const Node& n) {
    if (n.op == Op::activity) seen.insert(n.label);
    for (const auto& c : n.children) visit(c);
  };
  visit(root_);
  return {seen.begin(), seen.end()};
}

ProxyLog generate_proxy_log(const ProcessTree& tree, std::size_t traces, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ProxyLog log;
  log.traces.reserve(traces);
  while (log.traces.size() < traces) {
    auto t = tree.playout(rng);
    if (!t.empty()) log.traces.push_back(std::move(t));
  }
  return log;
}

ProxyLog generate_proxy_log(const ProxyOptions& options) {
  return generate_proxy_log(ProcessTree::random(options.model), options.traces, options.seed);
}

std::vector<Trace> to_event_log(const ProxyLog& log, const std::string& prefix) {
  std::vector<Trace> out;
  std::uint64_t ingest = 0;
  for (std::size_t k = 0; k < log.traces.size(); ++k) {
    Trace t{prefix + std::to_string(k), {}};
    for (const auto& a : log.traces[k]) {
      Event e;
      e.case_id = t.case_id;
      e.activity = a;
      e.arrival_seq = t.events.size();
      e.ingest_index = ingest++;
      t.events.push_back(std::move(e));
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace trie_align::gen
