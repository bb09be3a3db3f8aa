#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "trie_align/event_model.hpp"

namespace trie_align::gen {

// Random block-structured process model (sequence, exclusive choice,
// parallel, loop) used to produce proxy logs of a chosen size.
struct ModelOptions {
  std::size_t activities = 20;
  int max_depth = 4;
  std::size_t max_children = 3;
  double loop_repeat = 0.3;  // chance of another loop iteration
  int max_loop_iterations = 3;
  std::uint64_t seed = 1;
};

class ProcessTree {
 public:
  enum class Op { activity, sequence, choice, parallel, loop };

  static ProcessTree random(const ModelOptions& options);

  [[nodiscard]] std::vector<std::string> playout(std::mt19937_64& rng) const;
  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] std::vector<std::string> activities() const;

 private:
  struct Node {
    Op op = Op::activity;
    std::string label;
    std::vector<Node> children;
  };
  static void play(const Node& n, std::mt19937_64& rng, const ModelOptions& o, std::vector<std::string>& out);
  static void print(const Node& n, std::string& out);

  Node root_;
  ModelOptions options_;
};

struct ProxyOptions {
  ModelOptions model;
  std::size_t traces = 1000;
  std::uint64_t seed = 7;
};

[[nodiscard]] ProxyLog generate_proxy_log(const ProcessTree& tree, std::size_t traces, std::uint64_t seed);
[[nodiscard]] ProxyLog generate_proxy_log(const ProxyOptions& options);

// Event log with cases "c0", "c1", ... taken from the proxy traces.
[[nodiscard]] std::vector<Trace> to_event_log(const ProxyLog& log, const std::string& prefix = "c");

}  // namespace trie_align::gen
