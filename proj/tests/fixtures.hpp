#pragma once

#include <string>
#include <vector>

#include "trie_align/event_model.hpp"
#include "trie_align/trie.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(TEST_DATA_DIR) + "/" + name; }

inline trie_align::ProxyLog running_log() {
  return trie_align::parse_proxy_log(trie_align::read_file(data_path("running_example_proxy.txt")));
}

inline const trie_align::Trie& running_trie() {
  static const trie_align::Trie trie = trie_align::Trie::build(running_log());
  return trie;
}

// Codes for single-character labels, e.g. codes(t, "abbc").
inline std::vector<trie_align::ActivityCode> codes(const trie_align::Trie& trie, const std::string& word) {
  std::vector<trie_align::ActivityCode> out;
  for (char c : word) out.push_back(trie.alphabet().find(std::string(1, c)).value());
  return out;
}

inline trie_align::NodeId node_at(const trie_align::Trie& trie, const std::string& path) {
  return trie.walk(codes(trie, path)).value();
}

inline std::vector<std::string> labels(const std::string& word) {
  std::vector<std::string> out;
  for (char c : word) out.emplace_back(1, c);
  return out;
}

}  // namespace fixtures
