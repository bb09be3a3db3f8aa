#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trie_align/alignment.hpp"
#include "trie_align/rational.hpp"
#include "trie_align/trie.hpp"

namespace trie_align {

struct DecayPolicy {
  enum class Mode { fixed, discounted };

  Mode mode = Mode::discounted;
  int fixed_value = 5;
  Rational df{3, 10};
  int min_dt = 3;

  static DecayPolicy fixed(int value) { return {Mode::fixed, value, Rational{3, 10}, 3}; }
  static DecayPolicy discounted(Rational df = {3, 10}, int min_dt = 3) { return {Mode::discounted, 5, df, min_dt}; }

  // Throws std::invalid_argument when a field is out of range.
  void check() const;
};

// Initial decay for a state created by the i-th event of its case (1-based;
// i = 0 for the root state of a new case).
//   fixed:      fixed_value
//   discounted: max(floor((avg_leaf_depth - (i - 1)) * df), min_dt)
[[nodiscard]] int decay_time(const Rational& avg_leaf_depth, std::uint64_t i, const DecayPolicy& policy);

struct State {
  NodeId node = kRoot;
  Alignment prefix_alignment;
  std::vector<ActivityCode> suffix;  // events this state has not consumed yet
  int cost = 0;
  int decay = 1;
  std::uint32_t state_id = 0;
};

// Model-move expansion from one state. Pending events plus e form the check
// sequence; the first depth below state.node with a node starting a full
// match wins. When the look-ahead budget runs out, the oldest pending event is
// turned into a log move and the search restarts. Matching states are
// returned with their final cost, an empty suffix and the given decay.
[[nodiscard]] std::vector<State> handle_model_moves(const State& state, ActivityCode e, const Trie& trie,
                                                    int new_decay);

// The state extended to an end node along its shortest completion.
// Throws AlignmentError when the state still has pending events.
[[nodiscard]] Alignment complete_alignment(const State& state, const Trie& trie);

struct EngineConfig {
  DecayPolicy decay;
  bool emit_per_event_alignment = false;

  static EngineConfig from_json(const nlohmann::json& doc);
  [[nodiscard]] nlohmann::json to_json() const;
};

struct CaseBuffer {
  std::vector<State> states;
  std::uint64_t events_seen = 0;
  std::uint32_t next_state_id = 0;
  int max_decay_issued = 0;
  std::size_t max_states = 0;
};

struct BufferStats {
  std::size_t cases = 0;
  std::size_t total_states = 0;
  std::size_t max_states_per_case = 0;

  friend bool operator==(const BufferStats&, const BufferStats&) = default;
};

struct EventResult {
  std::string case_id;
  std::uint64_t event_seq = 0;  // 0-based position within the case
  ActivityCode activity = kSkip;
  int best_cost = 0;
  std::optional<Alignment> alignment;
  std::size_t states_in_case = 0;
  std::size_t new_states = 0;
  double processing_micros = 0.0;
};

// Per-event bookkeeping of the stored-state bound and decay rule.
struct BoundAudit {
  std::uint64_t events_checked = 0;
  std::uint64_t bound_violations = 0;
  std::uint64_t decay_violations = 0;
};

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Single-writer online conformance checker over one immutable trie.
class Engine {
 public:
  Engine(const Trie& trie, EngineConfig config);

  EventResult process_event(std::string_view case_id, std::string_view activity);
  EventResult process_event(std::string_view case_id, ActivityCode activity);

  [[nodiscard]] const State& best_state(std::string_view case_id) const;
  [[nodiscard]] int conformance_cost(std::string_view case_id) const;
  [[nodiscard]] Alignment best_complete_alignment(std::string_view case_id) const;
  [[nodiscard]] const CaseBuffer& case_buffer(std::string_view case_id) const;
  [[nodiscard]] bool has_case(std::string_view case_id) const;

  // Removes a finished case; returns its complete alignment.
  std::optional<Alignment> close_case(std::string_view case_id);

  [[nodiscard]] BufferStats buffer_stats() const;
  [[nodiscard]] const BoundAudit& audit() const noexcept { return audit_; }
  [[nodiscard]] std::size_t state_bound(const CaseBuffer& buffer) const;

  [[nodiscard]] const Trie& trie() const noexcept { return trie_; }
  [[nodiscard]] const EngineConfig& config() const noexcept { return config_; }
  // Trie alphabet extended with activities first seen on the stream.
  [[nodiscard]] const ActivityTable& activities() const noexcept { return activities_; }
  ActivityCode intern(std::string_view label) { return activities_.intern(label); }

  [[nodiscard]] nlohmann::json result_to_json(const EventResult& result) const;

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };

  void advance(CaseBuffer& buffer, ActivityCode e, bool root_fresh);
  [[nodiscard]] int next_decay(std::uint64_t i) const;

  const Trie& trie_;
  EngineConfig config_;
  ActivityTable activities_;
  std::unordered_map<std::string, CaseBuffer, StringHash, std::equal_to<>> buffer_;
  BoundAudit audit_;
};

[[nodiscard]] BufferStats buffer_stats(const Engine& engine);

}  // namespace trie_align
