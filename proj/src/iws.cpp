#include "trie_align/iws.hpp"

#include <algorithm>
#include <chrono>

#include <nlohmann/json.hpp>

namespace trie_align {

namespace {

// Larger than any reachable alignment cost.
constexpr int kCostSentinel = std::numeric_limits<int>::max();

struct Candidate {
  State state;
  std::uint32_t parent_id = 0;
};

// For equal node and cost: shorter alignment wins, then the more recent parent.
bool preferred(const Candidate& a, const Candidate& b) {
  if (a.state.prefix_alignment.moves.size() != b.state.prefix_alignment.moves.size()) {
    return a.state.prefix_alignment.moves.size() < b.state.prefix_alignment.moves.size();
  }
  return a.parent_id > b.parent_id;
}

}  // namespace

void DecayPolicy::check() const {
  if (mode == Mode::fixed && fixed_value < 1) throw std::invalid_argument("decay fixed_value must be >= 1");
  if (df.num <= 0) throw std::invalid_argument("decay df must be > 0");
  if (min_dt < 1) throw std::invalid_argument("decay min_dt must be >= 1");
}

int decay_time(const Rational& avg_leaf_depth, std::uint64_t i, const DecayPolicy& policy) {
  if (policy.mode == DecayPolicy::Mode::fixed) return std::max(policy.fixed_value, 1);
  const auto preceding = static_cast<std::int64_t>(i == 0 ? 0 : i - 1);
  const std::int64_t discounted = ((avg_leaf_depth - Rational(preceding)) * policy.df).floor();
  return static_cast<int>(std::max<std::int64_t>(discounted, std::max(policy.min_dt, 1)));
}

std::vector<State> handle_model_moves(const State& state, ActivityCode e, const Trie& trie, int new_decay) {
  std::vector<ActivityCode> check = state.suffix;
  check.push_back(e);
  const auto base_level = trie.node(state.node).level;

  // levels[d] holds the descendants of state.node at depth d, filled on demand.
  std::vector<std::vector<NodeId>> levels{{state.node}};
  std::vector<std::pair<NodeId, NodeId>> matches;  // (start, terminal)

  for (std::size_t dropped = 0; dropped < check.size(); ++dropped) {
    const std::span<const ActivityCode> pending(check.data() + dropped, check.size() - dropped);
    // Start levels are bounded by |pending| + level + 1.
    const std::size_t budget = pending.size() + 1;
    for (std::size_t d = 1; d <= budget; ++d) {
      if (levels.size() <= d) {
        std::vector<NodeId> next;
        for (NodeId n : levels.back())
          for (NodeId c : trie.children(n)) next.push_back(c);
        if (next.empty()) break;
        levels.push_back(std::move(next));
      }
      for (NodeId start : levels[d]) {
        if (trie.node(start).label != pending.front()) continue;
        if (auto terminal = trie.path_match(start, pending)) matches.emplace_back(start, *terminal);
      }
      if (!matches.empty()) break;
    }
    if (matches.empty()) continue;

    std::vector<State> out;
    out.reserve(matches.size());
    for (auto [start, terminal] : matches) {
      State s;
      s.node = terminal;
      s.prefix_alignment = state.prefix_alignment;
      auto& moves = s.prefix_alignment.moves;
      for (std::size_t k = 0; k < dropped; ++k) moves.push_back(Move::log_move(check[k]));
      std::vector<ActivityCode> skipped;
      for (NodeId cur = trie.node(start).parent; cur != state.node; cur = trie.node(cur).parent) {
        skipped.push_back(trie.node(cur).label);
      }
      for (auto it = skipped.rbegin(); it != skipped.rend(); ++it) moves.push_back(Move::model_move(*it));
      for (ActivityCode a : pending) moves.push_back(Move::sync(a));
      s.cost = state.cost + static_cast<int>(dropped) + (trie.node(start).level - base_level - 1);
      s.decay = new_decay;
      out.push_back(std::move(s));
    }
    return out;
  }
  return {};
}

Alignment complete_alignment(const State& state, const Trie& trie) {
  if (!state.suffix.empty()) throw AlignmentError("complete_alignment requires a state without pending events");
  return complete_from(state.prefix_alignment, state.node, trie);
}

EngineConfig EngineConfig::from_json(const nlohmann::json& doc) {
  EngineConfig cfg;
  if (doc.contains("decay")) {
    const auto& d = doc.at("decay");
    const auto mode = d.value("mode", std::string("discounted"));
    if (mode == "fixed") {
      cfg.decay.mode = DecayPolicy::Mode::fixed;
    } else if (mode == "discounted") {
      cfg.decay.mode = DecayPolicy::Mode::discounted;
    } else {
      throw std::invalid_argument("decay.mode must be 'fixed' or 'discounted'");
    }
    cfg.decay.fixed_value = d.value("fixed_value", cfg.decay.fixed_value);
    if (d.contains("df")) {
      const auto& df = d.at("df");
      cfg.decay.df = df.is_string() ? Rational::parse(df.get<std::string>()) : Rational::from_double(df.get<double>());
    }
    cfg.decay.min_dt = d.value("min_dt", cfg.decay.min_dt);
  }
  cfg.emit_per_event_alignment = doc.value("emit_per_event_alignment", false);
  cfg.decay.check();
  return cfg;
}

nlohmann::json EngineConfig::to_json() const {
  return {
      {"decay",
       {{"mode", decay.mode == DecayPolicy::Mode::fixed ? "fixed" : "discounted"},
        {"fixed_value", decay.fixed_value},
        {"df", decay.df.to_double()},
        {"min_dt", decay.min_dt}}},
      {"emit_per_event_alignment", emit_per_event_alignment},
  };
}

Engine::Engine(const Trie& trie, EngineConfig config)
    : trie_(trie), config_(std::move(config)), activities_(trie.alphabet()) {
  config_.decay.check();
}

EventResult Engine::process_event(std::string_view case_id, std::string_view activity) {
  return process_event(case_id, activities_.intern(activity));
}

int Engine::next_decay(std::uint64_t i) const { return decay_time(trie_.avg_leaf_depth(), i, config_.decay); }

EventResult Engine::process_event(std::string_view case_id, ActivityCode activity) {
  const auto started = std::chrono::steady_clock::now();

  auto it = buffer_.find(case_id);
  bool root_fresh = false;
  if (it == buffer_.end()) {
    it = buffer_.emplace(std::string(case_id), CaseBuffer{}).first;
    auto& fresh = it->second;
    State root;
    root.node = trie_.root();
    root.decay = next_decay(0);
    root.state_id = fresh.next_state_id++;
    fresh.max_decay_issued = root.decay;
    fresh.states.push_back(std::move(root));
    root_fresh = true;
  }
  auto& buffer = it->second;
  const std::size_t before = buffer.next_state_id;
  advance(buffer, activity, root_fresh);
  buffer.max_states = std::max(buffer.max_states, buffer.states.size());

  ++audit_.events_checked;
  if (buffer.states.size() > state_bound(buffer)) ++audit_.bound_violations;
  for (const auto& s : buffer.states) {
    if (s.decay < 1) {
      ++audit_.decay_violations;
      break;
    }
  }

  EventResult result;
  result.case_id = std::string(case_id);
  result.event_seq = buffer.events_seen - 1;
  result.activity = activity;
  const auto& best = best_state(case_id);
  result.best_cost = best.cost;
  if (config_.emit_per_event_alignment) result.alignment = best.prefix_alignment;
  result.states_in_case = buffer.states.size();
  result.new_states = buffer.next_state_id - before;
  result.processing_micros =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void Engine::advance(CaseBuffer& buffer, ActivityCode e, bool root_fresh) {
  const std::uint64_t i = ++buffer.events_seen;
  const int new_decay = next_decay(i);
  auto& states = buffer.states;

  // A root created for this event keeps its decay and only records e.
  auto age_all = [&] {
    std::size_t keep = 0;
    for (std::size_t k = 0; k < states.size(); ++k) {
      auto& s = states[k];
      const bool fresh = root_fresh && k == 0;
      if (!fresh) {
        --s.decay;
        if (s.decay < 1) continue;
      }
      s.suffix.push_back(e);
      if (keep != k) states[keep] = std::move(s);
      ++keep;
    }
    states.resize(keep);
  };

  const std::size_t limit = trie_.max_branching() + 1 - (root_fresh ? 1 : 0);
  auto admit = [&](std::vector<State>&& fresh_states) {
    if (fresh_states.size() > limit) fresh_states.resize(limit);
    for (auto& s : fresh_states) {
      s.state_id = buffer.next_state_id++;
      states.push_back(std::move(s));
    }
    buffer.max_decay_issued = std::max(buffer.max_decay_issued, new_decay);
  };

  std::vector<State> synced;
  for (const auto& s : states) {
    if (!s.suffix.empty()) continue;
    if (auto child = trie_.get_child(s.node, e)) {
      State next;
      next.node = *child;
      next.prefix_alignment = s.prefix_alignment;
      next.prefix_alignment.moves.push_back(Move::sync(e));
      next.cost = s.cost;
      next.decay = new_decay;
      synced.push_back(std::move(next));
    }
  }
  if (!synced.empty()) {
    age_all();
    admit(std::move(synced));
    return;
  }

  int min_cost = kCostSentinel;
  std::vector<Candidate> interim;
  for (const auto& s : states) {
    State logged;
    logged.node = s.node;
    logged.prefix_alignment = s.prefix_alignment;
    for (ActivityCode a : s.suffix) logged.prefix_alignment.moves.push_back(Move::log_move(a));
    logged.prefix_alignment.moves.push_back(Move::log_move(e));
    logged.cost = s.cost + static_cast<int>(s.suffix.size()) + 1;
    logged.decay = new_decay;
    if (logged.cost <= min_cost) {
      min_cost = logged.cost;
      interim.push_back({std::move(logged), s.state_id});
    }
    for (auto& modelled : handle_model_moves(s, e, trie_, new_decay)) {
      if (modelled.cost <= min_cost) {
        min_cost = modelled.cost;
        interim.push_back({std::move(modelled), s.state_id});
      }
    }
  }
  age_all();

  // Keep the minimum-cost candidates, one per node.
  std::unordered_map<NodeId, std::size_t> winner;
  for (std::size_t k = 0; k < interim.size(); ++k) {
    if (interim[k].state.cost != min_cost) continue;
    auto [pos, inserted] = winner.try_emplace(interim[k].state.node, k);
    if (!inserted && preferred(interim[k], interim[pos->second])) pos->second = k;
  }
  std::vector<State> kept;
  for (std::size_t k = 0; k < interim.size(); ++k) {
    if (interim[k].state.cost != min_cost) continue;
    if (winner.at(interim[k].state.node) == k) kept.push_back(std::move(interim[k].state));
  }
  admit(std::move(kept));
}

const CaseBuffer& Engine::case_buffer(std::string_view case_id) const {
  auto it = buffer_.find(case_id);
  if (it == buffer_.end()) throw LookupError("unknown case '" + std::string(case_id) + "'");
  return it->second;
}

bool Engine::has_case(std::string_view case_id) const { return buffer_.find(case_id) != buffer_.end(); }

const State& Engine::best_state(std::string_view case_id) const {
  const auto& buffer = case_buffer(case_id);
  const State* best = nullptr;
  for (const auto& s : buffer.states) {
    if (!s.suffix.empty()) continue;
    if (best == nullptr || s.cost < best->cost ||
        (s.cost == best->cost &&
         (s.prefix_alignment.moves.size() < best->prefix_alignment.moves.size() ||
          (s.prefix_alignment.moves.size() == best->prefix_alignment.moves.size() && s.node < best->node)))) {
      best = &s;
    }
  }
  if (best == nullptr) throw LookupError("case '" + std::string(case_id) + "' has no current state");
  return *best;
}

int Engine::conformance_cost(std::string_view case_id) const { return best_state(case_id).cost; }

Alignment Engine::best_complete_alignment(std::string_view case_id) const {
  return complete_alignment(best_state(case_id), trie_);
}

std::optional<Alignment> Engine::close_case(std::string_view case_id) {
  auto it = buffer_.find(case_id);
  if (it == buffer_.end()) return std::nullopt;
  auto complete = complete_alignment(best_state(case_id), trie_);
  buffer_.erase(it);
  return complete;
}

BufferStats Engine::buffer_stats() const {
  BufferStats stats;
  stats.cases = buffer_.size();
  for (const auto& [id, buffer] : buffer_) {
    stats.total_states += buffer.states.size();
    stats.max_states_per_case = std::max(stats.max_states_per_case, buffer.states.size());
  }
  return stats;
}

std::size_t Engine::state_bound(const CaseBuffer& buffer) const {
  return (trie_.max_branching() + 1) * static_cast<std::size_t>(buffer.max_decay_issued);
}

nlohmann::json Engine::result_to_json(const EventResult& result) const {
  nlohmann::json doc = {
      {"case_id", result.case_id},
      {"event_seq", result.event_seq},
      {"activity", activities_.label(result.activity)},
      {"best_cost", result.best_cost},
      {"states_in_case", result.states_in_case},
      {"processing_micros", result.processing_micros},
  };
  if (result.alignment) doc["alignment"] = to_json(*result.alignment, activities_);
  return doc;
}

BufferStats buffer_stats(const Engine& engine) { return engine.buffer_stats(); }

}  // namespace trie_align
