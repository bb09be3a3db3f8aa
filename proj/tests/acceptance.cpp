// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
// Environment:
//   TRIE_ALIGN_PERF_WARN_ONLY   report a slow throughput run as WARN instead of FAIL
//   TRIE_ALIGN_SOAK_SECONDS     seconds per soak run (default 10; six runs)

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "trie_align/generator.hpp"
#include "trie_align/harness.hpp"
#include "trie_align/iws.hpp"
#include "trie_align/oracle.hpp"

using namespace trie_align;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  enum class Status { pass, fail, warn } status = Status::pass;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o, double seconds) {
  const char* tag = o.status == Outcome::Status::pass ? "PASS" : o.status == Outcome::Status::warn ? "WARN" : "FAIL";
  if (o.status == Outcome::Status::fail) ++failures;
  std::cout << tag << "  " << name << "  (" << o.detail << "; " << std::fixed << std::setprecision(2) << seconds
            << " s)" << std::endl;
}

void run(const std::string& name, const std::function<Outcome()>& fn) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {Outcome::Status::fail, std::string("exception: ") + e.what()};
  }
  report(name, o, std::chrono::duration<double>(Clock::now() - start).count());
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::Status::pass : Outcome::Status::fail, std::move(detail)}; }

std::string moves_text(const Alignment& a, const ActivityTable& t) {
  std::string out;
  for (const auto& m : a.moves) {
    out += '(';
    out += m.log == kSkip ? ">>" : t.label(m.log);
    out += ',';
    out += m.model == kSkip ? ">>" : t.label(m.model);
    out += ')';
  }
  return out;
}

std::string path_text(const Trie& trie, NodeId n) {
  std::string out;
  for (ActivityCode c : trie.path_to(n)) out += trie.alphabet().label(c);
  return out;
}

std::string codes_text(const std::vector<ActivityCode>& s, const ActivityTable& t) {
  std::string out;
  for (ActivityCode c : s) out += t.label(c);
  return out;
}

// Buffer invariants checked from the outside after every event.
struct BoundChecker {
  std::uint64_t events = 0;
  std::uint64_t violations = 0;

  void check(const Engine& engine, std::string_view case_id) {
    ++events;
    const auto& buffer = engine.case_buffer(case_id);
    const auto bound = (engine.trie().max_branching() + 1) * static_cast<std::size_t>(buffer.max_decay_issued);
    if (buffer.states.size() > bound) ++violations;
    for (const auto& s : buffer.states) {
      if (s.decay < 1) ++violations;
    }
  }
};

BoundChecker g_bounds;
std::uint64_t g_engine_audit_violations = 0;
std::uint64_t g_engine_audit_events = 0;

void absorb_audit(const Engine& engine) {
  g_engine_audit_violations += engine.audit().bound_violations + engine.audit().decay_violations;
  g_engine_audit_events += engine.audit().events_checked;
}

// --- criteria -------------------------------------------------------------------

Outcome state_buffer_fixture() {
  const auto& trie = fixtures::running_trie();
  EngineConfig cfg;
  cfg.decay = DecayPolicy::fixed(2);
  Engine engine(trie, cfg);

  struct Row {
    std::uint32_t id;
    std::string node;
    std::string alignment;
    std::string suffix;
    int cost;
    int dt;
  };
  const std::vector<std::pair<std::string, std::vector<Row>>> expected = {
      {"a", {{0, "", "", "a", 0, 2}, {1, "a", "(a,a)", "", 0, 2}}},
      {"b", {{0, "", "", "ab", 0, 1}, {1, "a", "(a,a)", "b", 0, 1}, {2, "ab", "(a,a)(b,b)", "", 0, 2}}},
      {"b",
       {{2, "ab", "(a,a)(b,b)", "b", 0, 1},
        {3, "ab", "(a,a)(b,b)(b,>>)", "", 1, 2},
        {4, "abdb", "(a,a)(b,b)(>>,d)(b,b)", "", 1, 2}}},
      // state 6 sits on the c node below abdb; its alignment ends in (c,c)
      {"c",
       {{3, "ab", "(a,a)(b,b)(b,>>)", "c", 1, 1},
        {4, "abdb", "(a,a)(b,b)(>>,d)(b,b)", "c", 1, 1},
        {5, "abc", "(a,a)(b,b)(b,>>)(c,c)", "", 1, 2},
        {6, "abdbc", "(a,a)(b,b)(>>,d)(b,b)(c,c)", "", 1, 2}}},
  };

  const auto start = Clock::now();
  std::ostringstream mismatch;
  for (std::size_t step = 0; step < expected.size(); ++step) {
    const auto& [event, rows] = expected[step];
    engine.process_event("1", event);
    const auto& states = engine.case_buffer("1").states;
    if (states.size() != rows.size()) {
      mismatch << "event " << step + 1 << ": " << states.size() << " states, expected " << rows.size() << "; ";
      continue;
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& s = states[k];
      const auto& r = rows[k];
      const Row got{s.state_id, path_text(trie, s.node), moves_text(s.prefix_alignment, engine.activities()),
                    codes_text(s.suffix, engine.activities()), s.cost, s.decay};
      if (got.id != r.id || got.node != r.node || got.alignment != r.alignment || got.suffix != r.suffix ||
          got.cost != r.cost || got.dt != r.dt) {
        mismatch << "event " << step + 1 << " row " << k << ": got id " << got.id << " node '" << got.node << "' "
                 << got.alignment << " suffix '" << got.suffix << "' cost " << got.cost << " dt " << got.dt << "; ";
      }
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const std::string m = mismatch.str();
  if (!m.empty()) return {Outcome::Status::fail, m};
  return verdict(secs < 1.0, "4 events, 11 state rows match, states {0,1} and {2} dropped on schedule");
}

Outcome alignment_fixture() {
  const auto& trie = fixtures::running_trie();
  EngineConfig cfg;
  cfg.decay = DecayPolicy::fixed(2);
  Engine engine(trie, cfg);
  for (auto a : {"a", "b", "b", "c"}) engine.process_event("1", a);
  const auto& best = engine.best_state("1");
  const auto prefix = moves_text(best.prefix_alignment, engine.activities());
  const bool prefix_ok =
      best.cost == 1 && (prefix == "(a,a)(b,b)(b,>>)(c,c)" || prefix == "(a,a)(b,b)(>>,d)(b,b)(c,c)");
  const auto full = complete_alignment(best, trie);
  const auto full_text = moves_text(full, engine.activities());
  const bool full_ok = full_text == "(a,a)(b,b)(b,>>)(c,c)(>>,e)" && cost(full) == 2 &&
                       engine.best_complete_alignment("1") == full;
  return verdict(prefix_ok && full_ok, "prefix " + prefix + " cost " + std::to_string(best.cost) + ", complete " +
                                           full_text + " cost " + std::to_string(cost(full)));
}

Outcome decay_fixture() {
  const auto p = DecayPolicy::discounted(Rational(3, 10), 3);
  const int a = decay_time(Rational(100), 1, p);
  const int b = decay_time(Rational(100), 50, p);
  const int c = decay_time(Rational(100), 90, p);
  return verdict(a == 30 && b == 15 && c == 3,
                 "dt(1)=" + std::to_string(a) + " dt(50)=" + std::to_string(b) + " dt(90)=" + std::to_string(c));
}

Outcome suffix_pruning_fixture() {
  const auto trie = Trie::build(ProxyLog{{{"b", "c"}, {"b", "q", "x", "y", "z"}}});
  const auto code = [&](const char* s) { return trie.alphabet().find(s).value(); };
  const std::string expected = "(b,b)(c,>>)(>>,q)(x,x)(y,y)(z,z)";

  State s;
  s.node = trie.walk(std::vector<ActivityCode>{code("b")}).value();
  s.prefix_alignment.moves = {Move::sync(code("b"))};
  s.suffix = {code("c"), code("x"), code("y")};
  const auto out = handle_model_moves(s, code("z"), trie, 3);
  if (out.size() != 1) return {Outcome::Status::fail, std::to_string(out.size()) + " states from the expansion"};
  const auto direct = moves_text(out[0].prefix_alignment, trie.alphabet());

  Engine engine(trie, EngineConfig{});
  for (auto a : {"b", "c", "x", "y", "z"}) engine.process_event("1", a);
  const auto streamed = moves_text(engine.best_state("1").prefix_alignment, engine.activities());
  const bool ok = direct == expected && out[0].cost == 2 && out[0].suffix.empty() && streamed == expected &&
                  engine.conformance_cost("1") == 2;
  return verdict(ok, "expansion " + direct + " cost " + std::to_string(out[0].cost) + ", stream " + streamed);
}

Outcome oracle_soundness() {
  const auto& trie = fixtures::running_trie();
  ActivityTable table = trie.alphabet();
  std::vector<ActivityCode> symbols;
  for (const auto* s : {"a", "b", "c", "d", "e", "x", "y"}) symbols.push_back(table.intern(s));

  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<std::size_t> pick(0, symbols.size() - 1);
  std::uint64_t dp_vs_enum = 0, enum_checked = 0, below_optimum = 0, invalid = 0, prefixes = 0;

  for (int k = 0; k < 1000; ++k) {
    std::vector<ActivityCode> trace;
    for (int j = len(rng); j > 0; --j) trace.push_back(symbols[pick(rng)]);
    if (trace.size() <= 6) {
      ++enum_checked;
      if (oracle::optimal_prefix(trace, trie).cost != oracle::exhaustive_prefix(trace, trie, 2 * trace.size()))
        ++dp_vs_enum;
    }
    Engine engine(trie, EngineConfig{});
    engine.intern("x");
    engine.intern("y");
    const std::string id = "t" + std::to_string(k);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      engine.process_event(id, table.label(trace[i]));
      g_bounds.check(engine, id);
      const std::span<const ActivityCode> prefix(trace.data(), i + 1);
      ++prefixes;
      if (engine.conformance_cost(id) < oracle::optimal_prefix(prefix, trie).cost) ++below_optimum;
      const auto& best = engine.best_state(id);
      std::vector<ActivityCode> seen(prefix.begin(), prefix.end());
      if (!validate(best.prefix_alignment, seen, trie) || cost(best.prefix_alignment) != best.cost) ++invalid;
      if (!validate(engine.best_complete_alignment(id), seen, trie)) ++invalid;
    }
    absorb_audit(engine);
  }

  // conforming traces drawn from root-to-end paths
  const auto paths = harness::end_paths(trie);
  std::uniform_int_distribution<std::size_t> pick_path(0, paths.size() - 1);
  std::uint64_t conforming_nonzero = 0;
  Engine engine(trie, EngineConfig{});
  for (int k = 0; k < 1000; ++k) {
    const auto& path = paths[pick_path(rng)];
    const std::string id = "p" + std::to_string(k);
    for (const auto& a : path) {
      if (engine.process_event(id, a).best_cost != 0) ++conforming_nonzero;
      g_bounds.check(engine, id);
    }
  }
  absorb_audit(engine);

  std::ostringstream d;
  d << enum_checked << " enumerated (" << dp_vs_enum << " DP mismatches), " << prefixes << " prefixes ("
    << below_optimum << " below optimum, " << invalid << " invalid alignments), 1000 conforming traces ("
    << conforming_nonzero << " nonzero costs)";
  return verdict(dp_vs_enum == 0 && below_optimum == 0 && invalid == 0 && conforming_nonzero == 0, d.str());
}

// Generated model large enough for a trie of more than 50k nodes.
gen::ProcessTree large_model() {
  gen::ModelOptions m;
  m.activities = 40;
  m.max_depth = 5;
  m.max_children = 4;
  m.seed = 3;
  return gen::ProcessTree::random(m);
}

Outcome throughput() {
  const auto tree = large_model();
  const auto trie = Trie::build(gen::generate_proxy_log(tree, 3000, 7));
  if (trie.node_count() < 50000) return {Outcome::Status::fail, "trie too small: " + std::to_string(trie.node_count())};

  const auto sample = gen::generate_proxy_log(tree, 2400, 8);
  harness::NoiseInjector noise({0.10, true, true, true, 99}, trie.alphabet().labels());
  ProxyLog noisy;
  for (const auto& t : sample.traces) noisy.traces.push_back(noise.apply(t));
  const auto log = gen::to_event_log(noisy);

  Engine engine(trie, EngineConfig{});
  harness::EngineSink sink(engine, [&](const EventResult& r) { g_bounds.check(engine, r.case_id); });
  const auto m = harness::replay(log, {harness::Interleave::round_robin, 0.0, true}, sink);
  absorb_audit(engine);

  std::ostringstream d;
  d << trie.node_count() << " nodes, " << m.events << " events, " << noise.mutations() << " mutations, mean "
    << std::setprecision(3) << m.mean_latency_us / 1000.0 << " ms, p50 " << m.p50_latency_us / 1000.0 << " ms, p95 "
    << m.p95_latency_us / 1000.0 << " ms";
  if (m.events < 50000) return {Outcome::Status::fail, d.str() + ": too few events"};
  const bool fast = m.mean_latency_us < 2500.0 && m.p50_latency_us < 1000.0;
  if (!fast && std::getenv("TRIE_ALIGN_PERF_WARN_ONLY")) return {Outcome::Status::warn, d.str()};
  return verdict(fast, d.str());
}

Outcome soak() {
  double per_run = 10.0;
  if (const char* s = std::getenv("TRIE_ALIGN_SOAK_SECONDS")) per_run = std::atof(s);

  gen::ModelOptions model;
  model.activities = 25;
  model.max_depth = 5;
  model.max_children = 3;
  model.seed = 21;
  const auto tree = gen::ProcessTree::random(model);
  const auto proxy = gen::generate_proxy_log(tree, 1000, 5);
  const auto trie = Trie::build(proxy);

  std::ostringstream d;
  d << trie.node_count() << "-node trie";
  bool ok = true;
  for (double level : {0.0, 0.05, 0.10}) {
    harness::SimulationOptions o;
    o.noise = {level, true, true, true, 1234};
    o.seed = 1234;
    o.concurrent_cases = 64;
    o.duration_s = per_run;
    o.checkpoint_every = 10000;

    auto execute = [&](const harness::SimulationOptions& opts) {
      harness::StreamSimulator sim(proxy.traces, trie.alphabet().labels(), opts);
      Engine engine(trie, EngineConfig{});
      auto report = harness::simulate(sim, opts, engine);
      absorb_audit(engine);
      return report;
    };
    const auto first = execute(o);
    auto replay_opts = o;
    replay_opts.duration_s = 0.0;
    replay_opts.max_events = first.metrics.events;
    const auto second = execute(replay_opts);

    const bool same = first.cost_stream == second.cost_stream;
    const auto& hw = first.high_water;
    const std::size_t mid = hw.empty() ? 0 : hw[hw.size() / 2];
    const std::size_t end = hw.empty() ? first.metrics.max_buffer_states : hw.back();
    const bool bounded = !hw.empty() && static_cast<double>(end) <= 1.5 * static_cast<double>(std::max<std::size_t>(mid, 1));
    const bool clean = level > 0.0 || first.metrics.mean_final_cost == 0.0;
    const bool audit = first.metrics.bound_violations == 0 && first.metrics.decay_violations == 0;
    ok = ok && same && bounded && clean && audit && first.metrics.cases_closed > 0;
    d << "; noise " << level << ": " << first.metrics.events << " events, " << first.metrics.cases_closed
      << " cases, mean cost " << std::setprecision(3) << first.metrics.mean_final_cost << ", high-water " << mid
      << " -> " << end << ", streams " << (same ? "identical" : "DIFFER");
  }
  return verdict(ok, d.str());
}

Outcome buffer_bound() {
  std::ostringstream d;
  d << g_bounds.events << " events checked externally (" << g_bounds.violations << " violations), "
    << g_engine_audit_events << " checked by the engine audit (" << g_engine_audit_violations << " violations)";
  return verdict(g_bounds.violations == 0 && g_engine_audit_violations == 0 && g_bounds.events > 0, d.str());
}

}  // namespace

int main() {
  run("state-buffer-fixture", state_buffer_fixture);
  run("prefix-and-complete-alignment-fixture", alignment_fixture);
  run("discounted-decay-values", decay_fixture);
  run("suffix-pruning-fixture", suffix_pruning_fixture);
  run("oracle-soundness", oracle_soundness);
  run("throughput", throughput);
  run("soak", soak);
  run("buffer-bound", buffer_bound);
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " failing criteria" << std::endl;
  return failures ? 1 : 0;
}
