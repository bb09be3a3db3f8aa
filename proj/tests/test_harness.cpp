#include <doctest.h>

#include <algorithm>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "trie_align/harness.hpp"

using namespace trie_align;
using namespace trie_align::harness;

namespace {

std::vector<std::string> order_of(const std::vector<StreamFrame>& frames) {
  std::vector<std::string> out;
  for (const auto& f : frames) out.push_back(f.case_id + ":" + f.activity);
  return out;
}

struct Recorder : EventSink {
  std::vector<StreamFrame> frames;
  double deliver(const StreamFrame& f) override {
    frames.push_back(f);
    return 0.0;
  }
};

}  // namespace

TEST_CASE("frame wire form") {
  const StreamFrame f{"c1", "a", "2022-08-01 15:00", 3, true};
  const auto line = encode_frame(f);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(decode_frame(line) == f);
  CHECK(decode_frame(R"({"case":"7","activity":"b"})") == StreamFrame{"7", "b", std::nullopt, std::nullopt, false});
  CHECK(decode_frame(R"({"case":7,"activity":"b"})").case_id == "7");
  CHECK_THROWS_AS((void)decode_frame("not json"), FrameError);
  CHECK_THROWS_AS((void)decode_frame(R"({"case":"1"})"), FrameError);
  CHECK_THROWS_AS((void)decode_frame(R"({"case":"1","activity":""})"), FrameError);
  CHECK_THROWS_AS((void)decode_frame(R"([1,2])"), FrameError);
  CHECK_THROWS_AS((void)decode_frame(R"({"case":"1","activity":"a","seq":-1})"), FrameError);
}

TEST_CASE("noise level 0 is the identity") {
  NoiseInjector n({0.0, true, true, true, 5}, {"a", "b"});
  const auto trace = fixtures::labels("abcdbe");
  CHECK(n.apply(trace) == trace);
  CHECK(n.mutations() == 0);
}

TEST_CASE("forced deletions empty the trace") {
  NoiseInjector n(NoiseConfig::delete_only(1.0, 9), {"a", "b"});
  CHECK(n.apply(fixtures::labels("ab")).empty());
}

TEST_CASE("noise rate is binomial") {
  // 99% two-sided interval of Binomial(10000, 0.05) is [444, 556].
  std::vector<std::string> alphabet = fixtures::running_trie().alphabet().labels();
  NoiseInjector n({0.05, true, true, true, 42}, alphabet);
  const auto log = fixtures::running_log();
  std::size_t events = 0;
  for (std::size_t k = 0; events < 10000; ++k) {
    auto trace = log.traces[k % log.traces.size()];
    if (events + trace.size() > 10000) trace.resize(10000 - events);
    events += trace.size();
    (void)n.apply(trace);
  }
  CHECK(n.positions() == 10000);
  CHECK(n.mutations() >= 444);
  CHECK(n.mutations() <= 556);
}

TEST_CASE("seeded noise is reproducible") {
  const std::vector<std::string> alphabet{"a", "b", "c"};
  NoiseInjector x({0.3, true, true, true, 77}, alphabet), y({0.3, true, true, true, 77}, alphabet);
  for (int k = 0; k < 50; ++k) {
    const auto trace = fixtures::labels("abcabcabc");
    CHECK(x.apply(trace) == y.apply(trace));
  }
  const Trace t = parse_event_log("case,activity\n1,a\n1,b\n")[0];
  CHECK(inject_noise(t, {0.0}, alphabet).activities() == t.activities());
  CHECK_THROWS_AS(NoiseInjector({1.5}, alphabet), std::invalid_argument);
}

TEST_CASE("interleaving of the two-case log") {
  const auto log = parse_event_log(read_file(fixtures::data_path("two_cases.csv")));
  CHECK(order_of(interleave(log, Interleave::round_robin)) ==
        std::vector<std::string>{"1:a", "2:a", "1:b", "2:b", "1:c"});
  const std::vector<std::string> rows{"1:a", "1:b", "2:a", "2:b", "1:c"};
  CHECK(order_of(interleave(log, Interleave::by_timestamp)) == rows);
  CHECK(order_of(interleave(log, Interleave::file_order)) == rows);
  const auto frames = interleave(log, Interleave::round_robin);
  CHECK(frames[4].last);
  CHECK(frames[4].seq == 2u);
  CHECK_THROWS_AS((void)interleave(parse_event_log("case,activity\n1,a\n"), Interleave::by_timestamp),
                  std::invalid_argument);
}

TEST_CASE("replay delivers every event once") {
  const auto log = parse_event_log(read_file(fixtures::data_path("two_cases.csv")));
  Recorder r;
  const auto m = replay(log, {Interleave::round_robin, 0.0, true}, r);
  CHECK(m.events == 5);
  CHECK(r.frames.size() == 5);

  Recorder empty;
  const auto z = replay({}, {}, empty);
  CHECK(z.events == 0);
  CHECK(z.computation_ms == 0.0);
  CHECK(empty.frames.empty());
}

TEST_CASE("engine sink metrics") {
  const auto& trie = fixtures::running_trie();
  Engine engine(trie, EngineConfig{});
  EngineSink sink(engine);
  const auto log = parse_event_log(read_file(fixtures::data_path("conforming.csv")));
  const auto m = replay(log, {Interleave::round_robin, 0.0, true}, sink);
  CHECK(m.events == 40);
  CHECK(m.cases_closed == 8);
  CHECK(m.mean_final_cost == 0.0);
  CHECK(m.sequence_gaps == 0);
  CHECK(m.max_resident_cases == 8);
  CHECK(m.max_states_per_case >= 2);
  CHECK(m.bound_violations == 0);
  CHECK(m.p50_latency_us <= m.p95_latency_us);
  CHECK(m.p95_latency_us <= m.max_latency_us);
  CHECK(engine.buffer_stats().cases == 0);
  const auto doc = m.to_json();
  CHECK(doc["events"] == 40);

  Engine e2(trie, EngineConfig{});
  EngineSink gaps(e2);
  gaps.deliver({"x", "a", std::nullopt, 0});
  gaps.deliver({"x", "b", std::nullopt, 2});
  RunMetrics g;
  gaps.fill(g);
  CHECK(g.sequence_gaps == 1);
}

TEST_CASE("throttled replay accounts idle time") {
  const auto log = parse_event_log(read_file(fixtures::data_path("conforming.csv")));
  Engine engine(fixtures::running_trie(), EngineConfig{});
  EngineSink sink(engine);
  const auto m = replay(log, {Interleave::round_robin, 400.0, false}, sink);
  CHECK(m.wall_ms >= 90.0);
  CHECK(m.computation_ms + m.idle_ms <= m.wall_ms + 1.0);
  CHECK(m.computation_ms + m.idle_ms >= 0.8 * m.wall_ms);
}

TEST_CASE("percentile") {
  CHECK(percentile({}, 0.5) == 0.0);
  CHECK(percentile({3, 1, 2}, 0.5) == 2);
  CHECK(percentile({1, 2, 3, 4}, 1.0) == 4);
  CHECK(percentile({1, 2, 3, 4}, 0.0) == 1);
}

TEST_CASE("end paths of the running trie are the proxy traces") {
  auto paths = end_paths(fixtures::running_trie());
  auto expected = fixtures::running_log().traces;
  std::sort(paths.begin(), paths.end());
  std::sort(expected.begin(), expected.end());
  CHECK(paths == expected);
}

TEST_CASE("seeded simulation is reproducible") {
  const auto& trie = fixtures::running_trie();
  SimulationOptions o;
  o.noise = {0.1, true, true, true, 3};
  o.seed = 3;
  o.concurrent_cases = 5;
  o.max_events = 3000;
  auto run = [&] {
    StreamSimulator sim(end_paths(trie), trie.alphabet().labels(), o);
    Engine engine(trie, EngineConfig{});
    return simulate(sim, o, engine);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.metrics.events == 3000);
  CHECK(a.cost_stream == b.cost_stream);
  CHECK(a.metrics.max_buffer_states == b.metrics.max_buffer_states);
  CHECK(a.metrics.bound_violations == 0);
  CHECK(a.metrics.decay_violations == 0);
  CHECK(a.metrics.max_resident_cases <= 5);
  CHECK(a.metrics.sequence_gaps == 0);

  o.noise.level = 0.0;
  StreamSimulator clean(end_paths(trie), trie.alphabet().labels(), o);
  Engine engine(trie, EngineConfig{});
  const auto c = simulate(clean, o, engine);
  CHECK(c.metrics.cases_closed > 0);
  CHECK(c.metrics.mean_final_cost == 0.0);
}
