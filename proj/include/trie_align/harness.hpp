#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trie_align/event_model.hpp"
#include "trie_align/iws.hpp"

namespace trie_align::harness {

// Wire record: one JSON object per line,
//   {"case": "...", "activity": "...", "ts": "...", "seq": n, "last": true}
// ts, seq and last are optional. "last" marks the final event of a case.
struct StreamFrame {
  std::string case_id;
  std::string activity;
  std::optional<std::string> timestamp;
  std::optional<std::uint64_t> seq;
  bool last = false;

  friend bool operator==(const StreamFrame&, const StreamFrame&) = default;
};

class FrameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[nodiscard]] std::string encode_frame(const StreamFrame& frame);
// Throws FrameError on malformed input.
[[nodiscard]] StreamFrame decode_frame(std::string_view line);

// --- noise -----------------------------------------------------------------

struct NoiseConfig {
  double level = 0.0;  // per-position mutation probability
  bool insert = true;
  bool remove = true;
  bool swap = true;
  std::uint64_t seed = 0;
  std::string fresh_symbol = "#noise";

  static NoiseConfig delete_only(double level, std::uint64_t seed) {
    return {level, false, true, false, seed, "#noise"};
  }
};

// Seeded trace mutator. Each original position is mutated with probability
// level by one enabled operator chosen uniformly: insert a random activity
// (alphabet plus one fresh symbol) before it, delete it, or swap it with its
// successor.
class NoiseInjector {
 public:
  NoiseInjector(NoiseConfig config, std::vector<std::string> alphabet);

  [[nodiscard]] std::vector<std::string> apply(const std::vector<std::string>& trace);
  [[nodiscard]] std::uint64_t mutations() const noexcept { return mutations_; }
  [[nodiscard]] std::uint64_t positions() const noexcept { return positions_; }

 private:
  NoiseConfig config_;
  std::vector<std::string> alphabet_;
  std::mt19937_64 rng_;
  std::vector<int> operators_;
  std::uint64_t mutations_ = 0;
  std::uint64_t positions_ = 0;
};

[[nodiscard]] Trace inject_noise(const Trace& trace, const NoiseConfig& config, const std::vector<std::string>& alphabet);

// --- replay ----------------------------------------------------------------

enum class Interleave { round_robin, by_timestamp, file_order };

// Global delivery order. Round-robin takes one event per case in turn
// (cases in first-appearance order); by-timestamp sorts on the timestamp text
// (date/time separator 'T' or ' ') with input order breaking ties;
// file-order replays the input order.
[[nodiscard]] std::vector<StreamFrame> interleave(const std::vector<Trace>& log, Interleave mode);

struct RunMetrics {
  std::uint64_t events = 0;
  std::uint64_t skipped = 0;         // malformed frames
  std::uint64_t sequence_gaps = 0;   // frames whose seq is not the next one for their case
  std::uint64_t cases_closed = 0;
  double wall_ms = 0.0;
  double computation_ms = 0.0;
  double idle_ms = 0.0;
  double mean_latency_us = 0.0;
  double p50_latency_us = 0.0;
  double p95_latency_us = 0.0;
  double max_latency_us = 0.0;
  std::size_t max_buffer_states = 0;     // total stored states, high-water
  std::size_t max_states_per_case = 0;
  std::size_t max_resident_cases = 0;
  std::uint64_t bound_violations = 0;
  std::uint64_t decay_violations = 0;
  double mean_final_cost = 0.0;          // over closed cases

  [[nodiscard]] nlohmann::json to_json() const;
};

// Receives frames in delivery order. deliver returns the time spent
// processing, in microseconds.
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual double deliver(const StreamFrame& frame) = 0;
  virtual void finish() {}
};

// Feeds an in-process engine and accumulates latency and buffer metrics.
class EngineSink : public EventSink {
 public:
  using ResultHook = std::function<void(const EventResult&)>;

  explicit EngineSink(Engine& engine, ResultHook hook = {});

  double deliver(const StreamFrame& frame) override;

  // Fills latency, buffer and audit fields of metrics.
  void fill(RunMetrics& metrics) const;
  [[nodiscard]] const std::vector<double>& latencies() const noexcept { return latencies_; }

 private:
  Engine& engine_;
  ResultHook hook_;
  std::vector<double> latencies_;
  std::size_t max_buffer_states_ = 0;
  std::size_t max_states_per_case_ = 0;
  std::size_t max_resident_cases_ = 0;
  std::size_t total_states_ = 0;
  std::uint64_t closed_ = 0;
  std::uint64_t closed_cost_sum_ = 0;
  std::uint64_t gaps_ = 0;
  std::unordered_map<std::string, std::uint64_t> next_seq_;
};

struct ReplayOptions {
  Interleave order = Interleave::round_robin;
  double rate = 0.0;  // events per second; 0 = unthrottled
  bool mark_last = false;
};

RunMetrics replay(const std::vector<Trace>& log, const ReplayOptions& options, EventSink& sink);

// Percentile by nearest rank on a copy of samples (q in [0, 1]).
[[nodiscard]] double percentile(std::vector<double> samples, double q);

// --- simulation -------------------------------------------------------------

struct SimulationOptions {
  NoiseConfig noise;
  std::uint64_t seed = 1;
  std::size_t concurrent_cases = 32;
  double duration_s = 0.0;       // 0 = no time limit
  std::uint64_t max_events = 0;  // 0 = no event limit
  double rate = 0.0;             // events per second; 0 = unthrottled
  std::uint64_t checkpoint_every = 0;  // record buffer high-water every n events
};

struct SimulationReport {
  RunMetrics metrics;
  std::vector<int> cost_stream;  // best cost after every event
  std::vector<std::size_t> high_water;  // buffer high-water at each checkpoint
};

// Samples traces (with replacement) from a proxy corpus, keeps
// concurrent_cases cases open, interleaves them at random and streams the
// noisy events into sink. Cases are closed after their last event.
class StreamSimulator {
 public:
  StreamSimulator(std::vector<std::vector<std::string>> corpus, std::vector<std::string> alphabet,
                  SimulationOptions options);

  // Next frame of the stream; never runs dry.
  StreamFrame next();

  [[nodiscard]] const NoiseInjector& noise() const noexcept { return noise_; }

 private:
  struct OpenCase {
    std::string id;
    std::vector<std::string> events;
    std::size_t position = 0;
  };
  void open_case(std::size_t slot);

  std::vector<std::vector<std::string>> corpus_;
  SimulationOptions options_;
  NoiseInjector noise_;
  std::mt19937_64 rng_;
  std::vector<OpenCase> open_;
  std::uint64_t case_counter_ = 0;
};

SimulationReport simulate(StreamSimulator& simulator, const SimulationOptions& options, Engine& engine);

// Distinct root-to-end paths of a trie as label sequences.
[[nodiscard]] std::vector<std::vector<std::string>> end_paths(const Trie& trie);

}  // namespace trie_align::harness
