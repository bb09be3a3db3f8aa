#include "trie_align/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

namespace trie_align::harness {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double millis_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Sleeps until the scheduled time of event k at the given rate and returns
// the time spent waiting, in milliseconds.
double throttle(Clock::time_point start, std::uint64_t k, double rate) {
  if (rate <= 0.0) return 0.0;
  const auto due = start + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(static_cast<double>(k) / rate));
  const auto now = Clock::now();
  if (due <= now) return 0.0;
  std::this_thread::sleep_until(due);
  return std::chrono::duration<double, std::milli>(Clock::now() - now).count();
}

std::string normalized_timestamp(const std::string& ts) {
  std::string out = ts;
  std::replace(out.begin(), out.end(), 'T', ' ');
  return out;
}

}  // namespace

std::string encode_frame(const StreamFrame& frame) {
  json doc = {{"case", frame.case_id}, {"activity", frame.activity}};
  if (frame.timestamp) doc["ts"] = *frame.timestamp;
  if (frame.seq) doc["seq"] = *frame.seq;
  if (frame.last) doc["last"] = true;
  return doc.dump();
}

StreamFrame decode_frame(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FrameError(std::string("malformed frame: ") + e.what());
  }
  if (!doc.is_object()) throw FrameError("malformed frame: not an object");
  auto text_field = [&](const char* key) -> std::string {
    auto it = doc.find(key);
    if (it == doc.end()) throw FrameError(std::string("malformed frame: missing '") + key + "'");
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
    throw FrameError(std::string("malformed frame: '") + key + "' must be a string");
  };
  StreamFrame frame;
  frame.case_id = text_field("case");
  frame.activity = text_field("activity");
  if (frame.case_id.empty() || frame.activity.empty()) throw FrameError("malformed frame: empty case or activity");
  if (auto it = doc.find("ts"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw FrameError("malformed frame: 'ts' must be a string");
    frame.timestamp = it->get<std::string>();
  }
  if (auto it = doc.find("seq"); it != doc.end() && !it->is_null()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
      throw FrameError("malformed frame: 'seq' must be a non-negative integer");
    frame.seq = it->get<std::uint64_t>();
  }
  if (auto it = doc.find("last"); it != doc.end()) {
    if (!it->is_boolean()) throw FrameError("malformed frame: 'last' must be a boolean");
    frame.last = it->get<bool>();
  }
  return frame;
}

NoiseInjector::NoiseInjector(NoiseConfig config, std::vector<std::string> alphabet)
    : config_(std::move(config)), alphabet_(std::move(alphabet)), rng_(config_.seed) {
  if (!(config_.level >= 0.0 && config_.level <= 1.0)) throw std::invalid_argument("noise level must be in [0, 1]");
  if (config_.insert) operators_.push_back(0);
  if (config_.remove) operators_.push_back(1);
  if (config_.swap) operators_.push_back(2);
  if (operators_.empty() && config_.level > 0.0) throw std::invalid_argument("noise level > 0 needs an operator");
}

std::vector<std::string> NoiseInjector::apply(const std::vector<std::string>& trace) {
  std::vector<std::string> out;
  out.reserve(trace.size() + 2);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    ++positions_;
    if (config_.level <= 0.0 || !(coin(rng_) < config_.level)) {
      out.push_back(trace[k]);
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick_op(0, operators_.size() - 1);
    switch (operators_[pick_op(rng_)]) {
      case 0: {
        std::uniform_int_distribution<std::size_t> pick(0, alphabet_.size());
        const auto idx = pick(rng_);
        out.push_back(idx < alphabet_.size() ? alphabet_[idx] : config_.fresh_symbol);
        out.push_back(trace[k]);
        ++mutations_;
        break;
      }
      case 1:
        ++mutations_;
        break;
      default:
        if (k + 1 < trace.size()) {
          out.push_back(trace[k + 1]);
          out.push_back(trace[k]);
          ++k;
          ++positions_;
          ++mutations_;
        } else {
          out.push_back(trace[k]);
        }
        break;
    }
  }
  return out;
}

Trace inject_noise(const Trace& trace, const NoiseConfig& config, const std::vector<std::string>& alphabet) {
  NoiseInjector injector(config, alphabet);
  Trace out{trace.case_id, {}};
  for (auto& label : injector.apply(trace.activities())) {
    Event e;
    e.case_id = trace.case_id;
    e.activity = std::move(label);
    e.arrival_seq = out.events.size();
    out.events.push_back(std::move(e));
  }
  return out;
}

std::vector<StreamFrame> interleave(const std::vector<Trace>& log, Interleave mode) {
  std::vector<StreamFrame> frames;
  auto frame_of = [](const Trace& t, std::size_t k) {
    const auto& e = t.events[k];
    return StreamFrame{t.case_id, e.activity, e.timestamp, e.arrival_seq, k + 1 == t.events.size()};
  };
  if (mode == Interleave::round_robin) {
    for (std::size_t round = 0;; ++round) {
      bool any = false;
      for (const auto& t : log) {
        if (round < t.events.size()) {
          frames.push_back(frame_of(t, round));
          any = true;
        }
      }
      if (!any) break;
    }
    return frames;
  }

  struct Keyed {
    std::string ts;
    std::uint64_t ingest;
    StreamFrame frame;
  };
  std::vector<Keyed> keyed;
  for (const auto& t : log) {
    for (std::size_t k = 0; k < t.events.size(); ++k) {
      const auto& e = t.events[k];
      if (mode == Interleave::by_timestamp && !e.timestamp) {
        throw std::invalid_argument("by-timestamp replay needs a timestamp on every event (case " + t.case_id + ")");
      }
      keyed.push_back({mode == Interleave::by_timestamp ? normalized_timestamp(*e.timestamp) : std::string{},
                       e.ingest_index, frame_of(t, k)});
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    return a.ingest < b.ingest;
  });
  frames.reserve(keyed.size());
  for (auto& k : keyed) frames.push_back(std::move(k.frame));
  return frames;
}

json RunMetrics::to_json() const {
  return {
      {"events", events},
      {"skipped", skipped},
      {"sequence_gaps", sequence_gaps},
      {"cases_closed", cases_closed},
      {"wall_ms", wall_ms},
      {"computation_ms", computation_ms},
      {"idle_ms", idle_ms},
      {"mean_latency_us", mean_latency_us},
      {"p50_latency_us", p50_latency_us},
      {"p95_latency_us", p95_latency_us},
      {"max_latency_us", max_latency_us},
      {"max_buffer_states", max_buffer_states},
      {"max_states_per_case", max_states_per_case},
      {"max_resident_cases", max_resident_cases},
      {"bound_violations", bound_violations},
      {"decay_violations", decay_violations},
      {"mean_final_cost", mean_final_cost},
  };
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) return 0.0;
  q = std::clamp(q, 0.0, 1.0);
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1), samples.end());
  return samples[rank - 1];
}

EngineSink::EngineSink(Engine& engine, ResultHook hook) : engine_(engine), hook_(std::move(hook)) {}

double EngineSink::deliver(const StreamFrame& frame) {
  if (frame.seq) {
    auto [it, inserted] = next_seq_.try_emplace(frame.case_id, 0);
    if (*frame.seq != it->second) ++gaps_;
    it->second = *frame.seq + 1;
  }
  const std::size_t before = engine_.has_case(frame.case_id) ? engine_.case_buffer(frame.case_id).states.size() : 0;
  const auto result = engine_.process_event(frame.case_id, frame.activity);
  latencies_.push_back(result.processing_micros);
  total_states_ = total_states_ + result.states_in_case - before;
  max_buffer_states_ = std::max(max_buffer_states_, total_states_);
  max_states_per_case_ = std::max(max_states_per_case_, result.states_in_case);
  max_resident_cases_ = std::max(max_resident_cases_, engine_.buffer_stats().cases);
  if (hook_) hook_(result);
  if (frame.last) {
    total_states_ -= result.states_in_case;
    closed_cost_sum_ += static_cast<std::uint64_t>(result.best_cost);
    ++closed_;
    engine_.close_case(frame.case_id);
    next_seq_.erase(frame.case_id);
  }
  return result.processing_micros;
}

void EngineSink::fill(RunMetrics& metrics) const {
  double sum = 0.0;
  double max = 0.0;
  for (double v : latencies_) {
    sum += v;
    max = std::max(max, v);
  }
  metrics.computation_ms = sum / 1000.0;
  metrics.mean_latency_us = latencies_.empty() ? 0.0 : sum / static_cast<double>(latencies_.size());
  metrics.p50_latency_us = percentile(latencies_, 0.50);
  metrics.p95_latency_us = percentile(latencies_, 0.95);
  metrics.max_latency_us = max;
  metrics.max_buffer_states = max_buffer_states_;
  metrics.max_resident_cases = max_resident_cases_;
  metrics.sequence_gaps = gaps_;
  metrics.cases_closed = closed_;
  metrics.mean_final_cost = closed_ ? static_cast<double>(closed_cost_sum_) / static_cast<double>(closed_) : 0.0;
  metrics.bound_violations = engine_.audit().bound_violations;
  metrics.decay_violations = engine_.audit().decay_violations;
  metrics.max_states_per_case = max_states_per_case_;
}

RunMetrics replay(const std::vector<Trace>& log, const ReplayOptions& options, EventSink& sink) {
  auto frames = interleave(log, options.order);
  RunMetrics metrics;
  const auto start = Clock::now();
  double busy_us = 0.0;
  for (std::uint64_t k = 0; k < frames.size(); ++k) {
    metrics.idle_ms += throttle(start, k, options.rate);
    if (!options.mark_last) frames[k].last = false;
    busy_us += sink.deliver(frames[k]);
    ++metrics.events;
  }
  sink.finish();
  metrics.wall_ms = millis_since(start);
  metrics.computation_ms = busy_us / 1000.0;
  if (auto* engine_sink = dynamic_cast<EngineSink*>(&sink)) engine_sink->fill(metrics);
  return metrics;
}

StreamSimulator::StreamSimulator(std::vector<std::vector<std::string>> corpus, std::vector<std::string> alphabet,
                                 SimulationOptions options)
    : corpus_(std::move(corpus)),
      options_(std::move(options)),
      noise_(options_.noise, std::move(alphabet)),
      rng_(options_.seed) {
  if (corpus_.empty()) throw std::invalid_argument("simulation corpus is empty");
  open_.resize(std::max<std::size_t>(options_.concurrent_cases, 1));
  for (std::size_t slot = 0; slot < open_.size(); ++slot) open_case(slot);
}

void StreamSimulator::open_case(std::size_t slot) {
  std::uniform_int_distribution<std::size_t> pick(0, corpus_.size() - 1);
  auto& c = open_[slot];
  do {
    c.events = noise_.apply(corpus_[pick(rng_)]);
  } while (c.events.empty());
  c.id = "sim-" + std::to_string(case_counter_++);
  c.position = 0;
}

StreamFrame StreamSimulator::next() {
  std::uniform_int_distribution<std::size_t> pick(0, open_.size() - 1);
  const std::size_t slot = pick(rng_);
  auto& c = open_[slot];
  StreamFrame frame{c.id, c.events[c.position], std::nullopt, c.position, c.position + 1 == c.events.size()};
  ++c.position;
  if (frame.last) open_case(slot);
  return frame;
}

SimulationReport simulate(StreamSimulator& simulator, const SimulationOptions& options, Engine& engine) {
  SimulationReport report;
  EngineSink sink(engine, [&](const EventResult& r) { report.cost_stream.push_back(r.best_cost); });
  const auto start = Clock::now();
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(options.duration_s));
  auto& m = report.metrics;
  while (true) {
    if (options.max_events > 0 && m.events >= options.max_events) break;
    if (options.duration_s > 0.0 && Clock::now() >= deadline) break;
    if (options.max_events == 0 && options.duration_s <= 0.0) break;
    m.idle_ms += throttle(start, m.events, options.rate);
    sink.deliver(simulator.next());
    ++m.events;
    if (options.checkpoint_every > 0 && m.events % options.checkpoint_every == 0) {
      RunMetrics snapshot;
      sink.fill(snapshot);
      report.high_water.push_back(snapshot.max_buffer_states);
    }
  }
  m.wall_ms = millis_since(start);
  sink.fill(m);
  return report;
}

std::vector<std::vector<std::string>> end_paths(const Trie& trie) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t id = 0; id < trie.node_count(); ++id) {
    const auto nid = static_cast<NodeId>(id);
    if (!trie.node(nid).is_end) continue;
    std::vector<std::string> labels;
    for (ActivityCode a : trie.path_to(nid)) labels.push_back(trie.alphabet().label(a));
    out.push_back(std::move(labels));
  }
  return out;
}

}  // namespace trie_align::harness
