#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "trie_align/harness.hpp"
#include "trie_align/iws.hpp"
#include "trie_align/net.hpp"
#include "trie_align/oracle.hpp"

using namespace trie_align;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitConnection = 3;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("trie-align");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("TRIE_ALIGN_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

struct EngineFlags {
  std::string config;
  std::string decay = "discounted";
  std::string df;
  int min_dt = -1;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON engine configuration file");
    cmd->add_option("--decay", decay, "fixed:N or discounted")->capture_default_str();
    cmd->add_option("--df", df, "discounting factor for discounted decay (default 0.3)");
    cmd->add_option("--min-dt", min_dt, "minimum decay time for discounted decay (default 3)");
  }

  EngineConfig resolve() const {
    EngineConfig cfg;
    if (!config.empty()) cfg = EngineConfig::from_json(json::parse(read_file(config)));
    if (decay.rfind("fixed:", 0) == 0) {
      cfg.decay.mode = DecayPolicy::Mode::fixed;
      cfg.decay.fixed_value = std::stoi(decay.substr(6));
    } else if (decay == "discounted") {
      if (config.empty()) cfg.decay.mode = DecayPolicy::Mode::discounted;
    } else {
      throw std::invalid_argument("--decay must be fixed:N or discounted");
    }
    if (!df.empty()) cfg.decay.df = Rational::parse(df);
    if (min_dt >= 0) cfg.decay.min_dt = min_dt;
    cfg.decay.check();
    return cfg;
  }
};

Trie load_trie(const std::string& path) { return Trie::load(read_file(path)); }

std::string fixed3(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << v;
  return out.str();
}

std::vector<ActivityCode> encode(const Trace& t, ActivityTable& table) {
  std::vector<ActivityCode> codes;
  for (const auto& e : t.events) codes.push_back(table.intern(e.activity));
  return codes;
}

// --- check -------------------------------------------------------------------

struct CaseReport {
  std::string case_id;
  std::size_t events = 0;
  int prefix_cost = 0;
  int complete_cost = 0;
  double micros = 0.0;
  std::vector<int> per_event;
};

struct CheckRun {
  std::vector<CaseReport> cases;
  harness::RunMetrics metrics;
  std::vector<double> latencies;
};

CheckRun run_check(const Trie& trie, const EngineConfig& cfg, const std::vector<Trace>& log,
                   harness::Interleave order) {
  Engine engine(trie, cfg);
  std::map<std::string, std::size_t> index;
  CheckRun run;
  for (const auto& t : log) {
    index[t.case_id] = run.cases.size();
    run.cases.push_back({t.case_id, t.events.size(), 0, 0, 0.0, {}});
  }
  harness::EngineSink sink(engine, [&](const EventResult& r) {
    auto& c = run.cases[index.at(r.case_id)];
    c.micros += r.processing_micros;
    c.per_event.push_back(r.best_cost);
  });
  run.metrics = harness::replay(log, {order, 0.0, false}, sink);
  run.latencies = sink.latencies();
  for (auto& c : run.cases) {
    if (c.events == 0) continue;
    c.prefix_cost = engine.conformance_cost(c.case_id);
    c.complete_cost = trie_align::cost(engine.best_complete_alignment(c.case_id));
  }
  return run;
}

harness::Interleave parse_order(const std::string& s) {
  if (s == "round-robin") return harness::Interleave::round_robin;
  if (s == "by-timestamp") return harness::Interleave::by_timestamp;
  if (s == "file-order") return harness::Interleave::file_order;
  throw std::invalid_argument("--order must be round-robin, by-timestamp or file-order");
}

int cmd_check(const std::string& trie_path, const std::string& log_path, const EngineFlags& flags, bool per_event,
              const std::string& order, bool as_json) {
  const auto trie = load_trie(trie_path);
  const auto cfg = flags.resolve();
  const auto log = parse_event_log(read_file(log_path));
  const auto run = run_check(trie, cfg, log, parse_order(order));

  double prefix_sum = 0, complete_sum = 0, micros = 0;
  std::size_t events = 0;
  for (const auto& c : run.cases) {
    prefix_sum += c.prefix_cost;
    complete_sum += c.complete_cost;
    micros += c.micros;
    events += c.events;
  }
  const double n = run.cases.empty() ? 1.0 : static_cast<double>(run.cases.size());
  const double per_event_ms = events ? micros / 1000.0 / static_cast<double>(events) : 0.0;

  if (as_json) {
    json doc = {{"config", cfg.to_json()}, {"traces", json::array()}};
    for (const auto& c : run.cases) {
      json t = {{"case", c.case_id}, {"events", c.events}, {"prefix_cost", c.prefix_cost},
                {"complete_cost", c.complete_cost}, {"time_ms", c.micros / 1000.0}};
      if (per_event) t["per_event_costs"] = c.per_event;
      doc["traces"].push_back(std::move(t));
    }
    doc["aggregate"] = {{"traces", run.cases.size()},
                        {"events", events},
                        {"mean_prefix_cost", prefix_sum / n},
                        {"mean_complete_cost", complete_sum / n},
                        {"mean_time_per_trace_ms", micros / 1000.0 / n},
                        {"mean_time_per_event_ms", per_event_ms},
                        {"max_buffer_states", run.metrics.max_buffer_states},
                        {"bound_violations", run.metrics.bound_violations}};
    std::cout << doc.dump(2) << '\n';
    return kExitOk;
  }
  std::cout << std::left << std::setw(16) << "case" << std::setw(8) << "events" << std::setw(13) << "prefix_cost"
            << std::setw(15) << "complete_cost" << "time_ms\n";
  for (const auto& c : run.cases) {
    std::cout << std::setw(16) << c.case_id << std::setw(8) << c.events << std::setw(13) << c.prefix_cost
              << std::setw(15) << c.complete_cost << fixed3(c.micros / 1000.0) << '\n';
    if (per_event) {
      std::cout << "  per-event:";
      for (int v : c.per_event) std::cout << ' ' << v;
      std::cout << '\n';
    }
  }
  std::cout << "traces " << run.cases.size() << ", events " << events << ", mean prefix cost "
            << fixed3(prefix_sum / n) << ", mean complete cost " << fixed3(complete_sum / n) << ", time/trace "
            << fixed3(micros / 1000.0 / n) << " ms, time/event " << fixed3(per_event_ms) << " ms\n";
  return kExitOk;
}

// --- build-trie --------------------------------------------------------------

int cmd_build(const std::string& proxy_path, const std::string& out_path, bool as_json) {
  const auto text = read_file(proxy_path);
  const auto start = Clock::now();
  const auto trie = Trie::build(parse_proxy_log(text));
  const double build_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << trie.serialize();
  }
  if (as_json) {
    std::cout << json{{"node_count", trie.node_count()},
                      {"end_count", trie.end_count()},
                      {"avg_leaf_depth", trie.avg_leaf_depth().to_double()},
                      {"max_branching", trie.max_branching()},
                      {"depth", trie.depth()},
                      {"alphabet_size", trie.alphabet().size()},
                      {"build_ms", build_ms}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "node_count      " << trie.node_count() << "\nend_count       " << trie.end_count()
              << "\navg_leaf_depth  " << std::fixed << std::setprecision(1) << trie.avg_leaf_depth().to_double()
              << "\nmax_branching   " << trie.max_branching() << "\ndepth           " << trie.depth()
              << "\nalphabet_size   " << trie.alphabet().size() << "\nbuild_ms        " << fixed3(build_ms) << '\n';
  }
  return kExitOk;
}

// --- oracle ------------------------------------------------------------------

int cmd_oracle(const std::string& trie_path, const std::string& log_path, const std::string& mode, bool compare,
               const EngineFlags& flags, bool as_json) {
  if (mode != "prefix" && mode != "complete") throw std::invalid_argument("--mode must be prefix or complete");
  const bool complete = mode == "complete";
  const auto trie = load_trie(trie_path);
  const auto log = parse_event_log(read_file(log_path));
  ActivityTable table = trie.alphabet();

  std::vector<std::vector<ActivityCode>> encoded;
  for (const auto& t : log) {
    encoded.push_back(encode(t, table));
    if ((encoded.back().size() + 1) * trie.node_count() > oracle::kMaxCells) {
      throw oracle::OracleError("trace '" + t.case_id + "' with " + std::to_string(encoded.back().size()) +
                                " events on a " + std::to_string(trie.node_count()) +
                                "-node trie exceeds the oracle size guard of " + std::to_string(oracle::kMaxCells) +
                                " cells; split the log or use check instead");
    }
  }
  std::optional<CheckRun> iws;
  if (compare) iws = run_check(trie, flags.resolve(), log, harness::Interleave::round_robin);

  json rows = json::array();
  long optimal_sum = 0, iws_sum = 0;
  std::size_t exact = 0, violations = 0;
  for (std::size_t k = 0; k < log.size(); ++k) {
    const auto result = complete ? oracle::optimal_complete(encoded[k], trie) : oracle::optimal_prefix(encoded[k], trie);
    json row = {{"case", log[k].case_id}, {"optimal_cost", result.cost},
                {"alignment", to_json(result.alignment, table)}, {"rendered", render(result.alignment, table)}};
    optimal_sum += result.cost;
    if (iws) {
      const auto& c = iws->cases[k];
      const int approx = complete ? c.complete_cost : c.prefix_cost;
      row["iws_cost"] = approx;
      row["error"] = approx - result.cost;
      iws_sum += approx;
      if (approx == result.cost) ++exact;
      if (approx < result.cost) ++violations;
    }
    rows.push_back(std::move(row));
  }

  json aggregate = {{"traces", log.size()}, {"mode", mode}, {"optimal_cost_sum", optimal_sum}};
  if (iws) {
    aggregate["iws_cost_sum"] = iws_sum;
    aggregate["exact_matches"] = exact;
    aggregate["below_optimum"] = violations;
    if (optimal_sum > 0) {
      aggregate["cost_ratio"] = static_cast<double>(iws_sum) / static_cast<double>(optimal_sum);
    } else if (iws_sum == 0) {
      aggregate["cost_ratio"] = 1.0;
    } else {
      aggregate["cost_ratio"] = nullptr;
    }
  }

  if (as_json) {
    std::cout << json{{"traces", rows}, {"aggregate", aggregate}}.dump(2) << '\n';
  } else {
    for (const auto& row : rows) {
      std::cout << "case " << row["case"].get<std::string>() << ": optimal " << mode << " cost "
                << row["optimal_cost"].get<int>();
      if (iws) std::cout << ", iws " << row["iws_cost"].get<int>() << ", error " << row["error"].get<int>();
      std::cout << '\n' << row["rendered"].get<std::string>();
    }
    std::cout << "traces " << log.size() << ", optimal cost sum " << optimal_sum;
    if (iws) {
      std::cout << ", iws cost sum " << iws_sum << ", exact matches " << exact << "/" << log.size() << ", ratio ";
      if (aggregate["cost_ratio"].is_null()) {
        std::cout << "undefined";
      } else {
        std::cout << fixed3(aggregate["cost_ratio"].get<double>());
      }
    }
    std::cout << '\n';
  }
  return violations ? kExitFailure : kExitOk;
}

// --- serve -------------------------------------------------------------------

void print_metrics(const harness::RunMetrics& m, bool as_json) {
  if (as_json) {
    std::cout << m.to_json().dump(2) << '\n';
    return;
  }
  std::cout << "events            " << m.events << "\nskipped           " << m.skipped << "\nsequence_gaps     "
            << m.sequence_gaps << "\ncases_closed      " << m.cases_closed << "\nwall_ms           "
            << fixed3(m.wall_ms) << "\ncomputation_ms    " << fixed3(m.computation_ms) << "\nidle_ms           "
            << fixed3(m.idle_ms) << "\nmean_latency_us   " << fixed3(m.mean_latency_us) << "\np50_latency_us    "
            << fixed3(m.p50_latency_us) << "\np95_latency_us    " << fixed3(m.p95_latency_us)
            << "\nmax_latency_us    " << fixed3(m.max_latency_us) << "\nmax_buffer_states " << m.max_buffer_states
            << "\nmax_states/case   " << m.max_states_per_case << "\nmax_resident      " << m.max_resident_cases
            << "\nbound_violations  " << m.bound_violations << "\ndecay_violations  " << m.decay_violations
            << "\nmean_final_cost   " << fixed3(m.mean_final_cost) << '\n';
}

int cmd_serve(const std::string& trie_path, const std::string& listen, const EngineFlags& flags, bool per_event,
              std::size_t queue, bool as_json) {
  const auto trie = load_trie(trie_path);
  Engine engine(trie, flags.resolve());
  net::ServerOptions options;
  options.listen = net::parse_endpoint(listen);
  options.queue_capacity = queue;
  if (per_event) {
    options.on_result = [&engine](const EventResult& r) { std::cout << engine.result_to_json(r).dump() << '\n'; };
  }
  net::StreamServer server(engine, options);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.start();
  std::cerr << "listening on " << options.listen.host << ":" << server.port() << std::endl;
  while (!g_interrupted && !server.stopping()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  server.wait();
  print_metrics(server.metrics(), as_json);
  return kExitOk;
}

// --- simulate ----------------------------------------------------------------

struct SimulateFlags {
  std::string trie;
  std::string proxy_log;
  std::string connect;
  bool inproc = false;
  double noise = 0.0;
  std::uint64_t seed = 1;
  double duration = 10.0;
  std::uint64_t max_events = 0;
  std::size_t cases = 32;
  double rate = 0.0;
  int retries = 5;
};

int cmd_simulate(const SimulateFlags& f, const EngineFlags& flags, bool as_json) {
  if (f.inproc == !f.connect.empty()) throw std::invalid_argument("exactly one of --connect or --inproc is required");
  const auto trie = load_trie(f.trie);
  auto corpus = f.proxy_log.empty() ? harness::end_paths(trie) : parse_proxy_log(read_file(f.proxy_log)).traces;

  harness::SimulationOptions options;
  options.noise.level = f.noise;
  options.noise.seed = f.seed;
  options.seed = f.seed;
  options.concurrent_cases = f.cases;
  options.duration_s = f.duration;
  options.max_events = f.max_events;
  options.rate = f.rate;
  harness::StreamSimulator simulator(std::move(corpus), trie.alphabet().labels(), options);

  if (f.inproc) {
    Engine engine(trie, flags.resolve());
    const auto report = harness::simulate(simulator, options, engine);
    print_metrics(report.metrics, as_json);
    return report.metrics.bound_violations || report.metrics.decay_violations ? kExitFailure : kExitOk;
  }

  net::TcpSink sink(net::parse_endpoint(f.connect), f.retries);
  const auto start = Clock::now();
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(f.duration));
  std::uint64_t sent = 0;
  while ((f.max_events == 0 || sent < f.max_events) && (f.duration <= 0.0 || Clock::now() < deadline)) {
    if (f.max_events == 0 && f.duration <= 0.0) break;
    if (f.rate > 0.0) {
      std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(
                                                std::chrono::duration<double>(static_cast<double>(sent) / f.rate)));
    }
    sink.deliver(simulator.next());
    ++sent;
  }
  sink.finish();
  const auto remote = sink.request("metrics");
  if (as_json) {
    std::cout << json{{"sent", sent}, {"server", remote}}.dump(2) << '\n';
  } else {
    std::cout << "sent " << sent << " frames\nserver metrics " << remote.dump() << '\n';
  }
  return kExitOk;
}

// --- bench -------------------------------------------------------------------

int cmd_bench(const std::string& trie_path, const std::string& log_path, const EngineFlags& flags, int repeat,
              int warmup, bool as_json) {
  if (repeat < 1 || warmup < 0) throw std::invalid_argument("--repeat must be >= 1 and --warmup >= 0");
  const auto trie = load_trie(trie_path);
  const auto cfg = flags.resolve();
  const auto log = parse_event_log(read_file(log_path));

  std::vector<double> samples;
  std::size_t max_states = 0, max_per_case = 0;
  std::uint64_t violations = 0, events = 0;
  long total_cost = 0;
  for (int run = 0; run < warmup + repeat; ++run) {
    const auto result = run_check(trie, cfg, log, harness::Interleave::round_robin);
    if (run < warmup) continue;
    const auto& metrics = result.metrics;
    samples.insert(samples.end(), result.latencies.begin(), result.latencies.end());
    max_states = std::max(max_states, metrics.max_buffer_states);
    max_per_case = std::max(max_per_case, metrics.max_states_per_case);
    violations += metrics.bound_violations + metrics.decay_violations;
    events = metrics.events;
    total_cost = 0;
    for (const auto& c : result.cases) total_cost += c.prefix_cost;
  }
  double mean = 0.0;
  for (double s : samples) mean += s;
  if (!samples.empty()) mean /= static_cast<double>(samples.size());
  const double p50 = harness::percentile(samples, 0.50);
  const double p95 = harness::percentile(samples, 0.95);
  const double max = harness::percentile(samples, 1.0);

  if (as_json) {
    std::cout << json{{"repeat", repeat},
                      {"warmup", warmup},
                      {"events_per_run", events},
                      {"total_prefix_cost", total_cost},
                      {"mean_us", mean},
                      {"p50_us", p50},
                      {"p95_us", p95},
                      {"max_us", max},
                      {"max_buffer_states", max_states},
                      {"max_states_per_case", max_per_case},
                      {"bound_ok", violations == 0}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "runs " << repeat << " (+" << warmup << " warm-up), events/run " << events
              << ", total prefix cost " << total_cost << "\nper-event us: mean " << fixed3(mean) << ", p50 "
              << fixed3(p50) << ", p95 " << fixed3(p95) << ", max " << fixed3(max) << "\nmax buffer states "
              << max_states << ", max states/case " << max_per_case << ", bound "
              << (violations == 0 ? "ok" : "VIOLATED") << '\n';
  }
  return violations ? kExitFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Streaming conformance checking against a proxy trie"};
  app.require_subcommand(1, 1);
  bool as_json = false;
  app.add_flag("--json", as_json, "emit JSON reports");

  std::string proxy_path, out_path;
  auto* build = app.add_subcommand("build-trie", "build a trie file from a proxy log");
  build->add_option("--proxy-log", proxy_path, "one comma-separated trace per line")->required();
  build->add_option("--out", out_path, "trie file to write");

  std::string trie_path, log_path, order = "round-robin";
  bool per_event = false;
  EngineFlags check_flags;
  auto* check = app.add_subcommand("check", "check an event log offline, event by event");
  check->add_option("--trie", trie_path)->required();
  check->add_option("--log", log_path, "CSV event log: case,activity[,timestamp]")->required();
  check_flags.add(check);
  check->add_flag("--per-event", per_event, "report the cost after every event");
  check->add_option("--order", order, "round-robin, by-timestamp or file-order")->capture_default_str();

  std::string listen = "127.0.0.1:7070";
  std::size_t queue = 4096;
  EngineFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "accept newline-delimited JSON frames over TCP");
  serve->add_option("--trie", trie_path)->required();
  serve->add_option("--listen", listen)->capture_default_str();
  serve->add_option("--queue", queue, "ingest queue capacity")->capture_default_str();
  serve->add_flag("--per-event", per_event, "print every event result as a JSON line");
  serve_flags.add(serve);

  SimulateFlags sim;
  EngineFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "stream noisy traces sampled from the trie");
  simulate->add_option("--trie", sim.trie)->required();
  simulate->add_option("--proxy-log", sim.proxy_log, "sample from these traces instead of trie paths");
  auto* connect = simulate->add_option("--connect", sim.connect, "host:port of a running server");
  simulate->add_flag("--inproc", sim.inproc, "run an engine in this process")->excludes(connect);
  simulate->add_option("--noise", sim.noise)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--duration", sim.duration, "seconds; 0 for no limit")->capture_default_str();
  simulate->add_option("--max-events", sim.max_events, "0 for no limit")->capture_default_str();
  simulate->add_option("--cases", sim.cases, "concurrently open cases")->capture_default_str();
  simulate->add_option("--rate", sim.rate, "events per second; 0 = unthrottled")->capture_default_str();
  simulate->add_option("--retries", sim.retries, "connection attempts")->capture_default_str();
  sim_flags.add(simulate);

  std::string mode = "prefix";
  bool compare = false;
  EngineFlags oracle_flags;
  auto* oracle_cmd = app.add_subcommand("oracle", "optimal alignments by dynamic programming");
  oracle_cmd->add_option("--trie", trie_path)->required();
  oracle_cmd->add_option("--log", log_path)->required();
  oracle_cmd->add_option("--mode", mode, "prefix or complete")->capture_default_str();
  oracle_cmd->add_flag("--compare", compare, "also run the streaming engine and report its error");
  oracle_flags.add(oracle_cmd);

  int repeat = 5, warmup = 1;
  EngineFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "per-event latency distribution");
  bench->add_option("--trie", trie_path)->required();
  bench->add_option("--log", log_path)->required();
  bench->add_option("--repeat", repeat)->capture_default_str();
  bench->add_option("--warmup", warmup, "runs excluded from the statistics")->capture_default_str();
  bench_flags.add(bench);

  for (auto* sub : {build, check, serve, simulate, oracle_cmd, bench}) sub->add_flag("--json", as_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*build) return cmd_build(proxy_path, out_path, as_json);
    if (*check) return cmd_check(trie_path, log_path, check_flags, per_event, order, as_json);
    if (*serve) return cmd_serve(trie_path, listen, serve_flags, per_event, queue, as_json);
    if (*simulate) return cmd_simulate(sim, sim_flags, as_json);
    if (*oracle_cmd) return cmd_oracle(trie_path, log_path, mode, compare, oracle_flags, as_json);
    if (*bench) return cmd_bench(trie_path, log_path, bench_flags, repeat, warmup, as_json);
  } catch (const net::ConnectionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConnection;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
