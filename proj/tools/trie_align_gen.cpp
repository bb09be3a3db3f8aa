// Writes a synthetic proxy log (and optionally an event log sampled from the
// same model) for benchmarks and throughput tests.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "trie_align/generator.hpp"

using namespace trie_align;

int main(int argc, char** argv) {
  CLI::App app{"synthetic proxy-log generator"};
  gen::ProxyOptions options;
  std::string out, event_log;
  std::size_t log_traces = 0;
  app.add_option("--out", out, "proxy log to write")->required();
  app.add_option("--traces", options.traces)->capture_default_str();
  app.add_option("--activities", options.model.activities)->capture_default_str();
  app.add_option("--depth", options.model.max_depth)->capture_default_str();
  app.add_option("--width", options.model.max_children, "max children per block")->capture_default_str();
  app.add_option("--model-seed", options.model.seed)->capture_default_str();
  app.add_option("--seed", options.seed, "playout seed")->capture_default_str();
  app.add_option("--event-log", event_log, "also write a CSV event log from fresh playouts");
  app.add_option("--log-traces", log_traces, "cases in the event log (default: --traces)");
  bool show_model = false;
  app.add_flag("--print-model", show_model);
  CLI11_PARSE(app, argc, argv);

  const auto tree = gen::ProcessTree::random(options.model);
  if (show_model) std::cerr << tree.to_string() << '\n';
  std::ofstream(out) << serialize_proxy_log(gen::generate_proxy_log(tree, options.traces, options.seed));
  if (!event_log.empty()) {
    const auto sample = gen::generate_proxy_log(tree, log_traces ? log_traces : options.traces, options.seed + 1);
    std::ofstream(event_log) << serialize_event_log(gen::to_event_log(sample));
  }
  return 0;
}
