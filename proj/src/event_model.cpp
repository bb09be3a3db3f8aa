#include "trie_align/event_model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace trie_align {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

// Calls fn(line_number, line) for each line; line numbers are 1-based.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    fn(line_no, text.substr(start, nl - start));
    start = nl + 1;
  }
}

}  // namespace

std::vector<std::string> Trace::activities() const {
  std::vector<std::string> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.activity);
  return out;
}

ActivityCode ActivityTable::intern(std::string_view label) {
  if (auto it = codes_.find(label); it != codes_.end()) return it->second;
  const auto code = static_cast<ActivityCode>(labels_.size());
  labels_.emplace_back(label);
  codes_.emplace(labels_.back(), code);
  return code;
}

std::optional<ActivityCode> ActivityTable::find(std::string_view label) const {
  if (auto it = codes_.find(label); it != codes_.end()) return it->second;
  return std::nullopt;
}

const std::string& ActivityTable::label(ActivityCode code) const {
  if (code < 0 || static_cast<std::size_t>(code) >= labels_.size()) {
    throw std::out_of_range("unknown activity code " + std::to_string(code));
  }
  return labels_[static_cast<std::size_t>(code)];
}

std::vector<Trace> parse_event_log(std::string_view text) {
  std::vector<Trace> traces;
  std::unordered_map<std::string, std::size_t> index;
  bool header_seen = false;
  bool has_timestamp = false;
  std::uint64_t ingested = 0;

  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const auto line = trim(raw);
    if (line.empty()) return;
    const auto fields = split_commas(line);
    if (!header_seen) {
      if (fields.size() < 2 || fields.size() > 3 || fields[0] != "case" || fields[1] != "activity" ||
          (fields.size() == 3 && fields[2] != "timestamp")) {
        throw ParseError(line_no, "expected header 'case,activity[,timestamp]'");
      }
      has_timestamp = fields.size() == 3;
      header_seen = true;
      return;
    }
    const std::size_t expected = has_timestamp ? 3 : 2;
    if (fields.size() != expected && !(has_timestamp && fields.size() == 2)) {
      throw ParseError(line_no, "expected " + std::to_string(expected) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError(line_no, "empty case id");
    if (fields[1].empty()) throw ParseError(line_no, "empty activity");

    std::string case_id(fields[0]);
    auto [it, inserted] = index.try_emplace(case_id, traces.size());
    if (inserted) traces.push_back(Trace{case_id, {}});
    auto& trace = traces[it->second];

    Event ev;
    ev.case_id = std::move(case_id);
    ev.activity = std::string(fields[1]);
    if (fields.size() == 3 && !fields[2].empty()) ev.timestamp = std::string(fields[2]);
    ev.arrival_seq = trace.events.size();
    ev.ingest_index = ingested++;
    trace.events.push_back(std::move(ev));
  });
  return traces;
}

std::string serialize_event_log(const std::vector<Trace>& traces) {
  std::vector<std::pair<const Event*, const std::string*>> events;
  bool any_ts = false;
  for (const auto& t : traces) {
    for (const auto& e : t.events) {
      events.emplace_back(&e, &t.case_id);
      any_ts = any_ts || e.timestamp.has_value();
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& a, const auto& b) { return a.first->ingest_index < b.first->ingest_index; });
  std::ostringstream out;
  out << (any_ts ? "case,activity,timestamp\n" : "case,activity\n");
  for (const auto& [e, case_id] : events) {
    out << *case_id << ',' << e->activity;
    if (any_ts) out << ',' << e->timestamp.value_or("");
    out << '\n';
  }
  return out.str();
}

ProxyLog parse_proxy_log(std::string_view text) {
  ProxyLog log;
  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const auto line = trim(raw);
    if (line.empty()) return;
    std::vector<std::string> trace;
    for (auto token : split_commas(line)) {
      if (token.empty()) throw ParseError(line_no, "empty activity token");
      trace.emplace_back(token);
    }
    log.traces.push_back(std::move(trace));
  });
  return log;
}

std::string serialize_proxy_log(const ProxyLog& log) {
  std::ostringstream out;
  for (const auto& trace : log.traces) {
    for (std::size_t k = 0; k < trace.size(); ++k) out << (k ? "," : "") << trace[k];
    out << '\n';
  }
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace trie_align
