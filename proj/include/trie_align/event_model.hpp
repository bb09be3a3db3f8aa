#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trie_align {

using ActivityCode = std::int32_t;

// Skip symbol (>>) in either component of a move.
inline constexpr ActivityCode kSkip = -1;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Event {
  std::string case_id;
  std::string activity;
  std::optional<std::string> timestamp;
  std::uint64_t arrival_seq = 0;   // position within the case
  std::uint64_t ingest_index = 0;  // position within the whole input
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;

  [[nodiscard]] std::vector<std::string> activities() const;
};

struct ProxyLog {
  std::vector<std::vector<std::string>> traces;
};

// Bidirectional label <-> dense code map. Codes are assigned 0,1,2,... in
// first-seen order.
class ActivityTable {
 public:
  ActivityCode intern(std::string_view label);
  [[nodiscard]] std::optional<ActivityCode> find(std::string_view label) const;
  // Throws std::out_of_range for codes never issued.
  [[nodiscard]] const std::string& label(ActivityCode code) const;
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }

  friend bool operator==(const ActivityTable& a, const ActivityTable& b) { return a.labels_ == b.labels_; }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> labels_;
  std::unordered_map<std::string, ActivityCode, StringHash, std::equal_to<>> codes_;
};

// CSV with header `case,activity[,timestamp]`. Traces are returned in order of
// first appearance of their case; events keep file order.
std::vector<Trace> parse_event_log(std::string_view text);
std::string serialize_event_log(const std::vector<Trace>& traces);

// One comma-separated trace per line; blank lines are skipped.
ProxyLog parse_proxy_log(std::string_view text);
std::string serialize_proxy_log(const ProxyLog& log);

std::string read_file(const std::string& path);

}  // namespace trie_align
