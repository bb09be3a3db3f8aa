#include <doctest.h>

#include <functional>
#include <random>

#include "fixtures.hpp"
#include "trie_align/oracle.hpp"

using namespace trie_align;
using fixtures::codes;

namespace {

const Trie& T() { return fixtures::running_trie(); }
ActivityCode c(char x) { return T().alphabet().find(std::string(1, x)).value(); }

}  // namespace

TEST_CASE("optimal prefix") {
  const auto r = oracle::optimal_prefix(codes(T(), "abbc"), T());
  CHECK(r.cost == 1);
  CHECK(validate(r.alignment, codes(T(), "abbc"), T()));
  CHECK(r.alignment.moves ==
        std::vector<Move>{Move::sync(c('a')), Move::sync(c('b')), Move::log_move(c('b')), Move::sync(c('c'))});
  CHECK(oracle::optimal_prefix(codes(T(), "abce"), T()).cost == 0);
  const std::vector<ActivityCode> z{99};
  CHECK(oracle::optimal_prefix(z, T()).cost == 1);
  const auto empty = oracle::optimal_prefix({}, T());
  CHECK(empty.cost == 0);
  CHECK(empty.alignment.moves.empty());
}

TEST_CASE("optimal complete") {
  const auto r = oracle::optimal_complete(codes(T(), "abbc"), T());
  CHECK(r.cost == 2);
  CHECK(r.alignment.moves == std::vector<Move>{Move::sync(c('a')), Move::sync(c('b')), Move::log_move(c('b')),
                                               Move::sync(c('c')), Move::model_move(c('e'))});
  CHECK(r.alignment.kind == AlignmentKind::complete);
  CHECK(oracle::optimal_complete(codes(T(), "abe"), T()).cost == 0);
  CHECK(oracle::optimal_complete({}, T()).cost == 3);
}

TEST_CASE("exhaustive enumeration") {
  CHECK(oracle::exhaustive_prefix(codes(T(), "abbc"), T(), 8) == 1);
  CHECK(oracle::exhaustive_prefix(codes(T(), "a"), T(), 2) == 0);
  CHECK(oracle::exhaustive_prefix(codes(T(), "b"), T(), 2) == 1);
  CHECK_THROWS_WITH_AS((void)oracle::exhaustive_prefix(codes(T(), "abbc"), T(), 3),
                       doctest::Contains("bound too small"), oracle::OracleError);
}

TEST_CASE("DP equals enumeration on every trace of length <= 6") {
  const std::vector<ActivityCode> symbols = codes(T(), "abcde");
  std::size_t checked = 0;
  std::vector<ActivityCode> trace;
  std::function<void()> visit = [&] {
    const auto dp = oracle::optimal_prefix(trace, T());
    REQUIRE(dp.cost == oracle::exhaustive_prefix(trace, T(), 2 * trace.size()));
    REQUIRE(validate(dp.alignment, trace, T()));
    REQUIRE(cost(dp.alignment) == dp.cost);
    ++checked;
    if (trace.size() == 6) return;
    for (auto s : symbols) {
      trace.push_back(s);
      visit();
      trace.pop_back();
    }
  };
  visit();
  CHECK(checked == 19531);  // sum of 5^k for k = 0..6
}

TEST_CASE("oracle properties on random traces") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(0, 10), sym(0, 5);
  for (int k = 0; k < 300; ++k) {
    std::vector<ActivityCode> trace;
    for (int j = len(rng); j > 0; --j) {
      const int s = sym(rng);
      trace.push_back(s < 5 ? c(static_cast<char>('a' + s)) : 77);
    }
    const auto p = oracle::optimal_prefix(trace, T());
    const auto full = oracle::optimal_complete(trace, T());
    CHECK(p.cost <= full.cost);
    CHECK(validate(full.alignment, trace, T()));
    CHECK(cost(full.alignment) == full.cost);
    auto longer = trace;
    longer.push_back(c('d'));
    CHECK(oracle::optimal_prefix(longer, T()).cost <= p.cost + 1);
  }
}

TEST_CASE("size guard") {
  std::vector<ActivityCode> huge(oracle::kMaxCells / T().node_count() + 10, c('a'));
  CHECK_THROWS_AS((void)oracle::optimal_prefix(huge, T()), oracle::OracleError);
}
