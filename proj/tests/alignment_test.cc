#include "mpager/alignment.h"

#include <random>

#include "doctest.h"
#include "edit_oracle.h"
#include "fixtures.h"

namespace mpager {
namespace {

TokenSequence Chars(std::string_view s) { return Tokenize(s, TokenMode::kChar); }

std::vector<EditKind> Kinds(const Alignment& a) {
  std::vector<EditKind> out;
  for (const auto& op : a.ops) out.push_back(op.kind);
  return out;
}

void CheckProjections(const Alignment& a, const TokenSequence& ref, const TokenSequence& hyp) {
  std::vector<std::string> r, h;
  size_t distance = 0;
  for (const auto& op : a.ops) {
    if (op.ref_token) r.push_back(*op.ref_token);
    if (op.hyp_token) h.push_back(*op.hyp_token);
    switch (op.kind) {
      case EditKind::kCor:
        REQUIRE(op.ref_token);
        REQUIRE(op.hyp_token);
        REQUIRE(*op.ref_token == *op.hyp_token);
        break;
      case EditKind::kSub:
        REQUIRE(op.ref_token);
        REQUIRE(op.hyp_token);
        REQUIRE(*op.ref_token != *op.hyp_token);
        ++distance;
        break;
      case EditKind::kIns:
        REQUIRE_FALSE(op.ref_token);
        REQUIRE(op.hyp_token);
        ++distance;
        break;
      case EditKind::kDel:
        REQUIRE(op.ref_token);
        REQUIRE_FALSE(op.hyp_token);
        ++distance;
        break;
    }
  }
  REQUIRE(r == ref.tokens);
  REQUIRE(h == hyp.tokens);
  REQUIRE(distance == a.distance);
}

TEST_CASE("identity alignment") {
  const auto a = Align(Chars("abc"), Chars("abc"));
  CHECK(a.distance == 0);
  CHECK(Kinds(a) == std::vector{EditKind::kCor, EditKind::kCor, EditKind::kCor});
}

TEST_CASE("single substitution") {
  const auto a = Align(Chars("abc"), Chars("axc"));
  CHECK(a.distance == 1);
  CHECK(Kinds(a) == std::vector{EditKind::kCor, EditKind::kSub, EditKind::kCor});
}

TEST_CASE("kitten vs sitting") {
  REQUIRE(oracle::BfsEditDistance("kitten", "sitting") == 3);
  const auto a = Align(Chars("kitten"), Chars("sitting"));
  CHECK(a.distance == 3);
  const auto c = CountEdits(a);
  CHECK(c.subs == 2);
  CHECK(c.ins == 1);
  CHECK(c.dels == 0);
}

TEST_CASE("tie breaking prefers substitution, then deletion, then insertion") {
  // "ab" vs "ba": SUB,SUB and DEL..INS are both cost 2.
  CHECK(Kinds(Align(Chars("ab"), Chars("ba"))) == std::vector{EditKind::kSub, EditKind::kSub});
  // "a" vs "": only DEL.
  CHECK(Kinds(Align(Chars("a"), Chars(""))) == std::vector{EditKind::kDel});
  // "ab" vs "b": deletion of a.
  CHECK(Kinds(Align(Chars("ab"), Chars("b"))) == std::vector{EditKind::kDel, EditKind::kCor});
  // "a" vs "xa": insertion of x.
  CHECK(Kinds(Align(Chars("a"), Chars("xa"))) == std::vector{EditKind::kIns, EditKind::kCor});
}

TEST_CASE("edit counts") {
  const auto five = Chars("abcde");
  CHECK(CountEdits(Align(five, five)) == EditCounts{5, 0, 0, 0, 5});
  CHECK(CountEdits(Align(Chars("abcd"), Chars(""))) == EditCounts{0, 0, 4, 0, 4});
  CHECK(CountEdits(Align(Chars(""), Chars("ab"))) == EditCounts{0, 0, 0, 2, 0});
  CHECK(CountEdits(Align(Chars(""), Chars(""))) == EditCounts{});
}

TEST_CASE("phonetic-error fixture counts") {
  const auto c1 = CountEdits(Align(Chars(fixtures::kExample1Ref), Chars(fixtures::kExample1Hyp)));
  CHECK(c1.subs == 2);
  CHECK(c1.ins == 0);
  CHECK(c1.dels == 0);
  CHECK(c1.ref_len == 51);
  const auto c2 = CountEdits(Align(Chars(fixtures::kExample2Ref), Chars(fixtures::kExample2Hyp)));
  CHECK(c2.subs == 1);
  CHECK(c2.ins == 0);
  CHECK(c2.dels == 0);
}

TEST_CASE("mode mismatch is rejected") {
  CHECK_THROWS_AS(Align(Chars("ab"), Tokenize("ab", TokenMode::kWhitespace)), AlignmentError);
}

TEST_CASE("distance matches the edit-graph oracle, length <= 4") {
  const oracle::EditGraphOracle graph("abc", 4);
  const auto& strings = graph.strings();
  for (size_t i = 0; i < strings.size(); ++i) {
    const auto ref = Chars(strings[i]);
    for (size_t j = 0; j < strings.size(); ++j) {
      const auto hyp = Chars(strings[j]);
      const auto a = Align(ref, hyp);
      REQUIRE(a.distance == graph.Distance(i, j));
      CheckProjections(a, ref, hyp);
    }
  }
}

TEST_CASE("distance is symmetric and zero on identity") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<int> sym(0, 3);
  auto gen = [&] {
    std::string s;
    for (int n = len(rng); n > 0; --n) s.push_back(static_cast<char>('a' + sym(rng)));
    return Chars(s);
  };
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = gen();
    const auto y = gen();
    REQUIRE(Align(x, x).distance == 0);
    REQUIRE(Align(x, y).distance == Align(y, x).distance);
    CheckProjections(Align(x, y), x, y);
    const auto c = CountEdits(Align(x, y));
    REQUIRE(c.ref_len == x.size());
    REQUIRE(c.hits + c.subs + c.ins == y.size());
  }
}

}  // namespace
}  // namespace mpager
