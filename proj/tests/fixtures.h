#ifndef MPAGER_TESTS_FIXTURES_H_
#define MPAGER_TESTS_FIXTURES_H_

#include <string>

// Example transcripts (character-spaced) of phonetically similar errors and
// of a repetition loop, shared by unit and acceptance tests.
namespace mpager::fixtures {

inline constexpr const char* kExample1Hyp =
    "高 速 条 件 を 導 入 し た 上 で え ー ま 量 子 化 を 行 な っ た 図 な ん で す け ど も ち ょ っ "
    "と 量 子 化 の す 話 を 先 に し た い と 思 い ま す";
inline constexpr const char* kExample1Ref =
    "拘 束 条 件 を 導 入 し た 上 で え ー ま 量 子 化 を 行 な っ た 図 な ん で す け ど も ち ょ っ "
    "と 量 子 化 の す 話 を 先 に し た い と 思 い ま す";

inline constexpr const char* kExample2Hyp =
    "ミ ュ ン ヘ ン の 博 覧 会 は 電 子 万 華 経 の よ う だ と い う 意 味 の 文 で す が え ー 図 の "
    "一 番 上 が";
inline constexpr const char* kExample2Ref =
    "ミ ュ ン ヘ ン の 博 覧 会 は 電 子 万 華 鏡 の よ う だ と い う 意 味 の 文 で す が え ー 図 の "
    "一 番 上 が";

inline constexpr const char* kExample3Hyp =
    "が 今 回 の え ー っ と 仕 事 の え ー っ と 大 ま か な も 問 題 意 識 で す ね";
inline constexpr const char* kExample3Corrected =
    "が 今 回 の え ー っ と 仕 事 の え ー と 大 ま か な も 問 題 意 識 で す ね";

inline constexpr const char* kExample4Anchor =
    "凄 く 残 念 な ん で す が そ の イ ル ミ ネ ー シ ョ ン を と 大 蔵 山 シ ャ ン ツ と い う";
inline constexpr const char* kExample4Prefix = "凄 く 残 念 な ん で す が";
inline constexpr const char* kExample4Loop =
    "そ の イ ル ミ ネ ー シ ョ ン を 見 逃 し て し ま っ て 本 当 見 れ な か っ た の が 凄 く 残 念 "
    "な ん で す が";

// Prefix followed by the loop phrase repeated `times` times.
inline std::string Example4Repetition(int times = 11) {
  std::string out = kExample4Prefix;
  for (int i = 0; i < times; ++i) {
    out += ' ';
    out += kExample4Loop;
  }
  return out;
}

}  // namespace mpager::fixtures

#endif  // MPAGER_TESTS_FIXTURES_H_
