#include <set>
#include <thread>

#include "doctest.h"
#include "fixtures.h"
#include "httplib.h"
#include "json.hpp"
#include "mpager/pipeline.h"
#include "test_util.h"

namespace mpager {
namespace {

using testing::CliResult;
using testing::ReadFile;
using testing::RunCommand;
using testing::SourcePath;
using testing::TempDir;
using testing::WriteFile;

std::string Unspace(std::string_view s) { return Detokenize(Tokenize(s, TokenMode::kChar)); }

TEST_CASE("normalize") {
  CliResult r = RunCommand({"normalize"}, "です。\n");
  CHECK(r.code == 0);
  CHECK(r.out == "です\n");
  r = RunCommand({"normalize"}, "");
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  r = RunCommand({"normalize"}, "ok\n\xC3\x28\n");
  CHECK(r.code == kExitDataError);
  CHECK(r.err.find("line 2") != std::string::npos);
  r = RunCommand({"normalize", "--keep-punctuation", "--no-fold-width"}, "ＡＢ、です。\n");
  CHECK(r.out == "ＡＢ、です。\n");
  r = RunCommand({"normalize", "/nonexistent/file.txt"});
  CHECK(r.code == kExitDataError);
}

TEST_CASE("score") {
  TempDir dir("cli_score");
  WriteFile(dir / "ref.trn", std::string(fixtures::kExample1Ref) + " (ex1)\nあいう (u2)\n");
  WriteFile(dir / "hyp.trn", std::string(fixtures::kExample1Hyp) + " (ex1)\nあいう (u2)\n");
  CliResult r = RunCommand({"score", dir / "ref.trn", dir / "ref.trn", "--json"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["cer"].get<double>() == 0.0);

  r = RunCommand({"score", dir / "ref.trn", dir / "hyp.trn", "--json", "--per-utterance"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["totals"]["subs"] == 2);
  CHECK(j["totals"]["ins"] == 0);
  CHECK(j["totals"]["dels"] == 0);
  CHECK(j["per_utterance"][0]["utt_id"] == "ex1");
  CHECK(j["per_utterance"][0]["subs"] == 2);

  r = RunCommand({"score", dir / "ref.trn", dir / "hyp.trn"});
  CHECK(r.code == 0);
  CHECK(r.out.find("total") != std::string::npos);

  WriteFile(dir / "short.trn", "あいう (u2)\n");
  r = RunCommand({"score", dir / "ref.trn", dir / "short.trn"});
  CHECK(r.code == kExitDataError);
  CHECK(r.err.find("ex1") != std::string::npos);
  WriteFile(dir / "bad.trn", "no id here\n");
  CHECK(RunCommand({"score", dir / "ref.trn", dir / "bad.trn"}).code == kExitDataError);
  CHECK(RunCommand({"score", dir / "ref.trn", dir / "ref.trn", "--mode", "syllable"}).code == kExitConfigError);
  CHECK(RunCommand({"score", dir / "ref.trn"}).code == kExitConfigError);
}

TEST_CASE("rover") {
  TempDir dir("cli_rover");
  WriteFile(dir / "a.trn", "abcd (u1)\nxyz (u2)\n");
  WriteFile(dir / "b.trn", "abXd (u1)\nxyz (u2)\n");
  WriteFile(dir / "c.trn", "abXd (u1)\nxQz (u2)\n");
  CliResult r = RunCommand({"rover", dir / "a.trn"});
  CHECK(r.code == 0);
  CHECK(r.out == "abcd (u1)\nxyz (u2)\n");
  r = RunCommand({"rover", dir / "a.trn", dir / "b.trn", dir / "c.trn"});
  CHECK(r.code == 0);
  CHECK(r.out == "abXd (u1)\nxyz (u2)\n");
  WriteFile(dir / "d.trn", "abcd (u1)\nxyz (u3)\n");
  r = RunCommand({"rover", dir / "a.trn", dir / "d.trn"});
  CHECK(r.code == kExitDataError);

  WriteFile(dir / "c.jsonl",
            "{\"utt_id\":\"u1\",\"system\":\"A\",\"text\":\"abc\"}\n"
            "{\"utt_id\":\"u1\",\"system\":\"B\",\"text\":\"abd\"}\n"
            "{\"utt_id\":\"u1\",\"system\":\"C\",\"text\":\"abd\"}\n");
  r = RunCommand({"rover", "--corpus", dir / "c.jsonl", "--streams", "A,B@1,C", "--json"});
  CHECK(r.code == 0);
  CHECK(r.out == "{\"utt_id\":\"u1\",\"text\":\"abd\"}\n");
  CHECK(RunCommand({"rover", "--corpus", dir / "c.jsonl", "--streams", "A,Z"}).code == kExitDataError);
  CHECK(RunCommand({"rover", "--corpus", dir / "c.jsonl"}).code == kExitConfigError);
  CHECK(RunCommand({"rover", dir / "a.trn", "--alpha", "1.5"}).code == kExitConfigError);
}

TEST_CASE("mpa with echo mocks keeps the anchor CER") {
  TempDir dir("cli_mpa_echo");
  CliResult r = RunCommand({"synth", "--utterances", "50", "--length", "12", "--seed", "5", "-o", dir / "c.jsonl"});
  REQUIRE(r.code == 0);
  WriteFile(dir / "scheme.json", R"({"anchor":"S1","ger_runs":[
      {"name":"L1","streams":["S1","S2","S3"],"backend":"e"},
      {"name":"L2","source":"n_best_of_one_system","system":"S2","n":1,"backend":"e"}],
    "backends":{"e":{"type":"mock","mode":"echo"}}})");
  r = RunCommand({"mpa", "--corpus", dir / "c.jsonl", "--scheme", dir / "scheme.json", "--out",
                  dir / "r.jsonl", "--json"});
  REQUIRE(r.code == 0);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["scores"]["merged"]["cer"] == summary["scores"]["S1@1"]["cer"]);
  CHECK(summary["scores"]["merged"]["errors"] == summary["scores"]["S1@1"]["errors"]);
  CHECK(summary["utterances"] == 50);
}

TEST_CASE("mpa demo scheme corrects the scripted examples") {
  TempDir dir("cli_mpa_demo");
  CliResult r = RunCommand({"mpa", "--corpus", SourcePath("demo/corpus.jsonl"), "--scheme",
                            SourcePath("demo/scheme.json"), "--references", SourcePath("demo/refs.trn"),
                            "--out", dir / "r.jsonl", "--merged-trn", dir / "merged.trn"});
  REQUIRE(r.code == 0);
  const std::string merged = ReadFile(dir / "merged.trn");
  CHECK(merged.find(Unspace(fixtures::kExample1Ref) + " (demo1)") != std::string::npos);
  CHECK(merged.find(Unspace(fixtures::kExample2Ref) + " (demo2)") != std::string::npos);
  CHECK(merged.find(Unspace(fixtures::kExample4Anchor) + " (demo4)") != std::string::npos);
  CHECK(r.err.find("demo4 llm1 used the anchor") != std::string::npos);

  const RunReport report = LoadRunReport(dir / "r.jsonl");
  CHECK(report.utterances.size() == 4);
  CHECK(report.FallbackUtterances() == 1);
}

TEST_CASE("mpa exit codes") {
  TempDir dir("cli_mpa_codes");
  WriteFile(dir / "c.jsonl", "{\"utt_id\":\"u1\",\"system\":\"A\",\"text\":\"abc\"}\n");
  // Port 9 (discard) is closed on a normal host.
  WriteFile(dir / "http.json", R"({"anchor":"A","ger_runs":[{"name":"L","streams":["A"],"backend":"h"}],
    "backends":{"h":{"type":"http","endpoint":"http://127.0.0.1:9/v1/completions","model":"m","timeout_ms":500}}})");
  CliResult r = RunCommand({"mpa", "--corpus", dir / "c.jsonl", "--scheme", dir / "http.json", "--out", dir / "r.jsonl"});
  CHECK(r.code == kExitTransportError);
  CHECK(r.err.find("unreachable") != std::string::npos);

  WriteFile(dir / "bad.json", R"({"anchor":"A","ger_runs":[]})");
  r = RunCommand({"mpa", "--corpus", dir / "c.jsonl", "--scheme", dir / "bad.json"});
  CHECK(r.code == kExitConfigError);
  r = RunCommand({"mpa", "--corpus", dir / "c.jsonl", "--scheme", dir / "http.json", "--endpoint", "oops"});
  CHECK(r.code == kExitConfigError);
  r = RunCommand({"mpa", "--corpus", dir / "missing.jsonl", "--scheme", SourcePath("schemes/echo.json")});
  CHECK(r.code == kExitDataError);
}

TEST_CASE("mpa against a local HTTP endpoint given on the command line") {
  // Chat-style server that answers with the last hypothesis of the prompt,
  // and 503 for one utterance.
  httplib::Server server;
  server.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
  server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const std::string prompt = body["messages"][0]["content"].get<std::string>();
    if (prompt.find("broken") != std::string::npos) {
      res.status = 503;
      return;
    }
    const size_t open = prompt.rfind("<hypothesis3>");
    const size_t close = prompt.rfind("</hypothesis3>");
    const std::string last = prompt.substr(open + 13, close - open - 13);
    nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", last}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  TempDir dir("cli_mpa_http");
  WriteFile(dir / "c.jsonl",
            "{\"utt_id\":\"u1\",\"reference\":\"abcd\"}\n"
            "{\"utt_id\":\"u1\",\"system\":\"A\",\"text\":\"abXd\"}\n"
            "{\"utt_id\":\"u1\",\"system\":\"B\",\"text\":\"abYd\"}\n"
            "{\"utt_id\":\"u1\",\"system\":\"C\",\"text\":\"abcd\"}\n"
            "{\"utt_id\":\"u2\",\"system\":\"A\",\"text\":\"broken\"}\n"
            "{\"utt_id\":\"u2\",\"system\":\"B\",\"text\":\"broken\"}\n"
            "{\"utt_id\":\"u2\",\"system\":\"C\",\"text\":\"broken\"}\n");
  // The file points at a closed port; the flag must win.
  WriteFile(dir / "scheme.json", R"({"anchor":"A","ger_runs":[
      {"name":"L1","streams":["A","B","C"],"backend":"h"},
      {"name":"L2","streams":["A","B","C"],"backend":"h"}],
    "backends":{"h":{"type":"http","endpoint":"http://127.0.0.1:9/v1/chat/completions","model":"m",
                     "api_style":"chat","max_retries":1,"backoff_ms":1}}})");
  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  CliResult r = RunCommand({"mpa", "--corpus", dir / "c.jsonl", "--scheme", dir / "scheme.json", "--out",
                            dir / "r.jsonl", "--endpoint", "h=" + url, "--workers", "2", "--json"});
  server.stop();
  th.join();
  REQUIRE(r.code == 0);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["fallback_utterances"] == 1);
  CHECK(summary["scores"]["merged"]["errors"] == 0);
  CHECK(summary["scores"]["A@1"]["errors"] == 1);
  const RunReport report = LoadRunReport(dir / "r.jsonl");
  CHECK(report.Find("u1")->merged == "abcd");
  CHECK(report.Find("u2")->streams[1].reason.find("transport") == 0);
  CHECK(report.config["backends"]["h"]["endpoint"] == url);
}

// Writes a one-stream run report whose per-utterance error counts are
// `errors` against 10-character references.
void WriteTinyReport(const std::string& path, const std::vector<int>& errors) {
  RunReport report;
  report.kind = "rover";
  report.config = {{"note", "hand-built"}};
  for (size_t i = 0; i < errors.size(); ++i) {
    UtteranceResult u;
    u.utt_id = "u" + std::to_string(i);
    u.reference = "abcdefghij";
    std::string hyp = *u.reference;
    for (int e = 0; e < errors[i]; ++e) hyp[e] = 'z';
    u.streams.push_back({"A@1", false, hyp, std::nullopt, false, ""});
    u.merged = hyp;
    report.utterances.push_back(std::move(u));
  }
  report.digest = ComputeDigest(report);
  std::ofstream out(path, std::ios::binary);
  WriteRunReport(report, out);
}

TEST_CASE("report buckets and t-test") {
  TempDir dir("cli_report");
  WriteTinyReport(dir / "a.jsonl", {1, 2, 3, 4});
  WriteTinyReport(dir / "b.jsonl", {0, 2, 1, 2});

  CliResult r = RunCommand({"report", dir / "a.jsonl", "--json"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["buckets"].size() == 2);  // 0-9 and 10-19
  CHECK(j["buckets"][0]["utterances"] == 0);
  CHECK(j["buckets"][1]["utterances"] == 4);
  CHECK(j["buckets"][1]["errors"] == 10);

  // d = (0.1, 0, 0.2, 0.2): mean 0.125, sd 0.0957427, t = 2.611165, df = 3.
  r = RunCommand({"report", dir / "a.jsonl", "--compare", dir / "b.jsonl", "--json"});
  REQUIRE(r.code == 0);
  j = nlohmann::json::parse(r.out);
  CHECK(j["ttest"]["t"].get<double>() == doctest::Approx(2.6111648393354674).epsilon(1e-9));
  CHECK(j["ttest"]["df"] == 3.0);
  CHECK(j["ttest"]["p"].get<double>() == doctest::Approx(0.07960498081790625).epsilon(1e-6));

  r = RunCommand({"report", dir / "a.jsonl", "--compare", dir / "b.jsonl"});
  CHECK(r.code == 0);
  CHECK(r.out.find("t = 2.61116") != std::string::npos);
  CHECK(r.out.find("df = 3") != std::string::npos);
  CHECK(r.out.find("p = 0.079605") != std::string::npos);

  r = RunCommand({"report", dir / "a.jsonl", "--compare", dir / "a.jsonl"});
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  CHECK(r.err.find("zero variance") != std::string::npos);

  WriteTinyReport(dir / "c.jsonl", {1, 2, 3});
  CHECK(RunCommand({"report", dir / "a.jsonl", "--compare", dir / "c.jsonl"}).code == kExitDataError);
  CHECK(RunCommand({"report", dir / "a.jsonl", "--bucket-width", "0"}).code == kExitConfigError);
  WriteFile(dir / "garbage.jsonl", "{not json}\n");
  CHECK(RunCommand({"report", dir / "garbage.jsonl"}).code == kExitDataError);
}

TEST_CASE("report buckets match a constructed corpus") {
  TempDir dir("cli_buckets");
  RunReport report;
  report.kind = "rover";
  // Lengths 3, 9, 10, 25, 25 -> buckets 0-9: 2, 10-19: 1, 20-29: 2.
  for (int len : {3, 9, 10, 25, 25}) {
    UtteranceResult u;
    u.utt_id = "len" + std::to_string(len) + "_" + std::to_string(report.utterances.size());
    u.reference = std::string(len, 'a');
    u.streams.push_back({"A@1", false, *u.reference, std::nullopt, false, ""});
    u.merged = *u.reference;
    report.utterances.push_back(u);
  }
  report.digest = ComputeDigest(report);
  {
    std::ofstream out(dir / "r.jsonl", std::ios::binary);
    WriteRunReport(report, out);
  }
  CliResult r = RunCommand({"report", dir / "r.jsonl", "--json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["buckets"].size() == 3);
  CHECK(j["buckets"][0]["utterances"] == 2);
  CHECK(j["buckets"][1]["utterances"] == 1);
  CHECK(j["buckets"][2]["utterances"] == 2);
  r = RunCommand({"report", dir / "r.jsonl", "--bucket-width", "5", "--json"});
  CHECK(nlohmann::json::parse(r.out)["buckets"].size() == 6);
}

TEST_CASE("synth is seeded") {
  CliResult a = RunCommand({"synth", "--utterances", "5", "--seed", "11"});
  CliResult b = RunCommand({"synth", "--utterances", "5", "--seed", "11"});
  CliResult c = RunCommand({"synth", "--utterances", "5", "--seed", "12"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  CHECK(RunCommand({"synth", "--noise", "loud"}).code == kExitConfigError);
}

TEST_CASE("usage errors") {
  CHECK(RunCommand({}).code == kExitConfigError);
  CHECK(RunCommand({"frobnicate"}).code == kExitConfigError);
  CHECK(RunCommand({"--help"}).code == kExitOk);
}

}  // namespace
}  // namespace mpager
