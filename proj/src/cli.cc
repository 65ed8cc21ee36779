#include "mpager/cli.h"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpager/pipeline.h"
#include "mpager/synthetic.h"

namespace mpager {
namespace {

using ordered_json = nlohmann::ordered_json;

struct NormFlags {
  bool no_fold_width = false;
  bool keep_punctuation = false;
  bool no_collapse_whitespace = false;
  std::string punctuation;

  NormalizationOptions Build() const {
    NormalizationOptions n;
    n.fold_width = !no_fold_width;
    n.strip_punctuation = !keep_punctuation;
    n.collapse_whitespace = !no_collapse_whitespace;
    if (!punctuation.empty()) n.punctuation_set = PunctuationSet::FromChars(punctuation);
    n.Validate();
    return n;
  }
};

void AddNormFlags(CLI::App* app, NormFlags* f) {
  app->add_flag("--no-fold-width", f->no_fold_width, "Keep full-width/half-width forms as they are");
  app->add_flag("--keep-punctuation", f->keep_punctuation, "Do not strip punctuation");
  app->add_flag("--no-collapse-whitespace", f->no_collapse_whitespace, "Keep whitespace runs");
  app->add_option("--punctuation", f->punctuation, "Replace the punctuation set with these characters");
}

std::string ModeHelp() { return "Token unit: char or whitespace"; }

// "-" reads standard input.
class Input {
 public:
  Input(const std::string& path, std::istream& stdin_stream) {
    if (path == "-") {
      stream_ = &stdin_stream;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw CorpusError({"cannot open " + path});
      stream_ = &file_;
    }
  }
  std::istream& get() { return *stream_; }

 private:
  std::ifstream file_;
  std::istream* stream_ = nullptr;
};

class Output {
 public:
  Output(const std::string& path, std::ostream& stdout_stream) {
    if (path.empty() || path == "-") {
      stream_ = &stdout_stream;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw CorpusError({"cannot write " + path});
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

ordered_json CountsJson(const EditCounts& c) {
  return {{"ref_len", c.ref_len}, {"hits", c.hits}, {"subs", c.subs},
          {"dels", c.dels},       {"ins", c.ins},   {"errors", c.errors()}};
}

ordered_json OptionalNumber(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string Percent(double cer) { return fmt::format("{:.2f}", 100.0 * cer); }

void PrintCountsHeader(std::ostream& out, const std::string& label, size_t width) {
  fmt::print(out, "{:<{}} {:>8} {:>7} {:>6} {:>6} {:>6} {:>8}\n", label, width, "ref_len", "subs",
             "dels", "ins", "errors", "CER%");
}

void PrintCountsRow(std::ostream& out, const std::string& label, size_t width, const EditCounts& c,
                    const std::optional<double>& cer) {
  fmt::print(out, "{:<{}} {:>8} {:>7} {:>6} {:>6} {:>6} {:>8}\n", label, width, c.ref_len, c.subs,
             c.dels, c.ins, c.errors(), cer ? Percent(*cer) : std::string("-"));
}

// ---- normalize ------------------------------------------------------------

struct NormalizeArgs {
  std::string input = "-";
  std::string output;
  NormFlags norm;
};

int CmdNormalize(const NormalizeArgs& a, std::istream& in, std::ostream& out) {
  const NormalizationOptions opts = a.norm.Build();
  Input input(a.input, in);
  std::vector<std::string> lines;
  std::string line;
  size_t line_no = 0;
  while (std::getline(input.get(), line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!IsValidUtf8(line)) throw Utf8Error("line " + std::to_string(line_no) + ": invalid UTF-8");
    lines.push_back(Normalize(line, opts));
  }
  Output output(a.output, out);
  for (const auto& l : lines) output.get() << l << '\n';
  return kExitOk;
}

// ---- score ----------------------------------------------------------------

struct ScoreArgs {
  std::string ref;
  std::string hyp;
  std::string mode = "char";
  bool per_utterance = false;
  bool json = false;
  NormFlags norm;
};

// Reports every id present on one side only.
void CheckSameIds(const std::vector<TrnRecord>& ref, const std::vector<TrnRecord>& hyp,
                  const std::string& ref_name, const std::string& hyp_name) {
  std::set<std::string> r, h;
  for (const auto& x : ref) r.insert(x.utt_id);
  for (const auto& x : hyp) h.insert(x.utt_id);
  std::vector<std::string> problems;
  for (const auto& id : r) {
    if (!h.count(id)) problems.push_back(id + ": missing from " + hyp_name);
  }
  for (const auto& id : h) {
    if (!r.count(id)) problems.push_back(id + ": not in " + ref_name);
  }
  if (!problems.empty()) throw CorpusError(std::move(problems));
}

int CmdScore(const ScoreArgs& a, std::ostream& out) {
  const NormalizationOptions norm = a.norm.Build();
  const TokenMode mode = ParseTokenMode(a.mode);
  const auto ref = LoadTrn(a.ref);
  const auto hyp = LoadTrn(a.hyp);
  CheckSameIds(ref, hyp, a.ref, a.hyp);
  std::map<std::string, const std::string*> hyp_text;
  for (const auto& h : hyp) hyp_text[h.utt_id] = &h.text;
  std::vector<UtteranceScore> records;
  for (const auto& r : ref) records.push_back(ScorePair(r.utt_id, r.text, *hyp_text[r.utt_id], norm, mode));
  const CerReport report = CorpusCer(records);

  if (a.json) {
    ordered_json j;
    j["utterances"] = report.per_utterance.size();
    j["totals"] = CountsJson(report.totals);
    j["cer"] = report.corpus_cer;
    j["excluded"] = report.excluded;
    if (a.per_utterance) {
      j["per_utterance"] = ordered_json::array();
      for (const auto& r : report.per_utterance) {
        ordered_json u = {{"utt_id", r.utt_id}};
        u.update(CountsJson(r.counts));
        u["cer"] = OptionalNumber(r.cer());
        j["per_utterance"].push_back(std::move(u));
      }
    }
    out << j.dump() << '\n';
    return kExitOk;
  }
  size_t width = 10;
  if (a.per_utterance) {
    for (const auto& r : report.per_utterance) width = std::max(width, r.utt_id.size());
  }
  PrintCountsHeader(out, "utt_id", width);
  if (a.per_utterance) {
    for (const auto& r : report.per_utterance) PrintCountsRow(out, r.utt_id, width, r.counts, r.cer());
  }
  PrintCountsRow(out, "total", width, report.totals, report.corpus_cer);
  fmt::print(out, "utterances: {}  excluded (empty reference): {}\n", report.per_utterance.size(),
             report.excluded.size());
  return kExitOk;
}

// ---- rover ----------------------------------------------------------------

struct MergeFlags {
  double alpha = 1.0;
  double null_confidence = 0.0;
  std::string tie_break = "prefer_token";

  VoteOptions Build() const {
    ordered_json j = {{"alpha", alpha}, {"null_confidence", null_confidence}, {"tie_break", tie_break}};
    return ParseVoteOptions(j);
  }
};

void AddMergeFlags(CLI::App* app, MergeFlags* f) {
  app->add_option("--alpha", f->alpha, "Weight of vote frequency against confidence")->capture_default_str();
  app->add_option("--null-confidence", f->null_confidence, "Confidence given to deletions")->capture_default_str();
  app->add_option("--tie-break", f->tie_break, "prefer_token or earliest_input")->capture_default_str();
}

MissingStreamPolicy ParseMissing(const std::string& s) {
  if (s == "error") return MissingStreamPolicy::kError;
  if (s == "skip") return MissingStreamPolicy::kSkipUtterance;
  throw ConfigError("--missing must be error or skip");
}

struct RoverArgs {
  std::vector<std::string> inputs;
  std::string corpus;
  std::vector<std::string> streams;
  std::string mode = "char";
  std::string missing = "error";
  std::string output;
  bool json = false;
  MergeFlags merge;
};

int CmdRover(const RoverArgs& a, std::ostream& out) {
  const VoteOptions merge = a.merge.Build();
  const TokenMode mode = ParseTokenMode(a.mode);
  Corpus corpus;
  std::vector<StreamSpec> streams;
  if (!a.corpus.empty()) {
    if (!a.inputs.empty()) throw ConfigError("give either trn inputs or --corpus, not both");
    if (a.streams.empty()) throw ConfigError("--corpus needs --streams");
    corpus = LoadJsonl(a.corpus);
    for (const auto& s : a.streams) streams.push_back(StreamSpec::Parse(s));
  } else {
    if (a.inputs.empty()) throw ConfigError("no inputs given");
    if (!a.streams.empty()) throw ConfigError("--streams applies to --corpus only");
    std::vector<std::vector<TrnRecord>> files;
    for (const auto& path : a.inputs) files.push_back(LoadTrn(path));
    for (size_t f = 1; f < files.size(); ++f) CheckSameIds(files[0], files[f], a.inputs[0], a.inputs[f]);
    for (const auto& r : files[0]) corpus.Add(r.utt_id);
    for (size_t f = 0; f < files.size(); ++f) {
      const std::string system = "input" + std::to_string(f + 1);
      streams.push_back({system, 1});
      for (const auto& r : files[f]) {
        corpus.Find(r.utt_id)->hypotheses.entries.push_back({system, 1, r.text, std::nullopt});
      }
    }
  }
  const RunReport report = RunBaselineRover(corpus, streams, merge, mode, ParseMissing(a.missing));
  Output output(a.output, out);
  if (a.json) {
    for (const auto& u : report.utterances) {
      output.get() << ordered_json{{"utt_id", u.utt_id}, {"text", u.merged}}.dump() << '\n';
    }
  } else {
    std::vector<TrnRecord> merged;
    for (const auto& u : report.utterances) merged.push_back({u.utt_id, u.merged});
    WriteTrn(merged, output.get());
  }
  return kExitOk;
}

// ---- mpa ------------------------------------------------------------------

struct MpaArgs {
  std::string corpus;
  std::string scheme;
  std::string out;
  std::string references;
  std::string merged_trn;
  std::vector<std::string> endpoints;
  int workers = 1;
  bool no_probe = false;
  bool json = false;
};

std::map<std::string, std::string> ParseEndpoints(const std::vector<std::string>& specs) {
  std::map<std::string, std::string> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
      throw ConfigError("--endpoint expects backend_id=url, got \"" + s + "\"");
    }
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

void PrintRunSummary(const RunReport& report, const NormalizationOptions& norm, TokenMode mode,
                     bool json, std::ostream& out) {
  ordered_json j;
  j["kind"] = report.kind;
  j["digest"] = report.digest;
  j["utterances"] = report.utterances.size();
  j["skipped"] = report.skipped.size();
  j["fallback_utterances"] = report.FallbackUtterances();
  j["fallback_outputs"] = report.FallbackOutputs();
  ordered_json scores = ordered_json::object();
  std::vector<std::pair<std::string, CerReport>> rows;
  for (const auto& name : report.ScoredStreams()) {
    if (auto cer = report.Score(name, norm, mode)) {
      ordered_json s = CountsJson(cer->totals);
      s["cer"] = cer->corpus_cer;
      scores[name] = std::move(s);
      rows.emplace_back(name, std::move(*cer));
    }
  }
  j["scores"] = scores;
  if (json) {
    out << j.dump() << '\n';
    return;
  }
  fmt::print(out, "utterances: {}  skipped: {}  fallback utterances: {}  fallback outputs: {}\n",
             report.utterances.size(), report.skipped.size(), report.FallbackUtterances(),
             report.FallbackOutputs());
  if (!rows.empty()) {
    size_t width = 10;
    for (const auto& [name, _] : rows) width = std::max(width, name.size());
    PrintCountsHeader(out, "stream", width);
    for (const auto& [name, cer] : rows) PrintCountsRow(out, name, width, cer.totals, cer.corpus_cer);
  } else {
    out << "no references; CER not computed\n";
  }
  out << "digest: " << report.digest << '\n';
}

int CmdMpa(const MpaArgs& a, std::ostream& out, std::ostream& err) {
  if (a.workers < 1) throw ConfigError("--workers must be at least 1");
  LoadedScheme loaded = LoadScheme(a.scheme, ProcessEnv, ParseEndpoints(a.endpoints));
  Corpus corpus = LoadJsonl(a.corpus);
  if (!a.references.empty()) AttachReferences(&corpus, LoadTrn(a.references));

  if (!a.no_probe) {
    std::set<std::string> probed;
    for (const auto& run : loaded.scheme.ger_runs) {
      if (!probed.insert(run.backend).second) continue;
      try {
        loaded.resources.Backend(run.backend).Probe();
      } catch (const TransportError& e) {
        throw TransportError("backend " + run.backend + " unreachable: " + e.what());
      }
    }
  }

  RunOptions options;
  options.workers = a.workers;
  options.config_snapshot = loaded.snapshot;
  const RunReport report = RunMpa(corpus, loaded.scheme, loaded.resources, options);
  const MpaScheme& scheme = loaded.scheme;
  for (const auto& u : report.utterances) {
    for (const auto& s : u.streams) {
      if (s.fallback) err << "warning: " << u.utt_id << " " << s.name << " used the anchor (" << s.reason << ")\n";
    }
  }
  for (const auto& id : report.skipped) err << "warning: " << id << " skipped (missing stream)\n";

  if (!a.merged_trn.empty()) {
    std::vector<TrnRecord> merged;
    for (const auto& u : report.utterances) merged.push_back({u.utt_id, u.merged});
    SaveTrn(merged, a.merged_trn);
  }
  if (a.out.empty() || a.out == "-") {
    WriteRunReport(report, out, scheme.normalization, scheme.token_mode);
    return kExitOk;
  }
  {
    Output file(a.out, out);
    WriteRunReport(report, file.get(), scheme.normalization, scheme.token_mode);
  }
  PrintRunSummary(report, scheme.normalization, scheme.token_mode, a.json, out);
  return kExitOk;
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
  std::string report;
  std::string compare;
  std::string stream = "merged";
  std::string compare_stream;
  std::string metric = "cer";
  std::string mode = "char";
  size_t bucket_width = 10;
  bool json = false;
  NormFlags norm;
};

CerReport ScoreStream(const RunReport& report, const std::string& stream, const std::string& path,
                      const NormalizationOptions& norm, TokenMode mode) {
  auto cer = report.Score(stream, norm, mode);
  if (!cer) throw ScoringError(path + ": no references to score stream " + stream + " against");
  return std::move(*cer);
}

int CmdReport(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  const NormalizationOptions norm = a.norm.Build();
  const TokenMode mode = ParseTokenMode(a.mode);
  if (a.bucket_width == 0) throw ConfigError("--bucket-width must be positive");
  PairedMetric metric;
  if (a.metric == "cer") {
    metric = PairedMetric::kCer;
  } else if (a.metric == "errors") {
    metric = PairedMetric::kErrors;
  } else {
    throw ConfigError("--metric must be cer or errors");
  }
  const RunReport run = LoadRunReport(a.report);
  const CerReport base = ScoreStream(run, a.stream, a.report, norm, mode);
  const BucketReport buckets = MakeBucketReport(base.per_utterance, a.bucket_width);

  ordered_json j;
  j["stream"] = a.stream;
  j["cer"] = base.corpus_cer;
  j["totals"] = CountsJson(base.totals);
  j["bucket_width"] = buckets.bucket_width;
  j["buckets"] = ordered_json::array();
  for (const auto& b : buckets.buckets) {
    j["buckets"].push_back({{"first_len", b.first_len}, {"last_len", b.last_len},
                            {"utterances", b.utterances}, {"errors", b.totals.errors()},
                            {"ref_len", b.totals.ref_len}, {"cer", OptionalNumber(b.cer)}});
  }

  std::optional<std::string> ttest_warning;
  const bool compare = !a.compare.empty() || !a.compare_stream.empty();
  if (compare) {
    const std::string other_path = a.compare.empty() ? a.report : a.compare;
    const std::string other_stream = a.compare_stream.empty() ? a.stream : a.compare_stream;
    const RunReport other_run = a.compare.empty() ? run : LoadRunReport(a.compare);
    const CerReport other = ScoreStream(other_run, other_stream, other_path, norm, mode);
    std::vector<double> va, vb;
    PairReports(base, other, metric, &va, &vb);
    ordered_json t;
    t["a"] = a.report + ":" + a.stream;
    t["b"] = other_path + ":" + other_stream;
    t["metric"] = a.metric;
    try {
      const TTestResult r = PairedTTest(va, vb);
      t["n"] = r.n;
      t["mean_difference"] = r.mean_difference;
      t["t"] = r.t;
      t["df"] = r.df;
      t["p"] = r.p_two_sided;
    } catch (const CorpusError& e) {
    constexpr size_t kShown = 20;
    const auto& problems = e.problems();
    for (size_t i = 0; i < std::min(problems.size(), kShown); ++i) err << "error: " << problems[i] << '\n';
    if (problems.size() > kShown) err << "error: ... and " << problems.size() - kShown << " more\n";
    return kExitDataError;
  } catch (const StatisticsError& e) {
      if (e.kind() == StatisticsError::Kind::kLengthMismatch) throw;
      ttest_warning = e.what();
      t["n"] = va.size();
      t["error"] = e.what();
    }
    j["ttest"] = std::move(t);
  }
  if (ttest_warning) err << "warning: t-test not computed: " << *ttest_warning << '\n';

  if (a.json) {
    out << j.dump() << '\n';
    return kExitOk;
  }
  fmt::print(out, "stream {}: CER {}% over {} reference tokens\n", a.stream, Percent(base.corpus_cer),
             base.totals.ref_len);
  fmt::print(out, "{:>9} {:>6} {:>8} {:>7} {:>8}\n", "length", "utts", "ref_len", "errors", "CER%");
  for (const auto& b : buckets.buckets) {
    fmt::print(out, "{:>9} {:>6} {:>8} {:>7} {:>8}\n", fmt::format("{}-{}", b.first_len, b.last_len),
               b.utterances, b.totals.ref_len, b.totals.errors(), b.cer ? Percent(*b.cer) : "-");
  }
  if (compare) {
    const auto& t = j["ttest"];
    fmt::print(out, "paired t-test ({}): {} vs {}, n = {}\n", a.metric, t["a"].get<std::string>(),
               t["b"].get<std::string>(), t["n"].get<size_t>());
    if (ttest_warning) {
      fmt::print(out, "  not computed: {}\n", *ttest_warning);
    } else {
      fmt::print(out, "  t = {:.6g}  df = {:g}  p = {:.6g}  mean difference = {:.6g}\n",
                 t["t"].get<double>(), t["df"].get<double>(), t["p"].get<double>(),
                 t["mean_difference"].get<double>());
    }
  }
  return kExitOk;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  SyntheticOptions options;
  std::string noise = "partner";
  std::string output;
};

int CmdSynth(SynthArgs a, std::ostream& out) {
  if (a.noise == "partner") {
    a.options.noise = NoiseModel::kConfusionPartner;
  } else if (a.noise == "uniform") {
    a.options.noise = NoiseModel::kUniformSubstitution;
  } else {
    throw ConfigError("--noise must be partner or uniform");
  }
  Corpus corpus;
  try {
    corpus = GenerateSyntheticCorpus(a.options);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Output output(a.output, out);
  WriteJsonl(corpus, output.get());
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-pass augmented generative error correction for ASR transcripts", "mpager"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  NormalizeArgs normalize;
  auto* c_norm = app.add_subcommand("normalize", "Normalize text lines for CER scoring");
  c_norm->add_option("input", normalize.input, "Input file, - for stdin")->capture_default_str();
  c_norm->add_option("-o,--output", normalize.output, "Output file (default stdout)");
  AddNormFlags(c_norm, &normalize.norm);

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Score a hypothesis trn against a reference trn");
  c_score->add_option("ref", score.ref, "Reference trn")->required();
  c_score->add_option("hyp", score.hyp, "Hypothesis trn")->required();
  c_score->add_option("--mode", score.mode, ModeHelp())->capture_default_str();
  c_score->add_flag("--per-utterance", score.per_utterance, "Include per-utterance counts");
  c_score->add_flag("--json", score.json, "Machine-readable output");
  AddNormFlags(c_score, &score.norm);

  RoverArgs rover;
  auto* c_rover = app.add_subcommand("rover", "Combine hypotheses by ROVER voting");
  c_rover->add_option("inputs", rover.inputs, "Hypothesis trn files, first is the alignment base");
  c_rover->add_option("--corpus", rover.corpus, "JSONL corpus instead of trn inputs");
  c_rover->add_option("--streams", rover.streams, "Streams (system@rank) to combine from --corpus")
      ->delimiter(',');
  c_rover->add_option("--mode", rover.mode, ModeHelp())->capture_default_str();
  c_rover->add_option("--missing", rover.missing, "Missing stream policy: error or skip")->capture_default_str();
  c_rover->add_option("-o,--output", rover.output, "Output file (default stdout)");
  c_rover->add_flag("--json", rover.json, "Write JSONL {utt_id, text} instead of trn");
  AddMergeFlags(c_rover, &rover.merge);

  MpaArgs mpa;
  auto* c_mpa = app.add_subcommand("mpa", "Run LLM correction passes and merge them with the anchor");
  c_mpa->add_option("--corpus", mpa.corpus, "JSONL corpus")->required();
  c_mpa->add_option("--scheme", mpa.scheme, "Scheme JSON")->required();
  c_mpa->add_option("--out", mpa.out, "Run report JSONL (default stdout, no summary)");
  c_mpa->add_option("--references", mpa.references, "Reference trn to attach to the corpus");
  c_mpa->add_option("--merged-trn", mpa.merged_trn, "Also write merged outputs as trn");
  c_mpa->add_option("--endpoint", mpa.endpoints, "Override an HTTP backend endpoint: id=url");
  c_mpa->add_option("--workers", mpa.workers, "Utterances processed in parallel")->capture_default_str();
  c_mpa->add_flag("--no-probe", mpa.no_probe, "Skip the backend reachability check");
  c_mpa->add_flag("--json", mpa.json, "Machine-readable summary");

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Length buckets and paired t-test over run reports");
  c_report->add_option("report", report.report, "Run report JSONL")->required();
  c_report->add_option("--compare", report.compare, "Second run report for the t-test");
  c_report->add_option("--stream", report.stream, "Stream to analyse")->capture_default_str();
  c_report->add_option("--compare-stream", report.compare_stream, "Stream of the compared report");
  c_report->add_option("--metric", report.metric, "Paired metric: cer or errors")->capture_default_str();
  c_report->add_option("--mode", report.mode, ModeHelp())->capture_default_str();
  c_report->add_option("--bucket-width", report.bucket_width, "Reference length bucket width")->capture_default_str();
  c_report->add_flag("--json", report.json, "Machine-readable output");
  AddNormFlags(c_report, &report.norm);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic noisy multi-system corpus");
  c_synth->add_option("--utterances", synth.options.utterances, "Number of utterances")->capture_default_str();
  c_synth->add_option("--length", synth.options.length, "Characters per utterance")->capture_default_str();
  c_synth->add_option("--streams", synth.options.streams, "Number of systems")->capture_default_str();
  c_synth->add_option("--rate", synth.options.substitution_rate, "Substitution rate per character")->capture_default_str();
  c_synth->add_option("--noise", synth.noise, "partner or uniform")->capture_default_str();
  c_synth->add_option("--seed", synth.options.seed, "Random seed")->capture_default_str();
  c_synth->add_option("-o,--output", synth.output, "Output JSONL (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (c_norm->parsed()) return CmdNormalize(normalize, in, out);
    if (c_score->parsed()) return CmdScore(score, out);
    if (c_rover->parsed()) return CmdRover(rover, out);
    if (c_mpa->parsed()) return CmdMpa(mpa, out, err);
    if (c_report->parsed()) return CmdReport(report, out, err);
    if (c_synth->parsed()) return CmdSynth(synth, out);
  } catch (const TransportError& e) {
    err << "error: " << e.what() << '\n';
    return kExitTransportError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const CorpusError& e) {
    constexpr size_t kShown = 20;
    const auto& problems = e.problems();
    for (size_t i = 0; i < std::min(problems.size(), kShown); ++i) err << "error: " << problems[i] << '\n';
    if (problems.size() > kShown) err << "error: ... and " << problems.size() - kShown << " more\n";
    return kExitDataError;
  } catch (const StatisticsError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::invalid_argument& e) {
    // Bad flag values (token mode, stream specifiers, normalization).
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitConfigError;
}

}  // namespace mpager
