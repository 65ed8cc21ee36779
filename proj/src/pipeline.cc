#include "mpager/pipeline.h"

#include <openssl/evp.h>

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace mpager {
namespace {

using ordered_json = nlohmann::ordered_json;

// Runs fn(i) for i in [0, n) on up to `workers` threads. Rethrows the first
// exception after all workers stop.
template <typename Fn>
void ParallelFor(size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::jthread> threads;
  const size_t count = std::min<size_t>(static_cast<size_t>(workers), n);
  for (size_t t = 0; t < count; ++t) {
    threads.emplace_back([&] {
      for (size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  threads.clear();
  if (error) std::rethrow_exception(error);
}

const char* TieBreakName(TieBreak t) {
  return t == TieBreak::kPreferTokenThenEarliest ? "prefer_token" : "earliest_input";
}

std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

ordered_json StreamToJson(const StreamOutput& s) {
  ordered_json j;
  j["name"] = s.name;
  j["kind"] = s.is_llm ? "llm" : "asr";
  j["text"] = s.text;
  if (s.is_llm) {
    j["raw"] = s.raw ? ordered_json(*s.raw) : ordered_json(nullptr);
    j["fallback"] = s.fallback;
    if (s.fallback) j["reason"] = s.reason;
  }
  return j;
}

ordered_json UtteranceToJson(const UtteranceResult& u) {
  ordered_json j;
  j["type"] = "utterance";
  j["utt_id"] = u.utt_id;
  if (u.reference) j["reference"] = *u.reference;
  j["streams"] = ordered_json::array();
  for (const auto& s : u.streams) j["streams"].push_back(StreamToJson(s));
  j["merged"] = u.merged;
  return j;
}

ordered_json CountsToJson(const EditCounts& c) {
  ordered_json j;
  j["hits"] = c.hits;
  j["subs"] = c.subs;
  j["dels"] = c.dels;
  j["ins"] = c.ins;
  j["ref_len"] = c.ref_len;
  return j;
}

const std::string* StreamText(const UtteranceResult& u, const std::string& stream) {
  if (stream == "merged") return &u.merged;
  static constexpr std::string_view kRaw = ":raw";
  const bool raw = stream.size() > kRaw.size() && stream.ends_with(kRaw);
  const std::string name = raw ? stream.substr(0, stream.size() - kRaw.size()) : stream;
  for (const auto& s : u.streams) {
    if (s.name != name) continue;
    if (!raw) return &s.text;
    if (!s.is_llm) return nullptr;
    // A failed request has no completion; the anchor stood in for it.
    return s.raw ? &*s.raw : &s.text;
  }
  return nullptr;
}

}  // namespace

const char* CandidateSourceName(CandidateSource source) {
  return source == CandidateSource::kNBestOfOneSystem ? "n_best_of_one_system"
                                                      : "one_best_of_n_systems";
}

void MpaScheme::Validate() const {
  if (anchor.system.empty()) throw ConfigError("scheme has no anchor stream");
  if (ger_runs.empty()) throw ConfigError("scheme needs at least one GER run");
  std::set<std::string> names = {anchor.ToString(), "merged"};
  for (const auto& run : ger_runs) {
    if (run.name.empty()) throw ConfigError("GER run without a name");
    if (run.name.find(':') != std::string::npos) {
      throw ConfigError("GER run name must not contain ':' (" + run.name + ")");
    }
    if (!names.insert(run.name).second) throw ConfigError("duplicate stream name " + run.name);
    if (run.streams.empty()) throw ConfigError("GER run " + run.name + " has no candidate streams");
    if (run.backend.empty()) throw ConfigError("GER run " + run.name + " has no backend");
    if (run.source == CandidateSource::kNBestOfOneSystem) {
      for (const auto& s : run.streams) {
        if (s.system != run.streams[0].system) {
          throw ConfigError("GER run " + run.name + ": an N-best run must draw on one system");
        }
      }
    } else {
      std::set<std::string> systems;
      for (const auto& s : run.streams) {
        if (!systems.insert(s.system).second) {
          throw ConfigError("GER run " + run.name + ": a 1-best run must use distinct systems");
        }
      }
    }
  }
  try {
    merge.Validate();
    guard.Validate();
    normalization.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

const PromptTemplate& PipelineResources::Prompt(const std::string& id) const {
  static const PromptTemplate kEnglish = PromptTemplate::Builtin(PromptLanguage::kEnglish);
  static const PromptTemplate kEnglishJapanese =
      PromptTemplate::Builtin(PromptLanguage::kEnglishJapanese);
  if (auto it = prompts.find(id); it != prompts.end()) return it->second;
  if (id == "builtin:english") return kEnglish;
  if (id == "builtin:english_japanese") return kEnglishJapanese;
  throw ConfigError("unknown prompt template \"" + id + "\"");
}

LlmClient& PipelineResources::Backend(const std::string& id) const {
  auto it = backends.find(id);
  if (it == backends.end() || !it->second) throw ConfigError("unknown backend \"" + id + "\"");
  return *it->second;
}

LlmGerResult LlmGer(const std::string& utt_id, const std::vector<std::string>& candidates,
                    LlmClient& client, const PromptTemplate& prompt, const GuardPolicy& guard,
                    const NormalizationOptions* normalize_inputs) {
  if (candidates.empty()) throw ConfigError(utt_id + ": GER needs at least one candidate");
  std::vector<std::string> inputs = candidates;
  if (normalize_inputs != nullptr) {
    for (auto& c : inputs) c = Normalize(c, *normalize_inputs);
  }
  const std::string& anchor = candidates[0];
  LlmGerResult result;
  try {
    result.raw = client.Correct(utt_id, inputs, prompt);
  } catch (const TransportError& e) {
    result.text = anchor;
    result.fallback = true;
    result.reason = std::string("transport: ") + e.what();
    return result;
  } catch (const EmptyCompletionError& e) {
    result.text = anchor;
    result.fallback = true;
    result.reason = std::string("empty_completion: ") + e.what();
    return result;
  }
  const GuardDecision decision = GuardOutput(anchor, *result.raw, guard);
  result.text = decision.text;
  if (!decision.accepted) {
    result.fallback = true;
    result.reason = std::string("guard ") + GuardRuleName(decision.rule) + ": " + decision.reason;
  }
  return result;
}

std::string RecombineRecorded(const UtteranceResult& utt, const VoteOptions& merge, TokenMode mode) {
  std::vector<TokenSequence> inputs;
  inputs.reserve(utt.streams.size());
  for (const auto& s : utt.streams) inputs.push_back(Tokenize(s.text, mode));
  return Detokenize(RoverCombine(inputs, merge));
}

namespace {

const HypothesisEntry* Lookup(const Utterance& u, const StreamSpec& spec) {
  return u.hypotheses.Find(spec.system, spec.rank);
}

// Checks every required stream up front so failures never depend on
// thread scheduling. Returns the indices of utterances to process.
std::vector<size_t> ResolveUtterances(const Corpus& corpus, const std::vector<StreamSpec>& required,
                                      MissingStreamPolicy policy, std::vector<std::string>* skipped) {
  std::vector<std::string> problems;
  for (const auto& spec : required) {
    if (!corpus.HasSystem(spec.system)) {
      problems.push_back("stream " + spec.ToString() + " does not resolve: no system \"" +
                         spec.system + "\" in corpus");
    }
  }
  if (!problems.empty()) throw CorpusError(std::move(problems));
  std::vector<size_t> keep;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const Utterance& u = corpus.utterances()[i];
    std::vector<std::string> missing;
    for (const auto& spec : required) {
      if (Lookup(u, spec) == nullptr) missing.push_back(spec.ToString());
    }
    if (missing.empty()) {
      keep.push_back(i);
    } else if (policy == MissingStreamPolicy::kSkipUtterance) {
      skipped->push_back(u.utt_id);
    } else {
      problems.push_back(u.utt_id + ": missing stream(s) " + JoinNames(missing));
    }
  }
  if (!problems.empty()) throw CorpusError(std::move(problems));
  return keep;
}

}  // namespace

ordered_json VoteOptionsToJson(const VoteOptions& v) {
  ordered_json j;
  j["alpha"] = v.alpha;
  j["null_confidence"] = v.null_confidence;
  j["tie_break"] = TieBreakName(v.tie_break);
  return j;
}

VoteOptions ParseVoteOptions(const ordered_json& j) {
  VoteOptions v;
  if (j.is_null()) return v;
  try {
    v.alpha = j.value("alpha", v.alpha);
    v.null_confidence = j.value("null_confidence", v.null_confidence);
    const std::string tie = j.value("tie_break", std::string("prefer_token"));
    if (tie == "prefer_token") {
      v.tie_break = TieBreak::kPreferTokenThenEarliest;
    } else if (tie == "earliest_input") {
      v.tie_break = TieBreak::kEarliestInput;
    } else {
      throw ConfigError("unknown tie_break \"" + tie + "\"");
    }
    v.Validate();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid merge options: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return v;
}

ordered_json SchemeToJson(const MpaScheme& scheme) {
  ordered_json j;
  j["anchor"] = scheme.anchor.ToString();
  j["token_mode"] = TokenModeName(scheme.token_mode);
  j["normalize_llm_inputs"] = scheme.normalize_llm_inputs;
  j["missing_streams"] =
      scheme.missing_streams == MissingStreamPolicy::kError ? "error" : "skip";
  j["ger_runs"] = ordered_json::array();
  for (const auto& run : scheme.ger_runs) {
    ordered_json r;
    r["name"] = run.name;
    r["source"] = CandidateSourceName(run.source);
    r["streams"] = ordered_json::array();
    for (const auto& s : run.streams) r["streams"].push_back(s.ToString());
    r["backend"] = run.backend;
    r["prompt"] = run.prompt;
    j["ger_runs"].push_back(std::move(r));
  }
  j["merge"] = VoteOptionsToJson(scheme.merge);
  ordered_json g;
  g["enabled"] = scheme.guard.enabled;
  g["max_length_ratio"] = scheme.guard.max_length_ratio;
  g["ngram_size"] = scheme.guard.ngram_size;
  g["max_ngram_repeats"] = scheme.guard.max_ngram_repeats;
  j["guard"] = std::move(g);
  return j;
}

RunReport RunMpa(const Corpus& corpus, const MpaScheme& scheme, const PipelineResources& resources,
                 const RunOptions& options) {
  scheme.Validate();
  // Resolve every backend and prompt before touching the corpus.
  std::vector<LlmClient*> clients;
  std::vector<const PromptTemplate*> prompts;
  for (const auto& run : scheme.ger_runs) {
    clients.push_back(&resources.Backend(run.backend));
    prompts.push_back(&resources.Prompt(run.prompt));
  }

  RunReport report;
  report.kind = "mpa";
  report.config = options.config_snapshot ? *options.config_snapshot : SchemeToJson(scheme);
  std::vector<StreamSpec> required = {scheme.anchor};
  for (const auto& run : scheme.ger_runs) {
    required.insert(required.end(), run.streams.begin(), run.streams.end());
  }
  const auto keep = ResolveUtterances(corpus, required, scheme.missing_streams, &report.skipped);

  const NormalizationOptions* llm_norm =
      scheme.normalize_llm_inputs ? &scheme.normalization : nullptr;
  report.utterances.resize(keep.size());
  ParallelFor(keep.size(), options.workers, [&](size_t k) {
    const Utterance& u = corpus.utterances()[keep[k]];
    UtteranceResult& out = report.utterances[k];
    out.utt_id = u.utt_id;
    out.reference = u.reference;
    out.streams.push_back(StreamOutput{scheme.anchor.ToString(), false,
                                       Lookup(u, scheme.anchor)->text, std::nullopt, false, ""});
    for (size_t r = 0; r < scheme.ger_runs.size(); ++r) {
      const GerRun& run = scheme.ger_runs[r];
      std::vector<std::string> candidates;
      for (const auto& spec : run.streams) candidates.push_back(Lookup(u, spec)->text);
      LlmGerResult g = LlmGer(u.utt_id, candidates, *clients[r], *prompts[r], scheme.guard, llm_norm);
      out.streams.push_back(
          StreamOutput{run.name, true, std::move(g.text), std::move(g.raw), g.fallback, std::move(g.reason)});
    }
    out.merged = RecombineRecorded(out, scheme.merge, scheme.token_mode);
  });
  report.digest = ComputeDigest(report);
  return report;
}

RunReport RunBaselineRover(const Corpus& corpus, const std::vector<StreamSpec>& streams,
                           const VoteOptions& merge, TokenMode mode, MissingStreamPolicy missing,
                           const RunOptions& options) {
  if (streams.empty()) throw ConfigError("ROVER needs at least one stream");
  try {
    merge.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  RunReport report;
  report.kind = "rover";
  if (options.config_snapshot) {
    report.config = *options.config_snapshot;
  } else {
    report.config["streams"] = ordered_json::array();
    for (const auto& s : streams) report.config["streams"].push_back(s.ToString());
    report.config["token_mode"] = TokenModeName(mode);
    report.config["merge"] = VoteOptionsToJson(merge);
  }
  const auto keep = ResolveUtterances(corpus, streams, missing, &report.skipped);
  report.utterances.resize(keep.size());
  ParallelFor(keep.size(), options.workers, [&](size_t k) {
    const Utterance& u = corpus.utterances()[keep[k]];
    UtteranceResult& out = report.utterances[k];
    out.utt_id = u.utt_id;
    out.reference = u.reference;
    for (const auto& spec : streams) {
      out.streams.push_back(StreamOutput{spec.ToString(), false, Lookup(u, spec)->text,
                                         std::nullopt, false, ""});
    }
    out.merged = RecombineRecorded(out, merge, mode);
  });
  report.digest = ComputeDigest(report);
  return report;
}

size_t RunReport::FallbackUtterances() const {
  size_t n = 0;
  for (const auto& u : utterances) {
    for (const auto& s : u.streams) {
      if (s.fallback) {
        ++n;
        break;
      }
    }
  }
  return n;
}

size_t RunReport::FallbackOutputs() const {
  size_t n = 0;
  for (const auto& u : utterances) {
    for (const auto& s : u.streams) n += s.fallback ? 1 : 0;
  }
  return n;
}

std::vector<std::string> RunReport::ScoredStreams() const {
  std::vector<std::string> names;
  if (utterances.empty()) return names;
  for (const auto& s : utterances.front().streams) {
    names.push_back(s.name);
    if (s.is_llm) names.push_back(s.name + ":raw");
  }
  names.push_back("merged");
  return names;
}

std::optional<CerReport> RunReport::Score(const std::string& stream, const NormalizationOptions& norm,
                                          TokenMode mode) const {
  std::vector<UtteranceScore> records;
  for (const auto& u : utterances) {
    if (!u.reference) continue;
    const std::string* text = StreamText(u, stream);
    if (text == nullptr) throw ScoringError("no stream \"" + stream + "\" in utterance " + u.utt_id);
    records.push_back(ScorePair(u.utt_id, *u.reference, *text, norm, mode));
  }
  if (records.empty()) return std::nullopt;
  try {
    return CorpusCer(std::move(records));
  } catch (const ScoringError&) {
    return std::nullopt;
  }
}

const UtteranceResult* RunReport::Find(const std::string& utt_id) const {
  for (const auto& u : utterances) {
    if (u.utt_id == utt_id) return &u;
  }
  return nullptr;
}

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string ComputeDigest(const RunReport& report) {
  std::string canonical = report.kind + "\n" + report.config.dump() + "\n";
  for (const auto& u : report.utterances) canonical += UtteranceToJson(u).dump() + "\n";
  for (const auto& s : report.skipped) canonical += "skipped " + s + "\n";
  return Sha256Hex(canonical);
}

void WriteRunReport(const RunReport& report, std::ostream& out, const NormalizationOptions& norm,
                    TokenMode mode) {
  ordered_json header;
  header["type"] = "run";
  header["kind"] = report.kind;
  header["digest"] = report.digest;
  header["config"] = report.config;
  header["utterances"] = report.utterances.size();
  header["skipped"] = report.skipped;
  header["fallback_utterances"] = report.FallbackUtterances();
  header["fallback_outputs"] = report.FallbackOutputs();
  ordered_json summary = ordered_json::object();
  std::map<std::string, CerReport> scores;
  for (const auto& name : report.ScoredStreams()) {
    if (auto cer = report.Score(name, norm, mode)) {
      ordered_json s = CountsToJson(cer->totals);
      s["cer"] = cer->corpus_cer;
      s["excluded"] = cer->excluded;
      summary[name] = std::move(s);
      scores.emplace(name, std::move(*cer));
    }
  }
  header["summary"] = std::move(summary);
  out << header.dump() << '\n';

  for (size_t i = 0; i < report.utterances.size(); ++i) {
    ordered_json line = UtteranceToJson(report.utterances[i]);
    if (!scores.empty() && report.utterances[i].reference) {
      ordered_json per = ordered_json::object();
      for (const auto& [name, cer] : scores) {
        for (const auto& rec : cer.per_utterance) {
          if (rec.utt_id != report.utterances[i].utt_id) continue;
          ordered_json c = CountsToJson(rec.counts);
          c["empty_reference"] = rec.empty_reference;
          per[name] = std::move(c);
          break;
        }
      }
      line["scores"] = std::move(per);
    }
    out << line.dump() << '\n';
  }
}

RunReport ReadRunReport(std::istream& in) {
  RunReport report;
  std::string line;
  size_t line_no = 0;
  bool have_header = false;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "run") {
        if (have_header) throw std::invalid_argument("second run header");
        have_header = true;
        report.kind = j.at("kind").get<std::string>();
        report.digest = j.at("digest").get<std::string>();
        report.config = j.at("config");
        report.skipped = j.value("skipped", std::vector<std::string>{});
      } else if (type == "utterance") {
        UtteranceResult u;
        u.utt_id = j.at("utt_id").get<std::string>();
        if (j.contains("reference")) u.reference = j["reference"].get<std::string>();
        for (const auto& s : j.at("streams")) {
          StreamOutput o;
          o.name = s.at("name").get<std::string>();
          o.is_llm = s.at("kind").get<std::string>() == "llm";
          o.text = s.at("text").get<std::string>();
          if (s.contains("raw") && !s["raw"].is_null()) o.raw = s["raw"].get<std::string>();
          o.fallback = s.value("fallback", false);
          o.reason = s.value("reason", std::string());
          u.streams.push_back(std::move(o));
        }
        u.merged = j.at("merged").get<std::string>();
        report.utterances.push_back(std::move(u));
      } else {
        throw std::invalid_argument("unknown record type \"" + type + "\"");
      }
    } catch (const std::exception& e) {
      problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) problems.push_back("run report has no header line");
  if (!problems.empty()) throw CorpusError(std::move(problems));
  return report;
}

RunReport LoadRunReport(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError({"cannot open " + path.string()});
  return ReadRunReport(in);
}

}  // namespace mpager
