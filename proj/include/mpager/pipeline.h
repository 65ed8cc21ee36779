#ifndef MPAGER_PIPELINE_H_
#define MPAGER_PIPELINE_H_

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mpager/corpus.h"
#include "mpager/llm_client.h"
#include "mpager/rover.h"
#include "mpager/scoring.h"
#include "mpager/textnorm.h"

namespace mpager {

// Scheme or backend configuration problem; aborts a run.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CandidateSource {
  kNBestOfOneSystem,   // e.g. sysA@1, sysA@2, sysA@3
  kOneBestOfNSystems,  // e.g. sysA@1, sysB@1, sysC@1
};

const char* CandidateSourceName(CandidateSource source);

// One LLM correction pass; its output becomes a ROVER input stream.
struct GerRun {
  std::string name;
  CandidateSource source = CandidateSource::kOneBestOfNSystems;
  std::vector<StreamSpec> streams;  // streams[0] is the guard fallback
  std::string backend;
  std::string prompt = "builtin:english";
};

struct MpaScheme {
  StreamSpec anchor;
  std::vector<GerRun> ger_runs;
  VoteOptions merge;
  GuardPolicy guard;
  TokenMode token_mode = TokenMode::kChar;
  NormalizationOptions normalization;  // applied for scoring
  bool normalize_llm_inputs = false;
  MissingStreamPolicy missing_streams = MissingStreamPolicy::kError;

  void Validate() const;  // throws ConfigError
};

// Backends and prompt templates a scheme refers to by id.
struct PipelineResources {
  std::map<std::string, std::shared_ptr<LlmClient>> backends;
  std::map<std::string, PromptTemplate> prompts;

  // "builtin:english" and "builtin:english_japanese" always resolve.
  const PromptTemplate& Prompt(const std::string& id) const;
  LlmClient& Backend(const std::string& id) const;
};

struct LlmGerResult {
  std::string text;                // fed to ROVER
  std::optional<std::string> raw;  // completion before guarding; absent on failure
  bool fallback = false;
  std::string reason;              // why the anchor was used
};

// Prompt -> completion -> guard. Transport and empty-completion failures
// degrade to candidates[0] with a reason.
LlmGerResult LlmGer(const std::string& utt_id, const std::vector<std::string>& candidates,
                    LlmClient& client, const PromptTemplate& prompt, const GuardPolicy& guard,
                    const NormalizationOptions* normalize_inputs = nullptr);

struct StreamOutput {
  std::string name;
  bool is_llm = false;
  std::string text;                // what ROVER saw
  std::optional<std::string> raw;  // LLM completion before guarding
  bool fallback = false;
  std::string reason;
};

struct UtteranceResult {
  std::string utt_id;
  std::optional<std::string> reference;
  std::vector<StreamOutput> streams;  // ROVER input order; streams[0] is the anchor
  std::string merged;
};

struct RunReport {
  std::string kind;  // "mpa" or "rover"
  nlohmann::ordered_json config;
  std::vector<UtteranceResult> utterances;
  std::vector<std::string> skipped;
  std::string digest;  // SHA-256 over config and utterance records

  size_t FallbackUtterances() const;
  size_t FallbackOutputs() const;

  // Stream names scored in summaries: every stream, "<llm>:raw" for LLM
  // completions before guarding, and "merged".
  std::vector<std::string> ScoredStreams() const;
  // CER of one scored stream; nullopt when no reference is available.
  std::optional<CerReport> Score(const std::string& stream, const NormalizationOptions& norm,
                                 TokenMode mode) const;
  const UtteranceResult* Find(const std::string& utt_id) const;
};

struct RunOptions {
  int workers = 1;
  // Recorded in the report (and digest) instead of the scheme's own JSON.
  std::optional<nlohmann::ordered_json> config_snapshot;
};

nlohmann::ordered_json SchemeToJson(const MpaScheme& scheme);

RunReport RunMpa(const Corpus& corpus, const MpaScheme& scheme, const PipelineResources& resources,
                 const RunOptions& options = {});

RunReport RunBaselineRover(const Corpus& corpus, const std::vector<StreamSpec>& streams,
                           const VoteOptions& merge, TokenMode mode = TokenMode::kChar,
                           MissingStreamPolicy missing = MissingStreamPolicy::kError,
                           const RunOptions& options = {});

// Re-runs ROVER over the recorded streams of one utterance.
std::string RecombineRecorded(const UtteranceResult& utt, const VoteOptions& merge, TokenMode mode);

// Run report JSONL: a header line {"type":"run",...} followed by one
// {"type":"utterance",...} line per utterance.
void WriteRunReport(const RunReport& report, std::ostream& out,
                    const NormalizationOptions& norm = {}, TokenMode mode = TokenMode::kChar);
RunReport ReadRunReport(std::istream& in);
RunReport LoadRunReport(const std::filesystem::path& path);
std::string ComputeDigest(const RunReport& report);

std::string Sha256Hex(std::string_view data);

// Scheme file loading. Relative paths inside the scheme resolve against the
// scheme's directory. For HTTP backends the endpoint and API key are taken
// from, in increasing precedence: the file, the environment
// (MPAGER_ENDPOINT_<ID>, MPAGER_API_KEY_<ID>, MPAGER_API_KEY), and
// `endpoint_overrides` (backend id -> URL).
struct LoadedScheme {
  MpaScheme scheme;
  PipelineResources resources;
  nlohmann::ordered_json snapshot;  // effective configuration, secrets removed
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> ProcessEnv(const std::string& name);

LoadedScheme ParseScheme(const nlohmann::ordered_json& config, const std::filesystem::path& base_dir,
                         const EnvLookup& env = ProcessEnv,
                         const std::map<std::string, std::string>& endpoint_overrides = {});
LoadedScheme LoadScheme(const std::filesystem::path& path, const EnvLookup& env = ProcessEnv,
                        const std::map<std::string, std::string>& endpoint_overrides = {});

VoteOptions ParseVoteOptions(const nlohmann::ordered_json& j);
nlohmann::ordered_json VoteOptionsToJson(const VoteOptions& v);

}  // namespace mpager

#endif  // MPAGER_PIPELINE_H_
