#ifndef MPAGER_LLM_CLIENT_H_
#define MPAGER_LLM_CLIENT_H_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpager {

enum class PromptLanguage { kEnglish, kEnglishJapanese };

// Prompt layout:
//
//   <instruction>
//   <blank line>
//   <item_format rendered for candidate 1>
//   ...
//   <item_format rendered for candidate N>
//   <blank line>
//   <response_prefix>            (omitted when empty)
//
// item_format placeholders: {index} (1-based) and {text}; "{{" and "}}"
// produce literal braces.
struct PromptTemplate {
  std::string instruction;
  std::string item_format = "{index}. {text}";
  std::string response_prefix;
  PromptLanguage language = PromptLanguage::kEnglish;

  static PromptTemplate Builtin(PromptLanguage language);
  // JSON object with "instruction", "item_format", optional
  // "response_prefix" and "language" ("english" | "english_japanese").
  static PromptTemplate FromJson(const std::string& json_text);
  static PromptTemplate Load(const std::filesystem::path& path);

  void Validate() const;  // throws std::invalid_argument
};

class PromptError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Deterministic. Line breaks inside candidates are flattened to spaces so
// N candidates always give N item lines. Throws PromptError on an empty list.
std::string BuildPrompt(const std::vector<std::string>& candidates, const PromptTemplate& tmpl);

enum class ApiStyle { kCompletion, kChat };

struct BackendConfig {
  std::string endpoint_url;  // e.g. http://localhost:8000/v1/completions
  std::string model_name;
  ApiStyle api_style = ApiStyle::kCompletion;
  int max_output_tokens = 256;
  double temperature = 0.0;
  std::chrono::milliseconds request_timeout{30000};
  int max_retries = 2;
  int max_concurrent_requests = 4;
  std::chrono::milliseconds initial_backoff{250};
  std::optional<std::string> api_key;

  void Validate() const;  // throws std::invalid_argument
};

struct CompletionRequest {
  std::string utt_id;
  std::string prompt;
  std::vector<std::string> candidates;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 256;
};

// Connection failures, timeouts and non-2xx responses.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The backend answered but produced no usable text.
class EmptyCompletionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  // Returns the raw completion text. Throws TransportError.
  virtual std::string Complete(const CompletionRequest& request) = 0;
  // Cheap reachability check, called once before a corpus run.
  virtual void Probe() {}
};

// JSON-over-HTTP completion endpoint. Completion style posts
// {model, prompt, temperature, max_tokens} and reads choices[i].text; chat
// style posts {model, messages, temperature, max_tokens} and reads
// choices[i].message.content. Top-level "text", "completion" or "response"
// fields are accepted as well.
class HttpCompletionBackend : public CompletionBackend {
 public:
  explicit HttpCompletionBackend(BackendConfig config);
  std::string Complete(const CompletionRequest& request) override;
  void Probe() override;

  // Exposed for tests.
  static std::string RequestBody(const CompletionRequest& request, ApiStyle style);
  static std::string ParseResponseBody(const std::string& body);

 private:
  BackendConfig config_;
  std::string base_url_;  // scheme://host[:port]
  std::string path_;
};

// Scriptable stand-in for an LLM endpoint.
class MockBackend : public CompletionBackend {
 public:
  enum class Mode {
    kEcho,      // return candidate 1
    kScripted,  // return script[utt_id]; echo when absent
  };

  explicit MockBackend(Mode mode = Mode::kEcho) : mode_(mode) {}

  MockBackend& Script(std::string utt_id, std::string output);
  // Every attempt for utt_id throws TransportError.
  MockBackend& FailAlways(std::string utt_id);
  // The first `attempts` calls for utt_id throw TransportError.
  MockBackend& FailFirst(std::string utt_id, int attempts);
  // Sleeps inside Complete so overlapping calls are observable.
  MockBackend& Delay(std::chrono::milliseconds delay);

  std::string Complete(const CompletionRequest& request) override;

  int calls() const { return calls_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }
  std::vector<CompletionRequest> requests() const;

 private:
  Mode mode_;
  std::map<std::string, std::string> script_;
  std::set<std::string> fail_always_;
  std::map<std::string, int> fail_first_;
  std::chrono::milliseconds delay_{0};

  mutable std::mutex mu_;
  std::map<std::string, int> attempts_;
  std::vector<CompletionRequest> requests_;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

// Prompting, transport with retry and the in-flight bound for one backend.
// Shareable across worker threads.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<CompletionBackend> backend, BackendConfig config);

  // Builds the prompt, sends it (retrying transport failures up to
  // max_retries with exponential backoff) and returns the trimmed
  // completion. Throws TransportError or EmptyCompletionError.
  std::string Correct(const std::string& utt_id, const std::vector<std::string>& candidates,
                      const PromptTemplate& tmpl);

  void Probe() { backend_->Probe(); }
  const BackendConfig& config() const { return config_; }
  CompletionBackend& backend() { return *backend_; }

 private:
  std::shared_ptr<CompletionBackend> backend_;
  BackendConfig config_;
  std::counting_semaphore<1 << 16> slots_;
};

enum class GuardRule { kNone, kLengthRatio, kNgramRepetition };

const char* GuardRuleName(GuardRule rule);

struct GuardPolicy {
  bool enabled = true;
  double max_length_ratio = 3.0;  // output chars / anchor chars
  int ngram_size = 4;
  int max_ngram_repeats = 4;      // reject above this many back-to-back copies

  void Validate() const;  // throws std::invalid_argument
};

struct GuardDecision {
  bool accepted = true;
  std::string text;  // the corrected text if accepted, else the anchor
  GuardRule rule = GuardRule::kNone;
  std::string reason;
};

// Length is measured in non-whitespace characters. An empty anchor counts
// as length 1 for the ratio.
GuardDecision GuardOutput(const std::string& anchor, const std::string& corrected,
                          const GuardPolicy& policy);

// Largest number of back-to-back copies of any n-gram of characters.
int MaxConsecutiveNgramRepeats(const std::string& text, int n);

}  // namespace mpager

#endif  // MPAGER_LLM_CLIENT_H_
