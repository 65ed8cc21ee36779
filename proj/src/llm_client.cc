#include "mpager/llm_client.h"

#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mpager/textnorm.h"

namespace mpager {
namespace {

constexpr const char* kEnglishInstruction =
    "Below are the N-best hypotheses transcribed from a speech recognition system. Please try to "
    "revise the best hypothesis using the words which are included in the other hypotheses, and "
    "write the response for the true transcription.";

constexpr const char* kJapaneseInstruction =
    "以下は音声認識システムによって書き起こされたN-best仮説です。他の仮説に含まれる単語を用いて"
    "最良仮説を修正し、正しい書き起こしを応答として書いてください。";

std::string FlattenLineBreaks(const std::string& text) {
  std::string out = text;
  for (char& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

std::string RenderItem(const std::string& format, size_t index, const std::string& text) {
  std::string out;
  for (size_t i = 0; i < format.size(); ++i) {
    if (format.compare(i, 2, "{{") == 0) {
      out.push_back('{');
      ++i;
    } else if (format.compare(i, 2, "}}") == 0) {
      out.push_back('}');
      ++i;
    } else if (format.compare(i, 7, "{index}") == 0) {
      out += std::to_string(index);
      i += 6;
    } else if (format.compare(i, 6, "{text}") == 0) {
      out += text;
      i += 5;
    } else {
      out.push_back(format[i]);
    }
  }
  return out;
}

std::string TrimUnicode(const std::string& text) {
  const std::u32string cps = DecodeUtf8(text);
  size_t first = 0, last = cps.size();
  while (first < last && IsUnicodeWhitespace(cps[first])) ++first;
  while (last > first && IsUnicodeWhitespace(cps[last - 1])) --last;
  return EncodeUtf8(std::u32string_view(cps).substr(first, last - first));
}

std::vector<std::u32string> NonWhitespaceChars(const std::string& text) {
  std::vector<std::u32string> out;
  for (char32_t cp : DecodeUtf8(text)) {
    if (!IsUnicodeWhitespace(cp)) out.emplace_back(1, cp);
  }
  return out;
}

}  // namespace

PromptTemplate PromptTemplate::Builtin(PromptLanguage language) {
  PromptTemplate t;
  t.language = language;
  t.item_format = "<hypothesis{index}>{text}</hypothesis{index}>";
  t.response_prefix = "### Response:";
  t.instruction = kEnglishInstruction;
  if (language == PromptLanguage::kEnglishJapanese) {
    t.instruction = std::string(kEnglishInstruction) + "\n" + kJapaneseInstruction;
    t.response_prefix = "### Response (応答):";
  }
  return t;
}

PromptTemplate PromptTemplate::FromJson(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw PromptError(std::string("prompt template is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw PromptError("prompt template must be a JSON object");
  PromptTemplate t;
  try {
    t.instruction = j.at("instruction").get<std::string>();
    t.item_format = j.value("item_format", t.item_format);
    t.response_prefix = j.value("response_prefix", std::string());
    const std::string language = j.value("language", std::string("english"));
    if (language == "english") {
      t.language = PromptLanguage::kEnglish;
    } else if (language == "english_japanese") {
      t.language = PromptLanguage::kEnglishJapanese;
    } else {
      throw PromptError("unknown prompt language \"" + language + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw PromptError(std::string("invalid prompt template: ") + e.what());
  }
  t.Validate();
  return t;
}

PromptTemplate PromptTemplate::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError("cannot open prompt template " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str());
}

void PromptTemplate::Validate() const {
  if (item_format.find('\n') != std::string::npos) {
    throw PromptError("item_format must be a single line");
  }
  if (item_format.find("{text}") == std::string::npos) {
    throw PromptError("item_format must contain {text}");
  }
}

std::string BuildPrompt(const std::vector<std::string>& candidates, const PromptTemplate& tmpl) {
  if (candidates.empty()) throw PromptError("cannot build a prompt without candidates");
  tmpl.Validate();
  std::string prompt = tmpl.instruction;
  prompt += "\n\n";
  for (size_t i = 0; i < candidates.size(); ++i) {
    prompt += RenderItem(tmpl.item_format, i + 1, FlattenLineBreaks(candidates[i]));
    prompt += '\n';
  }
  if (!tmpl.response_prefix.empty()) {
    prompt += '\n';
    prompt += tmpl.response_prefix;
    prompt += '\n';
  }
  return prompt;
}

void BackendConfig::Validate() const {
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (max_concurrent_requests < 1) throw std::invalid_argument("max_concurrent_requests must be >= 1");
  if (max_output_tokens < 1) throw std::invalid_argument("max_output_tokens must be >= 1");
  if (request_timeout.count() <= 0) throw std::invalid_argument("request_timeout must be positive");
  if (initial_backoff.count() < 0) throw std::invalid_argument("initial_backoff must be >= 0");
}

MockBackend& MockBackend::Script(std::string utt_id, std::string output) {
  script_[std::move(utt_id)] = std::move(output);
  return *this;
}

MockBackend& MockBackend::FailAlways(std::string utt_id) {
  fail_always_.insert(std::move(utt_id));
  return *this;
}

MockBackend& MockBackend::FailFirst(std::string utt_id, int attempts) {
  fail_first_[std::move(utt_id)] = attempts;
  return *this;
}

MockBackend& MockBackend::Delay(std::chrono::milliseconds delay) {
  delay_ = delay;
  return *this;
}

std::vector<CompletionRequest> MockBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::string MockBackend::Complete(const CompletionRequest& request) {
  ++calls_;
  const int now = ++in_flight_;
  int seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<int>* counter;
    ~Leave() { --*counter; }
  } leave{&in_flight_};

  int attempt = 0;
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    attempt = ++attempts_[request.utt_id];
  }
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

  if (fail_always_.count(request.utt_id)) {
    throw TransportError("mock transport failure for " + request.utt_id);
  }
  if (auto it = fail_first_.find(request.utt_id); it != fail_first_.end() && attempt <= it->second) {
    throw TransportError("mock transient failure for " + request.utt_id + " (attempt " +
                         std::to_string(attempt) + ")");
  }
  if (mode_ == Mode::kScripted) {
    if (auto it = script_.find(request.utt_id); it != script_.end()) return it->second;
  }
  return request.candidates.empty() ? std::string() : request.candidates.front();
}

LlmClient::LlmClient(std::shared_ptr<CompletionBackend> backend, BackendConfig config)
    : backend_(std::move(backend)),
      config_((config.Validate(), std::move(config))),
      slots_(config_.max_concurrent_requests) {}

std::string LlmClient::Correct(const std::string& utt_id,
                               const std::vector<std::string>& candidates,
                               const PromptTemplate& tmpl) {
  CompletionRequest request;
  request.utt_id = utt_id;
  request.prompt = BuildPrompt(candidates, tmpl);
  request.candidates = candidates;
  request.model = config_.model_name;
  request.temperature = config_.temperature;
  request.max_tokens = config_.max_output_tokens;

  std::string raw;
  for (int attempt = 0;; ++attempt) {
    try {
      slots_.acquire();
      struct Release {
        std::counting_semaphore<1 << 16>* sem;
        ~Release() { sem->release(); }
      } release{&slots_};
      raw = backend_->Complete(request);
      break;
    } catch (const TransportError& e) {
      if (attempt >= config_.max_retries) {
        throw TransportError(utt_id + ": giving up after " + std::to_string(attempt + 1) +
                             " attempt(s): " + e.what());
      }
      std::this_thread::sleep_for(config_.initial_backoff * (1 << std::min(attempt, 16)));
    }
  }
  std::string text;
  try {
    text = TrimUnicode(raw);
  } catch (const Utf8Error& e) {
    throw EmptyCompletionError(utt_id + ": completion is not valid UTF-8");
  }
  if (text.empty()) throw EmptyCompletionError(utt_id + ": backend returned an empty completion");
  return text;
}

const char* GuardRuleName(GuardRule rule) {
  switch (rule) {
    case GuardRule::kNone: return "none";
    case GuardRule::kLengthRatio: return "length_ratio";
    case GuardRule::kNgramRepetition: return "ngram_repetition";
  }
  return "?";
}

void GuardPolicy::Validate() const {
  if (!(max_length_ratio > 1.0)) throw std::invalid_argument("max_length_ratio must exceed 1");
  if (ngram_size < 1) throw std::invalid_argument("ngram_size must be positive");
  if (max_ngram_repeats < 1) throw std::invalid_argument("max_ngram_repeats must be positive");
}

int MaxConsecutiveNgramRepeats(const std::string& text, int n) {
  const auto chars = NonWhitespaceChars(text);
  const size_t len = chars.size();
  const size_t width = static_cast<size_t>(n);
  int best = 0;
  for (size_t start = 0; start + width <= len; ++start) {
    int repeats = 1;
    size_t next = start + width;
    while (next + width <= len &&
           std::equal(chars.begin() + start, chars.begin() + start + width, chars.begin() + next)) {
      ++repeats;
      next += width;
    }
    best = std::max(best, repeats);
  }
  return best;
}

GuardDecision GuardOutput(const std::string& anchor, const std::string& corrected,
                          const GuardPolicy& policy) {
  GuardDecision d;
  d.text = corrected;
  if (!policy.enabled) return d;
  policy.Validate();
  const double anchor_len = static_cast<double>(std::max<size_t>(1, CountScalars(anchor, true)));
  const double out_len = static_cast<double>(CountScalars(corrected, true));
  const double ratio = out_len / anchor_len;
  auto reject = [&](GuardRule rule, std::string reason) {
    d.accepted = false;
    d.text = anchor;
    d.rule = rule;
    d.reason = std::move(reason);
    return d;
  };
  if (ratio > policy.max_length_ratio) {
    std::ostringstream reason;
    reason << "length ratio " << ratio << " exceeds " << policy.max_length_ratio;
    return reject(GuardRule::kLengthRatio, reason.str());
  }
  const int repeats = MaxConsecutiveNgramRepeats(corrected, policy.ngram_size);
  if (repeats > policy.max_ngram_repeats) {
    return reject(GuardRule::kNgramRepetition,
                  std::to_string(policy.ngram_size) + "-gram repeated " + std::to_string(repeats) +
                      " times in a row (limit " + std::to_string(policy.max_ngram_repeats) + ")");
  }
  return d;
}

}  // namespace mpager
