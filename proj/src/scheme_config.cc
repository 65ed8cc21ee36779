#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mpager/pipeline.h"

namespace mpager {
namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

fs::path Resolve(const fs::path& base_dir, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? base_dir / path : path;
}

// MPAGER_ENDPOINT_<ID> etc. use the id upper-cased with other characters
// mapped to '_'.
std::string EnvSuffix(const std::string& id) {
  std::string out;
  for (unsigned char c : id) out.push_back(std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_');
  return out;
}

void RequireObject(const ordered_json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
}

std::vector<StreamSpec> ParseStreams(const ordered_json& list, const std::string& what) {
  if (!list.is_array() || list.empty()) throw ConfigError(what + ": \"streams\" must be a non-empty array");
  std::vector<StreamSpec> out;
  for (const auto& s : list) {
    try {
      out.push_back(StreamSpec::Parse(s.get<std::string>()));
    } catch (const std::exception& e) {
      throw ConfigError(what + ": bad stream " + s.dump() + ": " + e.what());
    }
  }
  return out;
}

GerRun ParseRun(const ordered_json& j, size_t index) {
  const std::string what = "ger_runs[" + std::to_string(index) + "]";
  RequireObject(j, what);
  GerRun run;
  run.name = j.value("name", std::string());
  const std::string source = j.value("source", std::string("one_best_of_n_systems"));
  if (source == "one_best_of_n_systems") {
    run.source = CandidateSource::kOneBestOfNSystems;
    run.streams = ParseStreams(j.value("streams", ordered_json()), what);
  } else if (source == "n_best_of_one_system") {
    run.source = CandidateSource::kNBestOfOneSystem;
    if (j.contains("streams")) {
      run.streams = ParseStreams(j["streams"], what);
    } else {
      const std::string system = j.value("system", std::string());
      const int n = j.value("n", 0);
      if (system.empty() || n < 1) {
        throw ConfigError(what + ": n_best_of_one_system needs \"streams\" or \"system\" and \"n\" >= 1");
      }
      for (int r = 1; r <= n; ++r) run.streams.push_back(StreamSpec{system, r});
    }
  } else {
    throw ConfigError(what + ": unknown source \"" + source + "\"");
  }
  run.backend = j.value("backend", std::string());
  run.prompt = j.value("template", std::string("builtin:english"));
  return run;
}

std::shared_ptr<MockBackend> MakeMock(const std::string& id, const ordered_json& j,
                                      const fs::path& base_dir, ordered_json* snap) {
  const std::string mode = j.value("mode", std::string("echo"));
  MockBackend::Mode m;
  if (mode == "echo") {
    m = MockBackend::Mode::kEcho;
  } else if (mode == "scripted") {
    m = MockBackend::Mode::kScripted;
  } else {
    throw ConfigError("backend " + id + ": unknown mock mode \"" + mode + "\"");
  }
  auto mock = std::make_shared<MockBackend>(m);
  (*snap)["mode"] = mode;
  if (j.contains("script")) {
    const auto& script = j["script"];
    ordered_json entries = ordered_json::object();
    if (script.is_string()) {
      const fs::path path = Resolve(base_dir, script.get<std::string>());
      std::ifstream in(path, std::ios::binary);
      if (!in) throw ConfigError("backend " + id + ": cannot open script " + path.string());
      std::string line;
      size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
          const auto rec = ordered_json::parse(line);
          entries[rec.at("utt_id").get<std::string>()] = rec.at("text").get<std::string>();
        } catch (const std::exception& e) {
          throw ConfigError("backend " + id + ": " + path.string() + " line " +
                            std::to_string(line_no) + ": " + e.what());
        }
      }
    } else if (script.is_object()) {
      entries = script;
    } else {
      throw ConfigError("backend " + id + ": \"script\" must be a path or an object");
    }
    for (const auto& [utt, text] : entries.items()) {
      if (!text.is_string()) throw ConfigError("backend " + id + ": script entry " + utt + " is not a string");
      mock->Script(utt, text.get<std::string>());
    }
    // The snapshot carries the script itself so the digest tracks it.
    (*snap)["script"] = entries;
  }
  if (j.contains("fail")) {
    for (const auto& u : j["fail"]) mock->FailAlways(u.get<std::string>());
    (*snap)["fail"] = j["fail"];
  }
  if (j.contains("fail_first")) {
    for (const auto& [utt, n] : j["fail_first"].items()) mock->FailFirst(utt, n.get<int>());
    (*snap)["fail_first"] = j["fail_first"];
  }
  if (j.contains("delay_ms")) mock->Delay(std::chrono::milliseconds(j["delay_ms"].get<int>()));
  return mock;
}

BackendConfig ParseBackendConfig(const std::string& id, const ordered_json& j, const EnvLookup& env,
                                 const std::map<std::string, std::string>& overrides) {
  BackendConfig c;
  c.endpoint_url = j.value("endpoint", std::string());
  if (auto v = env("MPAGER_ENDPOINT_" + EnvSuffix(id))) c.endpoint_url = *v;
  if (auto it = overrides.find(id); it != overrides.end()) c.endpoint_url = it->second;
  c.model_name = j.value("model", std::string());
  const std::string style = j.value("api_style", std::string("completion"));
  if (style == "completion") {
    c.api_style = ApiStyle::kCompletion;
  } else if (style == "chat") {
    c.api_style = ApiStyle::kChat;
  } else {
    throw ConfigError("backend " + id + ": unknown api_style \"" + style + "\"");
  }
  c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
  c.temperature = j.value("temperature", c.temperature);
  c.request_timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<int>(c.request_timeout.count())));
  c.max_retries = j.value("max_retries", c.max_retries);
  c.max_concurrent_requests = j.value("max_concurrent_requests", c.max_concurrent_requests);
  c.initial_backoff = std::chrono::milliseconds(j.value("backoff_ms", static_cast<int>(c.initial_backoff.count())));
  if (j.contains("api_key_env")) {
    if (auto v = env(j["api_key_env"].get<std::string>())) c.api_key = *v;
  }
  if (!c.api_key) {
    if (auto v = env("MPAGER_API_KEY_" + EnvSuffix(id))) {
      c.api_key = *v;
    } else if (auto g = env("MPAGER_API_KEY")) {
      c.api_key = *g;
    }
  }
  if (j.contains("api_key")) {
    throw ConfigError("backend " + id + ": put secrets in the environment (api_key_env), not the scheme file");
  }
  return c;
}

ordered_json BackendSnapshot(const BackendConfig& c) {
  ordered_json s;
  s["type"] = "http";
  s["endpoint"] = c.endpoint_url;
  s["model"] = c.model_name;
  s["api_style"] = c.api_style == ApiStyle::kChat ? "chat" : "completion";
  s["max_output_tokens"] = c.max_output_tokens;
  s["temperature"] = c.temperature;
  s["timeout_ms"] = c.request_timeout.count();
  s["max_retries"] = c.max_retries;
  s["max_concurrent_requests"] = c.max_concurrent_requests;
  s["backoff_ms"] = c.initial_backoff.count();
  s["api_key"] = c.api_key ? "<set>" : "<unset>";
  return s;
}

ordered_json TemplateSnapshot(const PromptTemplate& t) {
  ordered_json s;
  s["instruction"] = t.instruction;
  s["item_format"] = t.item_format;
  s["response_prefix"] = t.response_prefix;
  s["language"] = t.language == PromptLanguage::kEnglish ? "english" : "english_japanese";
  return s;
}

NormalizationOptions ParseNormalization(const ordered_json& j) {
  NormalizationOptions n;
  if (j.is_null()) return n;
  RequireObject(j, "normalization");
  n.fold_width = j.value("fold_width", n.fold_width);
  n.strip_punctuation = j.value("strip_punctuation", n.strip_punctuation);
  n.collapse_whitespace = j.value("collapse_whitespace", n.collapse_whitespace);
  if (j.contains("punctuation")) n.punctuation_set = PunctuationSet::FromChars(j["punctuation"].get<std::string>());
  return n;
}

}  // namespace

std::optional<std::string> ProcessEnv(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

LoadedScheme ParseScheme(const ordered_json& config, const fs::path& base_dir, const EnvLookup& env,
                         const std::map<std::string, std::string>& endpoint_overrides) {
  RequireObject(config, "scheme");
  LoadedScheme out;
  MpaScheme& s = out.scheme;
  try {
    if (!config.contains("anchor")) throw ConfigError("scheme has no \"anchor\"");
    s.anchor = StreamSpec::Parse(config["anchor"].get<std::string>());
    s.token_mode = ParseTokenMode(config.value("token_mode", std::string("char")));
    s.normalize_llm_inputs = config.value("normalize_llm_inputs", false);
    const std::string missing = config.value("missing_streams", std::string("error"));
    if (missing == "error") {
      s.missing_streams = MissingStreamPolicy::kError;
    } else if (missing == "skip") {
      s.missing_streams = MissingStreamPolicy::kSkipUtterance;
    } else {
      throw ConfigError("missing_streams must be \"error\" or \"skip\"");
    }
    s.normalization = ParseNormalization(config.value("normalization", ordered_json()));
    s.merge = ParseVoteOptions(config.value("merge", ordered_json()));
    if (config.contains("guard")) {
      const auto& g = config["guard"];
      RequireObject(g, "guard");
      s.guard.enabled = g.value("enabled", s.guard.enabled);
      s.guard.max_length_ratio = g.value("max_length_ratio", s.guard.max_length_ratio);
      s.guard.ngram_size = g.value("ngram_size", s.guard.ngram_size);
      s.guard.max_ngram_repeats = g.value("max_ngram_repeats", s.guard.max_ngram_repeats);
    }
    const ordered_json runs = config.value("ger_runs", ordered_json::array());
    if (!runs.is_array()) throw ConfigError("\"ger_runs\" must be an array");
    for (size_t i = 0; i < runs.size(); ++i) s.ger_runs.push_back(ParseRun(runs[i], i));

    ordered_json backend_snap = ordered_json::object();
    const ordered_json backends = config.value("backends", ordered_json::object());
    RequireObject(backends, "backends");
    for (const auto& [id, b] : backends.items()) {
      RequireObject(b, "backend " + id);
      const std::string type = b.value("type", std::string());
      ordered_json snap;
      std::shared_ptr<CompletionBackend> backend;
      BackendConfig bc;
      if (type == "mock") {
        snap["type"] = "mock";
        backend = MakeMock(id, b, base_dir, &snap);
        bc.max_retries = b.value("max_retries", 0);
        bc.initial_backoff = std::chrono::milliseconds(b.value("backoff_ms", 0));
        bc.max_concurrent_requests = b.value("max_concurrent_requests", bc.max_concurrent_requests);
        snap["max_retries"] = bc.max_retries;
      } else if (type == "http") {
        bc = ParseBackendConfig(id, b, env, endpoint_overrides);
        try {
          bc.Validate();
        } catch (const std::invalid_argument& e) {
          throw ConfigError("backend " + id + ": " + e.what());
        }
        backend = std::make_shared<HttpCompletionBackend>(bc);
        snap = BackendSnapshot(bc);
      } else {
        throw ConfigError("backend " + id + ": \"type\" must be \"mock\" or \"http\"");
      }
      try {
        bc.Validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("backend " + id + ": " + e.what());
      }
      out.resources.backends[id] = std::make_shared<LlmClient>(std::move(backend), bc);
      backend_snap[id] = std::move(snap);
    }

    const ordered_json templates = config.value("templates", ordered_json::object());
    RequireObject(templates, "templates");
    for (const auto& [id, t] : templates.items()) {
      try {
        PromptTemplate tmpl = t.is_string() ? PromptTemplate::Load(Resolve(base_dir, t.get<std::string>()))
                                            : PromptTemplate::FromJson(t.dump());
        out.resources.prompts.emplace(id, std::move(tmpl));
      } catch (const std::exception& e) {
        throw ConfigError("template " + id + ": " + e.what());
      }
    }

    s.Validate();
    ordered_json template_snap = ordered_json::object();
    for (const auto& run : s.ger_runs) {
      out.resources.Backend(run.backend);
      template_snap[run.prompt] = TemplateSnapshot(out.resources.Prompt(run.prompt));
    }
    out.snapshot = SchemeToJson(s);
    out.snapshot["normalization"] = {{"fold_width", s.normalization.fold_width},
                                     {"strip_punctuation", s.normalization.strip_punctuation},
                                     {"collapse_whitespace", s.normalization.collapse_whitespace}};
    out.snapshot["backends"] = std::move(backend_snap);
    out.snapshot["templates"] = std::move(template_snap);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid scheme: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

LoadedScheme LoadScheme(const fs::path& path, const EnvLookup& env,
                        const std::map<std::string, std::string>& endpoint_overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scheme " + path.string());
  ordered_json config;
  try {
    config = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return ParseScheme(config, path.parent_path(), env, endpoint_overrides);
}

}  // namespace mpager
