#include <regex>

#include "httplib.h"
#include "json.hpp"
#include "mpager/llm_client.h"

namespace mpager {
namespace {

using nlohmann::json;

void SplitUrl(const std::string& url, std::string* base, std::string* path) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw std::invalid_argument("endpoint_url must look like http[s]://host[:port]/path, got \"" +
                                url + "\"");
  }
  *base = m[1].str();
  *path = m[2].matched ? m[2].str() : "/";
}

std::unique_ptr<httplib::Client> MakeClient(const std::string& base, const BackendConfig& config) {
  auto client = std::make_unique<httplib::Client>(base);
  const auto timeout = config.request_timeout;
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client->set_connection_timeout(secs.count(), usecs.count());
  client->set_read_timeout(secs.count(), usecs.count());
  client->set_write_timeout(secs.count(), usecs.count());
  return client;
}

}  // namespace

HttpCompletionBackend::HttpCompletionBackend(BackendConfig config) : config_(std::move(config)) {
  config_.Validate();
  SplitUrl(config_.endpoint_url, &base_url_, &path_);
}

std::string HttpCompletionBackend::RequestBody(const CompletionRequest& request, ApiStyle style) {
  nlohmann::ordered_json body;
  body["model"] = request.model;
  if (style == ApiStyle::kChat) {
    body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
  } else {
    body["prompt"] = request.prompt;
  }
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  return body.dump();
}

std::string HttpCompletionBackend::ParseResponseBody(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError(std::string("completion response is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw TransportError("completion response is not a JSON object");
  if (auto it = j.find("choices"); it != j.end() && it->is_array()) {
    for (const auto& choice : *it) {
      std::string text;
      if (choice.contains("text") && choice["text"].is_string()) {
        text = choice["text"].get<std::string>();
      } else if (choice.contains("message") && choice["message"].is_object() &&
                 choice["message"].contains("content") && choice["message"]["content"].is_string()) {
        text = choice["message"]["content"].get<std::string>();
      }
      if (text.find_first_not_of(" \t\r\n") != std::string::npos) return text;
    }
    return "";
  }
  for (const char* key : {"text", "completion", "response"}) {
    if (auto it = j.find(key); it != j.end() && it->is_string()) return it->get<std::string>();
  }
  throw TransportError("completion response has no completion text field");
}

std::string HttpCompletionBackend::Complete(const CompletionRequest& request) {
  auto client = MakeClient(base_url_, config_);
  httplib::Headers headers;
  if (config_.api_key) headers.emplace("Authorization", "Bearer " + *config_.api_key);
  auto res = client->Post(path_, headers, RequestBody(request, config_.api_style), "application/json");
  if (!res) {
    throw TransportError("POST " + config_.endpoint_url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("POST " + config_.endpoint_url + " returned HTTP " +
                         std::to_string(res->status));
  }
  return ParseResponseBody(res->body);
}

void HttpCompletionBackend::Probe() {
  auto client = MakeClient(base_url_, config_);
  auto res = client->Get("/");
  if (!res) {
    throw TransportError("endpoint " + config_.endpoint_url +
                         " is unreachable: " + httplib::to_string(res.error()));
  }
}

}  // namespace mpager
