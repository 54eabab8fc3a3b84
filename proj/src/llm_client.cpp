#include "da/llm_client.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>

namespace da {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("llm endpoint must include a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

void set_timeouts(httplib::Client& client, std::chrono::duration<double> remaining) {
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(remaining).count();
  const auto sec = static_cast<time_t>(usec / 1'000'000);
  const auto rem = static_cast<time_t>(usec % 1'000'000);
  client.set_connection_timeout(sec, rem);
  client.set_read_timeout(sec, rem);
  client.set_write_timeout(sec, rem);
}

std::string error_excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() > kMax ? body.substr(0, kMax) + "..." : body;
}

}  // namespace

void LlmConfig::validate() const {
  if (!(timeout_s > 0.0) || !std::isfinite(timeout_s)) {
    throw std::invalid_argument("llm.timeout_s must be positive");
  }
  if (max_retries < 0) throw std::invalid_argument("llm.max_retries must be >= 0");
  if (endpoint.empty()) throw std::invalid_argument("llm.endpoint must not be empty");
  if (model.empty()) throw std::invalid_argument("llm.model must not be empty");
}

LlmConfig llm_config_from_json(const json& section) {
  if (!section.is_object()) throw std::invalid_argument("llm: expected object");
  if (section.contains("api_key")) {
    throw std::invalid_argument("llm.api_key: keys are read from the environment, not config files");
  }
  LlmConfig c;
  c.endpoint = section.value("endpoint", c.endpoint);
  c.model = section.value("model", c.model);
  c.api_key_env = section.value("api_key_env", c.api_key_env);
  c.timeout_s = section.value("timeout_s", c.timeout_s);
  c.max_retries = section.value("max_retries", c.max_retries);
  c.temperature = section.value("temperature", c.temperature);
  c.validate();
  return c;
}

json to_json(const LlmConfig& c) {
  return {{"endpoint", c.endpoint},   {"model", c.model},
          {"api_key_env", c.api_key_env}, {"timeout_s", c.timeout_s},
          {"max_retries", c.max_retries}, {"temperature", c.temperature}};
}

HttpLlmClient::HttpLlmClient(LlmConfig config) : config_(std::move(config)) {
  config_.validate();
  split_url(config_.endpoint);
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

json HttpLlmClient::build_request(const LlmConfig& config, std::string_view prompt) {
  return {{"model", config.model},
          {"temperature", config.temperature},
          {"messages",
           json::array({{{"role", "system"}, {"content", ""}},
                        {{"role", "user"}, {"content", std::string(prompt)}}})}};
}

std::string HttpLlmClient::parse_response(int status, const std::string& body) {
  if (status == 401 || status == 403) {
    throw LlmAuthError("HTTP " + std::to_string(status) + ": " + error_excerpt(body));
  }
  if (status == 429) throw LlmRateLimited("HTTP 429: " + error_excerpt(body));
  if (status < 200 || status >= 300) {
    throw LlmProtocolError("HTTP " + std::to_string(status) + ": " + error_excerpt(body));
  }
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw LlmProtocolError("response is not JSON: " + error_excerpt(body));
  }
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw LlmProtocolError("choices[0].message.content is not a string");
    return content.get<std::string>();
  } catch (const json::exception&) {
    throw LlmProtocolError("response lacks choices[0].message.content: " + error_excerpt(body));
  }
}

std::string HttpLlmClient::complete(std::string_view prompt) {
  if (prompt.empty()) throw std::invalid_argument("prompt must not be empty");

  const auto [base, path] = split_url(config_.endpoint);
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(config_.timeout_s));
  const std::string body = build_request(config_, prompt).dump();

  // The deadline covers every attempt, so a retry only happens with budget left.
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    const auto remaining = std::chrono::duration<double>(deadline - Clock::now());
    if (remaining.count() <= 0.0) break;

    httplib::Client client(base);
    set_timeouts(client, remaining);

    httplib::Request req;
    req.method = "POST";
    req.path = path;
    req.body = body;
    req.set_header("Content-Type", "application/json");
    if (!api_key_.empty()) req.set_header("Authorization", "Bearer " + api_key_);
    req.progress = [deadline](uint64_t, uint64_t) { return Clock::now() < deadline; };

    httplib::Response res;
    httplib::Error err = httplib::Error::Success;
    if (client.send(req, res, err)) return parse_response(res.status, res.body);

    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Canceled ||
        Clock::now() >= deadline) {
      throw LlmTimeout("no response within " + std::to_string(config_.timeout_s) + " s");
    }
    last_error = httplib::to_string(err);
  }
  if (last_error.empty()) {
    throw LlmTimeout("no response within " + std::to_string(config_.timeout_s) + " s");
  }
  throw LlmTransportError("request failed: " + last_error);
}

std::string_view to_string(MockMode mode) {
  switch (mode) {
    case MockMode::echo:
      return "echo";
    case MockMode::scripted:
      return "scripted";
    case MockMode::fail:
      return "fail";
    case MockMode::oversize:
      return "oversize";
  }
  return "?";
}

MockMode mock_mode_from_string(std::string_view s) {
  for (auto m : {MockMode::echo, MockMode::scripted, MockMode::fail, MockMode::oversize}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown mock mode '" + std::string(s) + "'");
}

std::string prompt_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

MockLlmClient::MockLlmClient(MockMode mode, std::map<std::string, std::string> script)
    : mode_(mode), script_(std::move(script)) {}

std::string MockLlmClient::complete(std::string_view prompt) {
  ++calls_;
  last_prompt_ = std::string(prompt);
  switch (mode_) {
    case MockMode::echo:
      return std::string(prompt.substr(0, 120));
    case MockMode::scripted: {
      const auto it = script_.find(prompt_hash(prompt));
      if (it == script_.end()) {
        throw LlmProtocolError("no scripted reply for prompt " + prompt_hash(prompt));
      }
      return it->second;
    }
    case MockMode::fail:
      throw LlmTimeout("mock client configured to fail");
    case MockMode::oversize: {
      std::string rant;
      while (rant.size() < 500) rant += "Honestly the road is fine but let me go on and on. ";
      return rant.substr(0, 500);
    }
  }
  throw LlmProtocolError("bad mock mode");
}

std::unique_ptr<LlmClient> mock_client(MockMode mode, std::map<std::string, std::string> script) {
  return std::make_unique<MockLlmClient>(mode, std::move(script));
}

}  // namespace da
