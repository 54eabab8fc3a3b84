#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace da {

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4-0613";
  std::string api_key_env = "DA_LLM_API_KEY";
  double timeout_s = 5.0;
  int max_retries = 1;
  double temperature = 0.7;

  void validate() const;
};

/// Reads the "llm" section of a config document. An "api_key" field is rejected:
/// keys come from the environment only.
LlmConfig llm_config_from_json(const nlohmann::json& section);
nlohmann::json to_json(const LlmConfig& config);

// Error hierarchy. Every failure mode of complete() maps to exactly one of these.
class LlmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class LlmTimeout : public LlmError {
 public:
  using LlmError::LlmError;
};
class LlmAuthError : public LlmError {
 public:
  using LlmError::LlmError;
};
class LlmRateLimited : public LlmError {
 public:
  using LlmError::LlmError;
};
class LlmProtocolError : public LlmError {
 public:
  using LlmError::LlmError;
};
/// Connection-level failure (refused, reset, DNS) after retries are exhausted.
class LlmTransportError : public LlmError {
 public:
  using LlmError::LlmError;
};

/// One in-flight request per handle; use separate handles for parallel calls.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  /// Returns the assistant text for a single user-turn prompt.
  virtual std::string complete(std::string_view prompt) = 0;
};

/// Chat-completion client over HTTP(S): {model, temperature, messages:[system, user]}.
class HttpLlmClient final : public LlmClient {
 public:
  /// The API key is read from config.api_key_env at construction; an absent
  /// variable sends no Authorization header.
  explicit HttpLlmClient(LlmConfig config);

  std::string complete(std::string_view prompt) override;

  const LlmConfig& config() const { return config_; }

  /// Request body exactly as sent on the wire.
  static nlohmann::json build_request(const LlmConfig& config, std::string_view prompt);
  /// Maps an HTTP status and body to the assistant text or a typed error.
  static std::string parse_response(int status, const std::string& body);

 private:
  LlmConfig config_;
  std::string api_key_;
};

enum class MockMode { echo, scripted, fail, oversize };

std::string_view to_string(MockMode mode);
MockMode mock_mode_from_string(std::string_view s);

/// Stable 64-bit FNV-1a digest rendered as 16 lowercase hex digits.
std::string prompt_hash(std::string_view text);

/// Offline client. Never touches the network.
///  echo:      first 120 characters of the prompt
///  scripted:  script[prompt_hash(prompt)], missing entry -> LlmProtocolError
///  fail:      always LlmTimeout
///  oversize:  a 500-character reply (exercises caller-side validation)
class MockLlmClient final : public LlmClient {
 public:
  explicit MockLlmClient(MockMode mode, std::map<std::string, std::string> script = {});

  std::string complete(std::string_view prompt) override;

  std::size_t call_count() const { return calls_; }
  const std::string& last_prompt() const { return last_prompt_; }

 private:
  MockMode mode_;
  std::map<std::string, std::string> script_;
  std::size_t calls_ = 0;
  std::string last_prompt_;
};

std::unique_ptr<LlmClient> mock_client(MockMode mode, std::map<std::string, std::string> script = {});

}  // namespace da
