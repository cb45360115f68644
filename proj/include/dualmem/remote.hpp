#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <condition_variable>
#include <string>

#include <nlohmann/json.hpp>

#include "dualmem/policy.hpp"
#include "dualmem/prompts.hpp"

namespace dualmem {

// Exponential backoff: base_delay * multiplier^(attempt-1), capped.
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  std::chrono::milliseconds delay_for(int attempt) const;
};

// Retryable: connection failures, timeouts, 408, 429 and 5xx.
bool is_retryable_status(int status);

struct RemoteConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "DUALMEM_API_KEY";
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  int max_concurrency = 4;  // in-flight requests per client
  nlohmann::json params = nlohmann::json::object();  // merged into every request body
};

// Sends one chat-completions request body and returns the parsed response.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual nlohmann::json post(const nlohmann::json& body) = 0;
};

class CountingGate {
 public:
  explicit CountingGate(int slots) : free_(slots < 1 ? 1 : slots) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int free_;
};

// HTTP(S) transport with bearer auth, per-request timeout, bounded retries
// and a cap on concurrent requests. Thread-safe.
class HttpChatTransport final : public ChatTransport {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpChatTransport(RemoteConfig config, Sleeper sleeper = {});

  nlohmann::json post(const nlohmann::json& body) override;

  const RemoteConfig& config() const noexcept { return config_; }

 private:
  RemoteConfig config_;
  std::string api_key_;
  Sleeper sleep_;
  CountingGate gate_;
};

// Tool-calling policy backed by a chat-completions endpoint.
class RemotePolicy final : public Policy {
 public:
  RemotePolicy(std::shared_ptr<ChatTransport> transport, std::string model,
               nlohmann::json params = nlohmann::json::object());

  std::string name() const override { return "remote"; }
  PolicyOutput act(const RoundInput& input, AgentState& memory) override;
  std::vector<MemoryOp> record_feedback(const RoundInput& input, const PolicyOutput& output,
                                        const Feedback& feedback, AgentState& memory) override;

  nlohmann::json build_request(const nlohmann::json& messages, bool with_tools) const;

 private:
  std::shared_ptr<ChatTransport> transport_;
  std::string model_;
  nlohmann::json params_;
};

struct ParsedAnswer {
  std::string reasoning;
  std::string final_diagnosis;
};

// Parses {"reasoning": ..., "final_diagnosis": ...}; tolerates surrounding
// whitespace and a markdown code fence. nullopt when malformed.
std::optional<ParsedAnswer> parse_final_answer(std::string_view content);

}  // namespace dualmem
