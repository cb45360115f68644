#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "dualmem/remote.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "dualmem/text.hpp"
#include "dualmem/tool_schema.hpp"

namespace dualmem {

using nlohmann::json;

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
  if (attempt < 1) attempt = 1;
  double ms = static_cast<double>(base_delay.count()) * std::pow(multiplier, attempt - 1);
  ms = std::min(ms, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

bool is_retryable_status(int status) {
  return status == 408 || status == 429 || (status >= 500 && status <= 599);
}

void CountingGate::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return free_ > 0; });
  --free_;
}

void CountingGate::release() {
  {
    std::lock_guard lock(mu_);
    ++free_;
  }
  cv_.notify_one();
}

HttpChatTransport::HttpChatTransport(RemoteConfig config, Sleeper sleeper)
    : config_(std::move(config)),
      sleep_(sleeper ? std::move(sleeper)
                     : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      gate_(config_.max_concurrency) {
  if (config_.base_url.empty())
    throw PolicyError(PolicyErrc::InitFailed, "remote base_url is not set");
  if (config_.retry.max_attempts < 1)
    throw PolicyError(PolicyErrc::InitFailed, "retry.max_attempts must be at least 1");
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
}

json HttpChatTransport::post(const json& body) {
  gate_.acquire();
  struct Release {
    CountingGate& g;
    ~Release() { g.release(); }
  } release{gate_};

  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    httplib::Client client(config_.base_url);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = client.Post(config_.path, headers, payload, "application/json");
    bool retryable = true;
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) {
        last_error = "response body is not JSON";
      } else {
        return parsed;
      }
    } else {
      last_error = "HTTP " + std::to_string(res->status);
      retryable = is_retryable_status(res->status);
    }
    if (!retryable || attempt == config_.retry.max_attempts) break;
    sleep_(config_.retry.delay_for(attempt));
  }
  throw PolicyError(PolicyErrc::RemoteTransport, last_error);
}

std::optional<ParsedAnswer> parse_final_answer(std::string_view content) {
  std::string s = text::trim(content);
  if (s.starts_with("```")) {
    auto nl = s.find('\n');
    auto fence = s.rfind("```");
    if (nl == std::string::npos || fence <= nl) return std::nullopt;
    s = text::trim(std::string_view(s).substr(nl + 1, fence - nl - 1));
  }
  json j = json::parse(s, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto r = j.find("reasoning");
  auto d = j.find("final_diagnosis");
  if (r == j.end() || d == j.end() || !r->is_string() || !d->is_string()) return std::nullopt;
  return ParsedAnswer{r->get<std::string>(), d->get<std::string>()};
}

RemotePolicy::RemotePolicy(std::shared_ptr<ChatTransport> transport, std::string model, json params)
    : transport_(std::move(transport)), model_(std::move(model)), params_(std::move(params)) {
  if (!transport_) throw PolicyError(PolicyErrc::InitFailed, "no transport");
  if (!params_.is_object()) throw PolicyError(PolicyErrc::InitFailed, "params must be an object");
}

json RemotePolicy::build_request(const json& messages, bool with_tools) const {
  json body = params_;
  body["model"] = model_;
  body["messages"] = messages;
  if (with_tools) {
    body["tools"] = json::array({remote_tool_schema()});
    body["tool_choice"] = "auto";
  }
  return body;
}

namespace {

const json* first_message(const json& response) {
  auto choices = response.find("choices");
  if (choices == response.end() || !choices->is_array() || choices->empty()) return nullptr;
  auto msg = (*choices)[0].find("message");
  if (msg == (*choices)[0].end() || !msg->is_object()) return nullptr;
  return &*msg;
}

bool has_tool_calls(const json& msg) {
  auto it = msg.find("tool_calls");
  return it != msg.end() && it->is_array() && !it->empty();
}

// Executes one tool call against memory. Anything malformed is reported to
// the model and leaves memory untouched.
json run_tool_call(const json& call, bool memory_enabled, AgentState& memory,
                   std::vector<MemoryOp>& ops) {
  auto fail = [](const std::string& error, const std::string& message) {
    return json{{"ok", false}, {"error", error}, {"message", message}};
  };
  if (!memory_enabled) return fail("MemoryDisabled", "memory is not available in this setting");
  auto fn = call.find("function");
  if (fn == call.end() || !fn->is_object()) return fail("MalformedToolCall", "missing function");
  if (fn->value("name", "") != kMemoryToolName)
    return fail("UnknownTool", "only the memory tool is available");
  json args;
  auto raw = fn->find("arguments");
  if (raw != fn->end() && raw->is_string()) {
    args = json::parse(raw->get<std::string>(), nullptr, false);
    if (args.is_discarded()) return fail("MalformedToolCall", "arguments are not valid JSON");
  } else if (raw != fn->end() && raw->is_object()) {
    args = *raw;
  } else {
    return fail("MalformedToolCall", "missing arguments");
  }
  try {
    MemoryOp op = parse_tool_arguments(args);
    return tool_result(apply_logged(memory, op, ops));
  } catch (const ToolCallError& e) {
    return fail("MalformedToolCall", e.what());
  } catch (const MemoryError& e) {
    return fail(to_string(e.code()), e.detail());
  }
}

void append_tool_results(const json& msg, bool memory_enabled, AgentState& memory,
                         std::vector<MemoryOp>& ops, json& messages) {
  json assistant = {{"role", "assistant"}, {"tool_calls", msg["tool_calls"]}};
  assistant["content"] = msg.contains("content") ? msg["content"] : json(nullptr);
  messages.push_back(std::move(assistant));
  for (const json& call : msg["tool_calls"]) {
    json result = run_tool_call(call, memory_enabled, memory, ops);
    messages.push_back({{"role", "tool"},
                        {"tool_call_id", call.value("id", "")},
                        {"content", result.dump()}});
  }
}

constexpr const char* kRetryMessage =
    "Your reply was not a valid JSON object with the keys \"reasoning\" and "
    "\"final_diagnosis\". Reply again with only that JSON object.";

}  // namespace

PolicyOutput RemotePolicy::act(const RoundInput& input, AgentState& memory) {
  PolicyOutput out;
  json messages = json::array();
  messages.push_back(
      {{"role", "user"},
       {"content", render_round_prompt(prompt_kind_for(input), input.profile, input.candidates,
                                       input.memory_view, input.round_index)}});
  bool retried = false;
  while (out.turns_used < input.max_turns) {
    json response;
    try {
      response = transport_->post(build_request(messages, input.memory_enabled));
    } catch (const PolicyError& e) {
      throw PolicyError(e.code(), e.detail(), std::move(out.memory_ops));
    }
    ++out.turns_used;
    const json* msg = first_message(response);
    if (msg && has_tool_calls(*msg)) {
      append_tool_results(*msg, input.memory_enabled, memory, out.memory_ops, messages);
      continue;
    }
    std::string content;
    if (msg) {
      auto c = msg->find("content");
      if (c != msg->end() && c->is_string()) content = c->get<std::string>();
    }
    if (auto answer = parse_final_answer(content)) {
      out.reasoning = std::move(answer->reasoning);
      out.prediction = std::move(answer->final_diagnosis);
      out.response_text = std::move(content);
      return out;
    }
    if (retried) {
      throw PolicyError(PolicyErrc::MalformedOutput, "final answer is not valid JSON",
                        std::move(out.memory_ops));
    }
    retried = true;
    messages.push_back({{"role", "assistant"}, {"content", content}});
    messages.push_back({{"role", "user"}, {"content", kRetryMessage}});
  }
  throw PolicyError(PolicyErrc::TurnBudgetExhausted,
                    "no final answer within " + std::to_string(input.max_turns) + " turns",
                    std::move(out.memory_ops));
}

std::vector<MemoryOp> RemotePolicy::record_feedback(const RoundInput& input,
                                                    const PolicyOutput& output,
                                                    const Feedback& feedback, AgentState& memory) {
  std::vector<MemoryOp> ops;
  if (!input.memory_enabled) return ops;
  json messages = json::array();
  messages.push_back(
      {{"role", "user"},
       {"content", render_round_prompt(prompt_kind_for(input), input.profile, input.candidates,
                                       input.memory_view, input.round_index)}});
  messages.push_back({{"role", "assistant"}, {"content", output.response_text}});
  messages.push_back({{"role", "user"}, {"content", render_feedback_prompt(feedback)}});
  for (int turn = 0; turn < input.max_turns; ++turn) {
    json response;
    try {
      response = transport_->post(build_request(messages, true));
    } catch (const PolicyError& e) {
      throw PolicyError(e.code(), e.detail(), std::move(ops));
    }
    const json* msg = first_message(response);
    if (!msg || !has_tool_calls(*msg)) break;
    append_tool_results(*msg, true, memory, ops, messages);
  }
  return ops;
}

}  // namespace dualmem
