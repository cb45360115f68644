#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dualmem/case.hpp"
#include "dualmem/memory.hpp"
#include "dualmem/prompts.hpp"

namespace dualmem {

enum class StreamMode { Standard, LongHorizon };

const char* to_string(StreamMode mode);

inline constexpr int kDefaultMaxTurns = 10;

// Everything the policy may see in one round. The gold label is not here.
struct RoundInput {
  std::string case_id;
  std::string profile;
  CandidateSet candidates;
  MemoryView memory_view;
  std::int64_t round_index = 1;
  std::int64_t horizon = 1;
  StreamMode mode = StreamMode::LongHorizon;
  bool memory_enabled = true;
  std::uint64_t seed = 0;
  int max_turns = kDefaultMaxTurns;
};

struct PolicyOutput {
  std::string reasoning;
  std::string prediction;
  std::vector<MemoryOp> memory_ops;  // successfully applied, in order
  int turns_used = 0;
  std::string response_text;  // final answer as emitted
};

enum class PolicyErrc { TurnBudgetExhausted, MalformedOutput, RemoteTransport, InitFailed };

const char* to_string(PolicyErrc code);

class PolicyError : public std::runtime_error {
 public:
  PolicyError(PolicyErrc code, const std::string& message,
              std::vector<MemoryOp> applied_ops = {});
  PolicyErrc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  // Ops that reached memory before the failure, in order.
  const std::vector<MemoryOp>& applied_ops() const noexcept { return applied_ops_; }

 private:
  PolicyErrc code_;
  std::string detail_;
  std::vector<MemoryOp> applied_ops_;
};

// A policy touches memory only through AgentState::apply, and reports every
// successful op so that replaying them on the pre-state reproduces the
// post-state.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;

  virtual PolicyOutput act(const RoundInput& input, AgentState& memory) = 0;

  // Post-feedback memory writes, already applied to `memory`.
  virtual std::vector<MemoryOp> record_feedback(const RoundInput& input, const PolicyOutput& output,
                                                const Feedback& feedback, AgentState& memory) = 0;
};

// Template matching the round: long-horizon, memory-augmented standard, or
// plain standard.
PromptKind prompt_kind_for(const RoundInput& input);

// Applies `op` and appends it to `log` on success. Failures propagate and
// leave both untouched.
OpResult apply_logged(AgentState& memory, const MemoryOp& op, std::vector<MemoryOp>& log);

// Candidate sharing the most case-insensitive word tokens with the profile;
// ties go to the lexicographically smallest label.
std::string heuristic_prediction(std::string_view profile, const CandidateSet& candidates);

struct ScriptedOptions {
  // Probability of answering with a seeded uniformly random candidate
  // instead of the policy's choice. Gives rollouts within a group distinct
  // outcomes; 0 makes every rollout identical.
  double exploration = 0.0;
  // Minimum shared content tokens for NearestCase to trust a memory match.
  std::size_t min_overlap = 2;
};

// Never touches memory; answers with heuristic_prediction.
class MemorylessPolicy final : public Policy {
 public:
  explicit MemorylessPolicy(ScriptedOptions options = {}) : options_(options) {}

  std::string name() const override { return "memoryless"; }
  PolicyOutput act(const RoundInput& input, AgentState& memory) override;
  std::vector<MemoryOp> record_feedback(const RoundInput& input, const PolicyOutput& output,
                                        const Feedback& feedback, AgentState& memory) override;

 private:
  ScriptedOptions options_;
};

// Recalls the confirmed diagnosis of the most similar stored case or rule;
// stores every case after feedback, evicting the oldest case into a
// templated rule when short-term memory is full.
class NearestCasePolicy final : public Policy {
 public:
  explicit NearestCasePolicy(ScriptedOptions options = {}) : options_(options) {}

  std::string name() const override { return "nearest_case"; }
  PolicyOutput act(const RoundInput& input, AgentState& memory) override;
  std::vector<MemoryOp> record_feedback(const RoundInput& input, const PolicyOutput& output,
                                        const Feedback& feedback, AgentState& memory) override;

 private:
  ScriptedOptions options_;
};

// Content tokens: token_set() minus short tokens and common stopwords.
std::vector<std::string> content_tokens(std::string_view s);

struct ParsedRule {
  std::vector<std::string> tokens;
  std::string label;
};

// "When a case presents with <t1>, <t2>, ..., consider: <label>"
std::string make_rule_text(const std::vector<std::string>& tokens, std::string_view label);
std::optional<ParsedRule> parse_rule_text(std::string_view text);

}  // namespace dualmem
