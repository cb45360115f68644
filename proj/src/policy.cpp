#include "dualmem/policy.hpp"

#include <algorithm>
#include <array>

#include <nlohmann/json.hpp>

#include "dualmem/random.hpp"
#include "dualmem/text.hpp"

namespace dualmem {

const char* to_string(StreamMode mode) {
  return mode == StreamMode::Standard ? "standard" : "long_horizon";
}

const char* to_string(PolicyErrc code) {
  switch (code) {
    case PolicyErrc::TurnBudgetExhausted: return "TurnBudgetExhausted";
    case PolicyErrc::MalformedOutput: return "MalformedOutput";
    case PolicyErrc::RemoteTransport: return "RemoteTransport";
    case PolicyErrc::InitFailed: return "PolicyInitFailed";
  }
  return "unknown";
}

PolicyError::PolicyError(PolicyErrc code, const std::string& message,
                         std::vector<MemoryOp> applied_ops)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(message),
      applied_ops_(std::move(applied_ops)) {}

PromptKind prompt_kind_for(const RoundInput& input) {
  if (input.mode == StreamMode::LongHorizon) return PromptKind::LongHorizon;
  return input.memory_enabled ? PromptKind::MemoryAugmented : PromptKind::Standard;
}

OpResult apply_logged(AgentState& memory, const MemoryOp& op, std::vector<MemoryOp>& log) {
  OpResult r = memory.apply(op);
  log.push_back(op);
  return r;
}

std::string heuristic_prediction(std::string_view profile, const CandidateSet& candidates) {
  if (candidates.labels.empty()) return {};
  const auto case_tokens = text::token_set(profile);
  const std::string* best = nullptr;
  std::size_t best_overlap = 0;
  for (const std::string& label : candidates.labels) {
    std::size_t ov = text::overlap(text::token_set(label), case_tokens);
    if (!best || ov > best_overlap || (ov == best_overlap && label < *best)) {
      best = &label;
      best_overlap = ov;
    }
  }
  return *best;
}

namespace {

constexpr std::array<std::string_view, 40> kStopwords = {
    "and",     "are",  "but",     "for",   "from",    "had",     "has",  "have",
    "her",     "his",  "into",    "not",   "now",     "old",     "one",  "she",
    "that",    "the",  "their",   "them",  "then",    "there",   "they", "this",
    "was",     "were", "which",   "with",  "without", "year",    "years", "patient",
    "presents", "presented", "history", "reports", "also", "who", "him", "after",
};

std::string answer_json(const std::string& reasoning, const std::string& prediction) {
  return nlohmann::json{{"reasoning", reasoning}, {"final_diagnosis", prediction}}.dump();
}

// Seeded exploration shared by the scripted policies.
std::optional<std::string> explore(const RoundInput& input, double rate) {
  if (rate <= 0.0 || input.candidates.labels.empty()) return std::nullopt;
  SeededRng rng(derive_seed(input.seed, static_cast<std::uint64_t>(input.round_index), 0x5eed));
  if (!rng.bernoulli(rate)) return std::nullopt;
  return input.candidates.labels[rng.uniform_index(input.candidates.labels.size())];
}

constexpr std::string_view kRulePrefix = "When a case presents with ";
constexpr std::string_view kRuleInfix = ", consider: ";

}  // namespace

std::vector<std::string> content_tokens(std::string_view s) {
  auto tokens = text::token_set(s);
  std::erase_if(tokens, [](const std::string& t) {
    return t.size() < 3 ||
           std::find(kStopwords.begin(), kStopwords.end(), t) != kStopwords.end();
  });
  return tokens;
}

std::string make_rule_text(const std::vector<std::string>& tokens, std::string_view label) {
  std::string out(kRulePrefix);
  out.append(text::join(tokens, ", "));
  out.append(kRuleInfix);
  out.append(label);
  return out;
}

std::optional<ParsedRule> parse_rule_text(std::string_view t) {
  if (!t.starts_with(kRulePrefix)) return std::nullopt;
  t.remove_prefix(kRulePrefix.size());
  auto infix = t.rfind(kRuleInfix);
  if (infix == std::string_view::npos) return std::nullopt;
  ParsedRule rule;
  rule.label = std::string(t.substr(infix + kRuleInfix.size()));
  if (rule.label.empty()) return std::nullopt;
  rule.tokens = text::token_set(t.substr(0, infix));
  return rule;
}

PolicyOutput MemorylessPolicy::act(const RoundInput& input, AgentState&) {
  if (input.max_turns < 1) throw PolicyError(PolicyErrc::TurnBudgetExhausted, "no turns available");
  PolicyOutput out;
  if (auto pick = explore(input, options_.exploration)) {
    out.prediction = *pick;
    out.reasoning = "Exploratory pick.";
  } else {
    out.prediction = heuristic_prediction(input.profile, input.candidates);
    out.reasoning = "Candidate with the largest word overlap with the profile.";
  }
  out.turns_used = 1;
  out.response_text = answer_json(out.reasoning, out.prediction);
  return out;
}

std::vector<MemoryOp> MemorylessPolicy::record_feedback(const RoundInput&, const PolicyOutput&,
                                                        const Feedback&, AgentState&) {
  return {};
}

PolicyOutput NearestCasePolicy::act(const RoundInput& input, AgentState& memory) {
  if (input.max_turns < 1) throw PolicyError(PolicyErrc::TurnBudgetExhausted, "no turns available");
  PolicyOutput out;

  // One turn is reserved for the answer; list only if another is left.
  MemoryView view;
  if (input.memory_enabled && input.max_turns >= 2) {
    OpResult listed = apply_logged(memory, ListOp{}, out.memory_ops);
    view = std::move(*listed.listing);
    out.turns_used += 1;
  }

  const auto query = content_tokens(input.profile);
  std::optional<std::string> recalled;
  std::size_t best = 0;
  std::string source;

  // Rules first, then cases; later entries win ties, cases beat rules.
  for (std::size_t i = 0; i < view.rules.size(); ++i) {
    auto rule = parse_rule_text(view.rules[i].text);
    if (!rule || !input.candidates.contains(rule->label)) continue;
    std::size_t ov = text::overlap(rule->tokens, query);
    if (ov >= options_.min_overlap && ov >= best) {
      best = ov;
      recalled = rule->label;
      source = "rule " + std::to_string(i);
    }
  }
  for (const IndexedCase& c : view.cases) {
    std::string label =
        ground_truth_from_feedback(c.record.feedback).value_or(c.record.diagnosis);
    if (!input.candidates.contains(label)) continue;
    std::size_t ov = text::overlap(content_tokens(c.record.case_summary), query);
    if (ov >= options_.min_overlap && ov >= best) {
      best = ov;
      recalled = label;
      source = "case " + std::to_string(c.index);
    }
  }

  if (auto pick = explore(input, options_.exploration)) {
    out.prediction = *pick;
    out.reasoning = "Exploratory pick.";
  } else if (recalled) {
    out.prediction = *recalled;
    out.reasoning = "Matches stored " + source + " on " + std::to_string(best) + " findings.";
  } else {
    out.prediction = heuristic_prediction(input.profile, input.candidates);
    out.reasoning = "No similar stored case; candidate with the largest word overlap.";
  }
  out.turns_used += 1;
  out.response_text = answer_json(out.reasoning, out.prediction);
  return out;
}

std::vector<MemoryOp> NearestCasePolicy::record_feedback(const RoundInput& input,
                                                         const PolicyOutput& output,
                                                         const Feedback& feedback,
                                                         AgentState& memory) {
  std::vector<MemoryOp> ops;
  if (!input.memory_enabled) return ops;

  if (memory.occupancy() >= memory.capacity()) {
    OpResult popped = apply_logged(memory, PopOp{{0}}, ops);
    std::vector<Rule> rules;
    for (const CaseRecord& c : popped.evicted) {
      std::string label = ground_truth_from_feedback(c.feedback).value_or(c.diagnosis);
      auto tokens = content_tokens(c.case_summary);
      if (tokens.empty()) continue;
      rules.push_back(Rule{make_rule_text(tokens, label)});
    }
    if (!rules.empty()) apply_logged(memory, ConsolidateOp{std::move(rules)}, ops);
  }

  CaseRecord rec;
  rec.case_summary = input.profile;
  rec.diagnosis = output.prediction.empty() ? std::string("(no answer)") : output.prediction;
  rec.feedback = feedback.text();
  if (!output.reasoning.empty()) rec.reasoning = output.reasoning;
  apply_logged(memory, AppendOp{std::move(rec)}, ops);
  return ops;
}

}  // namespace dualmem
