#include "dualmem/stream.hpp"

#include <future>
#include <iostream>

#include "dualmem/hash.hpp"
#include "dualmem/prompts.hpp"
#include "dualmem/random.hpp"
#include "dualmem/text.hpp"

namespace dualmem {

bool match_prediction(std::string_view prediction, std::string_view gold) {
  return text::trim(text::nfc(prediction)) == text::trim(text::nfc(gold));
}

std::string prompt_hash(const RoundInput& input) {
  return sha256_hex(render_round_prompt(prompt_kind_for(input), input.profile, input.candidates,
                                        input.memory_view, input.round_index));
}

namespace {

bool persistent_memory(const StreamConfig& cfg) {
  return cfg.mode == StreamMode::LongHorizon || cfg.memory_augmented;
}

RoundInput make_input(const StreamCase& c, const AgentState& state, std::int64_t round,
                      std::int64_t horizon, const StreamConfig& cfg, std::uint64_t seed) {
  RoundInput in;
  in.case_id = c.patient.id;
  in.profile = c.patient.profile;
  in.candidates = c.candidates;
  in.memory_view = state.list();
  in.round_index = round;
  in.horizon = horizon;
  in.mode = cfg.mode;
  in.memory_enabled = persistent_memory(cfg);
  in.seed = seed;
  in.max_turns = cfg.max_turns;
  return in;
}

struct RoundOutcome {
  StreamRecord record;
  PolicyOutput output;
};

// Transport failures escape as PolicyError(RemoteTransport); every other
// policy failure is scored as an incorrect round.
RoundOutcome play_round(Policy& policy, const StreamCase& c, const RoundInput& input,
                        AgentState& state, const StreamConfig& cfg) {
  const std::string pre = cfg.verify_audit ? state.snapshot() : std::string();
  RoundOutcome result;
  StreamRecord& rec = result.record;
  rec.round_index = input.round_index;
  rec.case_id = c.patient.id;

  std::vector<MemoryOp> applied;
  bool auditable = true;
  PolicyOutput& out = result.output;
  try {
    out = policy.act(input, state);
    applied = out.memory_ops;
  } catch (const PolicyError& e) {
    if (e.code() == PolicyErrc::RemoteTransport) throw;
    applied = e.applied_ops();
    out = PolicyOutput{};
    out.turns_used = input.max_turns;
    rec.error = e.what();
  } catch (const MemoryError& e) {
    auditable = false;
    out = PolicyOutput{};
    rec.error = e.what();
  }

  rec.prediction = out.prediction;
  rec.correct = !out.prediction.empty() && match_prediction(out.prediction, c.patient.gold_label);
  rec.turns_used = out.turns_used;

  Feedback fb{rec.correct, c.patient.gold_label, std::nullopt};
  try {
    auto ops = policy.record_feedback(input, out, fb, state);
    applied.insert(applied.end(), ops.begin(), ops.end());
  } catch (const PolicyError& e) {
    if (e.code() == PolicyErrc::RemoteTransport) throw;
    applied.insert(applied.end(), e.applied_ops().begin(), e.applied_ops().end());
    if (!rec.error) rec.error = e.what();
  } catch (const MemoryError& e) {
    auditable = false;
    if (!rec.error) rec.error = e.what();
  }

  if (cfg.verify_audit && auditable) {
    AgentState replay = AgentState::restore(pre);
    for (const MemoryOp& op : applied) replay.apply(op);
    if (replay.snapshot() != state.snapshot()) {
      throw AuditViolation("round " + std::to_string(input.round_index) +
                           ": reported memory ops do not reproduce the memory state");
    }
  }

  rec.occupancy_after = state.occupancy();
  rec.rules_after = state.long_term().size();
  if (cfg.compute_rewards) {
    rec.reward = shaped_reward(rec.correct, state.occupancy(), state.capacity(), input.round_index,
                               input.horizon, cfg.reward);
  }
  return result;
}

void check_cases(std::span<const StreamCase> cases) {
  if (cases.empty()) throw std::invalid_argument("stream has no cases");
  for (const StreamCase& c : cases) validate_stream_case(c);
}

}  // namespace

StreamResult run_stream(Policy& policy, std::span<const StreamCase> cases, const StreamConfig& cfg,
                        const RecordSink& sink) {
  check_cases(cases);
  if (cfg.compute_rewards) cfg.reward.validate();
  const auto horizon = static_cast<std::int64_t>(cases.size());
  StreamResult result{{}, AgentState(cfg.capacity)};
  result.records.reserve(cases.size());

  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto round = static_cast<std::int64_t>(i + 1);
    if (!persistent_memory(cfg)) result.final_state = AgentState(cfg.capacity);
    RoundInput input = make_input(cases[i], result.final_state, round, horizon, cfg,
                                  derive_seed(cfg.seed, static_cast<std::uint64_t>(round)));
    try {
      RoundOutcome outcome = play_round(policy, cases[i], input, result.final_state, cfg);
      if (sink) sink(outcome.record);
      result.records.push_back(std::move(outcome.record));
    } catch (const PolicyError& e) {
      throw StreamAborted("round " + std::to_string(round) + ": " + e.what(),
                          std::move(result.records));
    }
  }
  return result;
}

RolloutResult run_rollout_groups(Policy& policy, std::span<const StreamCase> cases,
                                 const StreamConfig& cfg, const RolloutConfig& rollout) {
  check_cases(cases);
  if (rollout.group_size < 2) {
    throw AdvantageError(AdvantageErrc::GroupTooSmall, "group_size must be at least 2");
  }
  cfg.reward.validate();
  StreamConfig scored = cfg;
  scored.compute_rewards = true;

  const auto horizon = static_cast<std::int64_t>(cases.size());
  const std::size_t G = rollout.group_size;
  RolloutResult result{{}, {}, {}, {}, AgentState(cfg.capacity)};

  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto round = static_cast<std::int64_t>(i + 1);
    if (!persistent_memory(cfg)) result.final_state = AgentState(cfg.capacity);
    const AgentState pre = result.final_state;

    std::vector<std::optional<AgentState>> states(G);
    std::vector<std::optional<RoundOutcome>> outcomes(G);
    std::vector<std::string> hashes(G);
    std::vector<std::string> failures(G);

    auto run_one = [&](std::size_t k) {
      const std::uint64_t seed =
          derive_seed(cfg.seed, static_cast<std::uint64_t>(round), rollout.seed_per_rollout ? k + 1 : 0);
      AgentState copy = pre;
      RoundInput input = make_input(cases[i], copy, round, horizon, scored, seed);
      hashes[k] = prompt_hash(input);
      try {
        outcomes[k] = play_round(policy, cases[i], input, copy, scored);
        states[k] = std::move(copy);
      } catch (const PolicyError& e) {
        failures[k] = e.what();
      }
    };

    const std::size_t width = static_cast<std::size_t>(std::max(1, rollout.threads));
    if (width == 1) {
      for (std::size_t k = 0; k < G; ++k) run_one(k);
    } else {
      for (std::size_t start = 0; start < G; start += width) {
        std::vector<std::future<void>> batch;
        for (std::size_t k = start; k < std::min(G, start + width); ++k)
          batch.push_back(std::async(std::launch::async, run_one, k));
        for (auto& f : batch) f.get();
      }
    }

    std::vector<std::size_t> alive;
    for (std::size_t k = 0; k < G; ++k) {
      if (outcomes[k]) {
        alive.push_back(k);
      } else {
        std::cerr << "warning: round " << round << " rollout " << k << " failed: " << failures[k]
                  << "\n";
      }
    }
    if (alive.empty()) {
      throw StreamAborted("round " + std::to_string(round) + ": every rollout failed",
                          std::move(result.committed));
    }

    std::size_t best = alive.front();
    for (std::size_t k : alive) {
      if (outcomes[k]->record.reward->total > outcomes[best]->record.reward->total) best = k;
    }

    if (alive.size() >= 2) {
      RolloutGroup group{round, {}};
      for (std::size_t k : alive) group.rewards.push_back(outcomes[k]->record.reward->total);
      std::vector<double> adv = group_advantages(group, rollout.advantage);
      const auto group_id = static_cast<std::int64_t>(result.groups.size());
      for (std::size_t j = 0; j < alive.size(); ++j) {
        const std::size_t k = alive[j];
        result.exports.push_back(TrainerRecord{round, group_id, k, group.rewards[j], adv[j],
                                               hashes[k], outcomes[k]->output.response_text});
      }
      result.groups.push_back(std::move(group));
    } else {
      std::cerr << "warning: round " << round << " dropped: fewer than 2 rollouts survived\n";
    }

    if (rollout.keep_traces) {
      RoundTrace trace;
      trace.pre_snapshot = pre.snapshot();
      for (std::size_t k = 0; k < G; ++k) {
        trace.post_snapshots.push_back(states[k] ? states[k]->snapshot() : std::string());
        trace.survived.push_back(outcomes[k].has_value());
      }
      trace.committed = best;
      result.traces.push_back(std::move(trace));
    }

    result.committed.push_back(outcomes[best]->record);
    result.final_state = std::move(*states[best]);
  }
  return result;
}

}  // namespace dualmem
