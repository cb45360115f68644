#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dualmem/advantage.hpp"
#include "dualmem/case.hpp"
#include "dualmem/memory.hpp"
#include "dualmem/policy.hpp"
#include "dualmem/reward.hpp"

namespace dualmem {

// Per-round audit log entry.
struct StreamRecord {
  std::int64_t round_index = 0;
  std::string case_id;
  std::string prediction;  // "" when the round produced no usable answer
  bool correct = false;
  std::size_t occupancy_after = 0;
  std::size_t rules_after = 0;
  int turns_used = 0;
  std::optional<RewardBreakdown> reward;
  std::optional<std::string> error;  // why the round was scored incorrect, if it failed
};

struct StreamConfig {
  StreamMode mode = StreamMode::LongHorizon;
  // Standard mode only: carry memory across cases.
  bool memory_augmented = false;
  std::size_t capacity = kDefaultCapacity;
  int max_turns = kDefaultMaxTurns;
  std::uint64_t seed = 0;
  RewardConfig reward;
  bool compute_rewards = true;
  // Replay each round's reported ops on the pre-round state and require the
  // same snapshot as the live state.
  bool verify_audit = true;
};

// NFC-normalized, whitespace-trimmed, case-sensitive equality.
bool match_prediction(std::string_view prediction, std::string_view gold);

// Thrown when a policy transport failure ends the stream. Carries the
// records completed before the failing round.
class StreamAborted : public std::runtime_error {
 public:
  StreamAborted(const std::string& message, std::vector<StreamRecord> partial)
      : std::runtime_error(message), partial_(std::move(partial)) {}
  const std::vector<StreamRecord>& partial() const noexcept { return partial_; }

 private:
  std::vector<StreamRecord> partial_;
};

class AuditViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using RecordSink = std::function<void(const StreamRecord&)>;

struct StreamResult {
  std::vector<StreamRecord> records;
  AgentState final_state;
};

// Single pass over `cases`: act, score, feedback, record_feedback per round.
// LongHorizon threads one memory through every round; Standard starts each
// case from empty memory unless memory_augmented is set. `sink` sees each
// record as soon as its round completes.
StreamResult run_stream(Policy& policy, std::span<const StreamCase> cases, const StreamConfig& cfg,
                        const RecordSink& sink = {});

// Consumer contract for an external optimizer: one line per rollout.
struct TrainerRecord {
  std::int64_t round = 0;
  std::int64_t group_id = 0;
  std::size_t rollout_id = 0;
  double reward = 0.0;
  double advantage = 0.0;
  std::string prompt_hash;
  std::string response_text;
};

struct RolloutConfig {
  std::size_t group_size = 8;
  // Rollouts of one round run on up to this many threads.
  int threads = 1;
  // When false every rollout of a round shares one seed.
  bool seed_per_rollout = true;
  AdvantageOptions advantage;
  bool keep_traces = false;
};

// Snapshots around one round of group sampling.
struct RoundTrace {
  std::string pre_snapshot;
  std::vector<std::string> post_snapshots;  // "" for failed rollouts
  std::vector<bool> survived;
  std::size_t committed = 0;
};

struct RolloutResult {
  std::vector<RolloutGroup> groups;
  std::vector<TrainerRecord> exports;
  std::vector<StreamRecord> committed;  // the designated rollout of each round
  std::vector<RoundTrace> traces;       // filled when keep_traces
  AgentState final_state;
};

// For each round, G rollouts start from independent copies of the shared
// pre-round state and are scored with the round's reward schedule. The
// rollout with the highest shaped reward (lowest id on ties) supplies the
// next round's state. Groups with fewer than two surviving rollouts are
// dropped.
RolloutResult run_rollout_groups(Policy& policy, std::span<const StreamCase> cases,
                                 const StreamConfig& cfg, const RolloutConfig& rollout);

// Hash of the rendered prompt a policy would see for this input.
std::string prompt_hash(const RoundInput& input);

}  // namespace dualmem
