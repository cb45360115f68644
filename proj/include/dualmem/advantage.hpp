#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualmem {

// Shaped rewards of G rollouts sampled for the same round.
struct RolloutGroup {
  std::int64_t round_index = 0;
  std::vector<double> rewards;
};

enum class AdvantageErrc {
  GroupTooSmall,
  NonFinite,
  LengthMismatch,
  NonPositiveRatio,
  InvalidEpsilon,
  InvalidKl,
  Empty,
};

class AdvantageError : public std::invalid_argument {
 public:
  AdvantageError(AdvantageErrc code, const std::string& message)
      : std::invalid_argument(message), code_(code) {}
  AdvantageErrc code() const noexcept { return code_; }

 private:
  AdvantageErrc code_;
};

struct AdvantageOptions {
  // Divide centered rewards by the group's sample standard deviation
  // (plus std_epsilon). Off by default: plain mean-centering.
  bool normalize_std = false;
  double std_epsilon = 1e-6;
};

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

// reward[k] - mean(rewards). Requires at least two finite values.
std::vector<double> center_rewards(std::span<const double> rewards, const AdvantageOptions& opts = {});

std::vector<double> group_advantages(const RolloutGroup& group, const AdvantageOptions& opts = {});

// Centers each group on its own; nothing is shared across groups or rounds.
// Groups sharing a round index have their advantages concatenated in input
// order. Keys iterate in ascending round order.
std::map<std::int64_t, std::vector<double>> advantages_by_round(
    std::span<const RolloutGroup> groups, const AdvantageOptions& opts = {});

// Group math over caller-defined step segments of one rollout set:
// segment_sizes partitions `rewards` into consecutive groups.
std::vector<double> step_group_advantages(std::span<const double> rewards,
                                          std::span<const std::size_t> segment_sizes,
                                          const AdvantageOptions& opts = {});

struct ObjectiveInputs {
  std::vector<double> ratios;      // pi_theta / pi_old, strictly positive
  std::vector<double> advantages;  // same length as ratios
  double clip_epsilon = 0.28;      // in (0, 1)
  std::vector<double> kl;          // per-element KL estimates; empty for none
  double kl_coef = 0.0;            // beta
};

// mean_k min(rho_k * A_k, clip(rho_k, 1-eps, 1+eps) * A_k) - beta * mean(kl).
// Value only; no gradients.
double clipped_objective(const ObjectiveInputs& in);

}  // namespace dualmem
