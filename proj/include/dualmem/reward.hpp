#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dualmem {

enum class Schedule { Constant, RoundLinear };

const char* to_string(Schedule s);
Schedule schedule_from_string(const std::string& s);

struct RewardConfig {
  double diag_magnitude = 5.0;
  double alpha = 3.0;
  double lambda_diag_max = 1.0;
  double lambda_mem_max = 1.0;
  Schedule schedule = Schedule::RoundLinear;

  // Throws RewardError(InvalidConfig).
  void validate() const;
};

enum class RewardErrc { InvalidConfig, InvalidOccupancy, InvalidRound };

class RewardError : public std::invalid_argument {
 public:
  RewardError(RewardErrc code, const std::string& message);
  RewardErrc code() const noexcept { return code_; }

 private:
  RewardErrc code_;
};

struct LambdaWeights {
  double diag = 0.0;
  double mem = 0.0;
};

struct RewardBreakdown {
  double r_diag = 0.0;
  double r_mem = 0.0;
  double lambda_diag = 0.0;
  double lambda_mem = 0.0;
  double total = 0.0;
};

// +diag_magnitude for a correct prediction, -diag_magnitude otherwise.
double diagnostic_reward(bool correct, const RewardConfig& cfg);

// -alpha * occupancy / capacity. Occupancy is read after the rollout's memory
// transitions for the round, so popping lowers the penalty.
double memory_reward(std::size_t occupancy, std::size_t capacity, const RewardConfig& cfg);

// RoundLinear: (max_diag * t/T, max_mem * (1 - t/T)) for 1 <= t <= T.
// Constant: (max_diag, max_mem).
LambdaWeights lambda_schedule(std::int64_t round_index, std::int64_t horizon,
                              const RewardConfig& cfg);

RewardBreakdown shaped_reward(bool correct, std::size_t occupancy, std::size_t capacity,
                              std::int64_t round_index, std::int64_t horizon,
                              const RewardConfig& cfg);

}  // namespace dualmem
