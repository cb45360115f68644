#include "dualmem/reward.hpp"

#include <cmath>

namespace dualmem {

const char* to_string(Schedule s) {
  return s == Schedule::Constant ? "constant" : "round_linear";
}

Schedule schedule_from_string(const std::string& s) {
  if (s == "constant") return Schedule::Constant;
  if (s == "round_linear") return Schedule::RoundLinear;
  throw RewardError(RewardErrc::InvalidConfig, "unknown schedule '" + s + "'");
}

RewardError::RewardError(RewardErrc code, const std::string& message)
    : std::invalid_argument(message), code_(code) {}

void RewardConfig::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!std::isfinite(diag_magnitude) || diag_magnitude <= 0.0)
    throw RewardError(RewardErrc::InvalidConfig, "diag_magnitude must be positive and finite");
  if (!finite_nonneg(alpha))
    throw RewardError(RewardErrc::InvalidConfig, "alpha must be non-negative and finite");
  if (!finite_nonneg(lambda_diag_max) || !finite_nonneg(lambda_mem_max))
    throw RewardError(RewardErrc::InvalidConfig, "lambda maxima must be non-negative and finite");
}

double diagnostic_reward(bool correct, const RewardConfig& cfg) {
  return correct ? cfg.diag_magnitude : -cfg.diag_magnitude;
}

double memory_reward(std::size_t occupancy, std::size_t capacity, const RewardConfig& cfg) {
  if (capacity == 0) throw RewardError(RewardErrc::InvalidOccupancy, "capacity must be positive");
  if (occupancy > capacity) {
    throw RewardError(RewardErrc::InvalidOccupancy,
                      "occupancy " + std::to_string(occupancy) + " exceeds capacity " +
                          std::to_string(capacity));
  }
  return -cfg.alpha * static_cast<double>(occupancy) / static_cast<double>(capacity);
}

LambdaWeights lambda_schedule(std::int64_t round_index, std::int64_t horizon,
                              const RewardConfig& cfg) {
  if (horizon < 1 || round_index < 1 || round_index > horizon) {
    throw RewardError(RewardErrc::InvalidRound,
                      "round " + std::to_string(round_index) + " outside [1, " +
                          std::to_string(horizon) + "]");
  }
  if (cfg.schedule == Schedule::Constant) return {cfg.lambda_diag_max, cfg.lambda_mem_max};
  const double i_t = static_cast<double>(round_index) / static_cast<double>(horizon);
  return {cfg.lambda_diag_max * i_t, cfg.lambda_mem_max * (1.0 - i_t)};
}

RewardBreakdown shaped_reward(bool correct, std::size_t occupancy, std::size_t capacity,
                              std::int64_t round_index, std::int64_t horizon,
                              const RewardConfig& cfg) {
  RewardBreakdown b;
  b.r_diag = diagnostic_reward(correct, cfg);
  b.r_mem = memory_reward(occupancy, capacity, cfg);
  LambdaWeights w = lambda_schedule(round_index, horizon, cfg);
  b.lambda_diag = w.diag;
  b.lambda_mem = w.mem;
  b.total = b.lambda_diag * b.r_diag + b.lambda_mem * b.r_mem;
  return b;
}

}  // namespace dualmem
