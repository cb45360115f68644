#include "dualmem/advantage.hpp"

#include <algorithm>
#include <cmath>

namespace dualmem {

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

std::vector<double> center_rewards(std::span<const double> rewards, const AdvantageOptions& opts) {
  const std::size_t n = rewards.size();
  if (n < 2) {
    throw AdvantageError(AdvantageErrc::GroupTooSmall,
                         "group needs at least 2 rewards, got " + std::to_string(n));
  }
  for (double r : rewards) {
    if (!std::isfinite(r)) throw AdvantageError(AdvantageErrc::NonFinite, "non-finite reward");
  }
  const double mean = compensated_sum(rewards) / static_cast<double>(n);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = rewards[k] - mean;

  if (opts.normalize_std) {
    std::vector<double> sq(n);
    for (std::size_t k = 0; k < n; ++k) sq[k] = out[k] * out[k];
    const double sd = std::sqrt(compensated_sum(sq) / static_cast<double>(n - 1));
    for (double& a : out) a /= (sd + opts.std_epsilon);
  }
  return out;
}

std::vector<double> group_advantages(const RolloutGroup& group, const AdvantageOptions& opts) {
  return center_rewards(group.rewards, opts);
}

std::map<std::int64_t, std::vector<double>> advantages_by_round(
    std::span<const RolloutGroup> groups, const AdvantageOptions& opts) {
  std::map<std::int64_t, std::vector<double>> out;
  for (const RolloutGroup& g : groups) {
    std::vector<double> adv = group_advantages(g, opts);
    auto& slot = out[g.round_index];
    slot.insert(slot.end(), adv.begin(), adv.end());
  }
  return out;
}

std::vector<double> step_group_advantages(std::span<const double> rewards,
                                          std::span<const std::size_t> segment_sizes,
                                          const AdvantageOptions& opts) {
  std::size_t total = 0;
  for (std::size_t s : segment_sizes) total += s;
  if (total != rewards.size()) {
    throw AdvantageError(AdvantageErrc::LengthMismatch,
                         "segment sizes sum to " + std::to_string(total) + " but there are " +
                             std::to_string(rewards.size()) + " rewards");
  }
  std::vector<double> out;
  out.reserve(rewards.size());
  std::size_t offset = 0;
  for (std::size_t s : segment_sizes) {
    std::vector<double> adv = center_rewards(rewards.subspan(offset, s), opts);
    out.insert(out.end(), adv.begin(), adv.end());
    offset += s;
  }
  return out;
}

double clipped_objective(const ObjectiveInputs& in) {
  const std::size_t n = in.ratios.size();
  if (n == 0) throw AdvantageError(AdvantageErrc::Empty, "no elements");
  if (in.advantages.size() != n) {
    throw AdvantageError(AdvantageErrc::LengthMismatch, "ratios and advantages differ in length");
  }
  if (!in.kl.empty() && in.kl.size() != n) {
    throw AdvantageError(AdvantageErrc::LengthMismatch, "kl and ratios differ in length");
  }
  if (!(in.clip_epsilon > 0.0 && in.clip_epsilon < 1.0)) {
    throw AdvantageError(AdvantageErrc::InvalidEpsilon, "clip_epsilon must lie in (0, 1)");
  }
  if (!std::isfinite(in.kl_coef) || in.kl_coef < 0.0) {
    throw AdvantageError(AdvantageErrc::InvalidKl, "kl_coef must be non-negative");
  }
  for (double v : in.kl) {
    if (!std::isfinite(v) || v < 0.0)
      throw AdvantageError(AdvantageErrc::InvalidKl, "kl estimates must be non-negative");
  }

  const double lo = 1.0 - in.clip_epsilon;
  const double hi = 1.0 + in.clip_epsilon;
  std::vector<double> terms(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double rho = in.ratios[k];
    const double adv = in.advantages[k];
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      throw AdvantageError(AdvantageErrc::NonPositiveRatio, "ratio must be positive and finite");
    }
    if (!std::isfinite(adv)) throw AdvantageError(AdvantageErrc::NonFinite, "non-finite advantage");
    terms[k] = std::min(rho * adv, std::clamp(rho, lo, hi) * adv);
  }
  double objective = compensated_sum(terms) / static_cast<double>(n);
  if (!in.kl.empty() && in.kl_coef != 0.0) {
    objective -= in.kl_coef * (compensated_sum(in.kl) / static_cast<double>(n));
  }
  return objective;
}

}  // namespace dualmem
