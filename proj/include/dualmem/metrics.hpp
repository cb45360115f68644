#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualmem/stream.hpp"

namespace dualmem {

enum class MetricsErrc { EmptyStream, InsufficientRounds };

class MetricsError : public std::invalid_argument {
 public:
  MetricsError(MetricsErrc code, const std::string& message)
      : std::invalid_argument(message), code_(code) {}
  MetricsErrc code() const noexcept { return code_; }

 private:
  MetricsErrc code_;
};

inline constexpr std::size_t kDefaultWarmup = 10;

std::vector<bool> correctness(std::span<const StreamRecord> records);

// Accuracy over rounds 1..n. Requires 1 <= n <= |correct|.
double prefix_accuracy(const std::vector<bool>& correct, std::size_t n);

// Correct rounds over all rounds.
double final_accuracy(const std::vector<bool>& correct);
double final_accuracy(std::span<const StreamRecord> records);

// Acc(1:n) - Acc(1:warmup). Requires 1 <= warmup <= n <= |correct|.
double delta_acc_at(const std::vector<bool>& correct, std::size_t n,
                    std::size_t warmup = kDefaultWarmup);
double delta_acc_at(std::span<const StreamRecord> records, std::size_t n,
                    std::size_t warmup = kDefaultWarmup);

// Cumulative accuracy after each round: element t-1 is Acc(1:t).
std::vector<double> accuracy_trajectory(const std::vector<bool>& correct);

}  // namespace dualmem
