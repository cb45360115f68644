#include "dualmem/metrics.hpp"

namespace dualmem {

std::vector<bool> correctness(std::span<const StreamRecord> records) {
  std::vector<bool> out;
  out.reserve(records.size());
  for (const StreamRecord& r : records) out.push_back(r.correct);
  return out;
}

double prefix_accuracy(const std::vector<bool>& correct, std::size_t n) {
  if (correct.empty()) throw MetricsError(MetricsErrc::EmptyStream, "no rounds");
  if (n == 0 || n > correct.size()) {
    throw MetricsError(MetricsErrc::InsufficientRounds,
                       "prefix of " + std::to_string(n) + " rounds requested but the stream has " +
                           std::to_string(correct.size()));
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += correct[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(n);
}

double final_accuracy(const std::vector<bool>& correct) {
  if (correct.empty()) throw MetricsError(MetricsErrc::EmptyStream, "no rounds");
  return prefix_accuracy(correct, correct.size());
}

double final_accuracy(std::span<const StreamRecord> records) {
  return final_accuracy(correctness(records));
}

double delta_acc_at(const std::vector<bool>& correct, std::size_t n, std::size_t warmup) {
  if (correct.empty()) throw MetricsError(MetricsErrc::EmptyStream, "no rounds");
  if (warmup == 0 || warmup > n || n > correct.size()) {
    throw MetricsError(MetricsErrc::InsufficientRounds,
                       "delta_acc@" + std::to_string(n) + " needs " + std::to_string(warmup) +
                           " <= n <= " + std::to_string(correct.size()));
  }
  if (n == warmup) return 0.0;
  return prefix_accuracy(correct, n) - prefix_accuracy(correct, warmup);
}

double delta_acc_at(std::span<const StreamRecord> records, std::size_t n, std::size_t warmup) {
  return delta_acc_at(correctness(records), n, warmup);
}

std::vector<double> accuracy_trajectory(const std::vector<bool>& correct) {
  std::vector<double> out;
  out.reserve(correct.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < correct.size(); ++i) {
    hits += correct[i] ? 1 : 0;
    out.push_back(static_cast<double>(hits) / static_cast<double>(i + 1));
  }
  return out;
}

}  // namespace dualmem
