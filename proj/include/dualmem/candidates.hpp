#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dualmem/case.hpp"

namespace dualmem {

class ChatTransport;

enum class CandidateErrc { GoldNotInPool, PoolTooSmall, InvalidPool, InvalidScore };

class CandidateError : public std::invalid_argument {
 public:
  CandidateError(CandidateErrc code, const std::string& message)
      : std::invalid_argument(message), code_(code) {}
  CandidateErrc code() const noexcept { return code_; }

 private:
  CandidateErrc code_;
};

// Ordered, duplicate-free global label list.
class LabelPool {
 public:
  explicit LabelPool(std::vector<std::string> labels);

  // One label per line (UTF-8); blank lines are skipped, lines are trimmed.
  static LabelPool load(const std::filesystem::path& path);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::optional<std::size_t> index_of(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

class RelatednessScorer {
 public:
  virtual ~RelatednessScorer() = default;
  // Finite relatedness of `candidate` to `gold`; larger is closer.
  virtual double score(const std::string& gold, const std::string& candidate) = 0;
};

// Jaccard similarity of lowercase word-token sets plus half the shared
// leading-token fraction (common token prefix length / longer token count).
// Symmetric, in [0, 1.5]; identical non-empty strings score 1.5.
double lexical_relatedness(const std::string& a, const std::string& b);

class LexicalScorer final : public RelatednessScorer {
 public:
  double score(const std::string& gold, const std::string& candidate) override {
    return lexical_relatedness(gold, candidate);
  }
};

// Model-backed scorer. Scores are cached by (gold, candidate) in a JSON-lines
// file {"gold", "cand", "score"}; only uncached pairs reach the model. New
// entries are appended by flush(), which is the single writer.
class CachedRemoteScorer final : public RelatednessScorer {
 public:
  CachedRemoteScorer(std::shared_ptr<ChatTransport> transport, std::string model,
                     std::filesystem::path cache_path);
  ~CachedRemoteScorer() override;

  double score(const std::string& gold, const std::string& candidate) override;
  void flush();
  std::size_t cached() const;

 private:
  std::shared_ptr<ChatTransport> transport_;
  std::string model_;
  std::filesystem::path cache_path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, double> cache_;
  std::vector<std::pair<std::pair<std::string, std::string>, double>> pending_;
};

// Parses a relatedness reply: a JSON object with a numeric "score", or a
// bare number.
std::optional<double> parse_score_reply(const std::string& content);

inline constexpr std::size_t kDefaultDistractors = 199;
inline constexpr double kDefaultNeighborhoodFactor = 1.5;

struct CandidateOptions {
  std::size_t n_distractors = kDefaultDistractors;
  // Distractors are sampled from the ceil(factor * n) highest-scoring labels.
  double neighborhood_factor = kDefaultNeighborhoodFactor;
};

// The neighborhood of `gold`: labels other than gold ranked by descending
// score, ties by pool order, truncated to `size`.
std::vector<std::size_t> ranked_neighborhood(const std::string& gold, const LabelPool& pool,
                                             RelatednessScorer& scorer, std::size_t size);

// Gold plus n distractors sampled without replacement from the top-ranked
// neighborhood, shuffled. A pure function of (gold, pool, options, scores, seed).
CandidateSet build_candidates(const std::string& gold, const LabelPool& pool,
                              RelatednessScorer& scorer, std::uint64_t seed,
                              const CandidateOptions& options = {});

}  // namespace dualmem
