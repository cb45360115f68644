#include "dualmem/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dualmem/random.hpp"
#include "dualmem/remote.hpp"
#include "dualmem/text.hpp"

namespace dualmem {

using nlohmann::json;

LabelPool::LabelPool(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw CandidateError(CandidateErrc::InvalidPool, "label pool is empty");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw CandidateError(CandidateErrc::InvalidPool, "empty label in pool");
    if (!index_.emplace(labels_[i], i).second) {
      throw CandidateError(CandidateErrc::InvalidPool, "duplicate label '" + labels_[i] + "'");
    }
  }
}

LabelPool LabelPool::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read label pool " + path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = text::trim(line);
    if (!t.empty()) labels.push_back(std::move(t));
  }
  return LabelPool(std::move(labels));
}

std::optional<std::size_t> LabelPool::index_of(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double lexical_relatedness(const std::string& a, const std::string& b) {
  const auto seq_a = text::tokenize(a);
  const auto seq_b = text::tokenize(b);
  const auto set_a = text::token_set(a);
  const auto set_b = text::token_set(b);
  const std::size_t inter = text::overlap(set_a, set_b);
  const std::size_t uni = set_a.size() + set_b.size() - inter;
  const double jaccard = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);

  std::size_t prefix = 0;
  while (prefix < seq_a.size() && prefix < seq_b.size() && seq_a[prefix] == seq_b[prefix]) ++prefix;
  const std::size_t longer = std::max(seq_a.size(), seq_b.size());
  const double bonus = longer == 0 ? 0.0 : static_cast<double>(prefix) / static_cast<double>(longer);
  return jaccard + 0.5 * bonus;
}

std::optional<double> parse_score_reply(const std::string& content) {
  const std::string s = text::trim(content);
  json j = json::parse(s, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  double v;
  if (j.is_number()) {
    v = j.get<double>();
  } else if (j.is_object() && j.contains("score") && j["score"].is_number()) {
    v = j["score"].get<double>();
  } else {
    return std::nullopt;
  }
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

CachedRemoteScorer::CachedRemoteScorer(std::shared_ptr<ChatTransport> transport, std::string model,
                                       std::filesystem::path cache_path)
    : transport_(std::move(transport)), model_(std::move(model)), cache_path_(std::move(cache_path)) {
  std::ifstream in(cache_path_);
  std::string line;
  std::size_t lineno = 0;
  while (in && std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("gold") || !j.contains("cand") ||
        !j.contains("score") || !j["score"].is_number()) {
      throw std::runtime_error("scorer cache " + cache_path_.string() + " line " +
                               std::to_string(lineno) + " is malformed");
    }
    cache_[{j["gold"].get<std::string>(), j["cand"].get<std::string>()}] = j["score"].get<double>();
  }
}

CachedRemoteScorer::~CachedRemoteScorer() {
  try {
    flush();
  } catch (...) {
  }
}

double CachedRemoteScorer::score(const std::string& gold, const std::string& candidate) {
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find({gold, candidate}); it != cache_.end()) return it->second;
  }
  json body = {
      {"model", model_},
      {"messages",
       json::array({{{"role", "user"},
                     {"content",
                      "Rate how clinically related the candidate disease is to the reference "
                      "diagnosis (shared symptoms, risk factors, or differential-diagnosis "
                      "overlap) on a scale from 0 (unrelated) to 10 (nearly indistinguishable).\n"
                      "Reference diagnosis: " + gold + "\nCandidate disease: " + candidate +
                      "\nReply with only a JSON object: {\"score\": <number>}"}}})},
      {"temperature", 0},
  };
  json response = transport_->post(body);
  std::string content;
  try {
    content = response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw CandidateError(CandidateErrc::InvalidScore, "scorer response has no message content");
  }
  auto v = parse_score_reply(content);
  if (!v) throw CandidateError(CandidateErrc::InvalidScore, "scorer reply is not a score: " + content);
  std::lock_guard lock(mu_);
  cache_[{gold, candidate}] = *v;
  pending_.push_back({{gold, candidate}, *v});
  return *v;
}

void CachedRemoteScorer::flush() {
  std::lock_guard lock(mu_);
  if (pending_.empty()) return;
  std::ofstream out(cache_path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot write scorer cache " + cache_path_.string());
  for (const auto& [key, v] : pending_) {
    out << json{{"gold", key.first}, {"cand", key.second}, {"score", v}}.dump() << '\n';
  }
  pending_.clear();
}

std::size_t CachedRemoteScorer::cached() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

std::vector<std::size_t> ranked_neighborhood(const std::string& gold, const LabelPool& pool,
                                             RelatednessScorer& scorer, std::size_t size) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const std::string& label = pool.labels()[i];
    if (label == gold) continue;
    double s = scorer.score(gold, label);
    if (!std::isfinite(s)) {
      throw CandidateError(CandidateErrc::InvalidScore, "non-finite score for '" + label + "'");
    }
    scored.emplace_back(s, i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  size = std::min(size, scored.size());
  std::vector<std::size_t> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.push_back(scored[i].second);
  return out;
}

CandidateSet build_candidates(const std::string& gold, const LabelPool& pool,
                              RelatednessScorer& scorer, std::uint64_t seed,
                              const CandidateOptions& options) {
  if (!pool.index_of(gold)) {
    throw CandidateError(CandidateErrc::GoldNotInPool, "gold label '" + gold + "' is not in the pool");
  }
  const std::size_t n = options.n_distractors;
  if (n >= pool.size()) {
    throw CandidateError(CandidateErrc::PoolTooSmall,
                         std::to_string(n) + " distractors need a pool larger than " +
                             std::to_string(pool.size()));
  }
  if (!(options.neighborhood_factor >= 1.0) || !std::isfinite(options.neighborhood_factor)) {
    throw CandidateError(CandidateErrc::InvalidPool, "neighborhood_factor must be >= 1");
  }
  const auto hood_size = static_cast<std::size_t>(
      std::ceil(options.neighborhood_factor * static_cast<double>(n)));
  std::vector<std::size_t> hood = ranked_neighborhood(gold, pool, scorer, hood_size);

  SeededRng rng(seed);
  std::vector<std::size_t> picks = rng.sample_without_replacement(hood.size(), n);
  CandidateSet out;
  out.labels.reserve(n + 1);
  out.labels.push_back(gold);
  for (std::size_t p : picks) out.labels.push_back(pool.labels()[hood[p]]);
  rng.shuffle(out.labels);
  return out;
}

}  // namespace dualmem
