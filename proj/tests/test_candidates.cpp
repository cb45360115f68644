#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "dualmem/candidates.hpp"
#include "dualmem/remote.hpp"
#include "dualmem/synthetic.hpp"

using namespace dualmem;
using nlohmann::json;

namespace {

// Labels ranked the slow way: score everything, stable sort.
std::set<std::string> top_neighbors(const std::string& gold, const LabelPool& pool, std::size_t m) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.labels()[i] == gold) continue;
    scored.push_back({lexical_relatedness(gold, pool.labels()[i]), i});
  }
  std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::set<std::string> out;
  for (std::size_t k = 0; k < m && k < scored.size(); ++k) out.insert(pool.labels()[scored[k].second]);
  return out;
}

class FixedTransport : public ChatTransport {
 public:
  json post(const json&) override {
    ++calls;
    return {{"choices", {{{"message", {{"content", "{\"score\": 0.25}"}}}}}}};
  }
  int calls = 0;
};

}  // namespace

TEST(Lexical, Values) {
  EXPECT_EQ(lexical_relatedness("Acute renal failure", "Acute renal failure"), 1.5);
  // tokens {acute, renal, failure} vs {acute, renal, colic}: jaccard 2/4, prefix 2/3
  EXPECT_NEAR(lexical_relatedness("Acute renal failure", "Acute renal colic"), 0.5 + 0.5 * 2.0 / 3.0, 1e-15);
  EXPECT_EQ(lexical_relatedness("Gout", "Lupus"), 0.0);
  EXPECT_EQ(lexical_relatedness("a b", "b a"), lexical_relatedness("b a", "a b"));
}

TEST(Candidates, PoolValidation) {
  EXPECT_THROW(LabelPool({}), CandidateError);
  EXPECT_THROW(LabelPool({"a", "a"}), CandidateError);
  LabelPool pool({"a", "b", "c"});
  LexicalScorer s;
  EXPECT_THROW(build_candidates("z", pool, s, 1), CandidateError);
  CandidateOptions o;
  o.n_distractors = 3;
  EXPECT_THROW(build_candidates("a", pool, s, 1, o), CandidateError);
}

TEST(Candidates, LoadTrimsAndSkipsBlank) {
  auto path = std::filesystem::temp_directory_path() / "dualmem_pool_test.txt";
  std::ofstream(path) << "  Gout \n\nLupus\n";
  LabelPool pool = LabelPool::load(path);
  EXPECT_EQ(pool.labels(), (std::vector<std::string>{"Gout", "Lupus"}));
  std::filesystem::remove(path);
}

TEST(CandidatesProperty, FuzzedBuilds) {
  LabelPool pool = synthetic_label_pool(800, 11);
  LexicalScorer scorer;
  std::mt19937_64 rng(4);
  const std::size_t m = static_cast<std::size_t>(std::ceil(1.5 * 199));
  for (int i = 0; i < 150; ++i) {
    const std::string& gold = pool.labels()[rng() % pool.size()];
    std::uint64_t seed = rng();
    CandidateSet c = build_candidates(gold, pool, scorer, seed);
    ASSERT_EQ(c.labels.size(), 200u);
    ASSERT_EQ(std::count(c.labels.begin(), c.labels.end(), gold), 1);
    std::set<std::string> uniq(c.labels.begin(), c.labels.end());
    ASSERT_EQ(uniq.size(), 200u);
    ASSERT_EQ(build_candidates(gold, pool, scorer, seed).labels, c.labels);
    auto top = top_neighbors(gold, pool, m);
    for (const auto& l : c.labels) {
      if (l != gold) ASSERT_TRUE(top.count(l)) << l;
    }
  }
}

TEST(Candidates, SeedChangesSet) {
  LabelPool pool = synthetic_label_pool(300, 2);
  LexicalScorer scorer;
  CandidateOptions o;
  o.n_distractors = 20;
  auto a = build_candidates(pool.labels()[0], pool, scorer, 1, o);
  auto b = build_candidates(pool.labels()[0], pool, scorer, 2, o);
  EXPECT_NE(a.labels, b.labels);
}

TEST(Candidates, RemoteScorerCachesScores) {
  auto path = std::filesystem::temp_directory_path() / "dualmem_score_cache.jsonl";
  std::filesystem::remove(path);
  auto t = std::make_shared<FixedTransport>();
  {
    CachedRemoteScorer s(t, "m", path);
    EXPECT_EQ(s.score("Gout", "Lupus"), 0.25);
    EXPECT_EQ(s.score("Gout", "Lupus"), 0.25);
    EXPECT_EQ(t->calls, 1);
    s.flush();
  }
  CachedRemoteScorer again(t, "m", path);
  EXPECT_EQ(again.cached(), 1u);
  EXPECT_EQ(again.score("Gout", "Lupus"), 0.25);
  EXPECT_EQ(t->calls, 1);
  std::filesystem::remove(path);
}

TEST(Candidates, ParseScoreReply) {
  EXPECT_EQ(parse_score_reply("0.5"), 0.5);
  EXPECT_EQ(parse_score_reply(R"({"score": 3})"), 3.0);
  EXPECT_FALSE(parse_score_reply("high"));
}

TEST(Synthetic, DeterministicAndWellFormed) {
  SyntheticParams p;
  auto a = generate_synthetic(p);
  auto b = generate_synthetic(p);
  ASSERT_EQ(a.cases.size(), 100u);
  std::set<std::string> recurring;
  for (std::size_t i = 0; i < a.cases.size(); ++i) {
    EXPECT_EQ(a.cases[i].patient.profile, b.cases[i].patient.profile);
    EXPECT_EQ(a.cases[i].candidates.labels, b.cases[i].candidates.labels);
    EXPECT_EQ(a.cases[i].candidates.labels.size(), 200u);
    EXPECT_TRUE(a.cases[i].candidates.contains(a.cases[i].patient.gold_label));
    if (a.subtype[i][0] == 'r') recurring.insert(a.subtype[i]);
  }
  EXPECT_LE(recurring.size(), 5u);
  EXPECT_GE(recurring.size(), 2u);
  p.seed = 8;
  EXPECT_NE(generate_synthetic(p).cases[0].patient.profile, a.cases[0].patient.profile);
}

TEST(Synthetic, RejectsBadParams) {
  SyntheticParams p;
  p.recurrence = 1.5;
  EXPECT_THROW(generate_synthetic(p), std::invalid_argument);
  p = SyntheticParams{};
  p.pool_size = 100000;
  EXPECT_THROW(generate_synthetic(p), std::invalid_argument);
}
