// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "dualmem/advantage.hpp"
#include "dualmem/candidates.hpp"
#include "dualmem/cli.hpp"
#include "dualmem/io.hpp"
#include "dualmem/metrics.hpp"
#include "dualmem/policy.hpp"
#include "dualmem/random.hpp"
#include "dualmem/reward.hpp"
#include "dualmem/stream.hpp"
#include "dualmem/synthetic.hpp"
#include "dualmem/tool_schema.hpp"
#include "oracles.hpp"

using namespace dualmem;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string what;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dualmem_accept_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// ---------------------------------------------------------------------------

std::string memory_invariants() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  const std::size_t caps[] = {1, 3, 10};
  std::size_t ops_run = 0;
  for (int seq = 0; seq < 10000; ++seq) {
    const std::size_t cap = caps[seq % 3];
    AgentState st(cap);
    oracle::Memory model;
    model.cap = cap;
    std::size_t serial = 0;
    for (int step = 0; step < 25; ++step, ++ops_run) {
      MemoryOp op = oracle::random_op(rng, st.occupancy(), serial);
      const std::vector<Rule> rules_before = st.long_term();
      const bool accepted = model.apply(op);
      bool threw = false;
      try {
        st.apply(op);
      } catch (const MemoryError&) {
        threw = true;
      }
      check(accepted == !threw, "accept/reject disagrees with oracle");
      check(st.occupancy() <= cap, "capacity exceeded");
      check(std::equal(rules_before.begin(), rules_before.end(), st.long_term().begin()) &&
                st.long_term().size() >= rules_before.size(),
            "long-term memory not append-only");
      // Survivor order: short-term equals the oracle's order-preserving model.
      check(st.short_term() == model.cases, "short-term order diverges from oracle");
    }
    check(st.long_term().size() == model.rules.size(), "final rule count differs");
    for (std::size_t i = 0; i < model.rules.size(); ++i)
      check(st.long_term()[i].text == model.rules[i], "final rules differ");
    const std::string snap = st.snapshot();
    AgentState back = AgentState::restore(snap);
    check(back == st && back.snapshot() == snap, "snapshot round-trip not byte-exact");
  }
  double secs = seconds_since(t0);
  check(secs < 10.0, "runtime " + std::to_string(secs) + " s >= 10 s");
  std::ostringstream d;
  d << "10000 sequences, " << ops_run << " ops, " << secs << " s";
  return d.str();
}

std::string reward_conformance() {
  RewardConfig cfg;
  check(diagnostic_reward(true, cfg) == 5.0 && diagnostic_reward(false, cfg) == -5.0, "r_diag != +-5");
  check(memory_reward(10, 10, cfg) == -3.0, "full-occupancy r_mem != -3");
  LambdaWeights end = lambda_schedule(100, 100, cfg);
  check(std::fabs(end.diag - cfg.lambda_diag_max) <= 1e-12 && std::fabs(end.mem) <= 1e-12,
        "t = T endpoint wrong");
  LambdaWeights start = lambda_schedule(1, 10'000'000'000'000, cfg);
  check(std::fabs(start.diag) <= 1e-12 && std::fabs(start.mem - cfg.lambda_mem_max) <= 1e-12,
        "t/T -> 0 endpoint wrong");
  RewardConfig diag_only = cfg;
  diag_only.lambda_mem_max = 0.0;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20000; ++i) {
    std::int64_t T = 1 + static_cast<std::int64_t>(rng() % 1000);
    std::int64_t t = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(T));
    std::size_t cap = 1 + rng() % 16, occ = rng() % (cap + 1);
    bool correct = rng() & 1;
    double baseline = (static_cast<double>(t) / static_cast<double>(T)) * (correct ? 5.0 : -5.0);
    check(shaped_reward(correct, occ, cap, t, T, diag_only).total == baseline,
          "lambda_mem_max = 0 differs from diagnostic-only baseline");
  }
  return "+-5, -3, endpoints, 20000 diagnostic-only draws";
}

std::string advantage_kernel() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> val(-100, 100);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> r(2 + rng() % 15);
    for (double& x : r) x = val(rng);
    auto a = center_rewards(r);
    double sum = 0, mag = 0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      sum += a[k];
      mag += std::fabs(r[k]);
    }
    check(std::fabs(sum) <= 1e-9 * std::max(1.0, mag), "group advantages do not sum to zero");
    auto ref = oracle::naive_centered(r);
    for (std::size_t k = 0; k < r.size(); ++k)
      check(std::fabs(a[k] - ref[k]) <= 1e-9, "disagrees with naive-summation oracle");

    // Dyadic values keep shift and scale exact.
    std::vector<double> q(r.size()), shifted(r.size()), scaled(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
      q[k] = std::round(r[k] * 8.0) / 8.0;
      shifted[k] = q[k] + 256.0;
      scaled[k] = q[k] * 2.0;
    }
    auto aq = center_rewards(q), as = center_rewards(shifted), ac = center_rewards(scaled);
    for (std::size_t k = 0; k < r.size(); ++k) {
      check(std::fabs(as[k] - aq[k]) <= 4 * std::numeric_limits<double>::epsilon() * 512, "shift invariance");
      check(std::fabs(ac[k] - 2.0 * aq[k]) <= 4 * std::numeric_limits<double>::epsilon() * 512,
            "scale equivariance");
    }
  }
  std::vector<RolloutGroup> groups = {{1, {0, 2}}, {2, {10, 30}}};
  auto by_round = advantages_by_round(groups);
  check(by_round[1] == std::vector<double>{-1, 1} && by_round[2] == std::vector<double>{-10, 10},
        "per-round centering of [0,2],[10,30]");
  auto flat = oracle::naive_centered({0, 2, 10, 30});
  std::vector<double> joined = by_round[1];
  joined.insert(joined.end(), by_round[2].begin(), by_round[2].end());
  check(flat != joined, "per-round equals trajectory-level centering");
  return "10000 random groups; {[-1,1],[-10,10]} vs trajectory {-10.5,-8.5,-0.5,19.5}";
}

std::string clipped_objective_table() {
  // Entries worked out by hand for eps = 0.28 (band [0.72, 1.28]).
  const double rhos[] = {0.5, 0.72, 1.0, 1.28, 2.0};
  const double expected[5][3] = {
      // A = -1,  0,    +1
      {-0.72, 0.0, 0.5},
      {-0.72, 0.0, 0.72},
      {-1.0, 0.0, 1.0},
      {-1.28, 0.0, 1.28},
      {-2.0, 0.0, 1.28},
  };
  const double advs[] = {-1.0, 0.0, 1.0};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) {
      ObjectiveInputs in;
      in.ratios = {rhos[i]};
      in.advantages = {advs[j]};
      in.clip_epsilon = 0.28;
      double v = clipped_objective(in);
      check(std::fabs(v - expected[i][j]) <= 1e-12,
            "rho=" + std::to_string(rhos[i]) + " A=" + std::to_string(advs[j]) + " gave " + std::to_string(v));
    }
  }
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> a(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    ObjectiveInputs in;
    for (int k = 0; k < 8; ++k) {
      in.ratios.push_back(1.0);
      in.advantages.push_back(std::round(a(rng) * 16) / 16);
    }
    double s = 0;
    for (double x : in.advantages) s += x;
    check(clipped_objective(in) == s / 8.0, "ratio-one identity");
  }
  return "15-cell table, ratio-one identity";
}

std::string tool_schema_golden() {
  json golden = json::parse(std::ifstream(fs::path(DUALMEM_TEST_DATA) / "tool_schema_golden.json"));
  json schema = remote_tool_schema();
  check(json::parse(schema.dump()) == golden, "schema differs from golden file");
  const json& params = schema["function"]["parameters"];
  check(params["properties"]["action"]["enum"] == json({"list", "append", "pop", "consolidate"}), "action enum");
  check(params["required"] == json({"action"}), "required");
  std::set<std::string> fields;
  for (auto& [k, _] : params["properties"]["case_record"]["properties"].items()) fields.insert(k);
  check(fields == std::set<std::string>{"case_summary", "diagnosis", "feedback"}, "case_record fields");
  return "canonical form equals golden";
}

std::string metrics_oracle() {
  std::mt19937_64 rng(123);
  for (int i = 0; i < 1000; ++i) {
    std::size_t len = 10 + rng() % 291;
    std::vector<bool> c(len);
    for (std::size_t k = 0; k < len; ++k) c[k] = rng() % 3 == 0;
    check(std::fabs(final_accuracy(c) - oracle::prefix_count(c, len)) <= 1e-12, "final accuracy");
    std::size_t warm = 1 + rng() % std::min<std::size_t>(len, 20);
    for (std::size_t n = warm; n <= len; n += 1 + rng() % 7) {
      double expect = oracle::prefix_count(c, n) - oracle::prefix_count(c, warm);
      check(std::fabs(delta_acc_at(c, n, warm) - expect) <= 1e-12, "delta_acc_at");
    }
    check(delta_acc_at(c, warm, warm) == 0.0, "delta at warm-up not zero");
  }
  return "1000 bitstreams";
}

std::string candidate_generation() {
  LabelPool pool = synthetic_label_pool(800, 31);
  LexicalScorer scorer;
  const std::size_t n = 199;
  const std::size_t m = static_cast<std::size_t>(std::ceil(1.5 * n));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const std::string gold = pool.labels()[rng() % pool.size()];
    const std::uint64_t seed = rng();
    CandidateSet c = build_candidates(gold, pool, scorer, seed);
    check(c.labels.size() == n + 1, "size != 200");
    check(std::count(c.labels.begin(), c.labels.end(), gold) == 1, "gold not present exactly once");
    std::set<std::string> uniq(c.labels.begin(), c.labels.end());
    check(uniq.size() == c.labels.size(), "duplicate labels");
    check(build_candidates(gold, pool, scorer, seed).labels == c.labels, "not seed-deterministic");
    if (i % 10 == 0) {
      // Brute-force neighborhood: score all, stable sort, top m.
      std::vector<std::pair<double, std::size_t>> ranked;
      for (std::size_t k = 0; k < pool.size(); ++k)
        if (pool.labels()[k] != gold) ranked.push_back({lexical_relatedness(gold, pool.labels()[k]), k});
      std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.first > b.first; });
      std::set<std::string> top;
      for (std::size_t k = 0; k < m; ++k) top.insert(pool.labels()[ranked[k].second]);
      for (const auto& l : c.labels)
        check(l == gold || top.count(l), "distractor outside top-" + std::to_string(m) + " neighborhood");
    }
  }
  return "1000 builds, pool 800, N 199";
}

Report run_synthetic(const fs::path& dir, const std::string& policy) {
  json cfg = {{"mode", "long_horizon"},
              {"policy", {{"kind", policy}}},
              {"seed", 7},
              {"paths", {{"cases", "cases.jsonl"}, {"report", policy + ".jsonl"}}}};
  write(dir / (policy + ".json"), cfg.dump());
  std::ostringstream out, err;
  int code = cmd_run(dir / (policy + ".json"), out, err);
  check(code == kExitOk, policy + " run exited " + std::to_string(code) + ": " + err.str());
  return read_report(dir / (policy + ".jsonl"));
}

std::string long_horizon_analogue() {
  auto t0 = std::chrono::steady_clock::now();
  fs::path dir = scratch("long_horizon");
  SyntheticParams sp;  // T = 100, 5 subtypes, recurrence 0.4, seed 7
  std::ostringstream out, err;
  check(cmd_gen_synthetic(sp, dir / "cases.jsonl", std::nullopt, out, err) == kExitOk, "generation failed");
  Report nearest = run_synthetic(dir, "nearest_case");
  Report memless = run_synthetic(dir, "memoryless");
  double fa_n = final_accuracy(std::span<const StreamRecord>(nearest.records));
  double fa_m = final_accuracy(std::span<const StreamRecord>(memless.records));
  double d_n = delta_acc_at(std::span<const StreamRecord>(nearest.records), 100, 10);
  double d_m = delta_acc_at(std::span<const StreamRecord>(memless.records), 100, 10);
  double secs = seconds_since(t0);
  std::ostringstream d;
  d << "NearestCase FA " << fa_n << " dAcc@100 " << d_n << "; Memoryless FA " << fa_m << " dAcc@100 " << d_m
    << "; " << secs << " s";
  check(fa_n >= fa_m + 0.10, "final accuracy gap < 0.10 (" + d.str() + ")");
  check(d_n > 0.0, "NearestCase dAcc@100 not positive (" + d.str() + ")");
  check(std::fabs(d_m) <= 0.05, "Memoryless |dAcc@100| > 0.05 (" + d.str() + ")");
  check(secs < 30.0, "runtime >= 30 s");
  fs::remove_all(dir);
  return d.str();
}

std::string rollout_protocol() {
  SyntheticParams sp;
  sp.rounds = 10;
  sp.pool_size = 120;
  sp.n_distractors = 19;
  sp.seed = 3;
  auto syn = generate_synthetic(sp);
  NearestCasePolicy policy(ScriptedOptions{0.4, 2});
  StreamConfig cfg;
  cfg.capacity = 3;
  cfg.seed = 11;
  RolloutConfig rc;
  rc.group_size = 8;
  rc.keep_traces = true;
  RolloutResult a = run_rollout_groups(policy, syn.cases, cfg, rc);
  check(a.traces.size() == 10 && a.exports.size() == 80, "expected 10 rounds x 8 rollouts");

  AgentState committed(cfg.capacity);
  for (std::size_t r = 0; r < 10; ++r) {
    const RoundTrace& t = a.traces[r];
    check(t.pre_snapshot == committed.snapshot(), "round pre-state is not the committed state");
    // Re-execute every rollout alone on a private copy of the pre-state.
    for (std::size_t k = 0; k < 8; ++k) {
      AgentState mine = AgentState::restore(t.pre_snapshot);
      RoundInput in;
      in.case_id = syn.cases[r].patient.id;
      in.profile = syn.cases[r].patient.profile;
      in.candidates = syn.cases[r].candidates;
      in.memory_view = mine.list();
      in.round_index = static_cast<std::int64_t>(r + 1);
      in.horizon = 10;
      in.seed = derive_seed(cfg.seed, r + 1, k + 1);
      PolicyOutput o = policy.act(in, mine);
      bool ok = match_prediction(o.prediction, syn.cases[r].patient.gold_label);
      policy.record_feedback(in, o, Feedback{ok, syn.cases[r].patient.gold_label, std::nullopt}, mine);
      check(mine.snapshot() == t.post_snapshots[k],
            "rollout " + std::to_string(k) + " of round " + std::to_string(r + 1) + " is not isolated");
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < 8; ++k)
      if (a.exports[r * 8 + k].reward > a.exports[r * 8 + best].reward) best = k;
    check(t.committed == best, "committed rollout is not the lowest-id best reward");
    committed = AgentState::restore(t.post_snapshots[best]);
  }
  check(a.final_state == committed, "final state is not the last committed state");

  RolloutResult b = run_rollout_groups(policy, syn.cases, cfg, rc);
  for (std::size_t r = 0; r < 10; ++r) check(a.traces[r].committed == b.traces[r].committed, "commit not deterministic");
  check(a.final_state.snapshot() == b.final_state.snapshot(), "rerun final state differs");

  std::set<double> distinct;
  for (const TrainerRecord& t : a.exports) {
    check(validate_trainer_json(json::parse(to_json(t).dump())).empty(), "trainer record fails schema");
    distinct.insert(t.reward);
  }
  return "10 rounds x G=8, " + std::to_string(distinct.size()) + " distinct rewards, exports validate";
}

std::string end_to_end_determinism() {
  fs::path dir = scratch("determinism");
  SyntheticParams sp;
  sp.rounds = 30;
  sp.pool_size = 200;
  sp.n_distractors = 49;
  std::ostringstream out, err;
  check(cmd_gen_synthetic(sp, dir / "cases.jsonl", std::nullopt, out, err) == kExitOk, "generation failed");
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  auto run_twice = [&](const json& cfg, const std::string& tag) {
    write(dir / (tag + ".json"), cfg.dump());
    std::string reports[2], manifests[2];
    for (int i = 0; i < 2; ++i) {
      check(cmd_run(dir / (tag + ".json"), out, err) == kExitOk, tag + " run failed: " + err.str());
      reports[i] = read_file(dir / (tag + ".jsonl"));
      manifests[i] = read_file(dir / (tag + ".jsonl.manifest.json"));
    }
    check(reports[0] == reports[1], tag + ": reports differ");
    check(manifests[0] == manifests[1], tag + ": manifests differ");
  };
  run_twice({{"seed", 5},
             {"policy", {{"kind", "nearest_case"}, {"exploration", 0.3}}},
             {"paths", {{"cases", "cases.jsonl"}, {"report", "stream.jsonl"}}}},
            "stream");
  run_twice({{"seed", 5},
             {"rollout_groups", true},
             {"rollout_threads", 4},
             {"policy", {{"kind", "nearest_case"}, {"exploration", 0.3}}},
             {"paths", {{"cases", "cases.jsonl"}, {"report", "rollout.jsonl"}, {"trainer_export", "t.jsonl"}}}},
            "rollout");
  ::unsetenv("SOURCE_DATE_EPOCH");
  fs::remove_all(dir);
  return "stream and threaded rollout runs byte-identical";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<std::string()> run;
  };
  const Criterion criteria[] = {
      {1, "memory invariant suite", memory_invariants},
      {2, "reward conformance", reward_conformance},
      {3, "advantage kernel", advantage_kernel},
      {4, "clipped objective", clipped_objective_table},
      {5, "tool-schema conformance", tool_schema_golden},
      {6, "metrics oracle", metrics_oracle},
      {7, "candidate generation", candidate_generation},
      {8, "long-horizon learning analogue", long_horizon_analogue},
      {9, "rollout-group protocol", rollout_protocol},
      {10, "end-to-end determinism", end_to_end_determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      detail = c.run();
      ok = true;
    } catch (const Failure& f) {
      detail = f.what;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << detail << std::endl;
  }
  fs::remove_all(fs::temp_directory_path() / ("dualmem_accept_" + std::to_string(::getpid())));
  std::cout << (failed ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED") << " (" << 10 - failed << "/10)" << std::endl;
  return failed ? 1 : 0;
}
