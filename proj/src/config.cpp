#include "dualmem/config.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <set>

#include "dualmem/hash.hpp"
#include "dualmem/io.hpp"

namespace dualmem {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Memoryless: return "memoryless";
    case PolicyKind::NearestCase: return "nearest_case";
    case PolicyKind::Remote: return "remote";
  }
  return "unknown";
}

StreamConfig RunConfig::stream_config() const {
  StreamConfig s;
  s.mode = mode;
  s.memory_augmented = memory_augmented;
  s.capacity = memory_capacity;
  s.max_turns = max_turns;
  s.seed = seed;
  s.reward = reward;
  return s;
}

RolloutConfig RunConfig::rollout_config() const {
  RolloutConfig r;
  r.group_size = group_size;
  r.threads = rollout_threads;
  r.advantage.normalize_std = normalize_std;
  return r;
}

namespace {

// Reads one JSON object, rejecting keys outside the allowed set.
class Section {
 public:
  Section(const json& j, std::string where, std::set<std::string> allowed)
      : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
    for (const auto& [key, _] : j_.items()) {
      if (!allowed.count(key)) throw ConfigError("unknown config key '" + prefix() + key + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) const { return j_.at(key); }

  template <typename T>
  void read(const char* key, T& out) const {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer() || it->template get<long long>() < 0)
          throw ConfigError(prefix() + key + " must be a non-negative integer");
        out = it->template get<T>();
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) throw ConfigError(prefix() + key + " must be an integer");
        out = it->template get<T>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(prefix() + key + " must be a boolean");
        out = it->template get<bool>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError(prefix() + key + " must be a number");
        out = it->template get<T>();
      } else {
        if (!it->is_string()) throw ConfigError(prefix() + key + " must be a string");
        out = it->template get<T>();
      }
    } catch (const json::exception& e) {
      throw ConfigError(prefix() + key + ": " + e.what());
    }
  }

  std::string prefix() const { return where_.empty() ? std::string() : where_ + "."; }

 private:
  const json& j_;
  std::string where_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

RemoteConfig parse_remote_config(const json& j, const std::string& where) {
  RemoteConfig rc;
  Section r(j, where,
            {"base_url", "path", "model", "api_key_env", "timeout_ms", "max_attempts",
             "backoff_ms", "backoff_multiplier", "max_backoff_ms", "max_concurrency", "params"});
  r.read("base_url", rc.base_url);
  r.read("path", rc.path);
  r.read("model", rc.model);
  r.read("api_key_env", rc.api_key_env);
  long long timeout = rc.timeout.count(), backoff = rc.retry.base_delay.count(),
            max_backoff = rc.retry.max_delay.count();
  r.read("timeout_ms", timeout);
  r.read("backoff_ms", backoff);
  r.read("max_backoff_ms", max_backoff);
  r.read("max_attempts", rc.retry.max_attempts);
  r.read("backoff_multiplier", rc.retry.multiplier);
  r.read("max_concurrency", rc.max_concurrency);
  if (timeout < 1 || backoff < 0 || max_backoff < 0 || rc.retry.max_attempts < 1 ||
      rc.retry.multiplier < 1.0 || rc.max_concurrency < 1)
    throw ConfigError(where + " has an out-of-range timing or retry setting");
  rc.timeout = std::chrono::milliseconds(timeout);
  rc.retry.base_delay = std::chrono::milliseconds(backoff);
  rc.retry.max_delay = std::chrono::milliseconds(max_backoff);
  if (r.has("params")) {
    if (!r.raw("params").is_object()) throw ConfigError(where + ".params must be an object");
    rc.params = r.raw("params");
  }
  return rc;
}

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  RunConfig cfg;
  Section top(j, "",
              {"mode", "memory_augmented", "policy", "reward", "memory_capacity", "group_size",
               "rollout_groups", "rollout_threads", "normalize_std", "max_turns", "warmup", "seed",
               "report_n", "paths"});

  std::string mode = to_string(cfg.mode);
  top.read("mode", mode);
  if (mode == "standard") {
    cfg.mode = StreamMode::Standard;
  } else if (mode == "long_horizon") {
    cfg.mode = StreamMode::LongHorizon;
  } else {
    throw ConfigError("mode must be 'standard' or 'long_horizon'");
  }
  top.read("memory_augmented", cfg.memory_augmented);

  long long capacity = static_cast<long long>(cfg.memory_capacity);
  long long group = static_cast<long long>(cfg.group_size);
  long long warmup = static_cast<long long>(cfg.warmup);
  top.read("memory_capacity", capacity);
  top.read("group_size", group);
  top.read("warmup", warmup);
  top.read("max_turns", cfg.max_turns);
  top.read("rollout_threads", cfg.rollout_threads);
  top.read("rollout_groups", cfg.rollout_groups);
  top.read("normalize_std", cfg.normalize_std);
  top.read("seed", cfg.seed);
  if (capacity < 1) throw ConfigError("memory_capacity must be a positive integer");
  if (group < 2) throw ConfigError("group_size must be at least 2");
  if (warmup < 1) throw ConfigError("warmup must be a positive integer");
  if (cfg.max_turns < 1) throw ConfigError("max_turns must be a positive integer");
  if (cfg.rollout_threads < 1) throw ConfigError("rollout_threads must be a positive integer");
  cfg.memory_capacity = static_cast<std::size_t>(capacity);
  cfg.group_size = static_cast<std::size_t>(group);
  cfg.warmup = static_cast<std::size_t>(warmup);

  if (top.has("report_n")) {
    const json& n = top.raw("report_n");
    if (!n.is_array()) throw ConfigError("report_n must be an array of positive integers");
    cfg.report_n.clear();
    for (const json& v : n) {
      if (!v.is_number_integer() || v.get<long long>() < 1)
        throw ConfigError("report_n must be an array of positive integers");
      cfg.report_n.push_back(v.get<std::size_t>());
    }
  }

  if (top.has("reward")) {
    Section r(top.raw("reward"), "reward",
              {"diag_magnitude", "alpha", "lambda_diag_max", "lambda_mem_max", "schedule"});
    r.read("diag_magnitude", cfg.reward.diag_magnitude);
    r.read("alpha", cfg.reward.alpha);
    r.read("lambda_diag_max", cfg.reward.lambda_diag_max);
    r.read("lambda_mem_max", cfg.reward.lambda_mem_max);
    std::string schedule = to_string(cfg.reward.schedule);
    r.read("schedule", schedule);
    try {
      cfg.reward.schedule = schedule_from_string(schedule);
      cfg.reward.validate();
    } catch (const RewardError& e) {
      throw ConfigError(std::string("reward: ") + e.what());
    }
  }

  if (top.has("policy")) {
    Section p(top.raw("policy"), "policy", {"kind", "exploration", "min_overlap", "remote"});
    std::string kind = to_string(cfg.policy.kind);
    p.read("kind", kind);
    if (kind == "memoryless") {
      cfg.policy.kind = PolicyKind::Memoryless;
    } else if (kind == "nearest_case") {
      cfg.policy.kind = PolicyKind::NearestCase;
    } else if (kind == "remote") {
      cfg.policy.kind = PolicyKind::Remote;
    } else {
      throw ConfigError("policy.kind must be memoryless, nearest_case or remote");
    }
    p.read("exploration", cfg.policy.scripted.exploration);
    if (!(cfg.policy.scripted.exploration >= 0.0 && cfg.policy.scripted.exploration <= 1.0))
      throw ConfigError("policy.exploration must lie in [0, 1]");
    p.read("min_overlap", cfg.policy.scripted.min_overlap);

    if (p.has("remote")) cfg.policy.remote = parse_remote_config(p.raw("remote"), "policy.remote");
    if (cfg.policy.kind == PolicyKind::Remote &&
        (cfg.policy.remote.base_url.empty() || cfg.policy.remote.model.empty()))
      throw ConfigError("remote policy needs policy.remote.base_url and policy.remote.model");
  }

  if (!top.has("paths")) throw ConfigError("paths.cases and paths.report are required");
  Section paths(top.raw("paths"), "paths",
                {"cases", "report", "manifest", "snapshots", "trainer_export"});
  std::string cases, report, manifest, snapshots, trainer;
  paths.read("cases", cases);
  paths.read("report", report);
  paths.read("manifest", manifest);
  paths.read("snapshots", snapshots);
  paths.read("trainer_export", trainer);
  if (cases.empty() || report.empty()) throw ConfigError("paths.cases and paths.report are required");
  cfg.paths.cases = resolve(base_dir, cases);
  cfg.paths.report = resolve(base_dir, report);
  cfg.paths.manifest =
      manifest.empty() ? fs::path(cfg.paths.report.string() + ".manifest.json") : resolve(base_dir, manifest);
  if (!snapshots.empty()) cfg.paths.snapshots = resolve(base_dir, snapshots);
  if (!trainer.empty()) cfg.paths.trainer_export = resolve(base_dir, trainer);
  if (cfg.rollout_groups && !cfg.paths.trainer_export)
    throw ConfigError("rollout_groups requires paths.trainer_export");
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::string body;
  try {
    body = read_file(path);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return parse_config(j, base);
}

json canonical_config(const RunConfig& cfg, const std::string& cases_digest) {
  json policy = {{"kind", to_string(cfg.policy.kind)},
                 {"exploration", cfg.policy.scripted.exploration},
                 {"min_overlap", cfg.policy.scripted.min_overlap}};
  if (cfg.policy.kind == PolicyKind::Remote) {
    const RemoteConfig& rc = cfg.policy.remote;
    policy["remote"] = {{"base_url", rc.base_url}, {"path", rc.path},
                        {"model", rc.model},       {"params", rc.params},
                        {"max_attempts", rc.retry.max_attempts}};
  }
  return {
      {"mode", to_string(cfg.mode)},
      {"memory_augmented", cfg.memory_augmented},
      {"policy", std::move(policy)},
      {"reward",
       {{"diag_magnitude", cfg.reward.diag_magnitude},
        {"alpha", cfg.reward.alpha},
        {"lambda_diag_max", cfg.reward.lambda_diag_max},
        {"lambda_mem_max", cfg.reward.lambda_mem_max},
        {"schedule", to_string(cfg.reward.schedule)}}},
      {"memory_capacity", cfg.memory_capacity},
      {"group_size", cfg.group_size},
      {"rollout_groups", cfg.rollout_groups},
      {"normalize_std", cfg.normalize_std},
      {"max_turns", cfg.max_turns},
      {"warmup", cfg.warmup},
      {"seed", cfg.seed},
      {"report_n", cfg.report_n},
      {"cases_sha256", cases_digest},
  };
}

std::string config_hash(const RunConfig& cfg, const std::string& cases_digest) {
  return sha256_hex(canonical_config(cfg, cases_digest).dump());
}

std::unique_ptr<Policy> make_policy(const PolicySettings& settings) {
  switch (settings.kind) {
    case PolicyKind::Memoryless: return std::make_unique<MemorylessPolicy>(settings.scripted);
    case PolicyKind::NearestCase: return std::make_unique<NearestCasePolicy>(settings.scripted);
    case PolicyKind::Remote: {
      auto transport = std::make_shared<HttpChatTransport>(settings.remote);
      return std::make_unique<RemotePolicy>(transport, settings.remote.model, settings.remote.params);
    }
  }
  throw PolicyError(PolicyErrc::InitFailed, "unknown policy kind");
}

std::string timestamp_now() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dualmem
