#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualmem/policy.hpp"
#include "dualmem/remote.hpp"
#include "dualmem/reward.hpp"
#include "dualmem/stream.hpp"

namespace dualmem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PolicyKind { Memoryless, NearestCase, Remote };

const char* to_string(PolicyKind kind);

struct PolicySettings {
  PolicyKind kind = PolicyKind::NearestCase;
  ScriptedOptions scripted;
  RemoteConfig remote;
};

struct RunPaths {
  std::filesystem::path cases;
  std::filesystem::path report;
  std::filesystem::path manifest;                      // default: <report>.manifest.json
  std::optional<std::filesystem::path> snapshots;      // directory
  std::optional<std::filesystem::path> trainer_export;
};

struct RunConfig {
  StreamMode mode = StreamMode::LongHorizon;
  bool memory_augmented = false;
  PolicySettings policy;
  RewardConfig reward;
  std::size_t memory_capacity = kDefaultCapacity;
  std::size_t group_size = 8;
  bool rollout_groups = false;
  int rollout_threads = 1;
  bool normalize_std = false;
  int max_turns = kDefaultMaxTurns;
  std::size_t warmup = 10;
  std::uint64_t seed = 0;
  std::vector<std::size_t> report_n = {50, 100};
  RunPaths paths;

  StreamConfig stream_config() const;
  RolloutConfig rollout_config() const;
};

// Keys: base_url, path, model, api_key_env, timeout_ms, max_attempts,
// backoff_ms, backoff_multiplier, max_backoff_ms, max_concurrency, params.
RemoteConfig parse_remote_config(const nlohmann::json& j, const std::string& where = "remote");

// Validates everything and resolves relative paths against `base_dir`.
// Unknown keys are rejected. No filesystem access.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

// Normalized config with defaults filled in, output paths left out, and the
// cases file identified by content digest. Keys are sorted.
nlohmann::json canonical_config(const RunConfig& cfg, const std::string& cases_digest);
std::string config_hash(const RunConfig& cfg, const std::string& cases_digest);

std::unique_ptr<Policy> make_policy(const PolicySettings& settings);

// UTC ISO-8601 time; SOURCE_DATE_EPOCH, when set, replaces the clock.
std::string timestamp_now();

}  // namespace dualmem
