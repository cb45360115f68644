#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualmem/synthetic.hpp"

namespace dualmem {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInput = 3,
  kExitPolicy = 4,
  kExitPartial = 5,
};

// Executes a run config: stream (or rollout groups), report, snapshots,
// trainer export and manifest.
int cmd_run(const std::filesystem::path& config, std::ostream& out, std::ostream& err);

int cmd_gen_synthetic(const SyntheticParams& params, const std::filesystem::path& out_path,
                      const std::optional<std::filesystem::path>& pool_out, std::ostream& out,
                      std::ostream& err);

struct CandidateCommand {
  std::filesystem::path cases;  // JSON-lines: {"id","profile","gold"}; candidates ignored
  std::filesystem::path pool;   // one label per line
  std::filesystem::path out;
  std::size_t n_distractors = 199;
  std::uint64_t seed = 0;
  std::string scorer = "lexical";  // or "remote"
  std::optional<std::filesystem::path> cache;
  std::optional<std::filesystem::path> remote_config;  // JSON with the policy.remote keys
};

int cmd_build_candidates(const CandidateCommand& c, std::ostream& out, std::ostream& err);

int cmd_metrics(const std::filesystem::path& report, const std::vector<std::size_t>& n_values,
                std::size_t warmup, const std::optional<std::filesystem::path>& csv,
                std::ostream& out, std::ostream& err);

// kind: cases | report | trainer-export | snapshot | tool-schema
int cmd_validate_schema(const std::string& kind, const std::filesystem::path& file,
                        std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace dualmem
