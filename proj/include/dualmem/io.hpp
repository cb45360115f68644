#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualmem/case.hpp"
#include "dualmem/stream.hpp"

namespace dualmem {

using ojson = nlohmann::ordered_json;

// Unreadable or malformed input file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to "<path>.tmp" and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

// Case stream JSON-lines: {"id", "profile", "gold", "candidates", "descriptions"?}.
ojson to_json(const StreamCase& c);
StreamCase case_from_json(const nlohmann::json& j);
std::vector<StreamCase> parse_cases(std::string_view jsonl);
std::vector<StreamCase> read_cases(const std::filesystem::path& path);
std::string cases_to_jsonl(std::span<const StreamCase> cases);

ojson to_json(const RewardBreakdown& r);
ojson to_json(const StreamRecord& r);
StreamRecord record_from_json(const nlohmann::json& j);

// {"final_accuracy", "delta_acc": {"<n>": ...}, "rounds"}. delta_acc holds
// only the n with warmup <= n <= rounds.
ojson summary_json(std::span<const StreamRecord> records, std::span<const std::size_t> n_values,
                   std::size_t warmup);

std::string record_line(const StreamRecord& r);

struct Report {
  std::vector<StreamRecord> records;
  std::optional<nlohmann::json> summary;
};

// Record lines plus an optional trailing summary object.
Report read_report(const std::filesystem::path& path);

ojson to_json(const TrainerRecord& r);

// "round,cumulative_accuracy" header then one row per round.
std::string accuracy_csv(std::span<const StreamRecord> records);

// Structural validators; each returns the list of violations (empty = valid).
std::vector<std::string> validate_case_json(const nlohmann::json& j);
std::vector<std::string> validate_record_json(const nlohmann::json& j);
std::vector<std::string> validate_summary_json(const nlohmann::json& j);
std::vector<std::string> validate_trainer_json(const nlohmann::json& j);

// Appends lines to "<path>.partial"; commit() renames it to `path`. A run
// that dies before commit leaves only the .partial file behind.
class PartialFileWriter {
 public:
  explicit PartialFileWriter(std::filesystem::path path);
  PartialFileWriter(const PartialFileWriter&) = delete;
  PartialFileWriter& operator=(const PartialFileWriter&) = delete;

  void write_line(const std::string& line);
  void commit();
  const std::filesystem::path& partial_path() const noexcept { return partial_; }

 private:
  std::filesystem::path path_;
  std::filesystem::path partial_;
  std::ofstream out_;
};

}  // namespace dualmem
