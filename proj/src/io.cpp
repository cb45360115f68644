#include "dualmem/io.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "dualmem/metrics.hpp"
#include "dualmem/text.hpp"

namespace dualmem {

using nlohmann::json;

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ojson to_json(const StreamCase& c) {
  ojson j;
  j["id"] = c.patient.id;
  j["profile"] = c.patient.profile;
  j["gold"] = c.patient.gold_label;
  j["candidates"] = c.candidates.labels;
  if (!c.candidates.descriptions.empty()) {
    ojson d = ojson::object();
    for (const auto& [k, v] : c.candidates.descriptions) d[k] = v;
    j["descriptions"] = std::move(d);
  }
  return j;
}

std::vector<std::string> validate_case_json(const json& j) {
  std::vector<std::string> errs;
  if (!j.is_object()) return {"case is not an object"};
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "profile" && key != "gold" && key != "candidates" &&
        key != "descriptions")
      errs.push_back("unknown key '" + key + "'");
  }
  for (const char* key : {"id", "profile", "gold"}) {
    if (!j.contains(key) || !j[key].is_string()) errs.push_back(std::string("'") + key + "' must be a string");
  }
  if (!j.contains("candidates") || !j["candidates"].is_array()) {
    errs.push_back("'candidates' must be an array");
  } else {
    for (const json& c : j["candidates"]) {
      if (!c.is_string()) {
        errs.push_back("candidates must be strings");
        break;
      }
    }
  }
  if (j.contains("descriptions")) {
    if (!j["descriptions"].is_object()) {
      errs.push_back("'descriptions' must be an object");
    } else {
      for (const auto& [k, v] : j["descriptions"].items()) {
        if (!v.is_string()) errs.push_back("description for '" + k + "' must be a string");
      }
    }
  }
  if (errs.empty()) {
    try {
      validate_stream_case(case_from_json(j));
    } catch (const std::exception& e) {
      errs.push_back(e.what());
    }
  }
  return errs;
}

StreamCase case_from_json(const json& j) {
  StreamCase c;
  c.patient.id = j.at("id").get<std::string>();
  c.patient.profile = j.at("profile").get<std::string>();
  c.patient.gold_label = j.at("gold").get<std::string>();
  c.candidates.labels = j.at("candidates").get<std::vector<std::string>>();
  if (j.contains("descriptions")) {
    for (const auto& [k, v] : j["descriptions"].items()) c.candidates.descriptions[k] = v.get<std::string>();
  }
  return c;
}

std::vector<StreamCase> parse_cases(std::string_view jsonl) {
  std::vector<StreamCase> cases;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw InputError("line " + std::to_string(lineno) + ": not valid JSON");
    auto errs = validate_case_json(j);
    if (!errs.empty()) throw InputError("line " + std::to_string(lineno) + ": " + errs.front());
    cases.push_back(case_from_json(j));
  }
  std::set<std::string> ids;
  for (const StreamCase& c : cases) {
    if (!ids.insert(c.patient.id).second) throw InputError("duplicate case id '" + c.patient.id + "'");
  }
  return cases;
}

std::vector<StreamCase> read_cases(const std::filesystem::path& path) {
  try {
    return parse_cases(read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string cases_to_jsonl(std::span<const StreamCase> cases) {
  std::string out;
  for (const StreamCase& c : cases) {
    out += to_json(c).dump();
    out += '\n';
  }
  return out;
}

ojson to_json(const RewardBreakdown& r) {
  ojson j;
  j["r_diag"] = r.r_diag;
  j["r_mem"] = r.r_mem;
  j["lambda_diag"] = r.lambda_diag;
  j["lambda_mem"] = r.lambda_mem;
  j["total"] = r.total;
  return j;
}

ojson to_json(const StreamRecord& r) {
  ojson j;
  j["round"] = r.round_index;
  j["case_id"] = r.case_id;
  j["prediction"] = r.prediction;
  j["correct"] = r.correct;
  j["occupancy_after"] = r.occupancy_after;
  j["rules_after"] = r.rules_after;
  j["turns_used"] = r.turns_used;
  j["reward"] = r.reward ? to_json(*r.reward) : ojson(nullptr);
  if (r.error) j["error"] = *r.error;
  return j;
}

std::string record_line(const StreamRecord& r) {
  return to_json(r).dump();
}

std::vector<std::string> validate_record_json(const json& j) {
  std::vector<std::string> errs;
  if (!j.is_object()) return {"record is not an object"};
  static const std::set<std::string> known = {"round", "case_id", "prediction", "correct",
                                              "occupancy_after", "rules_after", "turns_used",
                                              "reward", "error"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) errs.push_back("unknown key '" + key + "'");
  }
  auto need = [&](const char* key, bool ok) {
    if (!j.contains(key) || !ok) errs.push_back(std::string("'") + key + "' missing or ill-typed");
  };
  need("round", j.contains("round") && j["round"].is_number_integer() && j["round"].get<long long>() >= 1);
  need("case_id", j.contains("case_id") && j["case_id"].is_string());
  need("prediction", j.contains("prediction") && j["prediction"].is_string());
  need("correct", j.contains("correct") && j["correct"].is_boolean());
  need("occupancy_after", j.contains("occupancy_after") && j["occupancy_after"].is_number_unsigned());
  need("rules_after", j.contains("rules_after") && j["rules_after"].is_number_unsigned());
  need("turns_used", j.contains("turns_used") && j["turns_used"].is_number_integer());
  if (j.contains("reward") && !j["reward"].is_null()) {
    const json& r = j["reward"];
    for (const char* key : {"r_diag", "r_mem", "lambda_diag", "lambda_mem", "total"}) {
      if (!r.is_object() || !r.contains(key) || !r[key].is_number())
        errs.push_back(std::string("reward.") + key + " missing or not a number");
    }
  }
  if (j.contains("error") && !j["error"].is_string()) errs.push_back("'error' must be a string");
  return errs;
}

StreamRecord record_from_json(const json& j) {
  auto errs = validate_record_json(j);
  if (!errs.empty()) throw InputError(errs.front());
  StreamRecord r;
  r.round_index = j["round"].get<std::int64_t>();
  r.case_id = j["case_id"].get<std::string>();
  r.prediction = j["prediction"].get<std::string>();
  r.correct = j["correct"].get<bool>();
  r.occupancy_after = j["occupancy_after"].get<std::size_t>();
  r.rules_after = j["rules_after"].get<std::size_t>();
  r.turns_used = j["turns_used"].get<int>();
  if (j.contains("reward") && !j["reward"].is_null()) {
    const json& w = j["reward"];
    r.reward = RewardBreakdown{w["r_diag"].get<double>(), w["r_mem"].get<double>(),
                               w["lambda_diag"].get<double>(), w["lambda_mem"].get<double>(),
                               w["total"].get<double>()};
  }
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  return r;
}

ojson summary_json(std::span<const StreamRecord> records, std::span<const std::size_t> n_values,
                   std::size_t warmup) {
  const auto correct = correctness(records);
  ojson j;
  j["final_accuracy"] = final_accuracy(correct);
  ojson delta = ojson::object();
  for (std::size_t n : n_values) {
    if (n >= warmup && n <= correct.size() && warmup >= 1)
      delta[std::to_string(n)] = delta_acc_at(correct, n, warmup);
  }
  j["delta_acc"] = std::move(delta);
  j["rounds"] = records.size();
  return j;
}

std::vector<std::string> validate_summary_json(const json& j) {
  std::vector<std::string> errs;
  if (!j.is_object()) return {"summary is not an object"};
  for (const auto& [key, _] : j.items()) {
    if (key != "final_accuracy" && key != "delta_acc" && key != "rounds")
      errs.push_back("unknown summary key '" + key + "'");
  }
  if (!j.contains("final_accuracy") || !j["final_accuracy"].is_number())
    errs.push_back("'final_accuracy' missing or not a number");
  if (!j.contains("rounds") || !j["rounds"].is_number_unsigned())
    errs.push_back("'rounds' missing or not a non-negative integer");
  if (!j.contains("delta_acc") || !j["delta_acc"].is_object()) {
    errs.push_back("'delta_acc' missing or not an object");
  } else {
    for (const auto& [k, v] : j["delta_acc"].items()) {
      if (!v.is_number()) errs.push_back("delta_acc['" + k + "'] is not a number");
    }
  }
  return errs;
}

Report read_report(const std::filesystem::path& path) {
  const std::string body = read_file(path);
  Report report;
  std::istringstream in(body);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto where = [&] { return path.string() + " line " + std::to_string(lineno) + ": "; };
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw InputError(where() + "not valid JSON");
    if (j.is_object() && j.contains("final_accuracy")) {
      auto errs = validate_summary_json(j);
      if (!errs.empty()) throw InputError(where() + errs.front());
      report.summary = std::move(j);
      continue;
    }
    if (report.summary) throw InputError(where() + "record after the summary line");
    try {
      report.records.push_back(record_from_json(j));
    } catch (const InputError& e) {
      throw InputError(where() + e.what());
    }
  }
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    if (report.records[i].round_index != static_cast<std::int64_t>(i + 1))
      throw InputError(path.string() + ": rounds are not contiguous from 1");
  }
  return report;
}

ojson to_json(const TrainerRecord& r) {
  ojson j;
  j["round"] = r.round;
  j["group_id"] = r.group_id;
  j["rollout_id"] = r.rollout_id;
  j["reward"] = r.reward;
  j["advantage"] = r.advantage;
  j["prompt_hash"] = r.prompt_hash;
  j["response_text"] = r.response_text;
  return j;
}

std::vector<std::string> validate_trainer_json(const json& j) {
  std::vector<std::string> errs;
  if (!j.is_object()) return {"trainer record is not an object"};
  static const std::set<std::string> keys = {"round",     "group_id",    "rollout_id",   "reward",
                                             "advantage", "prompt_hash", "response_text"};
  for (const auto& [key, _] : j.items()) {
    if (!keys.count(key)) errs.push_back("unknown key '" + key + "'");
  }
  for (const std::string& key : keys) {
    if (!j.contains(key)) errs.push_back("missing key '" + key + "'");
  }
  if (!errs.empty()) return errs;
  if (!j["round"].is_number_integer() || j["round"].get<long long>() < 1)
    errs.push_back("'round' must be a positive integer");
  if (!j["group_id"].is_number_integer() || j["group_id"].get<long long>() < 0)
    errs.push_back("'group_id' must be a non-negative integer");
  if (!j["rollout_id"].is_number_unsigned()) errs.push_back("'rollout_id' must be a non-negative integer");
  for (const char* key : {"reward", "advantage"}) {
    if (!j[key].is_number() || !std::isfinite(j[key].get<double>()))
      errs.push_back(std::string("'") + key + "' must be a finite number");
  }
  const json& h = j["prompt_hash"];
  if (!h.is_string() || h.get<std::string>().size() != 64 ||
      h.get<std::string>().find_first_not_of("0123456789abcdef") != std::string::npos)
    errs.push_back("'prompt_hash' must be 64 lowercase hex digits");
  if (!j["response_text"].is_string()) errs.push_back("'response_text' must be a string");
  return errs;
}

std::string accuracy_csv(std::span<const StreamRecord> records) {
  std::string out = "round,cumulative_accuracy\n";
  const auto traj = accuracy_trajectory(correctness(records));
  char buf[64];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, traj[i]);
    out += buf;
  }
  return out;
}

PartialFileWriter::PartialFileWriter(std::filesystem::path path)
    : path_(std::move(path)), partial_(path_) {
  partial_ += ".partial";
  out_.open(partial_, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot write " + partial_.string());
}

void PartialFileWriter::write_line(const std::string& line) {
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed for " + partial_.string());
}

void PartialFileWriter::commit() {
  out_.close();
  std::filesystem::rename(partial_, path_);
}

}  // namespace dualmem
