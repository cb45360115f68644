#include "dualmem/cli.hpp"

#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dualmem/candidates.hpp"
#include "dualmem/config.hpp"
#include "dualmem/hash.hpp"
#include "dualmem/io.hpp"
#include "dualmem/metrics.hpp"
#include "dualmem/random.hpp"
#include "dualmem/remote.hpp"
#include "dualmem/stream.hpp"
#include "dualmem/text.hpp"
#include "dualmem/tool_schema.hpp"

#ifndef DUALMEM_VERSION
#define DUALMEM_VERSION "0.0.0"
#endif

namespace dualmem {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

ojson manifest_json(const RunConfig& cfg, const std::string& hash, const std::string& started,
                    const std::string& status, std::size_t rounds, std::size_t report_records) {
  ojson m;
  m["config_hash"] = hash;
  m["seed"] = cfg.seed;
  m["version"] = DUALMEM_VERSION;
  m["status"] = status;
  m["started_at"] = started;
  m["finished_at"] = timestamp_now();
  m["rounds"] = rounds;
  m["records"] = {{"report", report_records}};
  return m;
}

void write_snapshot(const RunConfig& cfg, const AgentState& state) {
  if (!cfg.paths.snapshots) return;
  fs::create_directories(*cfg.paths.snapshots);
  write_file_atomic(*cfg.paths.snapshots / "final_state.json", state.snapshot() + "\n");
}

std::string summary_line(const RunConfig& cfg, std::span<const StreamRecord> records) {
  return summary_json(records, cfg.report_n, cfg.warmup).dump();
}

}  // namespace

int cmd_run(const fs::path& config, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(config);
    ensure_parent(cfg.paths.report);
    ensure_parent(cfg.paths.manifest);
    if (cfg.paths.trainer_export) ensure_parent(*cfg.paths.trainer_export);
    if (cfg.paths.snapshots) fs::create_directories(*cfg.paths.snapshots);
  } catch (const ConfigError& e) {
    err << "ConfigInvalid: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "ConfigInvalid: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<StreamCase> cases;
  std::string digest;
  try {
    digest = sha256_hex(read_file(cfg.paths.cases));
    cases = read_cases(cfg.paths.cases);
    if (cases.empty()) throw InputError(cfg.paths.cases.string() + ": no cases");
  } catch (const InputError& e) {
    err << "CasesUnreadable: " << e.what() << "\n";
    return kExitInput;
  }

  std::unique_ptr<Policy> policy;
  try {
    policy = make_policy(cfg.policy);
  } catch (const std::exception& e) {
    err << "PolicyInitFailed: " << e.what() << "\n";
    return kExitPolicy;
  }

  const std::string hash = config_hash(cfg, digest);
  const std::string started = timestamp_now();
  StreamConfig scfg = cfg.stream_config();

  if (cfg.rollout_groups) {
    try {
      RolloutResult res = run_rollout_groups(*policy, cases, scfg, cfg.rollout_config());
      std::string report;
      for (const StreamRecord& r : res.committed) report += record_line(r) + "\n";
      report += summary_line(cfg, res.committed) + "\n";
      write_file_atomic(cfg.paths.report, report);
      std::string exports;
      std::map<std::int64_t, std::size_t> per_round;
      for (const TrainerRecord& t : res.exports) {
        exports += to_json(t).dump() + "\n";
        ++per_round[t.round];
      }
      write_file_atomic(*cfg.paths.trainer_export, exports);
      write_snapshot(cfg, res.final_state);
      ojson m = manifest_json(cfg, hash, started, "complete", cases.size(), res.committed.size());
      m["records"]["trainer_export"] = res.exports.size();
      ojson rounds = ojson::object();
      for (const auto& [round, n] : per_round) rounds[std::to_string(round)] = n;
      m["records"]["trainer_export_per_round"] = std::move(rounds);
      write_file_atomic(cfg.paths.manifest, m.dump(2) + "\n");
      out << "rounds: " << cases.size() << "  final_accuracy: " << final_accuracy(std::span<const StreamRecord>(res.committed))
          << "  trainer records: " << res.exports.size() << "\n";
      return kExitOk;
    } catch (const StreamAborted& e) {
      err << "RemoteTransport: " << e.what() << "\n";
      std::string report;
      for (const StreamRecord& r : e.partial()) report += record_line(r) + "\n";
      write_file_atomic(cfg.paths.report.string() + ".partial", report);
      write_file_atomic(cfg.paths.manifest,
                        manifest_json(cfg, hash, started, "partial", cases.size(), e.partial().size()).dump(2) + "\n");
      return kExitPartial;
    } catch (const std::exception& e) {
      err << "RolloutFailed: " << e.what() << "\n";
      return kExitPolicy;
    }
  }

  PartialFileWriter writer(cfg.paths.report);
  try {
    StreamResult res = run_stream(*policy, cases, scfg,
                                  [&](const StreamRecord& r) { writer.write_line(record_line(r)); });
    writer.write_line(summary_line(cfg, res.records));
    writer.commit();
    write_snapshot(cfg, res.final_state);
    write_file_atomic(cfg.paths.manifest,
                      manifest_json(cfg, hash, started, "complete", cases.size(), res.records.size()).dump(2) + "\n");
    std::size_t failed = 0;
    for (const StreamRecord& r : res.records) failed += r.error ? 1 : 0;
    out << "rounds: " << res.records.size()
        << "  final_accuracy: " << final_accuracy(std::span<const StreamRecord>(res.records));
    if (failed) out << "  failed rounds: " << failed;
    out << "\n";
    return kExitOk;
  } catch (const StreamAborted& e) {
    err << "RemoteTransport: " << e.what() << " (partial report at " << writer.partial_path().string()
        << ")\n";
    write_file_atomic(cfg.paths.manifest,
                      manifest_json(cfg, hash, started, "partial", cases.size(), e.partial().size()).dump(2) + "\n");
    return kExitPartial;
  } catch (const AuditViolation& e) {
    err << "AuditViolation: " << e.what() << "\n";
    return kExitPolicy;
  }
}

int cmd_gen_synthetic(const SyntheticParams& params, const fs::path& out_path,
                      const std::optional<fs::path>& pool_out, std::ostream& out, std::ostream& err) {
  std::optional<SyntheticStream> gen;
  try {
    gen = generate_synthetic(params);
  } catch (const std::exception& e) {
    err << "ConfigInvalid: " << e.what() << "\n";
    return kExitConfig;
  }
  const SyntheticStream& s = *gen;
  ensure_parent(out_path);
  write_file_atomic(out_path, cases_to_jsonl(s.cases));
  if (pool_out) {
    ensure_parent(*pool_out);
    write_file_atomic(*pool_out, text::join(s.pool.labels(), "\n") + "\n");
  }
  out << "wrote " << s.cases.size() << " cases to " << out_path.string() << "\n";
  return kExitOk;
}

int cmd_build_candidates(const CandidateCommand& c, std::ostream& out, std::ostream& err) {
  std::vector<json> inputs;
  std::optional<LabelPool> pool;
  try {
    pool = LabelPool::load(c.pool);
    std::istringstream in(read_file(c.cases));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("profile") ||
          !j.contains("gold") || !j["id"].is_string() || !j["profile"].is_string() || !j["gold"].is_string())
        throw InputError(c.cases.string() + ": line " + std::to_string(lineno) +
                         ": expected {\"id\", \"profile\", \"gold\"}");
      inputs.push_back(std::move(j));
    }
  } catch (const InputError& e) {
    err << "CasesUnreadable: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {  // unreadable or invalid label pool
    err << "CasesUnreadable: " << e.what() << "\n";
    return kExitInput;
  }

  std::unique_ptr<RelatednessScorer> scorer;
  CachedRemoteScorer* remote = nullptr;
  if (c.scorer == "lexical") {
    scorer = std::make_unique<LexicalScorer>();
  } else if (c.scorer == "remote") {
    if (!c.remote_config || !c.cache) {
      err << "ConfigInvalid: the remote scorer needs --remote-config and --cache\n";
      return kExitConfig;
    }
    try {
      json j = json::parse(read_file(*c.remote_config));
      RemoteConfig rc = parse_remote_config(j, "remote");
      auto owned = std::make_unique<CachedRemoteScorer>(std::make_shared<HttpChatTransport>(rc), rc.model,
                                                        *c.cache);
      remote = owned.get();
      scorer = std::move(owned);
    } catch (const std::exception& e) {
      err << "ConfigInvalid: " << e.what() << "\n";
      return kExitConfig;
    }
  } else {
    err << "ConfigInvalid: unknown scorer '" << c.scorer << "'\n";
    return kExitConfig;
  }

  CandidateOptions opts;
  opts.n_distractors = c.n_distractors;
  std::vector<StreamCase> cases;
  int code = kExitOk;
  try {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      StreamCase sc;
      sc.patient.id = inputs[i]["id"].get<std::string>();
      sc.patient.profile = inputs[i]["profile"].get<std::string>();
      sc.patient.gold_label = inputs[i]["gold"].get<std::string>();
      sc.candidates = build_candidates(sc.patient.gold_label, *pool, *scorer, derive_seed(c.seed, i + 1, 0xCA4D), opts);
      cases.push_back(std::move(sc));
    }
  } catch (const CandidateError& e) {
    err << "CandidateError: " << e.what() << "\n";
    code = kExitInput;
  } catch (const PolicyError& e) {
    err << "RemoteTransport: " << e.what() << "\n";
    code = kExitPolicy;
  }
  if (remote) remote->flush();  // keep whatever was scored, even on failure
  if (code != kExitOk) return code;
  ensure_parent(c.out);
  write_file_atomic(c.out, cases_to_jsonl(cases));
  out << "wrote " << cases.size() << " cases to " << c.out.string() << "\n";
  return kExitOk;
}

int cmd_metrics(const fs::path& report, const std::vector<std::size_t>& n_values, std::size_t warmup,
                const std::optional<fs::path>& csv, std::ostream& out, std::ostream& err) {
  Report r;
  try {
    r = read_report(report);
  } catch (const InputError& e) {
    err << "ReportUnreadable: " << e.what() << "\n";
    return kExitInput;
  }
  try {
    auto correct = correctness(r.records);
    ojson j;
    j["rounds"] = r.records.size();
    j["final_accuracy"] = final_accuracy(correct);
    j["delta_acc"] = ojson::object();
    for (std::size_t n : n_values) j["delta_acc"][std::to_string(n)] = delta_acc_at(correct, n, warmup);
    out << j.dump(2) << "\n";
  } catch (const MetricsError& e) {
    err << "MetricsError: " << e.what() << "\n";
    return kExitInput;
  }
  if (csv) {
    ensure_parent(*csv);
    write_file_atomic(*csv, accuracy_csv(r.records));
  }
  return kExitOk;
}

int cmd_validate_schema(const std::string& kind, const fs::path& file, std::ostream& out,
                        std::ostream& err) {
  std::string body;
  try {
    body = read_file(file);
  } catch (const InputError& e) {
    err << e.what() << "\n";
    return kExitInput;
  }
  std::vector<std::string> problems;

  if (kind == "snapshot") {
    try {
      AgentState::restore(body);
    } catch (const MemoryError& e) {
      problems.push_back(e.what());
    }
  } else if (kind == "tool-schema") {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) {
      problems.push_back("not valid JSON");
    } else if (j != remote_tool_schema()) {
      problems.push_back("does not match the memory tool schema");
    }
  } else if (kind == "cases" || kind == "report" || kind == "trainer-export") {
    std::istringstream in(body);
    std::string line;
    std::size_t lineno = 0;
    std::vector<json> lines;
    std::vector<std::size_t> numbers;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        problems.push_back("line " + std::to_string(lineno) + ": not valid JSON");
        continue;
      }
      lines.push_back(std::move(j));
      numbers.push_back(lineno);
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::vector<std::string> errs;
      if (kind == "cases") {
        errs = validate_case_json(lines[i]);
      } else if (kind == "trainer-export") {
        errs = validate_trainer_json(lines[i]);
      } else if (i + 1 == lines.size() && lines[i].is_object() && lines[i].contains("final_accuracy")) {
        errs = validate_summary_json(lines[i]);
      } else {
        errs = validate_record_json(lines[i]);
      }
      for (const auto& e : errs) problems.push_back("line " + std::to_string(numbers[i]) + ": " + e);
    }
  } else {
    err << "unknown schema kind '" << kind << "'\n";
    return kExitConfig;
  }

  if (problems.empty()) {
    out << file.string() << ": ok\n";
    return kExitOk;
  }
  for (const auto& p : problems) err << file.string() << ": " << p << "\n";
  return kExitInput;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Dual-memory diagnostic agent harness"};
  app.set_version_flag("--version", DUALMEM_VERSION);
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Execute a run config");
  run->add_option("--config", config, "Run config (JSON)")->required();

  SyntheticParams sp;
  std::string syn_out, syn_pool;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a seeded synthetic case stream");
  gen->add_option("--rounds", sp.rounds);
  gen->add_option("--subtypes", sp.subtypes);
  gen->add_option("--recurrence", sp.recurrence);
  gen->add_option("--seed", sp.seed);
  gen->add_option("--pool-size", sp.pool_size);
  gen->add_option("--distractors", sp.n_distractors);
  gen->add_option("--out", syn_out)->required();
  gen->add_option("--pool-out", syn_pool);

  CandidateCommand cc;
  std::string cc_cache, cc_remote;
  auto* cand = app.add_subcommand("build-candidates", "Attach candidate sets to cases");
  cand->add_option("--cases", cc.cases)->required();
  cand->add_option("--pool", cc.pool)->required();
  cand->add_option("--out", cc.out)->required();
  cand->add_option("--n", cc.n_distractors, "Distractors per case");
  cand->add_option("--seed", cc.seed);
  cand->add_option("--scorer", cc.scorer)->check(CLI::IsMember({"lexical", "remote"}));
  cand->add_option("--cache", cc_cache, "Relatedness cache (JSON-lines)");
  cand->add_option("--remote-config", cc_remote, "Remote endpoint settings (JSON)");

  std::string report, csv;
  std::vector<std::size_t> ns = {50, 100};
  std::size_t warmup = 10;
  auto* met = app.add_subcommand("metrics", "Accuracy metrics for a report");
  met->add_option("--report", report)->required();
  met->add_option("--n", ns)->delimiter(',');
  met->add_option("--warmup", warmup);
  met->add_option("--csv", csv, "Write the accuracy trajectory");

  std::string kind, file;
  auto* val = app.add_subcommand("validate-schema", "Check a file against its schema");
  val->add_option("--kind", kind)
      ->required()
      ->check(CLI::IsMember({"cases", "report", "trainer-export", "snapshot", "tool-schema"}));
  val->add_option("file", file)->required();

  auto* schema = app.add_subcommand("tool-schema", "Print the memory tool schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, std::cout, std::cerr);
    if (*gen) {
      return cmd_gen_synthetic(sp, syn_out,
                               syn_pool.empty() ? std::nullopt : std::optional<fs::path>(syn_pool),
                               std::cout, std::cerr);
    }
    if (*cand) {
      if (!cc_cache.empty()) cc.cache = cc_cache;
      if (!cc_remote.empty()) cc.remote_config = cc_remote;
      return cmd_build_candidates(cc, std::cout, std::cerr);
    }
    if (*met) {
      return cmd_metrics(report, ns, warmup, csv.empty() ? std::nullopt : std::optional<fs::path>(csv),
                         std::cout, std::cerr);
    }
    if (*val) return cmd_validate_schema(kind, file, std::cout, std::cerr);
    if (*schema) {
      std::cout << remote_tool_schema().dump(2) << "\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

}  // namespace dualmem
