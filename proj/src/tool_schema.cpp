#include "dualmem/tool_schema.hpp"

namespace dualmem {

using nlohmann::json;

json remote_tool_schema() {
  json case_record = {
      {"type", "object"},
      {"description",
       "Case record to append (used with `append`). "
       "Should contain keys like case_summary, diagnosis, feedback, reasoning."},
      {"properties",
       {
           {"case_summary", {{"type", "string"}, {"description", "Brief summary of the patient case."}}},
           {"diagnosis", {{"type", "string"}, {"description", "The diagnosis that was made."}}},
           {"feedback",
            {{"type", "string"},
             {"description",
              "Whether the diagnosis was correct or incorrect, and the ground truth."}}},
       }},
  };
  json properties = {
      {"action",
       {{"type", "string"},
        {"enum", {"list", "append", "pop", "consolidate"}},
        {"description",
         "Operation to run. "
         "`list` returns current short-term cases and long-term rules. "
         "`append` adds a case record to short-term memory. "
         "`pop` evicts cases at given indices from short-term memory. "
         "`consolidate` adds distilled diagnostic rules to long-term memory."}}},
      {"case_record", std::move(case_record)},
      {"indices",
       {{"type", "array"},
        {"items", {{"type", "integer"}}},
        {"description", "Indices of short-term cases to evict (used with `pop`)."}}},
      {"rules",
       {{"type", "array"},
        {"items", {{"type", "string"}}},
        {"description",
         "Diagnostic rules to add to long-term memory (used with `consolidate`). "
         "Each rule should be a concise, reusable statement "
         "(e.g. symptom-disease associations)."}}},
  };
  return {
      {"type", "function"},
      {"function",
       {
           {"name", kMemoryToolName},
           {"description",
            "Dual memory for sequential diagnosis: a bounded short-term store of past "
            "cases with feedback and a long-term store of diagnostic rules."},
           {"parameters",
            {{"type", "object"}, {"properties", std::move(properties)}, {"required", {"action"}}}},
       }},
  };
}

namespace {

std::string string_field(const json& obj, const char* key, bool required) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) throw ToolCallError(std::string("case_record.") + key + " is required");
    return {};
  }
  if (!it->is_string()) throw ToolCallError(std::string("case_record.") + key + " must be a string");
  return it->get<std::string>();
}

}  // namespace

MemoryOp parse_tool_arguments(const json& arguments) {
  if (!arguments.is_object()) throw ToolCallError("tool arguments must be a JSON object");
  auto act = arguments.find("action");
  if (act == arguments.end() || !act->is_string()) throw ToolCallError("'action' is required");
  const std::string action = act->get<std::string>();

  if (action == "list") return ListOp{};

  if (action == "append") {
    auto it = arguments.find("case_record");
    if (it == arguments.end() || !it->is_object())
      throw ToolCallError("append requires a case_record object");
    CaseRecord rec;
    rec.case_summary = string_field(*it, "case_summary", true);
    rec.diagnosis = string_field(*it, "diagnosis", true);
    rec.feedback = string_field(*it, "feedback", true);
    if (it->contains("reasoning") && !(*it)["reasoning"].is_null())
      rec.reasoning = string_field(*it, "reasoning", false);
    return AppendOp{std::move(rec)};
  }

  if (action == "pop") {
    auto it = arguments.find("indices");
    if (it == arguments.end() || !it->is_array()) throw ToolCallError("pop requires an indices array");
    PopOp op;
    for (const json& v : *it) {
      if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ToolCallError("indices must be non-negative integers");
      op.indices.push_back(v.get<std::size_t>());
    }
    return op;
  }

  if (action == "consolidate") {
    auto it = arguments.find("rules");
    if (it == arguments.end() || !it->is_array())
      throw ToolCallError("consolidate requires a rules array");
    ConsolidateOp op;
    for (const json& v : *it) {
      if (!v.is_string()) throw ToolCallError("rules must be strings");
      op.rules.push_back(Rule{v.get<std::string>()});
    }
    return op;
  }

  throw ToolCallError("unknown action '" + action + "'");
}

json to_json(const CaseRecord& record) {
  json j = {{"case_summary", record.case_summary},
            {"diagnosis", record.diagnosis},
            {"feedback", record.feedback}};
  j["reasoning"] = record.reasoning ? json(*record.reasoning) : json(nullptr);
  return j;
}

json tool_arguments(const MemoryOp& op) {
  return std::visit(
      [](const auto& o) -> json {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ListOp>) {
          return {{"action", "list"}};
        } else if constexpr (std::is_same_v<T, AppendOp>) {
          return {{"action", "append"}, {"case_record", to_json(o.record)}};
        } else if constexpr (std::is_same_v<T, PopOp>) {
          return {{"action", "pop"}, {"indices", o.indices}};
        } else {
          json rules = json::array();
          for (const Rule& r : o.rules) rules.push_back(r.text);
          return {{"action", "consolidate"}, {"rules", std::move(rules)}};
        }
      },
      op);
}

json to_json(const MemoryView& view) {
  json cases = json::array();
  for (const IndexedCase& c : view.cases) {
    json rec = to_json(c.record);
    rec["index"] = c.index;
    cases.push_back(std::move(rec));
  }
  json rules = json::array();
  for (const Rule& r : view.rules) rules.push_back(r.text);
  return {{"short_term", std::move(cases)}, {"long_term", std::move(rules)}};
}

json tool_result(const OpResult& result) {
  json j = {{"ok", true}, {"action", to_string(result.kind)}};
  switch (result.kind) {
    case OpKind::List:
      if (result.listing) j["memory"] = to_json(*result.listing);
      break;
    case OpKind::Append:
      break;
    case OpKind::Pop: {
      json ev = json::array();
      for (const CaseRecord& c : result.evicted) ev.push_back(to_json(c));
      j["evicted"] = std::move(ev);
      break;
    }
    case OpKind::Consolidate:
      j["rules_added"] = result.rules_added;
      break;
  }
  return j;
}

}  // namespace dualmem
