#include "dualmem/memory.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "dualmem/text.hpp"

namespace dualmem {

using ojson = nlohmann::ordered_json;

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::List: return "list";
    case OpKind::Append: return "append";
    case OpKind::Pop: return "pop";
    case OpKind::Consolidate: return "consolidate";
  }
  return "unknown";
}

OpKind kind_of(const MemoryOp& op) {
  return static_cast<OpKind>(op.index());
}

const char* to_string(MemoryErrc code) {
  switch (code) {
    case MemoryErrc::CapacityExceeded: return "CapacityExceeded";
    case MemoryErrc::IndexOutOfRange: return "IndexOutOfRange";
    case MemoryErrc::DuplicateIndex: return "DuplicateIndex";
    case MemoryErrc::EmptyRuleList: return "EmptyRuleList";
    case MemoryErrc::EmptyRuleText: return "EmptyRuleText";
    case MemoryErrc::InvalidRecord: return "InvalidRecord";
    case MemoryErrc::InvalidCapacity: return "InvalidCapacity";
    case MemoryErrc::MalformedSnapshot: return "MalformedSnapshot";
  }
  return "unknown";
}

MemoryError::MemoryError(MemoryErrc code, std::string message, std::optional<OpKind> op)
    : std::runtime_error(std::string(to_string(code)) +
                         (op ? std::string(" [") + to_string(*op) + "]" : std::string()) + ": " +
                         message),
      code_(code),
      detail_(std::move(message)),
      op_(op) {}

void validate_record(const CaseRecord& record) {
  if (text::trim(record.case_summary).empty())
    throw MemoryError(MemoryErrc::InvalidRecord, "case_summary is empty");
  if (text::trim(record.diagnosis).empty())
    throw MemoryError(MemoryErrc::InvalidRecord, "diagnosis is empty");
  if (text::trim(record.feedback).empty())
    throw MemoryError(MemoryErrc::InvalidRecord, "feedback is empty");
}

AgentState::AgentState(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw MemoryError(MemoryErrc::InvalidCapacity, "capacity must be positive");
}

MemoryView AgentState::list() const {
  MemoryView view;
  view.cases.reserve(short_term_.size());
  for (std::size_t i = 0; i < short_term_.size(); ++i) view.cases.push_back({i, short_term_[i]});
  view.rules = long_term_;
  return view;
}

void AgentState::append(CaseRecord record) {
  if (short_term_.size() >= capacity_) {
    throw MemoryError(MemoryErrc::CapacityExceeded,
                      "short-term memory is full (" + std::to_string(capacity_) +
                          "); pop before appending");
  }
  validate_record(record);
  short_term_.push_back(std::move(record));
}

std::vector<CaseRecord> AgentState::pop(const std::vector<std::size_t>& indices) {
  std::vector<std::size_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] >= short_term_.size()) {
      throw MemoryError(MemoryErrc::IndexOutOfRange,
                        "index " + std::to_string(sorted[i]) + " >= size " +
                            std::to_string(short_term_.size()));
    }
    if (i > 0 && sorted[i] == sorted[i - 1]) {
      throw MemoryError(MemoryErrc::DuplicateIndex, "index " + std::to_string(sorted[i]) +
                                                        " appears more than once");
    }
  }

  std::vector<CaseRecord> evicted;
  std::vector<CaseRecord> survivors;
  evicted.reserve(sorted.size());
  survivors.reserve(short_term_.size() - sorted.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < short_term_.size(); ++i) {
    if (next < sorted.size() && sorted[next] == i) {
      evicted.push_back(std::move(short_term_[i]));
      ++next;
    } else {
      survivors.push_back(std::move(short_term_[i]));
    }
  }
  short_term_ = std::move(survivors);
  return evicted;
}

std::size_t AgentState::consolidate(const std::vector<Rule>& rules) {
  if (rules.empty()) throw MemoryError(MemoryErrc::EmptyRuleList, "no rules given");
  std::vector<std::string> trimmed;
  trimmed.reserve(rules.size());
  for (const Rule& r : rules) {
    trimmed.push_back(text::trim(r.text));
    if (trimmed.back().empty()) throw MemoryError(MemoryErrc::EmptyRuleText, "rule text is empty");
  }

  std::size_t added = 0;
  for (std::string& t : trimmed) {
    bool present = std::any_of(long_term_.begin(), long_term_.end(),
                               [&](const Rule& r) { return r.text == t; });
    if (!present) {
      long_term_.push_back(Rule{std::move(t)});
      ++added;
    }
  }
  return added;
}

OpResult AgentState::apply(const MemoryOp& op) {
  OpResult result;
  result.kind = kind_of(op);
  try {
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, ListOp>) {
            result.listing = list();
          } else if constexpr (std::is_same_v<T, AppendOp>) {
            append(o.record);
          } else if constexpr (std::is_same_v<T, PopOp>) {
            result.evicted = pop(o.indices);
          } else {
            result.rules_added = consolidate(o.rules);
          }
        },
        op);
  } catch (const MemoryError& e) {
    if (e.op()) throw;
    throw MemoryError(e.code(), e.detail(), result.kind);
  }
  return result;
}

std::pair<AgentState, OpResult> apply_op(const AgentState& state, const MemoryOp& op) {
  AgentState next = state;
  OpResult result = next.apply(op);
  return {std::move(next), std::move(result)};
}

std::string AgentState::snapshot() const {
  ojson j;
  j["capacity"] = capacity_;
  ojson cases = ojson::array();
  for (const CaseRecord& c : short_term_) {
    ojson rec;
    rec["case_summary"] = c.case_summary;
    rec["diagnosis"] = c.diagnosis;
    rec["feedback"] = c.feedback;
    rec["reasoning"] = c.reasoning ? ojson(*c.reasoning) : ojson(nullptr);
    cases.push_back(std::move(rec));
  }
  j["short_term"] = std::move(cases);
  ojson rules = ojson::array();
  for (const Rule& r : long_term_) rules.push_back(r.text);
  j["long_term"] = std::move(rules);
  return j.dump();
}

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw MemoryError(MemoryErrc::MalformedSnapshot, why);
}

const ojson& require(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(std::string("missing key '") + key + "'");
  return *it;
}

std::string require_string(const ojson& obj, const char* key) {
  const ojson& v = require(obj, key);
  if (!v.is_string()) malformed(std::string("'") + key + "' is not a string");
  return v.get<std::string>();
}

}  // namespace

AgentState AgentState::restore(std::string_view bytes) {
  ojson j = ojson::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) malformed("not valid JSON");
  if (!j.is_object()) malformed("top level is not an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "capacity" && key != "short_term" && key != "long_term")
      malformed("unexpected key '" + key + "'");
  }
  const ojson& cap = require(j, "capacity");
  if (!cap.is_number_unsigned() || cap.get<std::uint64_t>() == 0)
    malformed("capacity must be a positive integer");

  AgentState state(cap.get<std::size_t>());
  const ojson& cases = require(j, "short_term");
  const ojson& rules = require(j, "long_term");
  if (!cases.is_array()) malformed("short_term is not an array");
  if (!rules.is_array()) malformed("long_term is not an array");
  if (cases.size() > state.capacity_) malformed("short_term exceeds capacity");

  for (const ojson& c : cases) {
    if (!c.is_object()) malformed("case record is not an object");
    for (const auto& [key, _] : c.items()) {
      if (key != "case_summary" && key != "diagnosis" && key != "feedback" && key != "reasoning")
        malformed("unexpected case record key '" + key + "'");
    }
    CaseRecord rec;
    rec.case_summary = require_string(c, "case_summary");
    rec.diagnosis = require_string(c, "diagnosis");
    rec.feedback = require_string(c, "feedback");
    if (auto it = c.find("reasoning"); it != c.end() && !it->is_null()) {
      if (!it->is_string()) malformed("'reasoning' is not a string or null");
      rec.reasoning = it->get<std::string>();
    }
    try {
      validate_record(rec);
    } catch (const MemoryError& e) {
      malformed(e.what());
    }
    state.short_term_.push_back(std::move(rec));
  }
  for (const ojson& r : rules) {
    if (!r.is_string()) malformed("rule is not a string");
    std::string t = r.get<std::string>();
    if (t.empty() || t != text::trim(t)) malformed("rule text is empty or untrimmed");
    if (std::any_of(state.long_term_.begin(), state.long_term_.end(),
                    [&](const Rule& x) { return x.text == t; }))
      malformed("duplicate rule");
    state.long_term_.push_back(Rule{std::move(t)});
  }
  return state;
}

}  // namespace dualmem
