#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dualmem {

// One outcome-annotated past case held in short-term memory.
struct CaseRecord {
  std::string case_summary;
  std::string diagnosis;  // the prediction that was made
  std::string feedback;   // correctness and ground truth
  std::optional<std::string> reasoning;

  bool operator==(const CaseRecord&) const = default;
};

// A distilled diagnostic statement in long-term memory. Text is stored
// trimmed; construction does not validate, AgentState::consolidate does.
struct Rule {
  std::string text;

  bool operator==(const Rule&) const = default;
};

enum class OpKind { List, Append, Pop, Consolidate };

const char* to_string(OpKind kind);

struct ListOp {
  bool operator==(const ListOp&) const = default;
};
struct AppendOp {
  CaseRecord record;
  bool operator==(const AppendOp&) const = default;
};
struct PopOp {
  std::vector<std::size_t> indices;
  bool operator==(const PopOp&) const = default;
};
struct ConsolidateOp {
  std::vector<Rule> rules;
  bool operator==(const ConsolidateOp&) const = default;
};

using MemoryOp = std::variant<ListOp, AppendOp, PopOp, ConsolidateOp>;

OpKind kind_of(const MemoryOp& op);

enum class MemoryErrc {
  CapacityExceeded,
  IndexOutOfRange,
  DuplicateIndex,
  EmptyRuleList,
  EmptyRuleText,
  InvalidRecord,
  InvalidCapacity,
  MalformedSnapshot,
};

const char* to_string(MemoryErrc code);

// Every failing operation leaves the state untouched.
class MemoryError : public std::runtime_error {
 public:
  MemoryError(MemoryErrc code, std::string message, std::optional<OpKind> op = std::nullopt);

  MemoryErrc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  // Set when the failure came through AgentState::apply.
  std::optional<OpKind> op() const noexcept { return op_; }

 private:
  MemoryErrc code_;
  std::string detail_;
  std::optional<OpKind> op_;
};

struct IndexedCase {
  std::size_t index;
  CaseRecord record;

  bool operator==(const IndexedCase&) const = default;
};

struct MemoryView {
  std::vector<IndexedCase> cases;
  std::vector<Rule> rules;

  bool operator==(const MemoryView&) const = default;
};

struct OpResult {
  OpKind kind = OpKind::List;
  std::optional<MemoryView> listing;  // List
  std::vector<CaseRecord> evicted;    // Pop, ascending index order
  std::size_t rules_added = 0;        // Consolidate
};

inline constexpr std::size_t kDefaultCapacity = 10;

// Dual memory: a bounded, ordered short-term case cluster and an
// append-only long-term rule cluster.
class AgentState {
 public:
  explicit AgentState(std::size_t capacity = kDefaultCapacity);

  std::size_t capacity() const noexcept { return capacity_; }
  const std::vector<CaseRecord>& short_term() const noexcept { return short_term_; }
  const std::vector<Rule>& long_term() const noexcept { return long_term_; }
  std::size_t occupancy() const noexcept { return short_term_.size(); }

  MemoryView list() const;

  // Throws CapacityExceeded when the cluster is full; the caller must pop first.
  void append(CaseRecord record);

  // Atomic: any out-of-range or repeated index aborts the whole pop.
  std::vector<CaseRecord> pop(const std::vector<std::size_t>& indices);

  // Appends each rule whose trimmed text is not already present. Returns the
  // number inserted.
  std::size_t consolidate(const std::vector<Rule>& rules);

  OpResult apply(const MemoryOp& op);

  // JSON snapshot: {"capacity", "short_term", "long_term"}.
  std::string snapshot() const;
  static AgentState restore(std::string_view bytes);

  bool operator==(const AgentState&) const = default;

 private:
  std::size_t capacity_;
  std::vector<CaseRecord> short_term_;
  std::vector<Rule> long_term_;
};

// Pure form of AgentState::apply.
std::pair<AgentState, OpResult> apply_op(const AgentState& state, const MemoryOp& op);

// Throws MemoryError(InvalidRecord) unless case_summary, diagnosis and
// feedback are non-empty after trimming.
void validate_record(const CaseRecord& record);

}  // namespace dualmem
