#include "dualmem/case.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace dualmem {

namespace {
constexpr std::string_view kGroundTruthTag = "Ground truth: ";
}  // namespace

bool CandidateSet::contains(std::string_view label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

void validate_stream_case(const StreamCase& c) {
  if (c.patient.id.empty()) throw std::invalid_argument("case id is empty");
  if (c.patient.gold_label.empty())
    throw std::invalid_argument("case '" + c.patient.id + "' has an empty gold label");
  if (c.candidates.labels.empty())
    throw std::invalid_argument("case '" + c.patient.id + "' has no candidates");
  std::set<std::string_view> seen;
  for (const std::string& l : c.candidates.labels) {
    if (!seen.insert(l).second)
      throw std::invalid_argument("case '" + c.patient.id + "' has duplicate candidate '" + l + "'");
  }
  if (!seen.count(c.patient.gold_label))
    throw std::invalid_argument("case '" + c.patient.id + "' candidates do not include the gold label");
}

std::string Feedback::text() const {
  std::string out = correct ? "Correct. " : "Incorrect. ";
  out.append(kGroundTruthTag);
  out.append(gold_label);
  if (note && !note->empty()) {
    out.append("\nNote: ");
    out.append(*note);
  }
  return out;
}

std::optional<std::string> ground_truth_from_feedback(std::string_view feedback_text) {
  auto pos = feedback_text.find(kGroundTruthTag);
  if (pos == std::string_view::npos) return std::nullopt;
  pos += kGroundTruthTag.size();
  auto end = feedback_text.find('\n', pos);
  if (end == std::string_view::npos) end = feedback_text.size();
  if (end == pos) return std::nullopt;
  return std::string(feedback_text.substr(pos, end - pos));
}

}  // namespace dualmem
