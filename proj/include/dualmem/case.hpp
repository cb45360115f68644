#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dualmem {

struct PatientCase {
  std::string id;
  std::string profile;
  std::string gold_label;  // withheld from the policy until feedback
};

// Closed-set candidate labels for one round.
struct CandidateSet {
  std::vector<std::string> labels;
  std::map<std::string, std::string> descriptions;

  bool contains(std::string_view label) const;
};

// A case plus its candidate set: one round of a stream.
struct StreamCase {
  PatientCase patient;
  CandidateSet candidates;
};

// Throws std::invalid_argument unless the id and gold label are non-empty,
// the labels are distinct and the gold label appears exactly once.
void validate_stream_case(const StreamCase& c);

struct Feedback {
  bool correct = false;
  std::string gold_label;
  std::optional<std::string> note;

  // "Correct. Ground truth: <gold>" or "Incorrect. Ground truth: <gold>",
  // followed by "\nNote: <note>" when a note is present.
  std::string text() const;
};

// Recovers the ground-truth label from Feedback::text() output.
std::optional<std::string> ground_truth_from_feedback(std::string_view feedback_text);

}  // namespace dualmem
