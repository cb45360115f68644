#include "dualmem/prompts.hpp"

namespace dualmem {

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out.append(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

std::string render_choices(const CandidateSet& candidates) {
  std::string out;
  for (const std::string& label : candidates.labels) {
    out.append("- ");
    out.append(label);
    if (auto it = candidates.descriptions.find(label); it != candidates.descriptions.end()) {
      out.append(": ");
      out.append(it->second);
    }
    out.push_back('\n');
  }
  return out;
}

std::string render_memory(const MemoryView& view) {
  std::string out = "Short-term cases:\n";
  if (view.cases.empty()) out.append("(none)\n");
  for (const IndexedCase& c : view.cases) {
    out.append("[" + std::to_string(c.index) + "] " + c.record.case_summary);
    out.append(" | diagnosis: " + c.record.diagnosis);
    out.append(" | feedback: " + c.record.feedback);
    if (c.record.reasoning) out.append(" | rationale: " + *c.record.reasoning);
    out.push_back('\n');
  }
  out.append("Long-term rules:\n");
  if (view.rules.empty()) out.append("(none)\n");
  for (const Rule& r : view.rules) out.append("- " + r.text + "\n");
  return out;
}

std::string render_round_prompt(PromptKind kind, std::string_view profile,
                                const CandidateSet& candidates, const MemoryView& memory,
                                std::int64_t round_index) {
  const std::string choices = render_choices(candidates);
  const std::string mem = render_memory(memory);
  std::map<std::string, std::string> values = {
      {"current_case_prompt", std::string(profile)},
      {"current_choices", choices},
      {"short_term_memory", mem},
      {"x_t", std::string(profile)},
      {"Y_t", choices},
      {"M", mem},
      {"round", std::to_string(round_index)},
  };
  return fill_template(prompt_template(kind), values);
}

std::string render_feedback_prompt(const Feedback& feedback) {
  return fill_template(prompt_template(PromptKind::Feedback), {{"feedback", feedback.text()}});
}

}  // namespace dualmem
