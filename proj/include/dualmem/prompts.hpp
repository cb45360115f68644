#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "dualmem/case.hpp"
#include "dualmem/memory.hpp"

namespace dualmem {

enum class PromptKind { Standard, MemoryAugmented, LongHorizon, Feedback };

// Raw template text, as shipped under assets/prompts/.
std::string_view prompt_template(PromptKind kind);

// Replaces each "{key}" occurrence for the given keys; other braces are kept.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

// One candidate per line: "- <label>" or "- <label>: <description>".
std::string render_choices(const CandidateSet& candidates);

std::string render_memory(const MemoryView& view);

// Placeholders: {current_case_prompt} {current_choices} {short_term_memory}
// for the standard templates; {x_t} {Y_t} {M} {round} for long-horizon.
std::string render_round_prompt(PromptKind kind, std::string_view profile,
                                const CandidateSet& candidates, const MemoryView& memory,
                                std::int64_t round_index);

std::string render_feedback_prompt(const Feedback& feedback);

}  // namespace dualmem
