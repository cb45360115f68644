#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "dualmem/memory.hpp"

namespace dualmem {

inline constexpr const char* kMemoryToolName = "memory";

// Function-calling schema for the dual-memory tool (chat-completions
// "tools" entry). Structure: type/function; parameters.properties are
// action, case_record, indices, rules; required = ["action"].
nlohmann::json remote_tool_schema();

class ToolCallError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Decodes the arguments object of a memory tool call. Throws ToolCallError
// on an unknown action or ill-typed fields; nothing is applied here.
MemoryOp parse_tool_arguments(const nlohmann::json& arguments);

// Encodes an op in the same argument shape parse_tool_arguments accepts.
nlohmann::json tool_arguments(const MemoryOp& op);

nlohmann::json to_json(const CaseRecord& record);
nlohmann::json to_json(const MemoryView& view);

// Tool-result payload returned to the model after a call was applied.
nlohmann::json tool_result(const OpResult& result);

}  // namespace dualmem
