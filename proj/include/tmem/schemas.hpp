#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tmem {

// Structural validators for every payload schema the gateway accepts.
// Returns a list of violations (empty = valid). Unknown schema ids throw
// InvalidField. docs/llm_schemas.md documents the shapes.
std::vector<std::string> validate_payload(const std::string& schema_id,
                                          const nlohmann::json& payload);

bool is_registered_schema(const std::string& schema_id);

std::vector<std::string> registered_schema_ids();

} // namespace tmem
