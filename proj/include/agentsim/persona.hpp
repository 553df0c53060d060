/*
* Copyright (C) 2026 agentsim contributors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agentsim/backend.hpp"
#include "agentsim/census.hpp"

namespace agentsim
{

struct AgentProfile {
    std::int64_t agent_id = 0;
    Attributes attributes;
    std::string persona_text;

    bool operator==(const AgentProfile&) const = default;
};

struct PersonaOptions {
    std::string population_name = "Berlin";
    int max_retries = 2;
    int workers = 4;
};

/// Attribute block (`key: value`, schema order, empty values skipped) followed by the
/// description request and a JSON-object instruction. Throws SchemaError for keys the
/// schema does not declare.
Prompt build_description_prompt(const Attributes& attributes, const AttributeSchema& schema,
                                const PersonaOptions& options = {});

/// Extracts the `description` field from the first JSON object in the response.
/// Throws ParseError when absent, not a string or blank.
std::string parse_persona_response(std::string_view response);

AgentProfile generate_persona(const Agent& agent, GenerationBackend& backend, std::uint64_t global_seed,
                              const AttributeSchema& schema, const PersonaOptions& options = {});

/// Bounded-parallel generation; the result is ordered by agent_id.
std::vector<AgentProfile> generate_personas(const SyntheticPopulation& population, GenerationBackend& backend,
                                            std::uint64_t global_seed, const AttributeSchema& schema,
                                            const PersonaOptions& options = {});

std::string profiles_to_ndjson(const std::vector<AgentProfile>& profiles);
std::vector<AgentProfile> profiles_from_ndjson(const std::filesystem::path& path);

} // namespace agentsim
