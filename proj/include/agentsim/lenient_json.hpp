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

// Structured-output extraction from free-form model responses. Models wrap JSON in
// prose or code fences, and some emit Python literals ('single quotes', True/None,
// adjacent string concatenation); both are accepted here.

#include <optional>
#include <string_view>
#include <vector>

#include "agentsim/io.hpp"

namespace agentsim
{

/// First balanced `{...}` or `[...]` (whichever opener is in `openers` and appears first).
/// Brackets inside quoted strings are ignored.
std::optional<std::string_view> first_balanced(std::string_view text, std::string_view openers = "{[");

/// Strict JSON first, then a Python-literal normalization pass. Throws ParseError.
Json parse_lenient_json(std::string_view text);

/// Parses the first balanced object of the response.
Json extract_json_object(std::string_view text);

/// Every top-level JSON object in the response, in order. An outer array is flattened.
std::vector<Json> extract_json_objects(std::string_view text);

} // namespace agentsim
