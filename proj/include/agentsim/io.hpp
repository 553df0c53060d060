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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace agentsim
{

using Json = nlohmann::json;

/// RFC 4180 table: header row plus records, all cells kept as text.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws ParseError if absent.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

/// Quotes a cell when it contains separators, quotes or line breaks.
std::string csv_escape(std::string_view cell);
std::string csv_line(const std::vector<std::string>& cells);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// One JSON value per non-blank line.
std::vector<Json> read_ndjson(const std::filesystem::path& path);
std::string to_ndjson(const std::vector<Json>& values);

/// Shortest round-trip decimal representation, stable across runs.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

/// "Public Transport" -> "public_transport".
std::string to_snake_case(std::string_view text);

/// Record-id ordering: numeric ids compare numerically, everything else lexicographically.
bool natural_less(std::string_view a, std::string_view b);

} // namespace agentsim
