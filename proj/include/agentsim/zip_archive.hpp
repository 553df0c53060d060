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
#include <map>
#include <string>
#include <string_view>

namespace agentsim
{

/// Reads every regular entry of a zip archive (stored or deflated) into memory,
/// keyed by base file name. GTFS bundles are flat, so directories are dropped.
std::map<std::string, std::string> read_zip_entries(const std::filesystem::path& path);
std::map<std::string, std::string> parse_zip_entries(std::string_view archive);

/// raw DEFLATE / zlib helpers shared with the PBF reader
std::string inflate_raw(std::string_view compressed, std::size_t expected_size);
std::string inflate_zlib(std::string_view compressed, std::size_t expected_size);
std::string deflate_zlib(std::string_view data);

/// Minimal writer (deflated entries), used by fixture generators.
std::string build_zip(const std::map<std::string, std::string>& entries);

} // namespace agentsim
