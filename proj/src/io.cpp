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
#include "agentsim/io.hpp"
#include "agentsim/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace agentsim
{

std::optional<std::size_t> CsvTable::find_column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t CsvTable::column(std::string_view name) const
{
    if (auto idx = find_column(name)) {
        return *idx;
    }
    throw ParseError("CSV column '" + std::string(name) + "' missing");
}

CsvTable parse_csv(std::string_view text)
{
    // strip UTF-8 BOM, common in GTFS exports
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
        text.remove_prefix(3);
    }

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string cell;
    bool in_quotes = false;
    bool cell_started = false;

    auto end_record = [&]() {
        if (cell_started || !record.empty()) {
            record.push_back(std::move(cell));
            records.push_back(std::move(record));
        }
        record.clear();
        cell.clear();
        cell_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                }
                else {
                    in_quotes = false;
                }
            }
            else {
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            cell_started = true;
            break;
        case ',':
            record.push_back(std::move(cell));
            cell.clear();
            cell_started = true;
            break;
        case '\r':
            break;
        case '\n':
            end_record();
            break;
        default:
            cell.push_back(c);
            cell_started = true;
        }
    }
    if (in_quotes) {
        throw ParseError("CSV: unterminated quoted field");
    }
    end_record();

    CsvTable table;
    if (records.empty()) {
        return table;
    }
    table.header = std::move(records.front());
    for (auto& h : table.header) {
        h = trim(h);
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        auto& row = records[r];
        if (row.size() == 1 && trim(row[0]).empty()) {
            continue;
        }
        if (row.size() != table.header.size()) {
            throw ParseError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                             " fields, header has " + std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    return parse_csv(read_text_file(path));
}

std::string csv_escape(std::string_view cell)
{
    if (cell.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(cell);
    }
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') {
            out += "\"\"";
        }
        else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

std::string csv_line(const std::vector<std::string>& cells)
{
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) {
            out.push_back(',');
        }
        out += csv_escape(cells[i]);
    }
    out.push_back('\n');
    return out;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::vector<Json> read_ndjson(const std::filesystem::path& path)
{
    std::vector<Json> values;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        try {
            values.push_back(Json::parse(line));
        }
        catch (const Json::parse_error& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return values;
}

std::string to_ndjson(const std::vector<Json>& values)
{
    std::string out;
    for (const auto& v : values) {
        out += v.dump();
        out.push_back('\n');
    }
    return out;
}

std::string format_double(double value)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text)
{
    const std::string t = trim(text);
    if (t.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const char* first = t.data();
    if (*first == '+') {
        ++first;
    }
    auto res = std::from_chars(first, t.data() + t.size(), value);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        return std::nullopt;
    }
    return value;
}

std::optional<long long> parse_int(std::string_view text)
{
    const std::string t = trim(text);
    if (t.empty()) {
        return std::nullopt;
    }
    long long value = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        return std::nullopt;
    }
    return value;
}

std::string trim(std::string_view text)
{
    auto is_space = [](unsigned char c) {
        return std::isspace(c) != 0;
    };
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && is_space(static_cast<unsigned char>(text[b]))) {
        ++b;
    }
    while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) {
        --e;
    }
    return std::string(text.substr(b, e - b));
}

std::string to_lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

std::string to_snake_case(std::string_view text)
{
    std::string out;
    bool pending_sep = false;
    for (unsigned char c : trim(text)) {
        if (std::isalnum(c)) {
            if (pending_sep && !out.empty()) {
                out.push_back('_');
            }
            pending_sep = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        }
        else {
            pending_sep = true;
        }
    }
    return out;
}

bool natural_less(std::string_view a, std::string_view b)
{
    auto all_digits = [](std::string_view s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
            return std::isdigit(c) != 0;
        });
    };
    if (all_digits(a) && all_digits(b)) {
        auto strip = [](std::string_view s) {
            const auto nz = s.find_first_not_of('0');
            return nz == std::string_view::npos ? std::string_view("0") : s.substr(nz);
        };
        const auto sa = strip(a);
        const auto sb = strip(b);
        if (sa.size() != sb.size()) {
            return sa.size() < sb.size();
        }
        if (sa != sb) {
            return sa < sb;
        }
        return a < b;
    }
    return a < b;
}

} // namespace agentsim
