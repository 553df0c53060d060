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
#include "agentsim/lenient_json.hpp"
#include "agentsim/errors.hpp"

#include <cctype>
#include <string>

namespace agentsim
{

namespace
{

// Index one past the closing quote of the string literal starting at `pos`.
std::size_t skip_string(std::string_view text, std::size_t pos)
{
    const char quote = text[pos];
    for (std::size_t i = pos + 1; i < text.size(); ++i) {
        if (text[i] == '\\') {
            ++i;
        }
        else if (text[i] == quote) {
            return i + 1;
        }
    }
    return std::string_view::npos;
}

std::optional<std::string_view> balanced_from(std::string_view text, std::size_t start)
{
    int depth = 0;
    for (std::size_t i = start; i < text.size();) {
        const char c = text[i];
        if (c == '"' || c == '\'') {
            // an apostrophe inside prose ("it's") is not a string opener
            if (c == '\'' && i > 0 && std::isalpha(static_cast<unsigned char>(text[i - 1]))) {
                ++i;
                continue;
            }
            const auto next = skip_string(text, i);
            if (next == std::string_view::npos) {
                return std::nullopt;
            }
            i = next;
            continue;
        }
        if (c == '{' || c == '[') {
            ++depth;
        }
        else if (c == '}' || c == ']') {
            --depth;
            if (depth == 0) {
                return text.substr(start, i - start + 1);
            }
        }
        ++i;
    }
    return std::nullopt;
}

void append_utf8(std::string& out, unsigned cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    }
    else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    else {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Decodes a quoted literal (either quote style) into raw text.
std::string decode_literal(std::string_view lit)
{
    std::string out;
    for (std::size_t i = 1; i + 1 < lit.size(); ++i) {
        char c = lit[i];
        if (c != '\\' || i + 2 >= lit.size()) {
            out.push_back(c);
            continue;
        }
        const char e = lit[++i];
        switch (e) {
        case 'n':
            out.push_back('\n');
            break;
        case 't':
            out.push_back('\t');
            break;
        case 'r':
            out.push_back('\r');
            break;
        case 'u':
            if (i + 4 < lit.size()) {
                const unsigned cp = static_cast<unsigned>(std::stoul(std::string(lit.substr(i + 1, 4)), nullptr, 16));
                append_utf8(out, cp);
                i += 4;
            }
            break;
        default:
            out.push_back(e);
        }
    }
    return out;
}

std::string python_literal_to_json(std::string_view text)
{
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '"' || c == '\'') {
            std::string value;
            // adjacent literals concatenate: 'abc ' 'def'
            for (;;) {
                const auto end = skip_string(text, i);
                if (end == std::string_view::npos) {
                    throw ParseError("unterminated string literal in response");
                }
                value += decode_literal(text.substr(i, end - i));
                std::size_t j = end;
                while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) {
                    ++j;
                }
                if (j < text.size() && (text[j] == '"' || text[j] == '\'')) {
                    i = j;
                    continue;
                }
                i = end;
                break;
            }
            out += Json(value).dump();
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
                ++j;
            }
            const auto word = text.substr(i, j - i);
            if (word == "True") {
                out += "true";
            }
            else if (word == "False") {
                out += "false";
            }
            else if (word == "None") {
                out += "null";
            }
            else {
                out += word;
            }
            i = j;
            continue;
        }
        if (c == ',') {
            // drop trailing commas before a closing bracket
            std::size_t j = i + 1;
            while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) {
                ++j;
            }
            if (j < text.size() && (text[j] == '}' || text[j] == ']')) {
                ++i;
                continue;
            }
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

} // namespace

std::optional<std::string_view> first_balanced(std::string_view text, std::string_view openers)
{
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (openers.find(text[i]) != std::string_view::npos) {
            if (auto found = balanced_from(text, i)) {
                return found;
            }
        }
    }
    return std::nullopt;
}

Json parse_lenient_json(std::string_view text)
{
    try {
        return Json::parse(text);
    }
    catch (const Json::parse_error&) {
    }
    try {
        return Json::parse(python_literal_to_json(text));
    }
    catch (const Json::parse_error& e) {
        throw ParseError(std::string("response is not valid JSON: ") + e.what());
    }
}

Json extract_json_object(std::string_view text)
{
    auto obj = first_balanced(text, "{");
    if (!obj) {
        throw ParseError("response contains no JSON object");
    }
    return parse_lenient_json(*obj);
}

std::vector<Json> extract_json_objects(std::string_view text)
{
    std::vector<Json> objects;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto rest = text.substr(pos);
        auto found = first_balanced(rest, "{[");
        if (!found) {
            break;
        }
        Json value = parse_lenient_json(*found);
        if (value.is_array()) {
            for (auto& item : value) {
                if (item.is_object()) {
                    objects.push_back(std::move(item));
                }
            }
        }
        else if (value.is_object()) {
            objects.push_back(std::move(value));
        }
        pos = static_cast<std::size_t>(found->data() - text.data()) + found->size();
    }
    return objects;
}

} // namespace agentsim
