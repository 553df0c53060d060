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
#include "agentsim/zip_archive.hpp"
#include "agentsim/errors.hpp"
#include "agentsim/io.hpp"

#include <cstdint>
#include <cstring>

#include <zlib.h>

namespace agentsim
{

namespace
{

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;

std::uint32_t le(std::string_view data, std::size_t pos, int bytes)
{
    if (pos + static_cast<std::size_t>(bytes) > data.size()) {
        throw ParseError("zip: truncated archive");
    }
    std::uint32_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) {
        v = (v << 8) | static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i)]);
    }
    return v;
}

void put_le(std::string& out, std::uint32_t v, int bytes)
{
    for (int i = 0; i < bytes; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

std::string inflate_impl(std::string_view compressed, std::size_t expected_size, int window_bits)
{
    z_stream zs{};
    if (inflateInit2(&zs, window_bits) != Z_OK) {
        throw ParseError("inflate: init failed");
    }
    std::string out;
    out.resize(expected_size > 0 ? expected_size : compressed.size() * 4 + 64);
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
    zs.avail_in = static_cast<uInt>(compressed.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        if (zs.total_out >= out.size()) {
            out.resize(out.size() * 2);
        }
        zs.next_out = reinterpret_cast<Bytef*>(out.data() + zs.total_out);
        zs.avail_out = static_cast<uInt>(out.size() - zs.total_out);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ParseError("inflate: corrupt stream");
        }
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw ParseError("inflate: truncated stream");
        }
    }
    out.resize(zs.total_out);
    inflateEnd(&zs);
    return out;
}

std::string deflate_impl(std::string_view data, int window_bits)
{
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, window_bits, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw Error("deflate: init failed");
    }
    std::string out;
    out.resize(deflateBound(&zs, static_cast<uLong>(data.size())));
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    if (deflate(&zs, Z_FINISH) != Z_STREAM_END) {
        deflateEnd(&zs);
        throw Error("deflate: failed");
    }
    out.resize(zs.total_out);
    deflateEnd(&zs);
    return out;
}

std::string base_name(std::string_view name)
{
    const auto slash = name.find_last_of('/');
    return std::string(slash == std::string_view::npos ? name : name.substr(slash + 1));
}

} // namespace

std::string inflate_raw(std::string_view compressed, std::size_t expected_size)
{
    return inflate_impl(compressed, expected_size, -MAX_WBITS);
}

std::string inflate_zlib(std::string_view compressed, std::size_t expected_size)
{
    return inflate_impl(compressed, expected_size, MAX_WBITS);
}

std::string deflate_zlib(std::string_view data)
{
    return deflate_impl(data, MAX_WBITS);
}

std::map<std::string, std::string> parse_zip_entries(std::string_view archive)
{
    // locate end-of-central-directory record (comment can trail it)
    if (archive.size() < 22) {
        throw ParseError("zip: file too small");
    }
    std::size_t eocd = std::string_view::npos;
    for (std::size_t i = archive.size() - 22 + 1; i-- > 0;) {
        if (le(archive, i, 4) == kEndSig) {
            eocd = i;
            break;
        }
        if (archive.size() - i > 22 + 0xFFFF) {
            break;
        }
    }
    if (eocd == std::string_view::npos) {
        throw ParseError("zip: end of central directory not found");
    }
    const std::uint32_t entries = le(archive, eocd + 10, 2);
    std::size_t pos = le(archive, eocd + 16, 4);

    std::map<std::string, std::string> files;
    for (std::uint32_t e = 0; e < entries; ++e) {
        if (le(archive, pos, 4) != kCentralSig) {
            throw ParseError("zip: bad central directory entry");
        }
        const std::uint32_t method = le(archive, pos + 10, 2);
        const std::uint32_t csize = le(archive, pos + 20, 4);
        const std::uint32_t usize = le(archive, pos + 24, 4);
        const std::uint32_t name_len = le(archive, pos + 28, 2);
        const std::uint32_t extra_len = le(archive, pos + 30, 2);
        const std::uint32_t comment_len = le(archive, pos + 32, 2);
        const std::uint32_t local = le(archive, pos + 42, 4);
        const std::string name(archive.substr(pos + 46, name_len));
        pos += 46 + name_len + extra_len + comment_len;

        if (name.empty() || name.back() == '/') {
            continue;
        }
        if (le(archive, local, 4) != kLocalSig) {
            throw ParseError("zip: bad local header for " + name);
        }
        const std::size_t data_start = local + 30 + le(archive, local + 26, 2) + le(archive, local + 28, 2);
        if (data_start + csize > archive.size()) {
            throw ParseError("zip: truncated entry " + name);
        }
        const auto payload = archive.substr(data_start, csize);
        std::string content;
        if (method == 0) {
            content = std::string(payload);
        }
        else if (method == 8) {
            content = inflate_raw(payload, usize);
        }
        else {
            throw ParseError("zip: unsupported compression method for " + name);
        }
        files[base_name(name)] = std::move(content);
    }
    return files;
}

std::map<std::string, std::string> read_zip_entries(const std::filesystem::path& path)
{
    return parse_zip_entries(read_text_file(path));
}

std::string build_zip(const std::map<std::string, std::string>& entries)
{
    std::string out;
    std::string central;
    for (const auto& [name, content] : entries) {
        const std::string comp = deflate_impl(content, -MAX_WBITS);
        const auto crc = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(content.data()), static_cast<uInt>(content.size())));
        const auto offset = static_cast<std::uint32_t>(out.size());

        put_le(out, kLocalSig, 4);
        put_le(out, 20, 2);
        put_le(out, 0, 2);
        put_le(out, 8, 2);
        put_le(out, 0, 2);
        put_le(out, 0x21, 2);
        put_le(out, crc, 4);
        put_le(out, static_cast<std::uint32_t>(comp.size()), 4);
        put_le(out, static_cast<std::uint32_t>(content.size()), 4);
        put_le(out, static_cast<std::uint32_t>(name.size()), 2);
        put_le(out, 0, 2);
        out += name;
        out += comp;

        put_le(central, kCentralSig, 4);
        put_le(central, 20, 2);
        put_le(central, 20, 2);
        put_le(central, 0, 2);
        put_le(central, 8, 2);
        put_le(central, 0, 2);
        put_le(central, 0x21, 2);
        put_le(central, crc, 4);
        put_le(central, static_cast<std::uint32_t>(comp.size()), 4);
        put_le(central, static_cast<std::uint32_t>(content.size()), 4);
        put_le(central, static_cast<std::uint32_t>(name.size()), 2);
        put_le(central, 0, 2);
        put_le(central, 0, 2);
        put_le(central, 0, 2);
        put_le(central, 0, 2);
        put_le(central, 0, 4);
        put_le(central, offset, 4);
        central += name;
    }
    const auto cd_offset = static_cast<std::uint32_t>(out.size());
    out += central;
    put_le(out, kEndSig, 4);
    put_le(out, 0, 2);
    put_le(out, 0, 2);
    put_le(out, static_cast<std::uint32_t>(entries.size()), 2);
    put_le(out, static_cast<std::uint32_t>(entries.size()), 2);
    put_le(out, static_cast<std::uint32_t>(central.size()), 4);
    put_le(out, cd_offset, 4);
    put_le(out, 0, 2);
    return out;
}

} // namespace agentsim
