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
#include "agentsim/osm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "agentsim/errors.hpp"
#include "agentsim/io.hpp"
#include "agentsim/zip_archive.hpp"

namespace agentsim
{

void OsmData::finalize()
{
    std::sort(nodes.begin(), nodes.end(), [](const OsmNode& a, const OsmNode& b) { return a.id < b.id; });
    std::sort(ways.begin(), ways.end(), [](const OsmWay& a, const OsmWay& b) { return a.id < b.id; });
    m_node_index.clear();
    m_node_index.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        m_node_index[nodes[i].id] = i;
    }
}

const OsmNode* OsmData::node(std::int64_t id) const
{
    const auto it = m_node_index.find(id);
    return it == m_node_index.end() ? nullptr : &nodes[it->second];
}

// ---- XML --------------------------------------------------------------------

namespace
{

namespace pt = boost::property_tree;

Tags read_tags(const pt::ptree& element)
{
    Tags tags;
    for (const auto& [name, child] : element) {
        if (name == "tag") {
            tags[child.get<std::string>("<xmlattr>.k")] = child.get<std::string>("<xmlattr>.v", "");
        }
    }
    return tags;
}

} // namespace

OsmData parse_osm_xml(std::string_view xml)
{
    pt::ptree tree;
    try {
        std::istringstream in{std::string(xml)};
        pt::read_xml(in, tree);
    }
    catch (const pt::xml_parser_error& e) {
        throw ParseError(std::string("malformed OSM XML: ") + e.what());
    }
    const auto root = tree.get_child_optional("osm");
    if (!root) {
        throw ParseError("OSM XML has no <osm> root element");
    }
    OsmData data;
    try {
        for (const auto& [name, el] : *root) {
            if (name == "node") {
                OsmNode n;
                n.id = el.get<std::int64_t>("<xmlattr>.id");
                n.lat = el.get<double>("<xmlattr>.lat");
                n.lon = el.get<double>("<xmlattr>.lon");
                n.tags = read_tags(el);
                data.nodes.push_back(std::move(n));
            }
            else if (name == "way") {
                OsmWay w;
                w.id = el.get<std::int64_t>("<xmlattr>.id");
                for (const auto& [cname, child] : el) {
                    if (cname == "nd") {
                        w.refs.push_back(child.get<std::int64_t>("<xmlattr>.ref"));
                    }
                }
                w.tags = read_tags(el);
                data.ways.push_back(std::move(w));
            }
        }
    }
    catch (const pt::ptree_error& e) {
        throw ParseError(std::string("malformed OSM element: ") + e.what());
    }
    data.finalize();
    return data;
}

namespace
{

std::string xml_escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        case '\'':
            out += "&apos;";
            break;
        default:
            out.push_back(c);
        }
    }
    return out;
}

void write_tags(std::string& out, const Tags& tags)
{
    for (const auto& [k, v] : tags) {
        out += "    <tag k=\"" + xml_escape(k) + "\" v=\"" + xml_escape(v) + "\"/>\n";
    }
}

} // namespace

std::string write_osm_xml(const OsmData& data)
{
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"agentsim\">\n";
    char buf[96];
    for (const auto& n : data.nodes) {
        std::snprintf(buf, sizeof buf, "%.9f\" lon=\"%.9f", n.lat, n.lon);
        out += "  <node id=\"" + std::to_string(n.id) + "\" lat=\"" + buf + "\"";
        if (n.tags.empty()) {
            out += "/>\n";
            continue;
        }
        out += ">\n";
        write_tags(out, n.tags);
        out += "  </node>\n";
    }
    for (const auto& w : data.ways) {
        out += "  <way id=\"" + std::to_string(w.id) + "\">\n";
        for (auto r : w.refs) {
            out += "    <nd ref=\"" + std::to_string(r) + "\"/>\n";
        }
        write_tags(out, w.tags);
        out += "  </way>\n";
    }
    out += "</osm>\n";
    return out;
}

// ---- PBF --------------------------------------------------------------------

namespace
{

// Protocol-buffer wire reader over a byte range.
class Wire
{
public:
    explicit Wire(std::string_view bytes)
        : m_p(bytes.data())
        , m_end(bytes.data() + bytes.size())
    {
    }
    bool done() const
    {
        return m_p >= m_end;
    }
    std::uint64_t varint()
    {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            if (m_p >= m_end) {
                throw ParseError("PBF: truncated varint");
            }
            const auto b = static_cast<unsigned char>(*m_p++);
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) {
                return v;
            }
        }
        throw ParseError("PBF: varint too long");
    }
    static std::int64_t zigzag(std::uint64_t v)
    {
        return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
    }
    std::string_view bytes()
    {
        const auto len = varint();
        if (len > static_cast<std::uint64_t>(m_end - m_p)) {
            throw ParseError("PBF: truncated length-delimited field");
        }
        std::string_view v(m_p, len);
        m_p += len;
        return v;
    }
    /// Returns (field, wire type).
    std::pair<std::uint32_t, int> key()
    {
        const auto k = varint();
        return {static_cast<std::uint32_t>(k >> 3), static_cast<int>(k & 7)};
    }
    void skip(int wire_type)
    {
        switch (wire_type) {
        case 0:
            varint();
            break;
        case 1:
            advance(8);
            break;
        case 2:
            bytes();
            break;
        case 5:
            advance(4);
            break;
        default:
            throw ParseError("PBF: unsupported wire type " + std::to_string(wire_type));
        }
    }

private:
    void advance(std::size_t n)
    {
        if (n > static_cast<std::size_t>(m_end - m_p)) {
            throw ParseError("PBF: truncated fixed field");
        }
        m_p += n;
    }
    const char* m_p;
    const char* m_end;
};

std::vector<std::uint64_t> packed_varints(std::string_view bytes)
{
    std::vector<std::uint64_t> out;
    Wire w(bytes);
    while (!w.done()) {
        out.push_back(w.varint());
    }
    return out;
}

std::vector<std::int64_t> packed_sint(std::string_view bytes)
{
    std::vector<std::int64_t> out;
    for (auto v : packed_varints(bytes)) {
        out.push_back(Wire::zigzag(v));
    }
    return out;
}

struct BlockParams {
    std::vector<std::string> strings;
    std::int64_t granularity = 100;
    std::int64_t lat_offset = 0;
    std::int64_t lon_offset = 0;

    double lat(std::int64_t v) const
    {
        return 1e-9 * static_cast<double>(lat_offset + granularity * v);
    }
    double lon(std::int64_t v) const
    {
        return 1e-9 * static_cast<double>(lon_offset + granularity * v);
    }
    const std::string& str(std::uint64_t i) const
    {
        if (i >= strings.size()) {
            throw ParseError("PBF: string table index out of range");
        }
        return strings[i];
    }
};

void parse_dense(std::string_view bytes, const BlockParams& bp, OsmData& out)
{
    std::vector<std::int64_t> ids, lats, lons;
    std::vector<std::uint64_t> kv;
    Wire w(bytes);
    while (!w.done()) {
        const auto [field, type] = w.key();
        if (type == 2 && field == 1) {
            ids = packed_sint(w.bytes());
        }
        else if (type == 2 && field == 8) {
            lats = packed_sint(w.bytes());
        }
        else if (type == 2 && field == 9) {
            lons = packed_sint(w.bytes());
        }
        else if (type == 2 && field == 10) {
            kv = packed_varints(w.bytes());
        }
        else {
            w.skip(type);
        }
    }
    if (lats.size() != ids.size() || lons.size() != ids.size()) {
        throw ParseError("PBF: dense node arrays differ in length");
    }
    std::int64_t id = 0, lat = 0, lon = 0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        id += ids[i];
        lat += lats[i];
        lon += lons[i];
        OsmNode n{id, bp.lat(lat), bp.lon(lon), {}};
        while (k < kv.size() && kv[k] != 0) {
            if (k + 1 >= kv.size()) {
                throw ParseError("PBF: dangling dense key");
            }
            n.tags[bp.str(kv[k])] = bp.str(kv[k + 1]);
            k += 2;
        }
        ++k; // delimiter
        out.nodes.push_back(std::move(n));
    }
}

void parse_node(std::string_view bytes, const BlockParams& bp, OsmData& out)
{
    OsmNode n;
    std::vector<std::uint64_t> keys, vals;
    std::int64_t lat = 0, lon = 0;
    Wire w(bytes);
    while (!w.done()) {
        const auto [field, type] = w.key();
        if (field == 1 && type == 0) {
            n.id = Wire::zigzag(w.varint());
        }
        else if (field == 2 && type == 2) {
            keys = packed_varints(w.bytes());
        }
        else if (field == 3 && type == 2) {
            vals = packed_varints(w.bytes());
        }
        else if (field == 8 && type == 0) {
            lat = Wire::zigzag(w.varint());
        }
        else if (field == 9 && type == 0) {
            lon = Wire::zigzag(w.varint());
        }
        else {
            w.skip(type);
        }
    }
    if (keys.size() != vals.size()) {
        throw ParseError("PBF: node key/value counts differ");
    }
    for (std::size_t i = 0; i < keys.size(); ++i) {
        n.tags[bp.str(keys[i])] = bp.str(vals[i]);
    }
    n.lat = bp.lat(lat);
    n.lon = bp.lon(lon);
    out.nodes.push_back(std::move(n));
}

void parse_way(std::string_view bytes, const BlockParams& bp, OsmData& out)
{
    OsmWay way;
    std::vector<std::uint64_t> keys, vals;
    Wire w(bytes);
    while (!w.done()) {
        const auto [field, type] = w.key();
        if (field == 1 && type == 0) {
            way.id = static_cast<std::int64_t>(w.varint());
        }
        else if (field == 2 && type == 2) {
            keys = packed_varints(w.bytes());
        }
        else if (field == 3 && type == 2) {
            vals = packed_varints(w.bytes());
        }
        else if (field == 8 && type == 2) {
            std::int64_t ref = 0;
            for (auto d : packed_sint(w.bytes())) {
                ref += d;
                way.refs.push_back(ref);
            }
        }
        else {
            w.skip(type);
        }
    }
    if (keys.size() != vals.size()) {
        throw ParseError("PBF: way key/value counts differ");
    }
    for (std::size_t i = 0; i < keys.size(); ++i) {
        way.tags[bp.str(keys[i])] = bp.str(vals[i]);
    }
    out.ways.push_back(std::move(way));
}

void parse_primitive_block(std::string_view bytes, OsmData& out)
{
    BlockParams bp;
    std::vector<std::string_view> groups;
    Wire w(bytes);
    while (!w.done()) {
        const auto [field, type] = w.key();
        if (field == 1 && type == 2) {
            Wire st(w.bytes());
            while (!st.done()) {
                const auto [f, t] = st.key();
                if (f == 1 && t == 2) {
                    bp.strings.emplace_back(st.bytes());
                }
                else {
                    st.skip(t);
                }
            }
        }
        else if (field == 2 && type == 2) {
            groups.push_back(w.bytes());
        }
        else if (field == 17 && type == 0) {
            bp.granularity = static_cast<std::int64_t>(w.varint());
        }
        else if (field == 19 && type == 0) {
            bp.lat_offset = static_cast<std::int64_t>(w.varint());
        }
        else if (field == 20 && type == 0) {
            bp.lon_offset = static_cast<std::int64_t>(w.varint());
        }
        else {
            w.skip(type);
        }
    }
    for (auto g : groups) {
        Wire gw(g);
        while (!gw.done()) {
            const auto [field, type] = gw.key();
            if (field == 1 && type == 2) {
                parse_node(gw.bytes(), bp, out);
            }
            else if (field == 2 && type == 2) {
                parse_dense(gw.bytes(), bp, out);
            }
            else if (field == 3 && type == 2) {
                parse_way(gw.bytes(), bp, out);
            }
            else {
                gw.skip(type);
            }
        }
    }
}

std::string blob_payload(std::string_view blob)
{
    Wire w(blob);
    std::string_view raw, zlib;
    std::size_t raw_size = 0;
    bool have_raw = false, have_zlib = false;
    while (!w.done()) {
        const auto [field, type] = w.key();
        if (field == 1 && type == 2) {
            raw = w.bytes();
            have_raw = true;
        }
        else if (field == 2 && type == 0) {
            raw_size = static_cast<std::size_t>(w.varint());
        }
        else if (field == 3 && type == 2) {
            zlib = w.bytes();
            have_zlib = true;
        }
        else if (type == 2 && (field == 4 || field == 5 || field == 6 || field == 7)) {
            throw ParseError("PBF: unsupported blob compression (only raw and zlib are read)");
        }
        else {
            w.skip(type);
        }
    }
    if (have_raw) {
        return std::string(raw);
    }
    if (have_zlib) {
        return inflate_zlib(zlib, raw_size);
    }
    throw ParseError("PBF: blob without data");
}

std::uint32_t read_be32(std::string_view s, std::size_t at)
{
    return (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at])) << 24) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 1])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 2])) << 8) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 3]));
}

} // namespace

OsmData parse_osm_pbf(std::string_view bytes)
{
    OsmData data;
    std::size_t pos = 0;
    bool saw_header = false;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 4) {
            throw ParseError("PBF: truncated blob header length");
        }
        const std::uint32_t hlen = read_be32(bytes, pos);
        pos += 4;
        if (hlen > bytes.size() - pos) {
            throw ParseError("PBF: truncated blob header");
        }
        std::string type;
        std::size_t datasize = 0;
        Wire hw(bytes.substr(pos, hlen));
        while (!hw.done()) {
            const auto [field, t] = hw.key();
            if (field == 1 && t == 2) {
                type = std::string(hw.bytes());
            }
            else if (field == 3 && t == 0) {
                datasize = static_cast<std::size_t>(hw.varint());
            }
            else {
                hw.skip(t);
            }
        }
        pos += hlen;
        if (datasize > bytes.size() - pos) {
            throw ParseError("PBF: truncated blob");
        }
        const auto blob = bytes.substr(pos, datasize);
        pos += datasize;
        if (type == "OSMHeader") {
            saw_header = true;
        }
        else if (type == "OSMData") {
            parse_primitive_block(blob_payload(blob), data);
        }
    }
    if (!saw_header) {
        throw ParseError("PBF: no OSMHeader block");
    }
    data.finalize();
    return data;
}

OsmData read_osm(const std::filesystem::path& path)
{
    const std::string bytes = read_text_file(path);
    const auto name = path.filename().string();
    if (name.ends_with(".pbf")) {
        return parse_osm_pbf(bytes);
    }
    return parse_osm_xml(bytes);
}

namespace
{

// Protocol-buffer wire writer.
class WireOut
{
public:
    void varint(std::uint64_t v)
    {
        while (v >= 0x80) {
            m_buf.push_back(static_cast<char>((v & 0x7f) | 0x80));
            v >>= 7;
        }
        m_buf.push_back(static_cast<char>(v));
    }
    static std::uint64_t zigzag(std::int64_t v)
    {
        return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
    }
    void key(std::uint32_t field, int type)
    {
        varint((static_cast<std::uint64_t>(field) << 3) | static_cast<std::uint64_t>(type));
    }
    void field_varint(std::uint32_t field, std::uint64_t v)
    {
        key(field, 0);
        varint(v);
    }
    void field_bytes(std::uint32_t field, std::string_view b)
    {
        key(field, 2);
        varint(b.size());
        m_buf.append(b);
    }
    const std::string& str() const
    {
        return m_buf;
    }

private:
    std::string m_buf;
};

class StringTable
{
public:
    StringTable()
    {
        index(""); // slot 0 is the dense-node delimiter
    }
    std::uint64_t index(const std::string& s)
    {
        const auto [it, inserted] = m_map.try_emplace(s, m_strings.size());
        if (inserted) {
            m_strings.push_back(s);
        }
        return it->second;
    }
    std::string encode() const
    {
        WireOut w;
        for (const auto& s : m_strings) {
            w.field_bytes(1, s);
        }
        return w.str();
    }

private:
    std::map<std::string, std::uint64_t> m_map;
    std::vector<std::string> m_strings;
};

std::string frame_blob(const std::string& type, const std::string& payload)
{
    WireOut blob;
    blob.field_varint(2, payload.size());
    blob.field_bytes(3, deflate_zlib(payload));
    WireOut header;
    header.field_bytes(1, type);
    header.field_varint(3, blob.str().size());
    std::string out;
    const auto n = static_cast<std::uint32_t>(header.str().size());
    out.push_back(static_cast<char>(n >> 24));
    out.push_back(static_cast<char>(n >> 16));
    out.push_back(static_cast<char>(n >> 8));
    out.push_back(static_cast<char>(n));
    out += header.str();
    out += blob.str();
    return out;
}

std::string packed(const std::vector<std::uint64_t>& values)
{
    WireOut w;
    for (auto v : values) {
        w.varint(v);
    }
    return w.str();
}

} // namespace

std::string write_osm_pbf(const OsmData& data)
{
    WireOut hb;
    hb.field_bytes(4, "OsmSchema-V0.6");
    hb.field_bytes(4, "DenseNodes");
    hb.field_bytes(16, "agentsim");
    std::string out = frame_blob("OSMHeader", hb.str());

    StringTable st;
    std::vector<std::uint64_t> ids, lats, lons, kv;
    std::int64_t pid = 0, plat = 0, plon = 0;
    for (const auto& n : data.nodes) {
        const auto lat = static_cast<std::int64_t>(std::llround(n.lat * 1e7));
        const auto lon = static_cast<std::int64_t>(std::llround(n.lon * 1e7));
        ids.push_back(WireOut::zigzag(n.id - pid));
        lats.push_back(WireOut::zigzag(lat - plat));
        lons.push_back(WireOut::zigzag(lon - plon));
        pid = n.id;
        plat = lat;
        plon = lon;
        for (const auto& [k, v] : n.tags) {
            kv.push_back(st.index(k));
            kv.push_back(st.index(v));
        }
        kv.push_back(0);
    }
    WireOut dense;
    dense.field_bytes(1, packed(ids));
    dense.field_bytes(8, packed(lats));
    dense.field_bytes(9, packed(lons));
    dense.field_bytes(10, packed(kv));

    WireOut node_group;
    node_group.field_bytes(2, dense.str());

    WireOut way_group;
    for (const auto& w : data.ways) {
        WireOut wo;
        wo.field_varint(1, static_cast<std::uint64_t>(w.id));
        std::vector<std::uint64_t> keys, vals, refs;
        for (const auto& [k, v] : w.tags) {
            keys.push_back(st.index(k));
            vals.push_back(st.index(v));
        }
        std::int64_t prev = 0;
        for (auto r : w.refs) {
            refs.push_back(WireOut::zigzag(r - prev));
            prev = r;
        }
        wo.field_bytes(2, packed(keys));
        wo.field_bytes(3, packed(vals));
        wo.field_bytes(8, packed(refs));
        way_group.field_bytes(3, wo.str());
    }

    WireOut block;
    block.field_bytes(1, st.encode());
    block.field_bytes(2, node_group.str());
    if (!data.ways.empty()) {
        block.field_bytes(2, way_group.str());
    }
    // granularity 100 nanodegrees: coordinates stored as 1e-7 degrees
    block.field_varint(17, 100);
    out += frame_blob("OSMData", block.str());
    return out;
}

// ---- projection -------------------------------------------------------------

namespace
{
constexpr double kEarthRadius = 6371008.8;
constexpr double kDeg = std::numbers::pi / 180.0;
} // namespace

LocalProjection LocalProjection::centred_on(const OsmData& data)
{
    if (data.nodes.empty()) {
        return {};
    }
    double lat = 0.0, lon = 0.0;
    for (const auto& n : data.nodes) {
        lat += n.lat;
        lon += n.lon;
    }
    const auto k = static_cast<double>(data.nodes.size());
    return {lat / k, lon / k};
}

Eigen::Vector2d LocalProjection::project(double lat, double lon) const
{
    const double phi = lat * kDeg;
    const double dl = (lon - m_lon0) * kDeg;
    const double b = std::cos(phi) * std::sin(dl);
    const double x = kEarthRadius * std::atanh(b);
    const double y = kEarthRadius * (std::atan2(std::tan(phi), std::cos(dl)) - m_lat0 * kDeg);
    return {x, y};
}

Eigen::Vector2d LocalProjection::unproject(const Eigen::Vector2d& xy) const
{
    const double d = xy.y() / kEarthRadius + m_lat0 * kDeg;
    const double xr = xy.x() / kEarthRadius;
    const double phi = std::asin(std::sin(d) / std::cosh(xr));
    const double dl = std::atan2(std::sinh(xr), std::cos(d));
    return {phi / kDeg, m_lon0 + dl / kDeg};
}

} // namespace agentsim
