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

// Minimal OpenStreetMap reader: nodes and ways from XML (.osm) or PBF (.osm.pbf).
// Relations are not used by the catalog or the routing graphs and are skipped.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace agentsim
{

using Tags = std::map<std::string, std::string>;

struct OsmNode {
    std::int64_t id = 0;
    double lat = 0.0;
    double lon = 0.0;
    Tags tags;
};

struct OsmWay {
    std::int64_t id = 0;
    std::vector<std::int64_t> refs;
    Tags tags;

    bool is_closed() const
    {
        return refs.size() >= 4 && refs.front() == refs.back();
    }
};

struct OsmData {
    std::vector<OsmNode> nodes;
    std::vector<OsmWay> ways;

    /// Sorts nodes and ways by id and rebuilds the lookup table.
    void finalize();
    const OsmNode* node(std::int64_t id) const;

private:
    std::unordered_map<std::int64_t, std::size_t> m_node_index;
};

OsmData parse_osm_xml(std::string_view xml);
OsmData parse_osm_pbf(std::string_view bytes);
/// Dispatches on the file name: *.pbf is PBF, anything else XML.
OsmData read_osm(const std::filesystem::path& path);

std::string write_osm_xml(const OsmData& data);
/// Header block plus one zlib-compressed data block (dense nodes, ways).
std::string write_osm_pbf(const OsmData& data);

/// Spherical transverse Mercator centred on (lat0, lon0); metres, x east, y north.
class LocalProjection
{
public:
    LocalProjection() = default;
    LocalProjection(double lat0, double lon0)
        : m_lat0(lat0)
        , m_lon0(lon0)
    {
    }
    /// Centre = mean of node coordinates.
    static LocalProjection centred_on(const OsmData& data);

    Eigen::Vector2d project(double lat, double lon) const;
    /// Inverse of project: returns (lat, lon).
    Eigen::Vector2d unproject(const Eigen::Vector2d& xy) const;

    double lat0() const noexcept
    {
        return m_lat0;
    }
    double lon0() const noexcept
    {
        return m_lon0;
    }

private:
    double m_lat0 = 0.0;
    double m_lon0 = 0.0;
};

} // namespace agentsim
