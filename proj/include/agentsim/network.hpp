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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "agentsim/io.hpp"
#include "agentsim/location.hpp"
#include "agentsim/osm.hpp"

namespace agentsim
{

enum class Mode
{
    Pedestrian,
    Bicycle,
    Passenger,
    PublicTransport
};

inline constexpr std::array<Mode, 4> kAllModes = {Mode::Pedestrian, Mode::Bicycle, Mode::Passenger,
                                                  Mode::PublicTransport};

/// pedestrian | bicycle | passenger | public_transport
std::string to_string(Mode mode);
/// Exact vocabulary names only; synonyms are handled by the decision parser.
Mode mode_from_string(std::string_view name);

struct ModeSpeeds {
    double walk_mps = 1.4;
    double bike_mps = 4.2;
    /// highway class -> km/h, used when maxspeed is missing or unparseable
    std::map<std::string, double> car_default_kmh = {
        {"motorway", 120}, {"motorway_link", 60}, {"trunk", 100},       {"trunk_link", 50},
        {"primary", 50},   {"primary_link", 50},  {"secondary", 50},    {"secondary_link", 40},
        {"tertiary", 50},  {"tertiary_link", 40}, {"unclassified", 40}, {"residential", 30},
        {"living_street", 7}, {"service", 20},    {"road", 40}};

    static ModeSpeeds from_json(const Json& doc);
};

/// Parses an OSM maxspeed value ("50", "30 mph", "50 km/h") to m/s.
std::optional<double> parse_maxspeed(std::string_view value);

struct RoadEdge {
    std::int32_t from = 0;
    std::int32_t to = 0;
    double length_m = 0.0;
    double speed_mps = 0.0;
    double capacity_vph = 0.0; ///< car graph only
    std::int64_t way_id = 0;

    double free_flow_time() const
    {
        return length_m / speed_mps;
    }
};

/// Directed graph in CSR layout. Edge ids are positions in edges(), grouped by tail node.
class RoadGraph
{
public:
    RoadGraph() = default;
    /// Edges may come in any order; they are sorted by (from, to, way_id, length).
    RoadGraph(std::vector<Eigen::Vector2d> node_positions, std::vector<std::int64_t> osm_ids, std::vector<RoadEdge> edges);

    std::size_t node_count() const noexcept
    {
        return m_pos.size();
    }
    std::size_t edge_count() const noexcept
    {
        return m_edges.size();
    }
    const std::vector<RoadEdge>& edges() const noexcept
    {
        return m_edges;
    }
    const RoadEdge& edge(std::size_t id) const
    {
        return m_edges[id];
    }
    std::span<const RoadEdge> out_edges(std::int32_t node) const
    {
        return {m_edges.data() + m_offsets[node], m_edges.data() + m_offsets[node + 1]};
    }
    std::size_t first_edge(std::int32_t node) const
    {
        return m_offsets[node];
    }
    const Eigen::Vector2d& position(std::int32_t node) const
    {
        return m_pos[static_cast<std::size_t>(node)];
    }
    std::int64_t osm_id(std::int32_t node) const
    {
        return m_osm[static_cast<std::size_t>(node)];
    }
    /// Nearest node (lowest id on ties); -1 for an empty graph.
    std::int32_t snap(const Eigen::Vector2d& p) const;
    /// Free-flow time per edge.
    Eigen::VectorXd free_flow_times() const;

    /// Keeps only the largest weakly connected component (ties: the one containing the
    /// lowest node id), renumbering nodes in their previous order.
    RoadGraph largest_component() const;

private:
    std::vector<Eigen::Vector2d> m_pos;
    std::vector<std::int64_t> m_osm;
    std::vector<RoadEdge> m_edges;
    std::vector<std::size_t> m_offsets;
    GridIndex m_snap;
};

struct PathResult {
    double time_s = 0.0;
    double length_m = 0.0;
    std::vector<std::size_t> edges; ///< in travel order
};

/// Label-setting search by travel time. `edge_times` overrides free-flow times (same
/// indexing as graph.edges()). Queue order is (time, node id), relaxation strict, so
/// results are deterministic. Returns nullopt when unreachable.
std::optional<PathResult> shortest_path(const RoadGraph& graph, std::int32_t source, std::int32_t target,
                                        const Eigen::VectorXd* edge_times = nullptr);

struct ShortestPathTree {
    Eigen::VectorXd time;                ///< +inf when unreachable
    std::vector<std::int64_t> pred_edge; ///< -1 at the root and unreachable nodes
};

ShortestPathTree shortest_path_tree(const RoadGraph& graph, std::int32_t source,
                                    const Eigen::VectorXd* edge_times = nullptr);
/// Edge ids from the tree root to `target`, in travel order.
std::vector<std::size_t> tree_path(const RoadGraph& graph, const ShortestPathTree& tree, std::int32_t target);

/// Which highway classes each mode may use, and in which direction.
struct ModePermissions {
    static bool car(const Tags& tags);
    static bool bike(const Tags& tags);
    static bool walk(const Tags& tags);
    /// +1 forward only, -1 reverse only, 0 both ways.
    static int car_oneway(const Tags& tags);
    static int bike_oneway(const Tags& tags);
};

/// Directional capacity in vehicles per hour from highway class and lanes.
double road_capacity(const Tags& tags, bool oneway);

enum class RoadMode
{
    Walk,
    Bike,
    Car
};

/// Projected graph for one mode, restricted to its largest weakly connected component.
RoadGraph build_road_graph(const OsmData& data, const LocalProjection& projection, RoadMode mode,
                           const ModeSpeeds& speeds = {});

} // namespace agentsim
