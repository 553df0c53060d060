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
#include <optional>
#include <string>
#include <vector>

#include "agentsim/location.hpp"
#include "agentsim/network.hpp"
#include "agentsim/schedule.hpp"
#include "agentsim/transit.hpp"

namespace agentsim
{

struct MultimodalNetwork {
    LocalProjection projection;
    ModeSpeeds speeds;
    RoadGraph walk;
    RoadGraph bike;
    RoadGraph car;
    std::optional<Timetable> transit;

    const RoadGraph& graph(Mode mode) const;
    /// Speed used on the straight connector between a building and its snapped node.
    double connector_speed(Mode mode) const;
};

MultimodalNetwork build_network(const OsmData& osm, const LocalProjection& projection, const GtfsFeed* gtfs,
                                std::string_view day_of_week, const ModeSpeeds& speeds = {},
                                const TransitOptions& transit = {});

/// agent_id * 10^4 + leg * 100 + (leg + 1): 3828/0 -> 38280001, 3828/3 -> 38280304.
std::int64_t encode_route_id(std::int64_t agent_id, int leg);
std::pair<std::int64_t, int> decode_route_id(std::int64_t route_id);

struct RouteOption {
    std::int64_t route_id = 0;
    Mode mode = Mode::Pedestrian;
    double duration_s = 0.0;
    double length_m = 0.0;
    // transit breakdown (zero for road modes)
    double access_s = 0.0;
    double wait_s = 0.0;
    double in_vehicle_s = 0.0;
    int transfers = 0;

    bool operator==(const RouteOption&) const = default;
};

struct ItineraryQuery {
    std::int64_t agent_id = 0;
    int leg = 0;
    Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    Eigen::Vector2d destination = Eigen::Vector2d::Zero();
    int depart_after_s = 0;
};

/// Free-flow road route for walk, bike or car. Throws NoRouteError when unreachable.
RouteOption shortest_path_mode(const MultimodalNetwork& net, const ItineraryQuery& query, Mode mode);
/// Throws NoRouteError when no itinerary exists (or the network has no timetable).
RouteOption transit_route(const MultimodalNetwork& net, const ItineraryQuery& query);
/// Every feasible mode, in vocabulary order. May be empty.
std::vector<RouteOption> route_options(const MultimodalNetwork& net, const ItineraryQuery& query);

/// A trip between two resolved buildings.
struct PlannedTrip {
    std::int64_t agent_id = 0;
    int leg = 0;
    std::int64_t from_building = 0;
    std::int64_t to_building = 0;
    int depart_after = 0; ///< minutes
    int arrive_by = 0;    ///< minutes
    std::string from_category;
    std::string to_category;
    std::string purpose;

    bool operator==(const PlannedTrip&) const = default;
};

/// Trip intents with resolved buildings; intents whose endpoints resolve to the same
/// building are dropped and legs renumbered densely.
std::vector<PlannedTrip> plan_trips(const DaySchedule& schedule, const std::vector<std::int64_t>& locations);

Json planned_trip_to_json(const PlannedTrip& trip);
PlannedTrip planned_trip_from_json(const Json& doc);

/// agent_id,leg,mode,duration_s,length_m,route_id
std::string route_options_csv_header();
std::string route_option_csv_row(std::int64_t agent_id, int leg, const RouteOption& option);
/// Grouped by (agent_id, leg) in file order.
std::map<std::pair<std::int64_t, int>, std::vector<RouteOption>> read_route_options_csv(const std::filesystem::path& path);

} // namespace agentsim
