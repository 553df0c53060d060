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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "agentsim/location.hpp"
#include "agentsim/osm.hpp"

namespace agentsim
{

struct GtfsStop {
    std::string stop_id;
    std::string name;
    double lat = 0.0;
    double lon = 0.0;
};

struct GtfsTrip {
    std::string trip_id;
    std::string route_id;
    std::string service_id;
};

struct GtfsStopTime {
    std::string trip_id;
    std::string stop_id;
    int sequence = 0;
    int arrival_s = 0;
    int departure_s = 0;
};

struct GtfsService {
    std::string service_id;
    std::array<bool, 7> days{}; ///< monday..sunday
};

struct GtfsFeed {
    std::vector<GtfsStop> stops;
    std::map<std::string, std::string> routes; ///< route_id -> short name
    std::vector<GtfsTrip> trips;
    std::vector<GtfsStopTime> stop_times;
    std::vector<GtfsService> services;
};

/// "HH:MM:SS" with hours possibly beyond 24 -> seconds. Throws ParseError.
int parse_gtfs_time(std::string_view text);
std::string format_gtfs_time(int seconds);
/// 0 = monday .. 6 = sunday. Throws InputError for other names.
int weekday_index(std::string_view day_of_week);

/// Reads stops, routes, trips, stop_times and calendar from a zip or a directory and
/// checks references. A missing calendar (or any other required table) is an error.
GtfsFeed read_gtfs(const std::filesystem::path& zip_or_dir);
GtfsFeed parse_gtfs(const std::map<std::string, std::string>& files);
/// CSV tables keyed by file name, ready for build_zip.
std::map<std::string, std::string> write_gtfs(const GtfsFeed& feed);

struct TransitOptions {
    double access_radius_m = 500.0;
    double transfer_radius_m = 300.0;
    double walk_mps = 1.4;
    int max_transfers = 3;
};

/// One ride of an itinerary.
struct TransitRide {
    std::string route_id;
    std::string trip_id;
    std::int32_t board_stop = 0;
    std::int32_t alight_stop = 0;
    int board_time = 0;
    int alight_time = 0;
    double distance_m = 0.0;
};

struct TransitItinerary {
    int depart_s = 0;
    int arrival_s = 0;
    double access_m = 0.0;
    double egress_m = 0.0;
    double transfer_walk_m = 0.0;
    double access_s = 0.0;
    double egress_s = 0.0;
    double transfer_walk_s = 0.0;
    double in_vehicle_s = 0.0;
    double wait_s = 0.0;
    std::vector<TransitRide> rides;

    int transfers() const
    {
        return rides.empty() ? 0 : static_cast<int>(rides.size()) - 1;
    }
    double length_m() const;
};

/// Trip patterns (trips sharing a stop sequence), footpaths and a stop index.
class Timetable
{
public:
    struct Pattern {
        std::string route_id;
        std::vector<std::int32_t> stops;
        std::vector<double> hop_m; ///< distance between consecutive stops
        struct Trip {
            std::string trip_id;
            std::vector<int> arr;
            std::vector<int> dep;
        };
        std::vector<Trip> trips; ///< sorted by first departure
    };
    struct Footpath {
        std::int32_t to = 0;
        double distance_m = 0.0;
    };

    Timetable() = default;
    Timetable(const GtfsFeed& feed, const LocalProjection& projection, std::string_view day_of_week,
              const TransitOptions& options = {});

    std::size_t stop_count() const noexcept
    {
        return m_stop_pos.size();
    }
    const std::vector<Pattern>& patterns() const noexcept
    {
        return m_patterns;
    }
    const std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>>& stop_patterns() const noexcept
    {
        return m_stop_patterns;
    }
    const std::vector<Footpath>& footpaths(std::int32_t stop) const
    {
        return m_footpaths[static_cast<std::size_t>(stop)];
    }
    const Eigen::Vector2d& stop_position(std::int32_t stop) const
    {
        return m_stop_pos[static_cast<std::size_t>(stop)];
    }
    const std::string& stop_id(std::int32_t stop) const
    {
        return m_stop_ids[static_cast<std::size_t>(stop)];
    }
    std::int32_t stop_index(const std::string& stop_id) const;
    /// Stops within `radius` of p, ascending by index.
    std::vector<std::int32_t> stops_within(const Eigen::Vector2d& p, double radius) const;
    const TransitOptions& options() const noexcept
    {
        return m_options;
    }

private:
    std::vector<std::string> m_stop_ids;
    std::map<std::string, std::int32_t> m_stop_lookup;
    std::vector<Eigen::Vector2d> m_stop_pos;
    std::vector<Pattern> m_patterns;
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> m_stop_patterns; ///< (pattern, position)
    std::vector<std::vector<Footpath>> m_footpaths;
    GridIndex m_index;
    TransitOptions m_options;
};

/// Round-based earliest-arrival search between two points. Access and egress are
/// straight-line walks of at most access_radius_m; at least one vehicle is boarded and
/// at most max_transfers + 1 rides are used. Returns nullopt when no itinerary exists.
std::optional<TransitItinerary> transit_earliest_arrival(const Timetable& timetable, const Eigen::Vector2d& origin,
                                                         const Eigen::Vector2d& destination, int depart_s);

} // namespace agentsim
