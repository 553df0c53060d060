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
#include "agentsim/routing.hpp"

#include <cmath>

#include "agentsim/errors.hpp"

namespace agentsim
{

const RoadGraph& MultimodalNetwork::graph(Mode mode) const
{
    switch (mode) {
    case Mode::Pedestrian:
        return walk;
    case Mode::Bicycle:
        return bike;
    case Mode::Passenger:
        return car;
    case Mode::PublicTransport:
        break;
    }
    throw InputError("public transport has no road graph");
}

double MultimodalNetwork::connector_speed(Mode mode) const
{
    switch (mode) {
    case Mode::Pedestrian:
    case Mode::PublicTransport:
        return speeds.walk_mps;
    case Mode::Bicycle:
        return speeds.bike_mps;
    case Mode::Passenger: {
        const auto it = speeds.car_default_kmh.find("service");
        return (it == speeds.car_default_kmh.end() ? 20.0 : it->second) / 3.6;
    }
    }
    return speeds.walk_mps;
}

MultimodalNetwork build_network(const OsmData& osm, const LocalProjection& projection, const GtfsFeed* gtfs,
                                std::string_view day_of_week, const ModeSpeeds& speeds, const TransitOptions& transit)
{
    MultimodalNetwork net;
    net.projection = projection;
    net.speeds = speeds;
    net.walk = build_road_graph(osm, projection, RoadMode::Walk, speeds);
    net.bike = build_road_graph(osm, projection, RoadMode::Bike, speeds);
    net.car = build_road_graph(osm, projection, RoadMode::Car, speeds);
    if (gtfs) {
        TransitOptions opts = transit;
        opts.walk_mps = speeds.walk_mps;
        net.transit.emplace(*gtfs, projection, day_of_week, opts);
    }
    return net;
}

std::int64_t encode_route_id(std::int64_t agent_id, int leg)
{
    if (leg < 0 || leg > 98) {
        throw InputError("leg index " + std::to_string(leg) + " does not fit the route id encoding (0..98)");
    }
    if (agent_id < 0) {
        throw InputError("negative agent id in route id");
    }
    return agent_id * 10000 + leg * 100 + (leg + 1);
}

std::pair<std::int64_t, int> decode_route_id(std::int64_t route_id)
{
    const std::int64_t agent = route_id / 10000;
    const int rest = static_cast<int>(route_id % 10000);
    const int leg = rest / 100;
    if (rest % 100 != leg + 1) {
        throw ParseError("route id " + std::to_string(route_id) + " is not an agent/leg encoding");
    }
    return {agent, leg};
}

RouteOption shortest_path_mode(const MultimodalNetwork& net, const ItineraryQuery& query, Mode mode)
{
    const auto& g = net.graph(mode);
    if (g.node_count() == 0) {
        throw NoRouteError(to_string(mode) + ": network has no usable ways");
    }
    const auto a = g.snap(query.origin);
    const auto b = g.snap(query.destination);
    const double ca = (g.position(a) - query.origin).norm();
    const double cb = (g.position(b) - query.destination).norm();
    const double v = net.connector_speed(mode);
    const auto path = shortest_path(g, a, b);
    if (!path) {
        throw NoRouteError(to_string(mode) + ": destination unreachable");
    }
    RouteOption opt;
    opt.route_id = encode_route_id(query.agent_id, query.leg);
    opt.mode = mode;
    opt.length_m = std::max(1.0, path->length_m + ca + cb);
    opt.duration_s = path->time_s + (ca + cb) / v;
    if (opt.length_m > path->length_m + ca + cb) {
        opt.duration_s = std::max(opt.duration_s, opt.length_m / v);
    }
    return opt;
}

RouteOption transit_route(const MultimodalNetwork& net, const ItineraryQuery& query)
{
    if (!net.transit) {
        throw NoRouteError("public_transport: no timetable loaded");
    }
    const int depart = query.depart_after_s;
    const auto it = transit_earliest_arrival(*net.transit, query.origin, query.destination, depart);
    if (!it) {
        throw NoRouteError("public_transport: no itinerary");
    }
    RouteOption opt;
    opt.route_id = encode_route_id(query.agent_id, query.leg);
    opt.mode = Mode::PublicTransport;
    opt.duration_s = std::max(1.0, static_cast<double>(it->arrival_s - depart));
    opt.length_m = std::max(1.0, it->length_m());
    opt.access_s = it->access_s + it->egress_s + it->transfer_walk_s;
    opt.wait_s = it->wait_s;
    opt.in_vehicle_s = it->in_vehicle_s;
    opt.transfers = it->transfers();
    return opt;
}

std::vector<RouteOption> route_options(const MultimodalNetwork& net, const ItineraryQuery& query)
{
    std::vector<RouteOption> out;
    for (auto mode : kAllModes) {
        try {
            out.push_back(mode == Mode::PublicTransport ? transit_route(net, query) : shortest_path_mode(net, query, mode));
        }
        catch (const NoRouteError&) {
        }
    }
    return out;
}

std::vector<PlannedTrip> plan_trips(const DaySchedule& schedule, const std::vector<std::int64_t>& locations)
{
    if (locations.size() != schedule.activities.size()) {
        throw InputError("one resolved location per activity expected");
    }
    std::vector<PlannedTrip> out;
    for (const auto& intent : extract_trips(schedule)) {
        const auto from = locations[static_cast<std::size_t>(intent.from_activity)];
        const auto to = locations[static_cast<std::size_t>(intent.to_activity)];
        if (from == to) {
            continue;
        }
        PlannedTrip t;
        t.agent_id = schedule.agent_id;
        t.leg = static_cast<int>(out.size());
        t.from_building = from;
        t.to_building = to;
        t.depart_after = intent.depart_after;
        t.arrive_by = intent.arrive_by;
        t.from_category = intent.from_category;
        t.to_category = intent.to_category;
        t.purpose = intent.purpose_text;
        out.push_back(std::move(t));
    }
    return out;
}

Json planned_trip_to_json(const PlannedTrip& t)
{
    return {{"agent_id", t.agent_id},     {"leg", t.leg},
            {"from_building", t.from_building}, {"to_building", t.to_building},
            {"depart_after", format_clock(t.depart_after)}, {"arrive_by", format_clock(t.arrive_by)},
            {"from_category", t.from_category}, {"to_category", t.to_category},
            {"purpose", t.purpose}};
}

PlannedTrip planned_trip_from_json(const Json& d)
{
    PlannedTrip t;
    t.agent_id = d.at("agent_id").get<std::int64_t>();
    t.leg = d.at("leg").get<int>();
    t.from_building = d.at("from_building").get<std::int64_t>();
    t.to_building = d.at("to_building").get<std::int64_t>();
    t.depart_after = parse_clock(d.at("depart_after").get<std::string>());
    t.arrive_by = parse_clock(d.at("arrive_by").get<std::string>());
    t.from_category = d.at("from_category").get<std::string>();
    t.to_category = d.at("to_category").get<std::string>();
    t.purpose = d.value("purpose", std::string());
    return t;
}

std::string route_options_csv_header()
{
    return csv_line({"agent_id", "leg", "mode", "duration_s", "length_m", "route_id"});
}

std::string route_option_csv_row(std::int64_t agent_id, int leg, const RouteOption& o)
{
    char dur[32], len[32];
    std::snprintf(dur, sizeof dur, "%.1f", o.duration_s);
    std::snprintf(len, sizeof len, "%.1f", o.length_m);
    return csv_line({std::to_string(agent_id), std::to_string(leg), to_string(o.mode), dur, len,
                     std::to_string(o.route_id)});
}

std::map<std::pair<std::int64_t, int>, std::vector<RouteOption>> read_route_options_csv(const std::filesystem::path& path)
{
    const auto table = read_csv(path);
    const auto ca = table.column("agent_id");
    const auto cl = table.column("leg");
    const auto cm = table.column("mode");
    const auto cd = table.column("duration_s");
    const auto cn = table.column("length_m");
    const auto cr = table.column("route_id");
    std::map<std::pair<std::int64_t, int>, std::vector<RouteOption>> out;
    for (const auto& row : table.rows) {
        const auto agent = parse_int(row[ca]);
        const auto leg = parse_int(row[cl]);
        const auto dur = parse_double(row[cd]);
        const auto len = parse_double(row[cn]);
        const auto rid = parse_int(row[cr]);
        if (!agent || !leg || !dur || !len || !rid) {
            throw ParseError("malformed route option row in " + path.string());
        }
        RouteOption o;
        o.route_id = *rid;
        o.mode = mode_from_string(row[cm]);
        o.duration_s = *dur;
        o.length_m = *len;
        if (!(o.duration_s > 0) || !(o.length_m > 0)) {
            throw SchemaError("route option with nonpositive duration or length in " + path.string());
        }
        out[{*agent, static_cast<int>(*leg)}].push_back(o);
    }
    return out;
}

} // namespace agentsim
