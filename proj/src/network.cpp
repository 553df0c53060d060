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
#include "agentsim/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <regex>
#include <set>
#include <unordered_map>

#include "agentsim/errors.hpp"

namespace agentsim
{

std::string to_string(Mode mode)
{
    switch (mode) {
    case Mode::Pedestrian:
        return "pedestrian";
    case Mode::Bicycle:
        return "bicycle";
    case Mode::Passenger:
        return "passenger";
    case Mode::PublicTransport:
        return "public_transport";
    }
    return "unknown";
}

Mode mode_from_string(std::string_view name)
{
    for (auto m : kAllModes) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ParseError("unknown mode '" + std::string(name) + "'");
}

ModeSpeeds ModeSpeeds::from_json(const Json& doc)
{
    ModeSpeeds s;
    s.walk_mps = doc.value("walk_mps", s.walk_mps);
    s.bike_mps = doc.value("bike_mps", s.bike_mps);
    if (doc.contains("car_default_kmh")) {
        for (const auto& [k, v] : doc["car_default_kmh"].items()) {
            s.car_default_kmh[k] = v.get<double>();
        }
    }
    if (!(s.walk_mps > 0) || !(s.bike_mps > 0)) {
        throw InputError("mode speeds must be positive");
    }
    for (const auto& [k, v] : s.car_default_kmh) {
        if (!(v > 0)) {
            throw InputError("car default speed for '" + k + "' must be positive");
        }
    }
    return s;
}

std::optional<double> parse_maxspeed(std::string_view value)
{
    static const std::regex re(R"(^\s*(\d+(?:\.\d+)?)\s*(km/h|kmh|kph|mph|knots)?\s*$)");
    const std::string v(value);
    std::smatch m;
    if (!std::regex_match(v, m, re)) {
        return std::nullopt;
    }
    const double n = std::stod(m[1].str());
    if (!(n > 0)) {
        return std::nullopt;
    }
    const std::string unit = m[2].str();
    const double kmh = unit == "mph" ? n * 1.609344 : unit == "knots" ? n * 1.852 : n;
    return kmh / 3.6;
}

// ---- graph ------------------------------------------------------------------

RoadGraph::RoadGraph(std::vector<Eigen::Vector2d> node_positions, std::vector<std::int64_t> osm_ids,
                     std::vector<RoadEdge> edges)
    : m_pos(std::move(node_positions))
    , m_osm(std::move(osm_ids))
    , m_edges(std::move(edges))
{
    if (m_osm.empty()) {
        m_osm.resize(m_pos.size());
        std::iota(m_osm.begin(), m_osm.end(), 0);
    }
    if (m_osm.size() != m_pos.size()) {
        throw InputError("road graph: node ids and positions differ in length");
    }
    const auto n = static_cast<std::int32_t>(m_pos.size());
    for (const auto& e : m_edges) {
        if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
            throw InputError("road graph: edge endpoint out of range");
        }
        if (!(e.length_m > 0) || !(e.speed_mps > 0)) {
            throw InputError("road graph: edge length and speed must be positive");
        }
    }
    std::sort(m_edges.begin(), m_edges.end(), [](const RoadEdge& a, const RoadEdge& b) {
        return std::tie(a.from, a.to, a.way_id, a.length_m) < std::tie(b.from, b.to, b.way_id, b.length_m);
    });
    m_offsets.assign(m_pos.size() + 1, 0);
    for (const auto& e : m_edges) {
        ++m_offsets[static_cast<std::size_t>(e.from) + 1];
    }
    std::partial_sum(m_offsets.begin(), m_offsets.end(), m_offsets.begin());
    std::vector<std::int64_t> ids(m_pos.size());
    std::iota(ids.begin(), ids.end(), 0);
    m_snap = GridIndex(std::move(ids), m_pos, 250.0);
}

std::int32_t RoadGraph::snap(const Eigen::Vector2d& p) const
{
    return static_cast<std::int32_t>(m_snap.nearest(p));
}

Eigen::VectorXd RoadGraph::free_flow_times() const
{
    Eigen::VectorXd t(static_cast<Eigen::Index>(m_edges.size()));
    for (std::size_t i = 0; i < m_edges.size(); ++i) {
        t(static_cast<Eigen::Index>(i)) = m_edges[i].free_flow_time();
    }
    return t;
}

RoadGraph RoadGraph::largest_component() const
{
    const std::size_t n = m_pos.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& e : m_edges) {
        const auto a = find(static_cast<std::size_t>(e.from));
        const auto b = find(static_cast<std::size_t>(e.to));
        if (a != b) {
            parent[std::max(a, b)] = std::min(a, b);
        }
    }
    std::map<std::size_t, std::size_t> sizes;
    for (std::size_t i = 0; i < n; ++i) {
        ++sizes[find(i)];
    }
    std::size_t best_root = 0, best_size = 0;
    for (const auto& [root, size] : sizes) {
        if (size > best_size) {
            best_root = root;
            best_size = size;
        }
    }
    std::vector<std::int32_t> remap(n, -1);
    std::vector<Eigen::Vector2d> pos;
    std::vector<std::int64_t> osm;
    for (std::size_t i = 0; i < n; ++i) {
        if (find(i) == best_root) {
            remap[i] = static_cast<std::int32_t>(pos.size());
            pos.push_back(m_pos[i]);
            osm.push_back(m_osm[i]);
        }
    }
    std::vector<RoadEdge> edges;
    for (auto e : m_edges) {
        if (remap[static_cast<std::size_t>(e.from)] >= 0) {
            e.from = remap[static_cast<std::size_t>(e.from)];
            e.to = remap[static_cast<std::size_t>(e.to)];
            edges.push_back(e);
        }
    }
    return RoadGraph(std::move(pos), std::move(osm), std::move(edges));
}

namespace
{

struct QueueItem {
    double time;
    std::int32_t node;
    bool operator>(const QueueItem& o) const
    {
        return time > o.time || (time == o.time && node > o.node);
    }
};

ShortestPathTree dijkstra(const RoadGraph& g, std::int32_t source, std::int32_t target, const Eigen::VectorXd* times)
{
    const auto n = static_cast<Eigen::Index>(g.node_count());
    ShortestPathTree tree;
    tree.time = Eigen::VectorXd::Constant(n, INFINITY);
    tree.pred_edge.assign(static_cast<std::size_t>(n), -1);
    if (source < 0 || source >= n) {
        throw InputError("shortest path: source node out of range");
    }
    if (times && times->size() != static_cast<Eigen::Index>(g.edge_count())) {
        throw InputError("shortest path: edge time vector has the wrong length");
    }
    std::vector<char> done(static_cast<std::size_t>(n), 0);
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> pq;
    tree.time(source) = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        const auto [t, u] = pq.top();
        pq.pop();
        if (done[static_cast<std::size_t>(u)]) {
            continue;
        }
        done[static_cast<std::size_t>(u)] = 1;
        if (u == target) {
            break;
        }
        const std::size_t base = g.first_edge(u);
        const auto out = g.out_edges(u);
        for (std::size_t k = 0; k < out.size(); ++k) {
            const auto& e = out[k];
            const std::size_t id = base + k;
            const double w = times ? (*times)(static_cast<Eigen::Index>(id)) : e.free_flow_time();
            const double nt = t + w;
            if (nt < tree.time(e.to)) {
                tree.time(e.to) = nt;
                tree.pred_edge[static_cast<std::size_t>(e.to)] = static_cast<std::int64_t>(id);
                pq.push({nt, e.to});
            }
        }
    }
    return tree;
}

} // namespace

std::vector<std::size_t> tree_path(const RoadGraph& graph, const ShortestPathTree& tree, std::int32_t target)
{
    std::vector<std::size_t> path;
    std::int32_t v = target;
    while (tree.pred_edge[static_cast<std::size_t>(v)] >= 0) {
        const auto id = static_cast<std::size_t>(tree.pred_edge[static_cast<std::size_t>(v)]);
        path.push_back(id);
        v = graph.edge(id).from;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::optional<PathResult> shortest_path(const RoadGraph& graph, std::int32_t source, std::int32_t target,
                                        const Eigen::VectorXd* edge_times)
{
    if (target < 0 || target >= static_cast<std::int32_t>(graph.node_count())) {
        throw InputError("shortest path: target node out of range");
    }
    const auto tree = dijkstra(graph, source, target, edge_times);
    if (!std::isfinite(tree.time(target))) {
        return std::nullopt;
    }
    PathResult r;
    r.time_s = tree.time(target);
    r.edges = tree_path(graph, tree, target);
    for (auto id : r.edges) {
        r.length_m += graph.edge(id).length_m;
    }
    return r;
}

ShortestPathTree shortest_path_tree(const RoadGraph& graph, std::int32_t source, const Eigen::VectorXd* edge_times)
{
    return dijkstra(graph, source, -1, edge_times);
}

// ---- OSM permissions --------------------------------------------------------

namespace
{

std::string tag(const Tags& t, const char* k)
{
    const auto it = t.find(k);
    return it == t.end() ? std::string() : it->second;
}

bool denied(const std::string& v)
{
    return v == "no" || v == "private";
}

bool granted(const std::string& v)
{
    return v == "yes" || v == "designated" || v == "permissive";
}

const std::set<std::string> kCarClasses = {
    "motorway", "motorway_link", "trunk", "trunk_link", "primary", "primary_link", "secondary", "secondary_link",
    "tertiary", "tertiary_link", "unclassified", "residential", "living_street", "service", "road"};
const std::set<std::string> kMotorOnly = {"motorway", "motorway_link", "trunk", "trunk_link"};
const std::set<std::string> kPathClasses = {"pedestrian", "footway", "path", "steps", "track",
                                            "cycleway", "bridleway", "corridor"};

bool is_way_area(const Tags& t)
{
    return tag(t, "area") == "yes";
}

int oneway_value(const Tags& t)
{
    const auto v = tag(t, "oneway");
    if (v == "yes" || v == "1" || v == "true") {
        return 1;
    }
    if (v == "-1" || v == "reverse") {
        return -1;
    }
    if (v == "no" || v == "false" || v == "0") {
        return 0;
    }
    const auto hw = tag(t, "highway");
    if (tag(t, "junction") == "roundabout" || hw == "motorway" || hw == "motorway_link") {
        return 1;
    }
    return 0;
}

} // namespace

bool ModePermissions::car(const Tags& t)
{
    const auto hw = tag(t, "highway");
    if (!kCarClasses.contains(hw) || is_way_area(t)) {
        return false;
    }
    return !denied(tag(t, "access")) && !denied(tag(t, "motor_vehicle")) && !denied(tag(t, "motorcar"));
}

bool ModePermissions::bike(const Tags& t)
{
    const auto hw = tag(t, "highway");
    const auto b = tag(t, "bicycle");
    if (hw.empty() || is_way_area(t) || denied(b)) {
        return false;
    }
    if (granted(b)) {
        return true;
    }
    if (denied(tag(t, "access"))) {
        return false;
    }
    if (kMotorOnly.contains(hw)) {
        return false;
    }
    if (hw == "footway" || hw == "pedestrian" || hw == "steps" || hw == "corridor") {
        return false;
    }
    return kCarClasses.contains(hw) || kPathClasses.contains(hw);
}

bool ModePermissions::walk(const Tags& t)
{
    const auto hw = tag(t, "highway");
    const auto f = tag(t, "foot");
    if (hw.empty() || denied(f)) {
        return false;
    }
    if (granted(f)) {
        return true;
    }
    if (denied(tag(t, "access")) || kMotorOnly.contains(hw)) {
        return false;
    }
    return kCarClasses.contains(hw) || kPathClasses.contains(hw);
}

int ModePermissions::car_oneway(const Tags& t)
{
    return oneway_value(t);
}

int ModePermissions::bike_oneway(const Tags& t)
{
    if (tag(t, "oneway:bicycle") == "no" || tag(t, "cycleway") == "opposite") {
        return 0;
    }
    return oneway_value(t);
}

double road_capacity(const Tags& t, bool oneway)
{
    static const std::map<std::string, double> per_lane = {
        {"motorway", 2000},     {"motorway_link", 1500}, {"trunk", 1800},       {"trunk_link", 1400},
        {"primary", 1500},      {"primary_link", 1200},  {"secondary", 1200},   {"secondary_link", 1000},
        {"tertiary", 1000},     {"tertiary_link", 900},  {"unclassified", 800}, {"residential", 600},
        {"living_street", 300}, {"service", 400},        {"road", 600}};
    const auto hw = tag(t, "highway");
    const auto it = per_lane.find(hw);
    const double lane_cap = it == per_lane.end() ? 600.0 : it->second;
    double lanes = (hw == "motorway" || hw == "trunk") ? 2.0 : 1.0;
    if (const auto l = parse_double(tag(t, "lanes")); l && *l >= 1.0) {
        lanes = oneway ? *l : std::max(1.0, std::ceil(*l / 2.0));
    }
    return lane_cap * lanes;
}

RoadGraph build_road_graph(const OsmData& data, const LocalProjection& projection, RoadMode mode,
                           const ModeSpeeds& speeds)
{
    std::unordered_map<std::int64_t, std::int32_t> local;
    std::vector<Eigen::Vector2d> pos;
    std::vector<std::int64_t> osm;
    std::vector<RoadEdge> edges;
    auto node_of = [&](const OsmNode& n) {
        const auto [it, inserted] = local.try_emplace(n.id, static_cast<std::int32_t>(pos.size()));
        if (inserted) {
            pos.push_back(projection.project(n.lat, n.lon));
            osm.push_back(n.id);
        }
        return it->second;
    };

    for (const auto& way : data.ways) {
        bool allowed = false;
        int oneway = 0;
        double speed = 0.0;
        switch (mode) {
        case RoadMode::Walk:
            allowed = ModePermissions::walk(way.tags);
            speed = speeds.walk_mps;
            break;
        case RoadMode::Bike:
            allowed = ModePermissions::bike(way.tags);
            oneway = ModePermissions::bike_oneway(way.tags);
            speed = speeds.bike_mps;
            break;
        case RoadMode::Car: {
            allowed = ModePermissions::car(way.tags);
            oneway = ModePermissions::car_oneway(way.tags);
            const auto hw = tag(way.tags, "highway");
            if (const auto ms = parse_maxspeed(tag(way.tags, "maxspeed"))) {
                speed = *ms;
            }
            else {
                const auto d = speeds.car_default_kmh.find(hw);
                speed = (d == speeds.car_default_kmh.end() ? 30.0 : d->second) / 3.6;
            }
            break;
        }
        }
        if (!allowed || way.refs.size() < 2) {
            continue;
        }
        const double cap = mode == RoadMode::Car ? road_capacity(way.tags, oneway != 0) : 0.0;
        for (std::size_t i = 0; i + 1 < way.refs.size(); ++i) {
            const auto* a = data.node(way.refs[i]);
            const auto* b = data.node(way.refs[i + 1]);
            if (!a || !b || a->id == b->id) {
                continue;
            }
            const auto u = node_of(*a);
            const auto v = node_of(*b);
            // Coincident nodes still get a positive length so that times stay positive.
            const double len = std::max(0.1, (pos[static_cast<std::size_t>(u)] - pos[static_cast<std::size_t>(v)]).norm());
            if (oneway >= 0) {
                edges.push_back({u, v, len, speed, cap, way.id});
            }
            if (oneway <= 0) {
                edges.push_back({v, u, len, speed, cap, way.id});
            }
        }
    }
    if (pos.empty()) {
        return {};
    }
    return RoadGraph(std::move(pos), std::move(osm), std::move(edges)).largest_component();
}

} // namespace agentsim
