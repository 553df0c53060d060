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
#include "agentsim/assignment.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "agentsim/errors.hpp"
#include "agentsim/parallel.hpp"
#include "agentsim/random.hpp"

namespace agentsim
{

void AssignmentConfig::validate() const
{
    if (!(bpr_alpha >= 0)) {
        throw InputError("bpr_alpha must be >= 0");
    }
    if (!(bpr_beta >= 1)) {
        throw InputError("bpr_beta must be >= 1");
    }
    if (!(gap_tolerance > 0)) {
        throw InputError("gap_tolerance must be > 0");
    }
    if (max_iterations < 1) {
        throw InputError("max_iterations must be >= 1");
    }
    if (!(scale_factor > 0)) {
        throw InputError("scale_factor must be > 0");
    }
    if (!(replica_radius_m >= 0)) {
        throw InputError("replica_radius_m must be >= 0");
    }
}

AssignmentConfig AssignmentConfig::from_json(const Json& doc)
{
    AssignmentConfig c;
    c.bpr_alpha = doc.value("bpr_alpha", c.bpr_alpha);
    c.bpr_beta = doc.value("bpr_beta", c.bpr_beta);
    c.max_iterations = doc.value("max_iterations", c.max_iterations);
    c.gap_tolerance = doc.value("gap_tolerance", c.gap_tolerance);
    c.scale_factor = doc.value("scale_factor", c.scale_factor);
    c.replica_radius_m = doc.value("replica_radius_m", c.replica_radius_m);
    c.workers = doc.value("workers", c.workers);
    c.validate();
    return c;
}

Json AssignmentConfig::to_json() const
{
    return {{"bpr_alpha", bpr_alpha},           {"bpr_beta", bpr_beta},
            {"max_iterations", max_iterations}, {"gap_tolerance", gap_tolerance},
            {"scale_factor", scale_factor},     {"replica_radius_m", replica_radius_m},
            {"workers", workers}};
}

double relative_gap(const Eigen::Ref<const Eigen::VectorXd>& flows, const Eigen::Ref<const Eigen::VectorXd>& times,
                    double shortest_path_cost)
{
    if (flows.size() != times.size()) {
        throw InputError("flow and time vectors differ in length");
    }
    if (shortest_path_cost <= 0) {
        return 0.0;
    }
    return (flows.dot(times) - shortest_path_cost) / shortest_path_cost;
}

namespace
{

struct Group {
    int hour;
    std::int32_t origin;
    std::vector<std::size_t> demands;
};

struct Routed {
    std::vector<std::size_t> edges;
    double cost = std::numeric_limits<double>::infinity();
};

// All-or-nothing: shortest path per demand under the given per-hour times.
std::vector<Routed> route_all(const RoadGraph& g, const std::vector<CarDemand>& demand,
                              const std::vector<Group>& groups, const Eigen::MatrixXd& times, int workers)
{
    std::vector<Routed> out(demand.size());
    parallel_for(groups.size(), static_cast<std::size_t>(std::max(1, workers)), [&](std::size_t gi) {
        const auto& grp = groups[gi];
        const Eigen::VectorXd t = times.col(grp.hour);
        const auto tree = shortest_path_tree(g, grp.origin, &t);
        for (auto di : grp.demands) {
            const auto dest = demand[di].destination;
            if (!std::isfinite(tree.time(dest))) {
                continue;
            }
            out[di].cost = tree.time(dest);
            out[di].edges = tree_path(g, tree, dest);
        }
    });
    return out;
}

} // namespace

AssignmentResult msa_assign(const RoadGraph& g, const std::vector<CarDemand>& demand, const AssignmentConfig& config)
{
    config.validate();
    const auto m = static_cast<Eigen::Index>(g.edge_count());
    const auto n_nodes = static_cast<std::int32_t>(g.node_count());

    std::map<std::pair<int, std::int32_t>, std::size_t> group_of;
    std::vector<Group> groups;
    for (std::size_t i = 0; i < demand.size(); ++i) {
        const auto& d = demand[i];
        if (d.hour < 0 || d.hour >= kHours) {
            throw InputError("demand hour outside 0..23");
        }
        if (d.origin < 0 || d.origin >= n_nodes || d.destination < 0 || d.destination >= n_nodes) {
            throw InputError("demand node outside the car graph");
        }
        if (!(d.weight >= 0)) {
            throw InputError("negative demand weight");
        }
        auto [it, fresh] = group_of.try_emplace({d.hour, d.origin}, groups.size());
        if (fresh) {
            groups.push_back({d.hour, d.origin, {}});
        }
        groups[it->second].demands.push_back(i);
    }

    Eigen::VectorXd t0(m), cap_sample(m);
    for (Eigen::Index e = 0; e < m; ++e) {
        const auto& edge = g.edge(static_cast<std::size_t>(e));
        t0(e) = edge.free_flow_time();
        // flows are in simulated agents, each standing for scale_factor vehicles
        cap_sample(e) = edge.capacity_vph > 0 ? edge.capacity_vph / config.scale_factor
                                              : std::numeric_limits<double>::infinity();
    }
    auto congested = [&](const Eigen::MatrixXd& f) {
        Eigen::MatrixXd t(m, kHours);
        for (int h = 0; h < kHours; ++h) {
            t.col(h) = bpr_travel_times(t0.array(), f.col(h).array(), cap_sample.array(), config.bpr_alpha,
                                        config.bpr_beta)
                           .matrix();
        }
        return t;
    };

    AssignmentResult res;
    res.flows = Eigen::MatrixXd::Zero(m, kHours);
    res.path_shares.assign(demand.size(), {});

    auto load = [&](const std::vector<Routed>& routed) {
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m, kHours);
        for (std::size_t i = 0; i < demand.size(); ++i) {
            for (auto e : routed[i].edges) {
                y(static_cast<Eigen::Index>(e), demand[i].hour) += demand[i].weight;
            }
        }
        return y;
    };

    Eigen::MatrixXd times = t0.replicate(1, kHours);
    auto routed = route_all(g, demand, groups, times, config.workers);
    for (std::size_t i = 0; i < demand.size(); ++i) {
        if (std::isfinite(routed[i].cost)) {
            res.path_shares[i].push_back({routed[i].edges, 1.0});
        }
        else {
            ++res.unroutable;
        }
    }
    res.flows = load(routed);
    res.iterations = 1;

    for (;;) {
        times = congested(res.flows);
        routed = route_all(g, demand, groups, times, config.workers);
        double sp = 0.0;
        for (std::size_t i = 0; i < demand.size(); ++i) {
            if (std::isfinite(routed[i].cost)) {
                sp += demand[i].weight * routed[i].cost;
            }
        }
        const Eigen::Map<const Eigen::VectorXd> fv(res.flows.data(), res.flows.size());
        const Eigen::Map<const Eigen::VectorXd> tv(times.data(), times.size());
        res.relative_gap = relative_gap(fv, tv, sp);
        res.gap_history.push_back(res.relative_gap);
        if (res.relative_gap < config.gap_tolerance) {
            res.converged = true;
            break;
        }
        if (res.iterations >= config.max_iterations) {
            break;
        }
        ++res.iterations;
        const double step = 1.0 / res.iterations;
        res.flows += step * (load(routed) - res.flows);
        for (std::size_t i = 0; i < demand.size(); ++i) {
            auto& shares = res.path_shares[i];
            if (shares.empty()) {
                continue;
            }
            bool merged = false;
            for (auto& [path, share] : shares) {
                share *= 1.0 - step;
                if (!merged && path == routed[i].edges) {
                    share += step;
                    merged = true;
                }
            }
            if (!merged) {
                shares.push_back({routed[i].edges, step});
            }
        }
    }
    res.times = times;
    return res;
}

std::vector<CarDemand> car_demand(const std::vector<DecidedTrip>& trips, const LocationCatalog& catalog,
                                  const RoadGraph& car, const AssignmentConfig& config, std::uint64_t seed)
{
    config.validate();
    if (car.node_count() == 0) {
        throw InputError("car graph is empty");
    }
    const int replicas = std::max(1, static_cast<int>(std::ceil(config.scale_factor - 1e-9)));
    const double weight = 1.0 / replicas;
    auto relocate = [&](std::int64_t building, std::uint64_t s) {
        const auto& b = catalog.building(building);
        if (config.replica_radius_m <= 0 || b.categories.empty()) {
            return building;
        }
        return resample_within_radius(catalog, building, config.replica_radius_m, b.categories.front(), s);
    };
    std::vector<CarDemand> out;
    for (const auto& t : trips) {
        if (t.mode != Mode::Passenger) {
            continue;
        }
        const std::int64_t key = t.agent_id * 100 + t.leg;
        const int hour = std::clamp(t.depart_s / 3600, 0, kHours - 1);
        const auto base = derive_seed(seed, static_cast<std::uint64_t>(key), "assignment_replica");
        for (int k = 0; k < replicas; ++k) {
            std::int64_t from = t.from_building;
            std::int64_t to = t.to_building;
            if (k > 0) {
                from = relocate(from, splitmix64(base + 2 * static_cast<std::uint64_t>(k)));
                to = relocate(to, splitmix64(base + 2 * static_cast<std::uint64_t>(k) + 1));
            }
            CarDemand d;
            d.origin = car.snap(catalog.building(from).position);
            d.destination = car.snap(catalog.building(to).position);
            d.hour = hour;
            d.weight = weight;
            d.trip_key = key;
            out.push_back(d);
        }
    }
    return out;
}

std::vector<std::pair<std::string, std::size_t>> read_station_map(const std::filesystem::path& path,
                                                                  const RoadGraph& car)
{
    const auto table = read_csv(path);
    const auto cs = table.column("station_id");
    const auto ce = table.column("edge_id");
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& row : table.rows) {
        const auto e = parse_int(row[ce]);
        if (!e || *e < 0 || static_cast<std::size_t>(*e) >= car.edge_count()) {
            throw InputError("station " + row[cs] + " maps to unknown edge '" + row[ce] + "'");
        }
        out.emplace_back(row[cs], static_cast<std::size_t>(*e));
    }
    return out;
}

std::vector<StationCounts> emit_counts(const AssignmentResult& result,
                                       const std::vector<std::pair<std::string, std::size_t>>& stations,
                                       double scale_factor)
{
    std::vector<StationCounts> out;
    for (const auto& [id, edge] : stations) {
        if (static_cast<Eigen::Index>(edge) >= result.flows.rows()) {
            throw InputError("station " + id + " maps to an edge outside the assignment");
        }
        out.push_back({id, edge, result.flows.row(static_cast<Eigen::Index>(edge)).transpose() * scale_factor});
    }
    return out;
}

std::string counts_to_csv(const std::vector<StationCounts>& counts)
{
    std::ostringstream os;
    os << csv_line({"station_id", "hour", "simulated_count"});
    char buf[32];
    for (const auto& s : counts) {
        for (Eigen::Index h = 0; h < s.counts.size(); ++h) {
            std::snprintf(buf, sizeof buf, "%.3f", s.counts(h));
            os << csv_line({s.station_id, std::to_string(h), buf});
        }
    }
    return os.str();
}

std::string car_edges_csv(const RoadGraph& car)
{
    std::ostringstream os;
    os << csv_line({"edge_id", "from", "to", "way_id", "length_m", "capacity_vph", "free_flow_s", "x", "y"});
    char buf[5][32];
    for (std::size_t e = 0; e < car.edge_count(); ++e) {
        const auto& edge = car.edge(e);
        const Eigen::Vector2d mid = 0.5 * (car.position(edge.from) + car.position(edge.to));
        std::snprintf(buf[0], 32, "%.1f", edge.length_m);
        std::snprintf(buf[1], 32, "%.0f", edge.capacity_vph);
        std::snprintf(buf[2], 32, "%.2f", edge.free_flow_time());
        std::snprintf(buf[3], 32, "%.1f", mid.x());
        std::snprintf(buf[4], 32, "%.1f", mid.y());
        os << csv_line({std::to_string(e), std::to_string(edge.from), std::to_string(edge.to),
                        std::to_string(edge.way_id), buf[0], buf[1], buf[2], buf[3], buf[4]});
    }
    return os.str();
}

} // namespace agentsim
