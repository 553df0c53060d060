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
#include "agentsim/errors.hpp"
#include "agentsim/random.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace agentsim;

namespace
{

RoadEdge link(std::int32_t from, std::int32_t to, double t0, double cap, std::int64_t way)
{
    RoadEdge e;
    e.from = from;
    e.to = to;
    e.speed_mps = 10.0;
    e.length_m = t0 * 10.0;
    e.capacity_vph = cap;
    e.way_id = way;
    return e;
}

// Two parallel links between node 0 and node 1.
RoadGraph two_links(double t0a, double t0b, double cap)
{
    return RoadGraph({{0, 0}, {1000, 0}}, {1, 2}, {link(0, 1, t0a, cap, 10), link(0, 1, t0b, cap, 11)});
}

RoadGraph grid(int n, double spacing, double cap)
{
    std::vector<Eigen::Vector2d> pos;
    std::vector<std::int64_t> ids;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            pos.emplace_back(x * spacing, y * spacing);
            ids.push_back(static_cast<std::int64_t>(pos.size()));
        }
    }
    std::vector<RoadEdge> edges;
    std::int64_t way = 0;
    auto both = [&](int a, int b) {
        edges.push_back(link(a, b, spacing / 10.0, cap, ++way));
        edges.push_back(link(b, a, spacing / 10.0, cap, way));
    };
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const int i = y * n + x;
            if (x + 1 < n) {
                both(i, i + 1);
            }
            if (y + 1 < n) {
                both(i, i + n);
            }
        }
    }
    return RoadGraph(pos, ids, edges);
}

CarDemand od(std::int32_t o, std::int32_t d, double w, int hour = 8)
{
    CarDemand c;
    c.origin = o;
    c.destination = d;
    c.weight = w;
    c.hour = hour;
    return c;
}

// Equilibrium split of D over two BPR links, by bisection on t1(x) - t2(D - x).
double two_link_equilibrium(double t0a, double t0b, double cap, double demand)
{
    auto g = [&](double x) {
        return bpr_travel_time(t0a, x, cap) - bpr_travel_time(t0b, demand - x, cap);
    };
    if (g(demand) <= 0) {
        return demand;
    }
    if (g(0) >= 0) {
        return 0;
    }
    double lo = 0, hi = demand;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(Bpr, reference_values)
{
    EXPECT_DOUBLE_EQ(bpr_travel_time(1.0, 0.0, 100.0), 1.0);
    EXPECT_DOUBLE_EQ(bpr_travel_time(1.0, 100.0, 100.0), 1.15);
    EXPECT_NEAR(bpr_travel_time(1.0, 200.0, 100.0), 3.4, 1e-12);
    Eigen::ArrayXd t0(3), v(3), c(3);
    t0 << 1, 1, 1;
    v << 0, 100, 200;
    c << 100, 100, 100;
    const Eigen::ArrayXd t = bpr_travel_times(t0, v, c, 0.15, 4.0);
    EXPECT_NEAR(t(2), 3.4, 1e-12);
    EXPECT_DOUBLE_EQ(t(1), 1.15);
}

TEST(AssignmentConfig, validation)
{
    AssignmentConfig c;
    EXPECT_NO_THROW(c.validate());
    c.bpr_alpha = -0.1;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.bpr_beta = 0.5;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.gap_tolerance = 0;
    EXPECT_THROW(c.validate(), InputError);
    EXPECT_THROW(AssignmentConfig::from_json(Json{{"scale_factor", 0}}), InputError);
    const auto r = AssignmentConfig::from_json(AssignmentConfig{}.to_json());
    EXPECT_EQ(r.max_iterations, 50);
    EXPECT_DOUBLE_EQ(r.bpr_alpha, 0.15);
}

TEST(RelativeGap, definition)
{
    Eigen::VectorXd f(2), t(2);
    f << 10, 0;
    t << 5, 3;
    EXPECT_DOUBLE_EQ(relative_gap(f, t, 40.0), 0.25);
    EXPECT_DOUBLE_EQ(relative_gap(f, t, 0.0), 0.0);
    EXPECT_THROW(relative_gap(f, Eigen::VectorXd(3), 1.0), InputError);
}

TEST(Msa, single_route_converges_in_first_iteration)
{
    RoadGraph g({{0, 0}, {100, 0}, {200, 0}}, {1, 2, 3}, {link(0, 1, 10, 100, 1), link(1, 2, 10, 100, 2)});
    const auto r = msa_assign(g, {od(0, 2, 50)}, {});
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_DOUBLE_EQ(r.flows(0, 8), 50);
    EXPECT_DOUBLE_EQ(r.flows(1, 8), 50);
    EXPECT_NEAR(r.relative_gap, 0.0, 1e-12);
}

TEST(Msa, symmetric_links_split_evenly)
{
    const auto g = two_links(600, 600, 100);
    const auto r = msa_assign(g, {od(0, 1, 150)}, {});
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 50);
    EXPECT_NEAR(r.flows(0, 8), 75, 1.0);
    EXPECT_NEAR(r.flows(1, 8), 75, 1.0);
    EXPECT_LT(std::abs(r.times(0, 8) - r.times(1, 8)) / r.times(0, 8), 0.01);
    EXPECT_LT(r.relative_gap, 1e-3);
}

TEST(Msa, asymmetric_links_match_fixed_point)
{
    for (double demand : {50.0, 150.0, 300.0}) {
        const auto g = two_links(300, 600, 100);
        AssignmentConfig cfg;
        cfg.max_iterations = 400;
        cfg.gap_tolerance = 1e-7;
        const auto r = msa_assign(g, {od(0, 1, demand)}, cfg);
        const double x = two_link_equilibrium(300, 600, 100, demand);
        EXPECT_NEAR(r.flows(0, 8), x, 0.01 * demand) << "demand " << demand;
        EXPECT_NEAR(r.flows(0, 8) + r.flows(1, 8), demand, 1e-9);
    }
}

TEST(Msa, gap_trends_down)
{
    const auto g = two_links(300, 600, 100);
    AssignmentConfig cfg;
    cfg.max_iterations = 100;
    cfg.gap_tolerance = 1e-9;
    const auto r = msa_assign(g, {od(0, 1, 300)}, cfg);
    ASSERT_GE(r.gap_history.size(), 20u);
    EXPECT_LT(r.gap_history.back(), r.gap_history.front() / 10);
    // MSA oscillates, so compare block means rather than consecutive values
    auto mean = [&](std::size_t from, std::size_t to) {
        double sum = 0;
        for (std::size_t i = from; i < to; ++i) {
            sum += r.gap_history[i];
        }
        return sum / static_cast<double>(to - from);
    };
    const auto n = r.gap_history.size();
    EXPECT_LT(mean(n - 20, n), mean(0, 10) / 5);
    EXPECT_LT(mean(n - 20, n), mean(n / 2 - 20, n / 2));
}

TEST(Msa, flows_conserve_and_match_paths)
{
    const auto g = grid(6, 200, 60);
    Rng rng(7);
    std::vector<CarDemand> demand;
    for (int i = 0; i < 300; ++i) {
        demand.push_back(od(static_cast<std::int32_t>(rng.below(36)), static_cast<std::int32_t>(rng.below(36)),
                            0.5 + rng.uniform(), static_cast<int>(rng.below(3)) + 7));
    }
    AssignmentConfig cfg;
    cfg.scale_factor = 4.0;
    const auto r = msa_assign(g, demand, cfg);
    EXPECT_EQ(r.unroutable, 0u);
    EXPECT_GE(r.flows.minCoeff(), 0.0);

    Eigen::MatrixXd balance = Eigen::MatrixXd::Zero(36, kHours);
    for (const auto& d : demand) {
        balance(d.origin, d.hour) += d.weight;
        balance(d.destination, d.hour) -= d.weight;
    }
    Eigen::MatrixXd net = Eigen::MatrixXd::Zero(36, kHours);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        net.row(g.edge(e).from) += r.flows.row(static_cast<Eigen::Index>(e));
        net.row(g.edge(e).to) -= r.flows.row(static_cast<Eigen::Index>(e));
    }
    EXPECT_LT((net - balance).cwiseAbs().maxCoeff(), 1e-9);

    Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(r.flows.rows(), kHours);
    for (std::size_t i = 0; i < demand.size(); ++i) {
        double total = 0;
        for (const auto& [path, share] : r.path_shares[i]) {
            total += share;
            std::int32_t at = demand[i].origin;
            for (auto e : path) {
                ASSERT_EQ(g.edge(e).from, at);
                at = g.edge(e).to;
                rebuilt(static_cast<Eigen::Index>(e), demand[i].hour) += share * demand[i].weight;
            }
            EXPECT_EQ(at, demand[i].destination);
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
    EXPECT_LT((rebuilt - r.flows).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Msa, worker_count_does_not_change_result)
{
    const auto g = grid(5, 250, 40);
    Rng rng(3);
    std::vector<CarDemand> demand;
    for (int i = 0; i < 200; ++i) {
        demand.push_back(od(static_cast<std::int32_t>(rng.below(25)), static_cast<std::int32_t>(rng.below(25)), 1.0,
                            static_cast<int>(rng.below(24))));
    }
    AssignmentConfig a, b;
    a.workers = 1;
    b.workers = 8;
    const auto ra = msa_assign(g, demand, a);
    const auto rb = msa_assign(g, demand, b);
    EXPECT_EQ(ra.flows, rb.flows);
    EXPECT_EQ(ra.gap_history, rb.gap_history);
}

TEST(Msa, rejects_bad_demand)
{
    const auto g = two_links(1, 1, 1);
    EXPECT_THROW(msa_assign(g, {od(0, 5, 1)}, {}), InputError);
    EXPECT_THROW(msa_assign(g, {od(0, 1, 1, 24)}, {}), InputError);
}

namespace
{

DecidedTrip trip(std::int64_t agent, int leg, Mode mode, std::int64_t from, std::int64_t to, int depart_s)
{
    DecidedTrip t;
    t.agent_id = agent;
    t.leg = leg;
    t.route_id = encode_route_id(agent, leg);
    t.mode = mode;
    t.from_building = from;
    t.to_building = to;
    t.depart_s = depart_s;
    t.duration_s = 100;
    t.length_m = 100;
    return t;
}

LocationCatalog line_catalog()
{
    std::vector<Building> bs;
    for (int i = 0; i < 6; ++i) {
        Building b;
        b.building_id = i;
        b.position = {i * 200.0, 10.0};
        b.footprint_area = 100;
        b.categories = {i < 3 ? "house" : "office"};
        bs.push_back(b);
    }
    return LocationCatalog(bs, LocalProjection(52.5, 13.4));
}

} // namespace

TEST(Scaling, sample_weight_reproduces_population)
{
    const double scale = 86796.0 / 8680.0;
    const auto g = grid(6, 200, 600);
    const auto cat = line_catalog();
    AssignmentConfig cfg;
    cfg.scale_factor = scale;
    cfg.replica_radius_m = 0;
    const auto demand = car_demand({trip(1, 0, Mode::Passenger, 0, 5, 8 * 3600 + 60)}, cat, g, cfg, 1);
    ASSERT_EQ(demand.size(), 10u);
    double total = 0;
    for (const auto& d : demand) {
        total += d.weight;
        EXPECT_EQ(d.hour, 8);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    const auto r = msa_assign(g, demand, cfg);
    const auto& path = r.path_shares.front().front().first;
    ASSERT_FALSE(path.empty());
    const auto counts = emit_counts(r, {{"S1", path.front()}}, scale);
    EXPECT_NEAR(counts[0].counts(8), scale, 1e-9);
    EXPECT_NEAR(counts[0].counts.sum(), scale, 1e-9);
}

TEST(Scaling, replicas_are_spread_within_radius)
{
    const auto g = grid(6, 200, 600);
    const auto cat = line_catalog();
    AssignmentConfig cfg;
    cfg.scale_factor = 10;
    cfg.replica_radius_m = 450;
    const auto demand = car_demand({trip(2, 1, Mode::Passenger, 1, 4, 3 * 3600)}, cat, g, cfg, 5);
    ASSERT_EQ(demand.size(), 10u);
    const auto o0 = g.position(demand[0].origin);
    bool moved = false;
    for (const auto& d : demand) {
        EXPECT_LE((g.position(d.origin) - o0).norm(), 450 + 2 * 200.0);
        moved = moved || d.origin != demand[0].origin;
    }
    EXPECT_TRUE(moved);
    EXPECT_EQ(car_demand({trip(2, 1, Mode::Passenger, 1, 4, 3 * 3600)}, cat, g, cfg, 5).size(), 10u);
}

TEST(Scaling, no_car_trips_gives_zero_counts)
{
    const auto g = grid(4, 200, 600);
    const auto cat = line_catalog();
    const auto demand = car_demand({trip(1, 0, Mode::Pedestrian, 0, 1, 3600), trip(1, 1, Mode::Bicycle, 1, 0, 7200),
                                    trip(1, 2, Mode::PublicTransport, 0, 4, 9000)},
                                   cat, g, {}, 1);
    EXPECT_TRUE(demand.empty());
    const auto r = msa_assign(g, demand, {});
    EXPECT_TRUE(r.converged);
    const auto counts = emit_counts(r, {{"A", 0}, {"B", 3}}, 10.0);
    for (const auto& c : counts) {
        EXPECT_EQ(c.counts.sum(), 0.0);
    }
}

TEST(Counts, station_map_and_csv)
{
    TempDir dir;
    const auto g = two_links(10, 20, 100);
    {
        std::ofstream(dir.path() / "ok.csv") << "station_id,edge_id\nA,0\nB,1\n";
        std::ofstream(dir.path() / "bad.csv") << "station_id,edge_id\nA,7\n";
    }
    const auto map = read_station_map(dir.path() / "ok.csv", g);
    ASSERT_EQ(map.size(), 2u);
    EXPECT_THROW(read_station_map(dir.path() / "bad.csv", g), InputError);
    const auto r = msa_assign(g, {od(0, 1, 3, 17)}, {});
    const auto csv = counts_to_csv(emit_counts(r, map, 2.0));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "station_id,hour,simulated_count");
    EXPECT_NE(csv.find("A,17,6.000"), std::string::npos);
    EXPECT_NE(csv.find("B,17,0.000"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * kHours);
}
