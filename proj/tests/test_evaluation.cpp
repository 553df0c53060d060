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
#include "agentsim/errors.hpp"
#include "agentsim/evaluation.hpp"
#include "agentsim/random.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace agentsim;

namespace
{

DecidedTrip trip(std::int64_t agent, Mode mode, double length_m = 1000, double duration_s = 600)
{
    DecidedTrip t;
    t.agent_id = agent;
    t.mode = mode;
    t.length_m = length_m;
    t.duration_s = duration_s;
    return t;
}

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out(i++) = x;
    }
    return out;
}

ReferenceDataset region(const std::string& name, Eigen::Vector4d split, Eigen::VectorXd length, Eigen::VectorXd duration)
{
    ReferenceDataset r;
    r.region = name;
    r.modal_split = split;
    r.length = Histogram{Dimension::Length, default_edges(Dimension::Length), length};
    r.duration = Histogram{Dimension::Duration, default_edges(Dimension::Duration), duration};
    return r;
}

const std::filesystem::path kData = AGENTSIM_SOURCE_DIR "/data";

} // namespace

TEST(ModalSplit, all_pedestrian)
{
    const auto s = modal_split({trip(1, Mode::Pedestrian), trip(2, Mode::Pedestrian)});
    EXPECT_EQ(s, Eigen::Vector4d(100, 0, 0, 0));
}

TEST(ModalSplit, ten_trip_tally)
{
    std::vector<DecidedTrip> trips;
    const Mode modes[] = {Mode::Pedestrian, Mode::Passenger, Mode::Passenger, Mode::PublicTransport, Mode::Bicycle,
                          Mode::Pedestrian, Mode::Passenger, Mode::PublicTransport, Mode::Pedestrian, Mode::Passenger};
    int tally[4] = {0, 0, 0, 0};
    for (auto m : modes) {
        trips.push_back(trip(1, m));
        ++tally[m == Mode::Pedestrian ? 0 : m == Mode::Bicycle ? 1 : m == Mode::Passenger ? 2 : 3];
    }
    const auto s = modal_split(trips);
    for (int k = 0; k < 4; ++k) {
        EXPECT_DOUBLE_EQ(s(k), tally[k] * 10.0);
    }
    EXPECT_DOUBLE_EQ(s(2), 40.0); // passenger is counted as car traffic

    std::vector<double> w(trips.size(), 0.0);
    w[4] = 2.0;
    w[3] = 2.0;
    EXPECT_EQ(modal_split(trips, &w), Eigen::Vector4d(0, 50, 0, 50));
}

TEST(ModalSplit, empty_is_an_error)
{
    EXPECT_THROW(modal_split({}), EmptySetError);
    std::vector<double> w = {0.0};
    EXPECT_THROW(modal_split({trip(1, Mode::Bicycle)}, &w), EmptySetError);
}

TEST(ModalSplit, berlin_reference_file)
{
    const auto ref = ReferenceDataset::load(kData / "reference" / "berlin.json");
    ASSERT_TRUE(ref.modal_split);
    EXPECT_EQ(*ref.modal_split, Eigen::Vector4d(27, 15, 34, 25));
    EXPECT_FALSE(ref.length);
}

TEST(Histogram, single_length_fills_one_bin)
{
    std::vector<DecidedTrip> trips(7, trip(1, Mode::Passenger, 3000));
    const auto h = distribution_histogram(trips, Dimension::Length);
    ASSERT_EQ(h.bins(), 8u);
    EXPECT_DOUBLE_EQ(h.percent(3), 100.0);
    EXPECT_EQ(h.bin_label(3), "2-5");
    EXPECT_EQ(h.bin_label(7), "50+");
    EXPECT_DOUBLE_EQ(h.percent.sum(), 100.0);
}

TEST(Histogram, edges_are_left_closed)
{
    const auto h = distribution_histogram({trip(1, Mode::Pedestrian, 500, 300)}, Dimension::Length);
    EXPECT_DOUBLE_EQ(h.percent(1), 100.0);
    const auto d = distribution_histogram({trip(1, Mode::Pedestrian, 500, 300)}, Dimension::Duration);
    EXPECT_DOUBLE_EQ(d.percent(1), 100.0);
    EXPECT_THROW(distribution_histogram({}, Dimension::Length, {0, 1, 1}), InputError);
    EXPECT_EQ(distribution_histogram({}, Dimension::Length).percent.sum(), 0.0);
}

TEST(Histogram, short_trip_shares_of_fixtures)
{
    // 29 of 1000 trips under 500 m, 139 of 1000 under five minutes
    std::vector<DecidedTrip> trips;
    for (int i = 0; i < 1000; ++i) {
        trips.push_back(trip(i, Mode::Pedestrian, i < 29 ? 400 : 3000, i < 139 ? 240 : 1200));
    }
    EXPECT_NEAR(distribution_histogram(trips, Dimension::Length).percent(0), 2.9, 1e-9);
    EXPECT_NEAR(distribution_histogram(trips, Dimension::Duration).percent(0), 13.9, 1e-9);
}

TEST(Histogram, percentages_sum_to_100)
{
    Rng rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<DecidedTrip> trips;
        const auto n = 1 + rng.below(300);
        for (std::size_t i = 0; i < n; ++i) {
            trips.push_back(trip(1, Mode::Bicycle, rng.uniform(1, 80000), rng.uniform(1, 7200)));
        }
        for (auto dim : {Dimension::Length, Dimension::Duration}) {
            const auto h = distribution_histogram(trips, dim);
            EXPECT_NEAR(h.percent.sum(), 100.0, 1e-6);
            EXPECT_GE(h.percent.minCoeff(), 0.0);
        }
    }
}

TEST(Rmse, closed_forms)
{
    EXPECT_EQ(rmse(vec({50, 50}), vec({40, 60})), 10.0);
    EXPECT_EQ(rmse(vec({1, 2, 3}), vec({1, 2, 3})), 0.0);
    EXPECT_THROW(rmse(vec({1, 2}), vec({1, 2, 3})), InputError);
    EXPECT_THROW(rmse(Eigen::VectorXd(), Eigen::VectorXd()), InputError);
}

TEST(Rmse, symmetric_and_zero_on_diagonal)
{
    Rng rng(5);
    for (int rep = 0; rep < 500; ++rep) {
        Eigen::VectorXd a(8), b(8);
        for (int i = 0; i < 8; ++i) {
            a(i) = rng.uniform(0, 100);
            b(i) = rng.uniform(0, 100);
        }
        EXPECT_EQ(rmse(a, b), rmse(b, a));
        EXPECT_EQ(rmse(a, a), 0.0);
        EXPECT_GE(rmse(a, b), 0.0);
    }
}

TEST(Aggregate, is_the_mean_of_the_indicators)
{
    IndicatorScores s{4.07, 6.07, 6.12, {}};
    ASSERT_TRUE(s.aggregate());
    EXPECT_NEAR(*s.aggregate(), 5.42, 0.005);
    EXPECT_DOUBLE_EQ(*s.aggregate(), (4.07 + 6.07 + 6.12) / 3.0);
    IndicatorScores partial{2.0, std::nullopt, 4.0, {"duration"}};
    EXPECT_DOUBLE_EQ(*partial.aggregate(), 3.0);
    EXPECT_FALSE(IndicatorScores{}.aggregate());
}

TEST(SplitByAttribute, single_group_matches_overall)
{
    std::map<std::int64_t, Attributes> pop;
    std::vector<DecidedTrip> trips;
    for (int a = 0; a < 8; ++a) {
        pop[a] = {{"occupation", "employee"}};
        trips.push_back(trip(a, a % 3 ? Mode::Passenger : Mode::Bicycle));
    }
    const auto g = split_by_attribute(trips, pop, "occupation");
    ASSERT_EQ(g.size(), 1u);
    EXPECT_FALSE(g[0].excluded);
    EXPECT_EQ(g[0].split, modal_split(trips));
}

TEST(SplitByAttribute, small_group_is_flagged)
{
    std::map<std::int64_t, Attributes> pop;
    std::vector<DecidedTrip> trips;
    for (int a = 0; a < 10; ++a) {
        pop[a] = {{"occupation", a == 9 ? "pupil" : "employee"}};
        trips.push_back(trip(a, Mode::PublicTransport));
    }
    pop[10] = {{"occupation", "retiree"}}; // no trips
    const auto g = split_by_attribute(trips, pop, "occupation", 5);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_EQ(g[0].group, "employee");
    EXPECT_FALSE(g[0].excluded);
    EXPECT_EQ(g[1].group, "pupil");
    EXPECT_TRUE(g[1].excluded);
    EXPECT_EQ(g[1].agents, 1u);
    EXPECT_TRUE(g[2].excluded);
    EXPECT_THROW(split_by_attribute(trips, pop, "hobby"), InputError);
}

TEST(SplitByAttribute, car_share_follows_income)
{
    // reference direction: car share rises with income
    std::map<std::int64_t, Attributes> pop;
    std::vector<DecidedTrip> trips;
    const char* levels[] = {"1_low", "2_medium", "3_high"};
    for (int lvl = 0; lvl < 3; ++lvl) {
        for (int a = 0; a < 10; ++a) {
            const int id = lvl * 100 + a;
            pop[id] = {{"economic_status", levels[lvl]}};
            trips.push_back(trip(id, a < 3 + 2 * lvl ? Mode::Passenger : Mode::PublicTransport));
        }
    }
    const auto g = split_by_attribute(trips, pop, "economic_status");
    ASSERT_EQ(g.size(), 3u);
    EXPECT_LT(g[0].split(2), g[1].split(2));
    EXPECT_LT(g[1].split(2), g[2].split(2));
}

TEST(Interregional, ranks_states_by_aggregate)
{
    struct Row {
        const char* name;
        double m, d, l;
    };
    const Row table[] = {{"Schleswig-Holstein", 17.07, 3.41, 2.39}, {"Hamburg", 1.99, 1.36, 0.91},
                         {"Niedersachsen", 18.34, 4.60, 1.93},      {"Bremen", 7.30, 3.78, 2.66},
                         {"Nordrhein-Westfalen", 15.65, 3.93, 1.64}, {"Hessen", 15.33, 3.68, 1.41},
                         {"Rheinland-Pfalz", 18.68, 4.08, 2.19},    {"Baden-Wuerttemberg", 15.97, 4.29, 1.04},
                         {"Bayern", 16.34, 4.27, 1.28},             {"Saarland", 23.43, 4.03, 2.41},
                         {"Brandenburg", 16.26, 2.16, 3.14},        {"Mecklenburg-Vorpommern", 15.55, 4.30, 1.72},
                         {"Sachsen", 17.12, 3.15, 1.00},            {"Sachsen-Anhalt", 15.94, 3.11, 2.33},
                         {"Thueringen", 17.62, 3.58, 2.03}};
    std::vector<ComparisonRow> rows;
    for (const auto& r : table) {
        rows.push_back({r.name, {r.m, r.d, r.l, {}}, false});
    }
    rows.push_back({"simulation", {4.07, 6.07, 6.12, {}}, true});
    const auto ranked = rank_rows(rows);
    EXPECT_EQ(ranked[0].name, "Hamburg");
    EXPECT_NEAR(*ranked[0].scores.aggregate(), 1.42, 0.005);
    EXPECT_EQ(ranked[1].name, "Bremen");
    EXPECT_NEAR(*ranked[1].scores.aggregate(), 4.58, 0.005);
    EXPECT_TRUE(ranked[2].simulation);
}

TEST(Interregional, identical_simulation_ranks_first)
{
    const auto berlin = region("Berlin", {27, 15, 34, 24}, vec({12, 10, 15, 25, 18, 12, 6, 2}),
                               vec({5, 15, 15, 15, 20, 15, 10, 5}));
    const auto other = region("Elsewhere", {20, 10, 50, 20}, vec({10, 10, 15, 25, 20, 12, 6, 2}),
                              vec({5, 15, 15, 15, 20, 15, 10, 5}));
    SimulatedIndicators sim{*berlin.modal_split, *berlin.length, *berlin.duration};
    const auto s = score(sim, berlin);
    EXPECT_EQ(*s.aggregate(), 0.0);
    const auto rows = interregional_compare(s, berlin, {other});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_TRUE(rows[0].simulation);
    EXPECT_THROW(interregional_compare(s, berlin, {}), InputError);
}

TEST(Interregional, two_state_hand_calculation)
{
    const auto target = region("Target", {25, 25, 25, 25}, vec({50, 50, 0, 0, 0, 0, 0, 0}),
                               vec({100, 0, 0, 0, 0, 0, 0, 0}));
    const auto a = region("A", {35, 15, 25, 25}, vec({40, 60, 0, 0, 0, 0, 0, 0}), vec({100, 0, 0, 0, 0, 0, 0, 0}));
    auto b = region("B", {25, 25, 45, 5}, vec({50, 50, 0, 0, 0, 0, 0, 0}), vec({60, 40, 0, 0, 0, 0, 0, 0}));
    b.length.reset();
    // A: modality sqrt((100+100)/4), length sqrt((100+100)/8), duration 0
    // B: modality sqrt((400+400)/4), duration sqrt((1600+1600)/8), length skipped
    const auto rows = interregional_compare({0.0, 0.0, 0.0, {}}, target, {a, b});
    ASSERT_EQ(rows.size(), 3u);
    const auto& ra = rows[1].name == "A" ? rows[1] : rows[2];
    const auto& rb = rows[1].name == "B" ? rows[1] : rows[2];
    EXPECT_NEAR(*ra.scores.modality, std::sqrt(50.0), 1e-12);
    EXPECT_NEAR(*ra.scores.length, 5.0, 1e-12);
    EXPECT_NEAR(*ra.scores.duration, 0.0, 1e-12);
    EXPECT_NEAR(*rb.scores.modality, std::sqrt(200.0), 1e-12);
    EXPECT_NEAR(*rb.scores.duration, 20.0, 1e-12);
    EXPECT_FALSE(rb.scores.length);
    EXPECT_EQ(rb.scores.skipped, std::vector<std::string>{"length"});
    EXPECT_NEAR(*rb.scores.aggregate(), (std::sqrt(200.0) + 20.0) / 2, 1e-12);
    EXPECT_EQ(rows[1].name, "A"); // 4.0 < 17.07
}

TEST(Counts, constant_observed_is_all_ones)
{
    const auto p = normalize_counts(Eigen::VectorXd::LinSpaced(24, 0, 23), Eigen::VectorXd::Constant(24, 42));
    EXPECT_EQ(p.observed, Eigen::VectorXd::Ones(24));
    EXPECT_DOUBLE_EQ(p.simulated.maxCoeff(), 1.0);
}

TEST(Counts, scale_invariance)
{
    Rng rng(9);
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd s(24), o(24);
        for (int h = 0; h < 24; ++h) {
            s(h) = rng.uniform(0, 500);
            o(h) = rng.uniform(0, 500);
        }
        const double k = rng.uniform(0.01, 100);
        const auto a = normalize_counts(s, o);
        const auto b = normalize_counts(k * s, o);
        EXPECT_LT((a.simulated - b.simulated).cwiseAbs().maxCoeff(), 1e-12);
        Eigen::Index ia, ib;
        a.simulated.maxCoeff(&ia);
        b.simulated.maxCoeff(&ib);
        EXPECT_EQ(ia, ib);
        EXPECT_NEAR(normalize_counts(s, s * k).shape_rmse, 0.0, 1e-12);
    }
}

TEST(Counts, shifted_morning_peak)
{
    Eigen::VectorXd s = Eigen::VectorXd::Zero(24), o = Eigen::VectorXd::Zero(24);
    s(7) = 100;
    s(8) = 50;
    o(7) = 50;
    o(8) = 100;
    EXPECT_NEAR(normalize_counts(s, o).shape_rmse, std::sqrt(0.5 / 24), 1e-12);
}

TEST(Counts, degenerate_profiles)
{
    const auto p = normalize_counts(Eigen::VectorXd::Zero(24), Eigen::VectorXd::Ones(24));
    EXPECT_TRUE(p.simulated_all_zero);
    EXPECT_EQ(p.simulated, Eigen::VectorXd::Zero(24));
    EXPECT_THROW(normalize_counts(Eigen::VectorXd::Ones(24), Eigen::VectorXd::Zero(24)), InputError);
    EXPECT_THROW(normalize_counts(Eigen::VectorXd::Ones(24), Eigen::VectorXd::Ones(23)), InputError);
    EXPECT_THROW(normalize_counts(-Eigen::VectorXd::Ones(24), Eigen::VectorXd::Ones(24)), InputError);
}

TEST(Reference, json_round_trip_and_validation)
{
    auto r = region("X", {27, 15, 34, 25}, vec({12, 10, 15, 25, 18, 12, 6, 2}), vec({5, 15, 15, 15, 20, 15, 10, 5}));
    r.stratified["economic_status"]["low"] = {40, 20, 15, 25};
    const auto back = ReferenceDataset::from_json(Json::parse(r.to_json().dump()));
    EXPECT_EQ(*back.modal_split, *r.modal_split);
    EXPECT_EQ(back.length->edges, r.length->edges);
    EXPECT_EQ(back.duration->percent, r.duration->percent);
    EXPECT_EQ(back.stratified.at("economic_status").at("low"), r.stratified["economic_status"]["low"]);

    Json bad = r.to_json();
    bad["modal_split"]["walk"] = 40;
    EXPECT_THROW(ReferenceDataset::from_json(bad), SchemaError);
    bad = r.to_json();
    bad["length_histogram"]["percent"] = Json::array({100});
    EXPECT_THROW(ReferenceDataset::from_json(bad), SchemaError);
    EXPECT_THROW(ReferenceDataset::from_json(Json{{"modal_split", {}}}), SchemaError);
}

TEST(Report, aggregate_and_tables)
{
    EvaluationInputs in;
    for (int a = 0; a < 20; ++a) {
        in.population[a] = {{"economic_status", a < 10 ? "low" : "high"}, {"occupation", "employee"}};
        in.trips.push_back(trip(a, a % 4 == 0 ? Mode::Passenger : Mode::Pedestrian, 300.0 + 400 * a, 120.0 + 90 * a));
    }
    in.reference = region("Toy", {50, 10, 25, 15}, vec({30, 20, 20, 20, 10, 0, 0, 0}), vec({20, 20, 20, 20, 10, 10, 0, 0}));
    in.simulated_counts["S"] = Eigen::VectorXd::Ones(24);
    in.observed_counts["S"] = Eigen::VectorXd::Constant(24, 3);
    in.simulated_counts["unobserved"] = Eigen::VectorXd::Ones(24);
    const auto rep = evaluate(in);
    ASSERT_TRUE(rep.scores.aggregate());
    EXPECT_DOUBLE_EQ(*rep.scores.aggregate(), (*rep.scores.modality + *rep.scores.duration + *rep.scores.length) / 3);
    EXPECT_NEAR(*rep.scores.modality, rmse(modal_split(in.trips), *in.reference.modal_split), 1e-12);
    ASSERT_EQ(rep.stations.size(), 1u);
    EXPECT_EQ(rep.stations[0].profiles.shape_rmse, 0.0);
    const auto tables = rep.csv_tables();
    EXPECT_EQ(tables.size(), 5u);
    EXPECT_EQ(tables.at("modal_split.csv").substr(0, 28), "category,simulated,reference");
    const auto j = rep.to_json();
    EXPECT_EQ(j["stratified"]["economic_status"].size(), 2u);
    EXPECT_EQ(j["rmse"]["aggregate"].get<double>(), *rep.scores.aggregate());
}
