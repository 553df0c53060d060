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
#include "agentsim/toy_city.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "agentsim/errors.hpp"
#include "agentsim/network.hpp"
#include "agentsim/osm.hpp"
#include "agentsim/random.hpp"
#include "agentsim/transit.hpp"
#include "agentsim/zip_archive.hpp"

namespace agentsim
{

namespace
{

constexpr double kLat0 = 52.52;
constexpr double kLon0 = 13.40;

struct Builder {
    LocalProjection proj{kLat0, kLon0};
    double half = 0.0;
    OsmData osm;
    std::int64_t next_node = 1;
    std::int64_t next_way = 1;

    std::int64_t node(const Eigen::Vector2d& xy, Tags tags = {})
    {
        const auto ll = proj.unproject(xy - Eigen::Vector2d(half, half));
        osm.nodes.push_back({next_node, ll[0], ll[1], std::move(tags)});
        return next_node++;
    }

    void way(std::vector<std::int64_t> refs, Tags tags)
    {
        osm.ways.push_back({next_way++, std::move(refs), std::move(tags)});
    }

    void building(const Eigen::Vector2d& c, double w, double h, Tags tags)
    {
        const std::int64_t a = node(c + Eigen::Vector2d(-w / 2, -h / 2));
        const std::int64_t b = node(c + Eigen::Vector2d(w / 2, -h / 2));
        const std::int64_t d = node(c + Eigen::Vector2d(w / 2, h / 2));
        const std::int64_t e = node(c + Eigen::Vector2d(-w / 2, h / 2));
        way({a, b, d, e, a}, std::move(tags));
    }
};

std::string num(double v, const char* spec = "%.0f")
{
    char buf[32];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// Street grid: every third street is a primary road, the rest residential.
void streets(Builder& b, const ToyCityOptions& o)
{
    const int n = static_cast<int>(std::round(o.size_m / o.street_spacing_m)) + 1;
    std::vector<std::vector<std::int64_t>> ids(static_cast<std::size_t>(n), std::vector<std::int64_t>(n));
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            ids[y][x] = b.node({x * o.street_spacing_m, y * o.street_spacing_m});
        }
    }
    auto tags = [](int i) {
        return i % 3 == 0 ? Tags{{"highway", "primary"}, {"maxspeed", "50"}, {"lanes", "2"}, {"name", "Avenue"}}
                          : Tags{{"highway", "residential"}, {"name", "Street"}};
    };
    for (int y = 0; y < n; ++y) {
        b.way(ids[y], tags(y));
    }
    for (int x = 0; x < n; ++x) {
        std::vector<std::int64_t> col;
        for (int y = 0; y < n; ++y) {
            col.push_back(ids[y][x]);
        }
        b.way(col, tags(x));
    }
}

// Buildings sit inside blocks, clear of the streets.
void buildings(Builder& b, const ToyCityOptions& o, Rng& rng)
{
    const double s = o.street_spacing_m;
    const int blocks = static_cast<int>(std::round(o.size_m / s));
    auto in_block = [&](int bx, int by) {
        return Eigen::Vector2d((bx + 0.2 + 0.6 * rng.uniform()) * s, (by + 0.2 + 0.6 * rng.uniform()) * s);
    };
    auto at = [&](double fx, double fy) {
        const int bx = std::min(blocks - 1, static_cast<int>(fx * blocks));
        const int by = std::min(blocks - 1, static_cast<int>(fy * blocks));
        return in_block(bx, by);
    };

    // homes: one per block, a second in about a sixth of them
    for (int by = 0; by < blocks; ++by) {
        for (int bx = 0; bx < blocks; ++bx) {
            for (int k = 0; k < (rng.bernoulli(1.0 / 6) ? 2 : 1); ++k) {
                if (rng.bernoulli(0.3)) {
                    b.building(in_block(bx, by), 20 + 20 * rng.uniform(), 15 + 15 * rng.uniform(),
                               {{"building", "apartments"}});
                }
                else {
                    b.building(in_block(bx, by), 9 + 6 * rng.uniform(), 8 + 5 * rng.uniform(), {{"building", "house"}});
                }
            }
        }
    }
    // offices cluster in the north-east, plus an industrial estate in the south-west
    for (int i = 0; i < 10; ++i) {
        b.building(at(0.70 + 0.28 * rng.uniform(), 0.70 + 0.28 * rng.uniform()), 40, 30, {{"building", "office"}});
    }
    for (int i = 0; i < 2; ++i) {
        b.building(at(0.02 + 0.15 * rng.uniform(), 0.02 + 0.15 * rng.uniform()), 80, 50,
                   {{"building", "industrial"}});
    }
    b.building(at(0.92, 0.08), 120, 80, {{"building", "university"}});
    for (auto [fx, fy] : {std::pair{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}}) {
        b.building(at(fx, fy), 60, 40, {{"building", "school"}});
    }
    for (auto [fx, fy] : {std::pair{0.4, 0.6}, {0.6, 0.4}}) {
        b.building(at(fx, fy), 25, 20, {{"building", "kindergarten"}});
    }
    for (auto [fx, fy] : {std::pair{0.15, 0.5}, {0.5, 0.15}, {0.5, 0.5}, {0.85, 0.5}, {0.5, 0.85}, {0.2, 0.85}}) {
        b.building(at(fx, fy), 35, 25, {{"building", "retail"}, {"shop", "supermarket"}});
    }
    for (int i = 0; i < 2; ++i) {
        b.building(at(0.75 + 0.2 * rng.uniform(), 0.75 + 0.2 * rng.uniform()), 20, 15,
                   {{"building", "commercial"}, {"amenity", "canteen"}});
    }
    for (auto [fx, fy] : {std::pair{0.45, 0.45}, {0.3, 0.65}, {0.8, 0.8}}) {
        b.node(at(fx, fy), {{"amenity", "cafe"}});
    }
    for (auto [fx, fy] : {std::pair{0.55, 0.55}, {0.2, 0.3}}) {
        b.node(at(fx, fy), {{"amenity", "restaurant"}});
    }
    b.building(at(0.5, 0.45), 30, 30, {{"amenity", "library"}});
    b.building(at(0.55, 0.6), 40, 30, {{"amenity", "cinema"}});
    b.building(at(0.3, 0.4), 30, 20, {{"amenity", "community_centre"}});
}

// Bus lines on a grid offset from the streets, running both ways all week.
GtfsFeed transit(const Builder& b, const ToyCityOptions& o)
{
    GtfsFeed f;
    f.services.push_back({"daily", {true, true, true, true, true, true, true}});
    const int lines = static_cast<int>(std::floor(o.size_m / o.line_spacing_m));
    const int stops = static_cast<int>(std::round(o.size_m / o.stop_spacing_m)) + 1;
    const int hop_s = static_cast<int>(std::round(o.stop_spacing_m / (25.0 / 3.6))) + 20;
    for (int axis = 0; axis < 2; ++axis) {
        for (int l = 0; l < lines; ++l) {
            const double offset = (l + 0.5) * o.line_spacing_m;
            const std::string route = std::string(axis == 0 ? "H" : "V") + std::to_string(l + 1);
            f.routes[route] = route;
            for (int i = 0; i < stops; ++i) {
                const Eigen::Vector2d xy = axis == 0 ? Eigen::Vector2d(i * o.stop_spacing_m, offset)
                                                     : Eigen::Vector2d(offset, i * o.stop_spacing_m);
                const auto ll = b.proj.unproject(xy - Eigen::Vector2d(b.half, b.half));
                f.stops.push_back({route + "_" + std::to_string(i), route + " stop " + std::to_string(i + 1), ll[0],
                                   ll[1]});
            }
            const int count = (24 * 3600 - 5 * 3600) / o.headway_s;
            for (int dir = 0; dir < 2; ++dir) {
                for (int k = 0; k < count; ++k) {
                    const std::string trip = route + "_" + std::to_string(dir) + "_" + std::to_string(k);
                    f.trips.push_back({trip, route, "daily"});
                    // lines are staggered so transfers do not all line up
                    const int first = 5 * 3600 + k * o.headway_s + (l * 97) % o.headway_s;
                    for (int i = 0; i < stops; ++i) {
                        const int idx = dir == 0 ? i : stops - 1 - i;
                        const int t = first + i * hop_s;
                        f.stop_times.push_back({trip, route + "_" + std::to_string(idx), i + 1, t, t});
                    }
                }
            }
        }
    }
    return f;
}

std::string microdata(const ToyCityOptions& o, Rng& rng)
{
    static const char* statuses[] = {"very_low", "low", "medium", "high", "very_high"};
    static const char* bands[] = {"under_900", "900_1499", "1500_1999", "2000_2999",
                                  "3000_3999", "4000_4999", "5000_plus"};
    std::string out = csv_line({"record_id", "age", "sex", "occupation", "economic_status", "household_size",
                                "car_ownership", "bike_ownership", "income_band", "weight"});
    for (int i = 0; i < o.records; ++i) {
        const int age = i < 5 ? 30 + 5 * i : 6 + static_cast<int>(rng.below(80));
        std::string occ;
        if (age < 18) {
            occ = "pupil";
        }
        else if (age < 25) {
            occ = rng.bernoulli(0.6) ? "student" : rng.bernoulli(0.5) ? "trainee" : "full_time";
        }
        else if (age < 65) {
            const double u = rng.uniform();
            occ = u < 0.6 ? "full_time" : u < 0.8 ? "part_time" : u < 0.9 ? "homemaker" : "unemployed";
        }
        else {
            occ = "retiree";
        }
        const int status = i < 5 ? i : static_cast<int>(rng.below(5));
        const char* sex = i % 40 == 7 ? "diverse" : rng.bernoulli(0.5) ? "female" : "male";
        const int hh = 1 + static_cast<int>(rng.below(5));
        const int cars = age < 18 ? 0 : static_cast<int>(rng.uniform() < 0.25 + 0.15 * status) + (status >= 3 && rng.bernoulli(0.3));
        const int bikes = rng.bernoulli(0.7) ? 1 + static_cast<int>(rng.below(2)) : 0;
        const char* band = age < 18 ? "" : bands[std::min(6, status + static_cast<int>(rng.below(3)))];
        out += csv_line({"R" + num(i + 1, "%03.0f"), std::to_string(age), sex, occ, statuses[status],
                         std::to_string(hh), std::to_string(cars), std::to_string(bikes), band,
                         num(0.5 + 2.5 * rng.uniform(), "%.3f")});
    }
    return out;
}

std::string marginals(const std::vector<std::pair<std::string, double>>& rows)
{
    std::string out = csv_line({"category", "total"});
    for (const auto& [c, t] : rows) {
        out += csv_line({c, num(t)});
    }
    return out;
}

Json histogram(std::initializer_list<double> edges, std::initializer_list<double> percent)
{
    Json e = Json::array();
    for (double v : edges) {
        e.push_back(std::isinf(v) ? Json("inf") : Json(v));
    }
    return {{"edges", e}, {"percent", Json(std::vector<double>(percent))}};
}

const double kInf = INFINITY;

} // namespace

Json write_toy_city(const std::filesystem::path& dir, const ToyCityOptions& o)
{
    if (!(o.size_m > 0) || !(o.street_spacing_m > 0) || !(o.line_spacing_m > 0) || !(o.stop_spacing_m > 0) ||
        o.headway_s <= 0 || o.records < 5 || o.population_total < 1 || !(o.sample_fraction > 0) ||
        o.sample_fraction > 1) {
        throw InputError("invalid toy city options");
    }
    std::filesystem::create_directories(dir / "states");
    Rng rng(o.seed);
    Builder b;
    b.half = o.size_m / 2;
    streets(b, o);
    buildings(b, o, rng);
    b.osm.finalize();
    write_text_file(dir / "city.osm", write_osm_xml(b.osm));
    write_text_file(dir / "transit.zip", build_zip(write_gtfs(transit(b, o))));
    write_text_file(dir / "microdata.csv", microdata(o, rng));

    const double n = o.population_total;
    write_text_file(dir / "marginals_economic_status.csv",
                    marginals({{"very_low", 0.10 * n}, {"low", 0.20 * n}, {"medium", 0.35 * n},
                               {"high", 0.25 * n}, {"very_high", 0.10 * n}}));
    write_text_file(dir / "marginals_sex.csv",
                    marginals({{"male", 0.49 * n}, {"female", 0.50 * n}, {"diverse", 0.01 * n}}));

    // count stations on the avenues, one per side of the centre
    const LocalProjection proj = LocalProjection::centred_on(b.osm);
    const RoadGraph car = build_road_graph(b.osm, proj, RoadMode::Car);
    const double s = o.street_spacing_m;
    const double avenue = 3 * s;
    const std::vector<std::pair<std::string, Eigen::Vector2d>> sites = {
        {"ST1", {avenue + s / 2, 2 * avenue}},
        {"ST2", {2 * avenue, avenue + s / 2}},
        {"ST3", {3 * avenue + s / 2, 2 * avenue}},
        {"ST4", {2 * avenue, 3 * avenue + s / 2}}};
    const Eigen::Vector2d shift = proj.project(kLat0, kLon0) - Eigen::Vector2d(b.half, b.half);
    std::string stations = csv_line({"station_id", "edge_id"});
    std::string observed = csv_line({"station_id", "hour", "count"});
    for (const auto& [id, xy] : sites) {
        std::size_t best = 0;
        double best_d = INFINITY;
        for (std::size_t e = 0; e < car.edge_count(); ++e) {
            const auto& edge = car.edge(e);
            const Eigen::Vector2d mid = 0.5 * (car.position(edge.from) + car.position(edge.to)) - shift;
            const double d = (mid - xy).norm();
            if (d < best_d - 1e-9) {
                best_d = d;
                best = e;
            }
        }
        stations += csv_line({id, std::to_string(best)});
        // two commuter peaks over a daytime base, with per-station amplitude
        const double amp = 300 + 100 * rng.uniform();
        for (int h = 0; h < 24; ++h) {
            const double base = h >= 6 && h <= 22 ? 0.25 : 0.04;
            const double v = amp * (base + 0.75 * std::exp(-0.5 * std::pow((h - 8) / 1.2, 2)) +
                                    0.65 * std::exp(-0.5 * std::pow((h - 17) / 1.6, 2)));
            observed += csv_line({id, std::to_string(h), num(v)});
        }
    }
    write_text_file(dir / "stations.csv", stations);
    write_text_file(dir / "observed_counts.csv", observed);

    const auto len_edges = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, kInf};
    const auto dur_edges = {0.0, 5.0, 10.0, 15.0, 20.0, 30.0, 45.0, 60.0, kInf};
    const Json reference = {
        {"region", "Toy city survey"},
        {"modal_split", {{"walk", 27}, {"bike", 15}, {"mit", 34}, {"public_transport", 24}}},
        {"length_histogram", histogram(len_edges, {12, 13, 17, 25, 18, 10, 4, 1})},
        {"duration_histogram", histogram(dur_edges, {6, 16, 15, 14, 19, 16, 8, 6})},
        {"stratified",
         {{"economic_status",
           {{"very_low", {{"walk", 38}, {"bike", 16}, {"mit", 16}, {"public_transport", 30}}},
            {"low", {{"walk", 33}, {"bike", 15}, {"mit", 24}, {"public_transport", 28}}},
            {"medium", {{"walk", 27}, {"bike", 15}, {"mit", 34}, {"public_transport", 24}}},
            {"high", {{"walk", 23}, {"bike", 15}, {"mit", 42}, {"public_transport", 20}}},
            {"very_high", {{"walk", 20}, {"bike", 14}, {"mit", 49}, {"public_transport", 17}}}}}}}};
    write_text_file(dir / "reference.json", reference.dump(2) + "\n");
    const Json north = {{"region", "Northtown"},
                        {"modal_split", {{"walk", 22}, {"bike", 12}, {"mit", 51}, {"public_transport", 15}}},
                        {"length_histogram", histogram(len_edges, {10, 12, 16, 24, 19, 12, 5, 2})},
                        {"duration_histogram", histogram(dur_edges, {8, 18, 15, 14, 18, 14, 7, 6})}};
    const Json south = {{"region", "Southvale"},
                        {"modal_split", {{"walk", 26}, {"bike", 18}, {"mit", 33}, {"public_transport", 23}}},
                        {"length_histogram", histogram(len_edges, {13, 13, 18, 24, 17, 10, 4, 1})}};
    write_text_file(dir / "states" / "northtown.json", north.dump(2) + "\n");
    write_text_file(dir / "states" / "southvale.json", south.dump(2) + "\n");

    const Json config = {
        {"seed", 42},
        {"population_total", o.population_total},
        {"sample_fraction", o.sample_fraction},
        {"workers", 4},
        {"date", {{"description", "Tuesday, a regular working day"}, {"day_of_week", "tuesday"}}},
        {"backend", {{"kind", "stub"}, {"record", true}}},
        {"mode_choice", {{"prompt_variant", "default_fewshot_cot"}, {"city", "Toy City"}, {"residents", "locals"}}},
        {"assignment", {{"max_iterations", 50}, {"gap_tolerance", 1e-3}, {"replica_radius_m", 2000}}},
        {"paths",
         {{"microdata", "microdata.csv"},
          {"marginals",
           Json::array({{{"attribute", "economic_status"}, {"path", "marginals_economic_status.csv"}},
                        {{"attribute", "sex"}, {"path", "marginals_sex.csv"}}})},
          {"osm", "city.osm"},
          {"gtfs", "transit.zip"},
          {"reference", "reference.json"},
          {"states", Json::array({"states/northtown.json", "states/southvale.json"})},
          {"stations", "stations.csv"},
          {"observed_counts", "observed_counts.csv"}}}};
    write_text_file(dir / "config.json", config.dump(2) + "\n");
    return config;
}

} // namespace agentsim
