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
#include "agentsim/location.hpp"
#include "agentsim/random.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace agentsim;

namespace
{

Building make_building(std::int64_t id, Eigen::Vector2d pos, double area, std::vector<std::string> cats)
{
    Building b;
    b.building_id = id;
    b.osm_id = 1000 + id;
    b.position = pos;
    b.footprint_area = area;
    b.categories = std::move(cats);
    return b;
}

// A rectangle of w x h metres centred on (cx, cy), as a closed way.
void add_rect(OsmData& d, const LocalProjection& proj, std::int64_t& next_node, std::int64_t way_id, double cx,
              double cy, double w, double h, Tags tags)
{
    OsmWay way;
    way.id = way_id;
    way.tags = std::move(tags);
    const double xs[] = {cx - w / 2, cx + w / 2, cx + w / 2, cx - w / 2};
    const double ys[] = {cy - h / 2, cy - h / 2, cy + h / 2, cy + h / 2};
    for (int i = 0; i < 4; ++i) {
        const auto ll = proj.unproject({xs[i], ys[i]});
        d.nodes.push_back({next_node, ll[0], ll[1], {}});
        way.refs.push_back(next_node++);
    }
    way.refs.push_back(way.refs.front());
    d.ways.push_back(std::move(way));
}

OsmData small_town(const LocalProjection& proj)
{
    OsmData d;
    std::int64_t n = 1;
    add_rect(d, proj, n, 101, 0, 0, 20, 10, {{"building", "apartments"}});
    add_rect(d, proj, n, 102, 100, 0, 30, 30, {{"building", "school"}});
    add_rect(d, proj, n, 103, 0, 100, 10, 10, {{"building", "yes"}, {"shop", "supermarket"}});
    add_rect(d, proj, n, 104, 200, 200, 10, 10, {{"landuse", "grass"}}); // not a candidate
    const auto cafe = proj.unproject({50, 50});
    d.nodes.push_back({n++, cafe[0], cafe[1], {{"amenity", "cafe"}}});
    const auto plain = proj.unproject({60, 60});
    d.nodes.push_back({n++, plain[0], plain[1], {{"highway", "street_lamp"}}});
    d.finalize();
    return d;
}

} // namespace

TEST(Geometry, shoelace_matches_closed_form)
{
    std::vector<Eigen::Vector2d> rect = {{0, 0}, {4, 0}, {4, 3}, {0, 3}};
    EXPECT_DOUBLE_EQ(shoelace_area(rect), 12.0);
    std::reverse(rect.begin(), rect.end());
    EXPECT_DOUBLE_EQ(shoelace_area(rect), 12.0);
    rect.push_back(rect.front());
    EXPECT_DOUBLE_EQ(shoelace_area(rect), 12.0);
    // random triangles against half the cross product
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        Eigen::Vector2d a(rng.uniform(-50, 50), rng.uniform(-50, 50));
        Eigen::Vector2d b(rng.uniform(-50, 50), rng.uniform(-50, 50));
        Eigen::Vector2d c(rng.uniform(-50, 50), rng.uniform(-50, 50));
        const Eigen::Vector2d u = b - a;
        const Eigen::Vector2d v = c - a;
        const double oracle = 0.5 * std::abs(u.x() * v.y() - u.y() * v.x());
        std::vector<Eigen::Vector2d> tri = {a, b, c};
        EXPECT_NEAR(shoelace_area(tri), oracle, 1e-9);
    }
}

TEST(Geometry, self_intersection_and_centroid)
{
    std::vector<Eigen::Vector2d> bowtie = {{0, 0}, {2, 2}, {2, 0}, {0, 2}};
    EXPECT_TRUE(ring_self_intersects(bowtie));
    std::vector<Eigen::Vector2d> square = {{0, 0}, {2, 0}, {2, 2}, {0, 2}};
    EXPECT_FALSE(ring_self_intersects(square));
    const auto c = ring_centroid(square);
    EXPECT_NEAR(c.x(), 1.0, 1e-12);
    EXPECT_NEAR(c.y(), 1.0, 1e-12);
}

TEST(Projection, inverse_round_trip)
{
    const LocalProjection proj(52.52, 13.40);
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        const double lat = 52.52 + rng.uniform(-0.2, 0.2);
        const double lon = 13.40 + rng.uniform(-0.3, 0.3);
        const auto xy = proj.project(lat, lon);
        const auto back = proj.unproject(xy);
        EXPECT_NEAR(back[0], lat, 1e-9);
        EXPECT_NEAR(back[1], lon, 1e-9);
    }
    // one degree of latitude is about 111.2 km on the sphere
    EXPECT_NEAR(proj.project(53.52, 13.40).y(), 111195.0, 5.0);
}

TEST(Categories, default_rules)
{
    const auto map = CategoryMap::default_map();
    EXPECT_EQ(map.categorize({{"building", "school"}}), std::vector<std::string>{"school"});
    EXPECT_EQ(map.categorize({{"building", "apartments"}}), std::vector<std::string>{"house"});
    EXPECT_EQ(map.categorize({{"building", "yes"}, {"shop", "supermarket"}}), std::vector<std::string>{"supermarket"});
    EXPECT_EQ(map.categorize({{"office", "company"}}), std::vector<std::string>{"office"});
    EXPECT_TRUE(map.categorize({{"landuse", "grass"}}).empty());
    EXPECT_FALSE(map.is_candidate({{"landuse", "grass"}}));
    EXPECT_FALSE(map.categorize({{"building", "yes"}, {"amenity", "parking"}}).size() > 0 &&
                 map.categorize({{"building", "yes"}, {"amenity", "parking"}})[0] == "parking");
}

TEST(Categories, list_form_and_conflicts)
{
    const auto map = CategoryMap::from_json(Json::parse(R"({"amenity": ["school", "library", "..."], "building": ["house", "office"]})"));
    EXPECT_EQ(map.categorize({{"amenity", "library"}}), std::vector<std::string>{"library"});
    EXPECT_EQ(map.categorize({{"building", "house"}}), std::vector<std::string>{"house"});
    EXPECT_TRUE(map.categorize({{"amenity", "..."}}).empty());
    CategoryMap m;
    m.add_rule("amenity", "cafe", "cafe");
    EXPECT_NO_THROW(m.add_rule("amenity", "cafe", "cafe"));
    EXPECT_THROW(m.add_rule("amenity", "cafe", "restaurant"), InputError);
}

TEST(Osm, xml_and_pbf_round_trip)
{
    const LocalProjection proj(52.52, 13.40);
    const auto town = small_town(proj);
    for (const bool pbf : {false, true}) {
        const auto back = pbf ? parse_osm_pbf(write_osm_pbf(town)) : parse_osm_xml(write_osm_xml(town));
        ASSERT_EQ(back.nodes.size(), town.nodes.size());
        ASSERT_EQ(back.ways.size(), town.ways.size());
        for (std::size_t i = 0; i < town.nodes.size(); ++i) {
            EXPECT_EQ(back.nodes[i].id, town.nodes[i].id);
            EXPECT_NEAR(back.nodes[i].lat, town.nodes[i].lat, 1e-7);
            EXPECT_NEAR(back.nodes[i].lon, town.nodes[i].lon, 1e-7);
            EXPECT_EQ(back.nodes[i].tags, town.nodes[i].tags);
        }
        for (std::size_t i = 0; i < town.ways.size(); ++i) {
            EXPECT_EQ(back.ways[i].refs, town.ways[i].refs);
            EXPECT_EQ(back.ways[i].tags, town.ways[i].tags);
        }
    }
    EXPECT_THROW(parse_osm_xml("<notosm/>"), ParseError);
    EXPECT_THROW(parse_osm_pbf("garbage"), ParseError);
}

TEST(Catalog, ingest_small_town)
{
    const LocalProjection proj(52.52, 13.40);
    const auto cat = ingest_osm(small_town(proj), CategoryMap::default_map());
    ASSERT_EQ(cat.buildings().size(), 4u); // three candidate ways plus the cafe node
    EXPECT_NEAR(cat.buildings()[0].footprint_area, 200.0, 0.5);
    // the catalog projects around the centre of the extract
    const Eigen::Vector2d offset = cat.buildings()[1].position - cat.buildings()[0].position;
    EXPECT_NEAR(offset.x(), 100.0, 0.05);
    EXPECT_NEAR(offset.y(), 0.0, 0.05);
    EXPECT_EQ(cat.buildings()[1].categories, std::vector<std::string>{"school"});
    EXPECT_TRUE(cat.buildings()[3].is_point);
    EXPECT_DOUBLE_EQ(cat.buildings()[3].footprint_area, 100.0);
    EXPECT_EQ(cat.categories(), (std::vector<std::string>{"cafe", "house", "school", "supermarket"}));
    EXPECT_EQ(cat.residential(), std::vector<std::int64_t>{0});
    EXPECT_EQ(nearest_building(cat, {90, 10}, "school"), 1);
    EXPECT_THROW(nearest_building(cat, {0, 0}, "cinema"), EmptySetError);

    OsmData empty;
    empty.finalize();
    EXPECT_THROW(ingest_osm(empty, CategoryMap::default_map()), EmptySetError);
}

TEST(Catalog, file_ingest_matches_in_memory)
{
    TempDir dir;
    const LocalProjection proj(52.52, 13.40);
    const auto town = small_town(proj);
    write_text_file(dir.path() / "town.osm", write_osm_xml(town));
    write_text_file(dir.path() / "town.osm.pbf", write_osm_pbf(town));
    const auto a = ingest_osm_file(dir.path() / "town.osm", CategoryMap::default_map());
    const auto b = ingest_osm_file(dir.path() / "town.osm.pbf", CategoryMap::default_map());
    ASSERT_EQ(a.buildings().size(), b.buildings().size());
    for (std::size_t i = 0; i < a.buildings().size(); ++i) {
        // PBF stores coordinates on a 1e-7 degree grid
        EXPECT_LT((a.buildings()[i].position - b.buildings()[i].position).norm(), 0.05);
        EXPECT_NEAR(a.buildings()[i].footprint_area, b.buildings()[i].footprint_area, 0.5);
        EXPECT_EQ(a.buildings()[i].categories, b.buildings()[i].categories);
    }
}

TEST(HomeSampling, area_proportional_frequencies)
{
    LocationCatalog cat({make_building(0, {0, 0}, 100, {"house"}), make_building(1, {50, 0}, 300, {"house"})},
                        LocalProjection(52.5, 13.4));
    EXPECT_NEAR(cat.home_probabilities()[0], 0.25, 1e-12);
    EXPECT_NEAR(cat.home_probabilities()[1], 0.75, 1e-12);
    const int n = 10000;
    int ones = 0;
    for (int i = 0; i < n; ++i) {
        ones += sample_home(cat, derive_seed(42, static_cast<std::uint64_t>(i), "home")) == 1 ? 1 : 0;
    }
    const double f1 = static_cast<double>(ones) / n;
    EXPECT_NEAR(1.0 - f1, 0.25, 0.02);
    EXPECT_NEAR(f1, 0.75, 0.02);
    // chi-square with one degree of freedom, 0.1% critical value
    const double e0 = 0.25 * n, e1 = 0.75 * n;
    const double o0 = n - ones, o1 = ones;
    const double chi2 = (o0 - e0) * (o0 - e0) / e0 + (o1 - e1) * (o1 - e1) / e1;
    EXPECT_LT(chi2, 10.83);
}

TEST(HomeSampling, no_residential_is_an_error)
{
    LocationCatalog cat({make_building(0, {0, 0}, 100, {"school"})}, LocalProjection(52.5, 13.4));
    EXPECT_THROW(sample_home(cat, 1), EmptySetError);
}

TEST(GridIndex, nearest_matches_brute_force)
{
    Rng rng(2024);
    int mismatches = 0;
    for (int c = 0; c < 1000; ++c) {
        const std::size_t n = 1 + rng.below(1000);
        const double extent = rng.uniform(10, 5000);
        const bool lattice = rng.bernoulli(0.3); // integer lattice forces distance ties
        std::vector<Building> bs;
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::Vector2d p(rng.uniform(0, extent), rng.uniform(0, extent));
            if (lattice) {
                p = Eigen::Vector2d(std::floor(p.x() / 10) * 10, std::floor(p.y() / 10) * 10);
            }
            bs.push_back(make_building(static_cast<std::int64_t>(i), p, 50, {"shop"}));
        }
        const auto pts = bs;
        LocationCatalog cat(std::move(bs), LocalProjection(52.5, 13.4), rng.uniform(20, 600));
        for (int q = 0; q < 5; ++q) {
            Eigen::Vector2d p(rng.uniform(-0.2 * extent, 1.2 * extent), rng.uniform(-0.2 * extent, 1.2 * extent));
            if (lattice) {
                p = Eigen::Vector2d(std::round(p.x() / 5) * 5, std::round(p.y() / 5) * 5);
            }
            std::int64_t best = -1;
            double best_d = INFINITY;
            for (const auto& b : pts) {
                const double d = (b.position - p).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = b.building_id;
                }
            }
            mismatches += nearest_building(cat, p, "shop") != best ? 1 : 0;
        }
    }
    EXPECT_EQ(mismatches, 0);
}

TEST(GridIndex, radius_query_matches_brute_force)
{
    Rng rng(7);
    for (int c = 0; c < 200; ++c) {
        std::vector<std::int64_t> ids;
        std::vector<Eigen::Vector2d> pts;
        const std::size_t n = 1 + rng.below(400);
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back(static_cast<std::int64_t>(i));
            pts.emplace_back(rng.uniform(0, 2000), rng.uniform(0, 2000));
        }
        const GridIndex grid(ids, pts, rng.uniform(30, 400));
        const Eigen::Vector2d p(rng.uniform(0, 2000), rng.uniform(0, 2000));
        const double r = rng.uniform(0, 800);
        std::vector<std::int64_t> oracle;
        for (std::size_t i = 0; i < n; ++i) {
            if ((pts[i] - p).squaredNorm() <= r * r) {
                oracle.push_back(ids[i]);
            }
        }
        EXPECT_EQ(grid.within(p, r), oracle);
    }
    EXPECT_EQ(GridIndex().nearest({0, 0}), -1);
}

TEST(Resample, stays_within_radius_and_category)
{
    std::vector<Building> bs;
    for (int i = 0; i < 50; ++i) {
        bs.push_back(make_building(i, {i * 100.0, 0}, 80, {i % 2 ? "house" : "shop"}));
    }
    LocationCatalog cat(bs, LocalProjection(52.5, 13.4));
    std::set<std::int64_t> seen;
    for (std::uint64_t s = 0; s < 400; ++s) {
        const auto id = resample_within_radius(cat, 21, 2000, "house", s);
        EXPECT_LE((cat.building(id).position - cat.building(21).position).norm(), 2000.0);
        EXPECT_EQ(cat.building(id).categories.front(), "house");
        seen.insert(id);
    }
    EXPECT_GT(seen.size(), 10u);
    EXPECT_TRUE(seen.count(21));
    EXPECT_THROW(resample_within_radius(cat, 21, 0, "house", 1), InputError);
}

TEST(Resolve, reuses_buildings_and_returns_home)
{
    std::vector<Building> bs = {make_building(0, {0, 0}, 100, {"house"}), make_building(1, {500, 0}, 100, {"office"}),
                                make_building(2, {5000, 0}, 100, {"office"}), make_building(3, {600, 0}, 50, {"canteen"})};
    LocationCatalog cat(bs, LocalProjection(52.5, 13.4));
    const auto day = parse_schedule("06:00 Up [house]\n09:00 Work [office]\n12:00 Lunch [canteen]\n13:00 Work [office]\n"
                                    "18:00 Home [house]",
                                    cat.categories());
    const auto loc = resolve_activity_locations(day, 0, cat);
    EXPECT_EQ(loc, (std::vector<std::int64_t>{0, 1, 3, 1, 0}));
}
