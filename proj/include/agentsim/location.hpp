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
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "agentsim/io.hpp"
#include "agentsim/osm.hpp"
#include "agentsim/schedule.hpp"

namespace agentsim
{

/// Tag value -> category rules per OSM key. A rule value of "*" matches any value.
class CategoryMap
{
public:
    CategoryMap() = default;

    /// building/amenity/office/shop/craft defaults; residential building values map to `house`.
    static CategoryMap default_map();
    /// {"key": {"value": "category", ...}} or the list form {"key": ["value", ...]}
    /// (each value becomes its own category, residential building values become `house`).
    /// Python-literal syntax is accepted.
    static CategoryMap from_json(const Json& doc);
    static CategoryMap load(const std::filesystem::path& path);

    void add_rule(const std::string& key, const std::string& value, const std::string& category);
    /// Sorted, de-duplicated categories matched by the tags; empty = uncategorized.
    std::vector<std::string> categorize(const Tags& tags) const;
    /// True when any rule key is present in the tags.
    bool is_candidate(const Tags& tags) const;
    const std::vector<std::string>& keys() const noexcept
    {
        return m_keys;
    }

private:
    std::vector<std::string> m_keys; // declaration order
    std::map<std::string, std::map<std::string, std::string>> m_rules;
};

struct Building {
    std::int64_t building_id = 0;
    std::int64_t osm_id = 0;
    bool is_point = false;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double footprint_area = 0.0;
    std::vector<std::string> categories;
    Tags tags;
};

/// Absolute shoelace area of a simple or self-intersecting ring (closing vertex optional).
double shoelace_area(std::span<const Eigen::Vector2d> ring);
bool ring_self_intersects(std::span<const Eigen::Vector2d> ring);
Eigen::Vector2d ring_centroid(std::span<const Eigen::Vector2d> ring);

/// Uniform grid over building positions for nearest and radius queries.
class GridIndex
{
public:
    GridIndex() = default;
    GridIndex(std::vector<std::int64_t> ids, std::vector<Eigen::Vector2d> points, double cell_size = 250.0);

    /// Lowest id among the points at minimal distance; -1 when empty.
    std::int64_t nearest(const Eigen::Vector2d& p) const;
    /// Ids within `radius` (inclusive), ascending.
    std::vector<std::int64_t> within(const Eigen::Vector2d& p, double radius) const;
    std::size_t size() const noexcept
    {
        return m_ids.size();
    }

private:
    std::pair<long, long> cell_of(const Eigen::Vector2d& p) const;

    std::vector<std::int64_t> m_ids;
    std::vector<Eigen::Vector2d> m_points;
    double m_cell = 250.0;
    Eigen::Vector2d m_origin = Eigen::Vector2d::Zero();
    long m_nx = 0;
    long m_ny = 0;
    std::vector<std::vector<std::size_t>> m_cells;
};

struct CatalogOptions {
    double point_feature_area = 100.0;
    double grid_cell = 250.0;
};

class LocationCatalog
{
public:
    LocationCatalog() = default;
    /// Builds indices; building ids must equal their positions in the vector.
    LocationCatalog(std::vector<Building> buildings, LocalProjection projection, double grid_cell = 250.0);

    const std::vector<Building>& buildings() const noexcept
    {
        return m_buildings;
    }
    const Building& building(std::int64_t id) const;
    const LocalProjection& projection() const noexcept
    {
        return m_projection;
    }
    /// Categories with at least one building, plus `house`, sorted.
    std::vector<std::string> categories() const;
    bool has_category(const std::string& category) const;
    std::span<const std::int64_t> members(const std::string& category) const;
    const GridIndex& index(const std::string& category) const;

    /// Residential ids and p_i = area_i / sum area_j (aligned vectors).
    const std::vector<std::int64_t>& residential() const noexcept
    {
        return m_residential;
    }
    const Eigen::VectorXd& home_probabilities() const noexcept
    {
        return m_home_p;
    }

    std::vector<std::string> warnings;

private:
    std::vector<Building> m_buildings;
    LocalProjection m_projection;
    std::map<std::string, std::vector<std::int64_t>> m_members;
    std::map<std::string, GridIndex> m_index;
    std::vector<std::int64_t> m_residential;
    Eigen::VectorXd m_home_p;
    Eigen::VectorXd m_home_cdf;

    friend std::int64_t sample_home(const LocationCatalog&, std::uint64_t);
};

/// Ways (closed rings) and nodes carrying any rule key become buildings; the rest is
/// ignored. Throws ParseError for malformed files and EmptySetError for an empty catalog.
LocationCatalog ingest_osm(const OsmData& data, const CategoryMap& map, const CatalogOptions& options = {});
LocationCatalog ingest_osm_file(const std::filesystem::path& path, const CategoryMap& map,
                                const CatalogOptions& options = {});

/// Area-proportional draw among residential buildings.
std::int64_t sample_home(const LocationCatalog& catalog, std::uint64_t seed);

/// Euclidean nearest member of `category`; ties go to the lowest id.
std::int64_t nearest_building(const LocationCatalog& catalog, const Eigen::Vector2d& from, const std::string& category);

/// Uniform draw among same-category buildings within radius_m of the original (the
/// original included); the original is kept when its category is empty.
std::int64_t resample_within_radius(const LocationCatalog& catalog, std::int64_t building_id, double radius_m,
                                    const std::string& category, std::uint64_t seed);

/// One building per activity: `house` resolves to home; another category reuses the
/// building already visited for it today, else the nearest one from the previous location.
std::vector<std::int64_t> resolve_activity_locations(const DaySchedule& schedule, std::int64_t home,
                                                     const LocationCatalog& catalog);

/// building_id,category,area,x,y (categories joined by ';').
std::string catalog_to_csv(const LocationCatalog& catalog);

} // namespace agentsim
