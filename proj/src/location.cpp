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

#include <algorithm>
#include <cmath>
#include <set>

#include "agentsim/errors.hpp"
#include "agentsim/lenient_json.hpp"
#include "agentsim/random.hpp"

namespace agentsim
{

namespace
{

const std::vector<std::string>& residential_values()
{
    static const std::vector<std::string> v = {"apartments", "house",      "residential", "detached",
                                               "semidetached_house", "terrace", "bungalow", "dormitory",
                                               "farm",       "houseboat"};
    return v;
}

bool is_residential_value(const std::string& v)
{
    const auto& r = residential_values();
    return std::find(r.begin(), r.end(), v) != r.end();
}

} // namespace

void CategoryMap::add_rule(const std::string& key, const std::string& value, const std::string& category)
{
    if (!m_rules.contains(key)) {
        m_keys.push_back(key);
    }
    auto& rules = m_rules[key];
    const auto [it, inserted] = rules.try_emplace(value, category);
    if (!inserted && it->second != category) {
        throw InputError("category map: " + key + "=" + value + " maps to both '" + it->second + "' and '" + category +
                         "'");
    }
}

CategoryMap CategoryMap::default_map()
{
    CategoryMap m;
    for (const auto& v : residential_values()) {
        m.add_rule("building", v, "house");
    }
    for (const char* v : {"school", "hospital", "university", "kindergarten", "college", "office", "commercial",
                          "industrial", "retail", "supermarket", "church", "public", "government", "train_station"}) {
        const std::string s(v);
        m.add_rule("building", s,
                   s == "church" ? "place_of_worship" : s == "public" || s == "government" ? "government" : s);
    }
    for (const char* v : {"school", "hospital", "library", "university", "college", "kindergarten", "restaurant",
                          "cafe", "fast_food", "canteen", "pub", "bar", "cinema", "theatre", "pharmacy", "doctors",
                          "dentist", "community_centre", "social_centre", "place_of_worship", "bench", "marketplace",
                          "post_office", "townhall", "bank"}) {
        m.add_rule("amenity", v, v);
    }
    m.add_rule("office", "university", "university");
    m.add_rule("office", "*", "office");
    for (const char* v : {"supermarket", "bakery", "clothes", "convenience", "mall", "butcher", "hairdresser",
                          "kiosk", "department_store", "chemist", "books", "florist"}) {
        m.add_rule("shop", v, v);
    }
    m.add_rule("craft", "*", "craft");
    return m;
}

CategoryMap CategoryMap::from_json(const Json& doc)
{
    if (!doc.is_object()) {
        throw InputError("category map must be an object keyed by OSM tag key");
    }
    CategoryMap m;
    for (const auto& [key, rules] : doc.items()) {
        if (rules.is_object()) {
            for (const auto& [value, category] : rules.items()) {
                if (!category.is_string()) {
                    throw InputError("category map: " + key + "=" + value + " must map to a category name");
                }
                m.add_rule(key, value, to_snake_case(category.get<std::string>()));
            }
        }
        else if (rules.is_array()) {
            for (const auto& value : rules) {
                if (!value.is_string()) {
                    throw InputError("category map: values under '" + key + "' must be strings");
                }
                const auto v = value.get<std::string>();
                if (v == "..." || v == "…") {
                    continue;
                }
                m.add_rule(key, v, key == "building" && is_residential_value(v) ? "house" : to_snake_case(v));
            }
        }
        else {
            throw InputError("category map: rules for '" + key + "' must be an object or list");
        }
    }
    return m;
}

CategoryMap CategoryMap::load(const std::filesystem::path& path)
{
    return from_json(parse_lenient_json(read_text_file(path)));
}

std::vector<std::string> CategoryMap::categorize(const Tags& tags) const
{
    std::set<std::string> out;
    for (const auto& key : m_keys) {
        const auto t = tags.find(key);
        if (t == tags.end()) {
            continue;
        }
        const auto& rules = m_rules.at(key);
        if (auto r = rules.find(t->second); r != rules.end()) {
            out.insert(r->second);
        }
        else if (auto w = rules.find("*"); w != rules.end()) {
            out.insert(w->second);
        }
    }
    return {out.begin(), out.end()};
}

bool CategoryMap::is_candidate(const Tags& tags) const
{
    return std::any_of(m_keys.begin(), m_keys.end(), [&](const std::string& k) { return tags.contains(k); });
}

// ---- geometry ---------------------------------------------------------------

namespace
{

std::span<const Eigen::Vector2d> open_ring(std::span<const Eigen::Vector2d> ring)
{
    if (ring.size() >= 2 && ring.front() == ring.back()) {
        return ring.first(ring.size() - 1);
    }
    return ring;
}

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return a.x() * b.y() - a.y() * b.x();
}

double signed_area(std::span<const Eigen::Vector2d> r)
{
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        s += cross(r[i], r[(i + 1) % r.size()]);
    }
    return 0.5 * s;
}

bool segments_cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                    const Eigen::Vector2d& d)
{
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

} // namespace

double shoelace_area(std::span<const Eigen::Vector2d> ring)
{
    const auto r = open_ring(ring);
    if (r.size() < 3) {
        return 0.0;
    }
    return std::abs(signed_area(r));
}

bool ring_self_intersects(std::span<const Eigen::Vector2d> ring)
{
    const auto r = open_ring(ring);
    const std::size_t n = r.size();
    if (n < 4) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) {
                continue; // adjacent through the closing edge
            }
            if (segments_cross(r[i], r[(i + 1) % n], r[j], r[(j + 1) % n])) {
                return true;
            }
        }
    }
    return false;
}

Eigen::Vector2d ring_centroid(std::span<const Eigen::Vector2d> ring)
{
    const auto r = open_ring(ring);
    if (r.empty()) {
        return Eigen::Vector2d::Zero();
    }
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : r) {
        mean += p;
    }
    mean /= static_cast<double>(r.size());
    const double a = signed_area(r);
    if (r.size() < 3 || std::abs(a) < 1e-9) {
        return mean;
    }
    // Shift to the vertex mean first to keep the products small.
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < r.size(); ++i) {
        const Eigen::Vector2d p = r[i] - mean;
        const Eigen::Vector2d q = r[(i + 1) % r.size()] - mean;
        c += (p + q) * cross(p, q);
    }
    return mean + c / (6.0 * a);
}

// ---- grid index -------------------------------------------------------------

GridIndex::GridIndex(std::vector<std::int64_t> ids, std::vector<Eigen::Vector2d> points, double cell_size)
    : m_ids(std::move(ids))
    , m_points(std::move(points))
    , m_cell(cell_size)
{
    if (m_ids.size() != m_points.size()) {
        throw InputError("grid index: ids and points differ in length");
    }
    if (!(m_cell > 0.0)) {
        throw InputError("grid index: cell size must be positive");
    }
    if (m_ids.empty()) {
        return;
    }
    Eigen::Vector2d lo = m_points.front(), hi = m_points.front();
    for (const auto& p : m_points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    m_origin = lo;
    m_nx = static_cast<long>(std::floor((hi.x() - lo.x()) / m_cell)) + 1;
    m_ny = static_cast<long>(std::floor((hi.y() - lo.y()) / m_cell)) + 1;
    m_cells.assign(static_cast<std::size_t>(m_nx * m_ny), {});
    for (std::size_t i = 0; i < m_points.size(); ++i) {
        const auto [cx, cy] = cell_of(m_points[i]);
        m_cells[static_cast<std::size_t>(cy * m_nx + cx)].push_back(i);
    }
}

std::pair<long, long> GridIndex::cell_of(const Eigen::Vector2d& p) const
{
    return {static_cast<long>(std::floor((p.x() - m_origin.x()) / m_cell)),
            static_cast<long>(std::floor((p.y() - m_origin.y()) / m_cell))};
}

std::int64_t GridIndex::nearest(const Eigen::Vector2d& p) const
{
    if (m_ids.empty()) {
        return -1;
    }
    auto [cx, cy] = cell_of(p);
    // Pull far-away query points onto the grid border; ring distances stay valid lower bounds.
    cx = std::clamp(cx, -1L, m_nx);
    cy = std::clamp(cy, -1L, m_ny);
    const long max_r = std::max({cx + 1, m_nx - cx, cy + 1, m_ny - cy});

    double best_d = INFINITY;
    std::int64_t best_id = -1;
    auto visit = [&](long x, long y) {
        if (x < 0 || y < 0 || x >= m_nx || y >= m_ny) {
            return;
        }
        for (auto i : m_cells[static_cast<std::size_t>(y * m_nx + x)]) {
            const double d = (m_points[i] - p).squaredNorm();
            if (d < best_d || (d == best_d && m_ids[i] < best_id)) {
                best_d = d;
                best_id = m_ids[i];
            }
        }
    };
    for (long r = 0; r <= max_r; ++r) {
        if (r == 0) {
            visit(cx, cy);
        }
        else {
            for (long x = cx - r; x <= cx + r; ++x) {
                visit(x, cy - r);
                visit(x, cy + r);
            }
            for (long y = cy - r + 1; y <= cy + r - 1; ++y) {
                visit(cx - r, y);
                visit(cx + r, y);
            }
        }
        // Every unvisited cell is at least r cell widths away from p.
        const double bound = static_cast<double>(r) * m_cell;
        if (best_id >= 0 && best_d < bound * bound) {
            break;
        }
    }
    return best_id;
}

std::vector<std::int64_t> GridIndex::within(const Eigen::Vector2d& p, double radius) const
{
    std::vector<std::int64_t> out;
    if (m_ids.empty() || radius < 0.0) {
        return out;
    }
    const auto [x0, y0] = cell_of(p - Eigen::Vector2d(radius, radius));
    const auto [x1, y1] = cell_of(p + Eigen::Vector2d(radius, radius));
    const double r2 = radius * radius;
    for (long y = std::max(0L, y0); y <= std::min(m_ny - 1, y1); ++y) {
        for (long x = std::max(0L, x0); x <= std::min(m_nx - 1, x1); ++x) {
            for (auto i : m_cells[static_cast<std::size_t>(y * m_nx + x)]) {
                if ((m_points[i] - p).squaredNorm() <= r2) {
                    out.push_back(m_ids[i]);
                }
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- catalog ----------------------------------------------------------------

LocationCatalog::LocationCatalog(std::vector<Building> buildings, LocalProjection projection, double grid_cell)
    : m_buildings(std::move(buildings))
    , m_projection(projection)
{
    for (std::size_t i = 0; i < m_buildings.size(); ++i) {
        const auto& b = m_buildings[i];
        if (b.building_id != static_cast<std::int64_t>(i)) {
            throw InputError("catalog building ids must be dense and ordered");
        }
        if (!b.position.allFinite()) {
            throw InputError("building " + std::to_string(b.building_id) + " has a non-finite position");
        }
        if (!(b.footprint_area >= 0.0)) {
            throw InputError("building " + std::to_string(b.building_id) + " has a negative area");
        }
        for (const auto& c : b.categories) {
            m_members[c].push_back(b.building_id);
        }
    }
    for (const auto& [cat, ids] : m_members) {
        std::vector<Eigen::Vector2d> pts;
        pts.reserve(ids.size());
        for (auto id : ids) {
            pts.push_back(m_buildings[static_cast<std::size_t>(id)].position);
        }
        m_index.emplace(cat, GridIndex(ids, std::move(pts), grid_cell));
    }
    if (auto it = m_members.find("house"); it != m_members.end()) {
        m_residential = it->second;
        Eigen::VectorXd area(static_cast<Eigen::Index>(m_residential.size()));
        for (std::size_t i = 0; i < m_residential.size(); ++i) {
            area(static_cast<Eigen::Index>(i)) = m_buildings[static_cast<std::size_t>(m_residential[i])].footprint_area;
        }
        const double total = area.sum();
        if (total > 0.0) {
            m_home_p = area / total;
            m_home_cdf.resize(area.size());
            double acc = 0.0;
            for (Eigen::Index i = 0; i < area.size(); ++i) {
                acc += area(i);
                m_home_cdf(i) = acc;
            }
        }
    }
}

const Building& LocationCatalog::building(std::int64_t id) const
{
    if (id < 0 || id >= static_cast<std::int64_t>(m_buildings.size())) {
        throw InputError("unknown building id " + std::to_string(id));
    }
    return m_buildings[static_cast<std::size_t>(id)];
}

std::vector<std::string> LocationCatalog::categories() const
{
    const auto& transport = transport_location_categories();
    std::set<std::string> out{"house"};
    for (const auto& [c, ids] : m_members) {
        if (std::find(transport.begin(), transport.end(), c) == transport.end()) {
            out.insert(c);
        }
    }
    return {out.begin(), out.end()};
}

bool LocationCatalog::has_category(const std::string& category) const
{
    return m_members.contains(category);
}

std::span<const std::int64_t> LocationCatalog::members(const std::string& category) const
{
    const auto it = m_members.find(category);
    if (it == m_members.end()) {
        return {};
    }
    return it->second;
}

const GridIndex& LocationCatalog::index(const std::string& category) const
{
    const auto it = m_index.find(category);
    if (it == m_index.end()) {
        throw EmptySetError("no buildings of category '" + category + "'");
    }
    return it->second;
}

LocationCatalog ingest_osm(const OsmData& data, const CategoryMap& map, const CatalogOptions& options)
{
    const auto proj = LocalProjection::centred_on(data);
    std::vector<Building> buildings;
    std::vector<std::string> warnings;

    for (const auto& way : data.ways) {
        if (!map.is_candidate(way.tags)) {
            continue;
        }
        if (!way.is_closed()) {
            warnings.push_back("way " + std::to_string(way.id) + " is not a closed ring; skipped");
            continue;
        }
        std::vector<Eigen::Vector2d> ring;
        bool missing = false;
        for (auto ref : way.refs) {
            const auto* n = data.node(ref);
            if (!n) {
                missing = true;
                break;
            }
            ring.push_back(proj.project(n->lat, n->lon));
        }
        if (missing) {
            warnings.push_back("way " + std::to_string(way.id) + " references missing nodes; skipped");
            continue;
        }
        Building b;
        b.building_id = static_cast<std::int64_t>(buildings.size());
        b.osm_id = way.id;
        b.position = ring_centroid(ring);
        b.footprint_area = shoelace_area(ring);
        if (ring_self_intersects(ring)) {
            warnings.push_back("way " + std::to_string(way.id) +
                               " is self-intersecting; area taken as the absolute shoelace value");
        }
        b.categories = map.categorize(way.tags);
        b.tags = way.tags;
        buildings.push_back(std::move(b));
    }
    for (const auto& node : data.nodes) {
        if (!map.is_candidate(node.tags)) {
            continue;
        }
        Building b;
        b.building_id = static_cast<std::int64_t>(buildings.size());
        b.osm_id = node.id;
        b.is_point = true;
        b.position = proj.project(node.lat, node.lon);
        b.footprint_area = options.point_feature_area;
        b.categories = map.categorize(node.tags);
        b.tags = node.tags;
        buildings.push_back(std::move(b));
    }
    if (buildings.empty()) {
        throw EmptySetError("the map extract contains no buildings or tagged features");
    }
    LocationCatalog catalog(std::move(buildings), proj, options.grid_cell);
    catalog.warnings = std::move(warnings);
    return catalog;
}

LocationCatalog ingest_osm_file(const std::filesystem::path& path, const CategoryMap& map,
                                const CatalogOptions& options)
{
    return ingest_osm(read_osm(path), map, options);
}

std::int64_t sample_home(const LocationCatalog& catalog, std::uint64_t seed)
{
    if (catalog.m_residential.empty()) {
        throw EmptySetError("no residential buildings in the catalog");
    }
    if (catalog.m_home_cdf.size() == 0) {
        throw EmptySetError("residential buildings have zero total area");
    }
    Rng rng(seed);
    const double total = catalog.m_home_cdf(catalog.m_home_cdf.size() - 1);
    const double u = rng.uniform() * total;
    const auto* begin = catalog.m_home_cdf.data();
    const auto* end = begin + catalog.m_home_cdf.size();
    auto it = std::upper_bound(begin, end, u);
    if (it == end) {
        --it;
    }
    return catalog.m_residential[static_cast<std::size_t>(it - begin)];
}

std::int64_t nearest_building(const LocationCatalog& catalog, const Eigen::Vector2d& from, const std::string& category)
{
    const auto id = catalog.index(category).nearest(from);
    if (id < 0) {
        throw EmptySetError("no buildings of category '" + category + "'");
    }
    return id;
}

std::int64_t resample_within_radius(const LocationCatalog& catalog, std::int64_t building_id, double radius_m,
                                    const std::string& category, std::uint64_t seed)
{
    if (!(radius_m > 0.0)) {
        throw InputError("resampling radius must be positive");
    }
    const auto& origin = catalog.building(building_id);
    if (!catalog.has_category(category)) {
        return building_id;
    }
    auto candidates = catalog.index(category).within(origin.position, radius_m);
    if (!std::binary_search(candidates.begin(), candidates.end(), building_id)) {
        candidates.insert(std::upper_bound(candidates.begin(), candidates.end(), building_id), building_id);
    }
    Rng rng(seed);
    return candidates[rng.below(candidates.size())];
}

std::vector<std::int64_t> resolve_activity_locations(const DaySchedule& schedule, std::int64_t home,
                                                     const LocationCatalog& catalog)
{
    std::vector<std::int64_t> out;
    std::map<std::string, std::int64_t> visited{{"house", home}};
    Eigen::Vector2d here = catalog.building(home).position;
    for (const auto& a : schedule.activities) {
        std::int64_t id;
        if (auto it = visited.find(a.location_category); it != visited.end()) {
            id = it->second;
        }
        else {
            id = nearest_building(catalog, here, a.location_category);
            visited[a.location_category] = id;
        }
        out.push_back(id);
        here = catalog.building(id).position;
    }
    return out;
}

std::string catalog_to_csv(const LocationCatalog& catalog)
{
    std::string out = csv_line({"building_id", "category", "area", "x", "y"});
    for (const auto& b : catalog.buildings()) {
        std::string cats;
        for (std::size_t i = 0; i < b.categories.size(); ++i) {
            cats += (i ? ";" : "") + b.categories[i];
        }
        char area[32], x[32], y[32];
        std::snprintf(area, sizeof area, "%.2f", b.footprint_area);
        std::snprintf(x, sizeof x, "%.2f", b.position.x());
        std::snprintf(y, sizeof y, "%.2f", b.position.y());
        out += csv_line({std::to_string(b.building_id), cats, area, x, y});
    }
    return out;
}

} // namespace agentsim
