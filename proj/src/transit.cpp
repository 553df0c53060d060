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
#include "agentsim/transit.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "agentsim/errors.hpp"
#include "agentsim/io.hpp"
#include "agentsim/zip_archive.hpp"

namespace agentsim
{

int parse_gtfs_time(std::string_view text)
{
    static const std::regex re(R"(^\s*(\d{1,3}):(\d{2}):(\d{2})\s*$)");
    const std::string s(text);
    std::smatch m;
    if (!std::regex_match(s, m, re)) {
        throw ParseError("unparseable GTFS time '" + s + "'");
    }
    const int mi = std::stoi(m[2].str());
    const int se = std::stoi(m[3].str());
    if (mi > 59 || se > 59) {
        throw ParseError("GTFS time '" + s + "' has out-of-range minutes or seconds");
    }
    return std::stoi(m[1].str()) * 3600 + mi * 60 + se;
}

std::string format_gtfs_time(int seconds)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", seconds / 3600, (seconds / 60) % 60, seconds % 60);
    return buf;
}

int weekday_index(std::string_view day)
{
    static const std::array<const char*, 7> names = {"monday", "tuesday", "wednesday", "thursday",
                                                     "friday", "saturday", "sunday"};
    const auto lower = to_lower(day);
    for (int i = 0; i < 7; ++i) {
        if (lower == names[static_cast<std::size_t>(i)]) {
            return i;
        }
    }
    throw InputError("unknown weekday '" + std::string(day) + "'");
}

namespace
{

const std::array<const char*, 7> kDayColumns = {"monday", "tuesday", "wednesday", "thursday",
                                                "friday", "saturday", "sunday"};

const CsvTable& require(const std::map<std::string, CsvTable>& tables, const std::string& name)
{
    const auto it = tables.find(name);
    if (it == tables.end()) {
        throw InputError("GTFS bundle has no " + name);
    }
    return it->second;
}

std::string cell(const CsvTable& t, const std::vector<std::string>& row, const std::string& column)
{
    return trim(row[t.column(column)]);
}

} // namespace

GtfsFeed parse_gtfs(const std::map<std::string, std::string>& files)
{
    std::map<std::string, CsvTable> tables;
    for (const auto& [name, text] : files) {
        if (name.ends_with(".txt")) {
            tables.emplace(name, parse_csv(text));
        }
    }
    for (const char* name : {"stops.txt", "routes.txt", "trips.txt", "stop_times.txt", "calendar.txt"}) {
        require(tables, name);
    }

    GtfsFeed feed;
    std::set<std::string> stop_ids, route_ids, service_ids, trip_ids;

    const auto& stops = tables.at("stops.txt");
    for (const auto& row : stops.rows) {
        GtfsStop s;
        s.stop_id = cell(stops, row, "stop_id");
        s.name = stops.find_column("stop_name") ? cell(stops, row, "stop_name") : s.stop_id;
        const auto lat = parse_double(cell(stops, row, "stop_lat"));
        const auto lon = parse_double(cell(stops, row, "stop_lon"));
        if (!lat || !lon) {
            throw ParseError("stop '" + s.stop_id + "' has unparseable coordinates");
        }
        s.lat = *lat;
        s.lon = *lon;
        if (!stop_ids.insert(s.stop_id).second) {
            throw SchemaError("duplicate stop_id '" + s.stop_id + "'");
        }
        feed.stops.push_back(std::move(s));
    }

    const auto& routes = tables.at("routes.txt");
    for (const auto& row : routes.rows) {
        const auto id = cell(routes, row, "route_id");
        const auto name = routes.find_column("route_short_name") ? cell(routes, row, "route_short_name") : id;
        feed.routes[id] = name;
        route_ids.insert(id);
    }

    const auto& cal = tables.at("calendar.txt");
    for (const auto& row : cal.rows) {
        GtfsService svc;
        svc.service_id = cell(cal, row, "service_id");
        for (std::size_t d = 0; d < 7; ++d) {
            svc.days[d] = cell(cal, row, kDayColumns[d]) == "1";
        }
        service_ids.insert(svc.service_id);
        feed.services.push_back(std::move(svc));
    }

    const auto& trips = tables.at("trips.txt");
    for (const auto& row : trips.rows) {
        GtfsTrip t{cell(trips, row, "trip_id"), cell(trips, row, "route_id"), cell(trips, row, "service_id")};
        if (!route_ids.contains(t.route_id)) {
            throw SchemaError("trip '" + t.trip_id + "' references unknown route '" + t.route_id + "'");
        }
        if (!service_ids.contains(t.service_id)) {
            throw SchemaError("trip '" + t.trip_id + "' references unknown service '" + t.service_id + "'");
        }
        if (!trip_ids.insert(t.trip_id).second) {
            throw SchemaError("duplicate trip_id '" + t.trip_id + "'");
        }
        feed.trips.push_back(std::move(t));
    }

    const auto& st = tables.at("stop_times.txt");
    for (const auto& row : st.rows) {
        GtfsStopTime x;
        x.trip_id = cell(st, row, "trip_id");
        x.stop_id = cell(st, row, "stop_id");
        const auto seq = parse_int(cell(st, row, "stop_sequence"));
        if (!seq) {
            throw ParseError("stop_times row for trip '" + x.trip_id + "' has a bad stop_sequence");
        }
        x.sequence = static_cast<int>(*seq);
        const auto arr = cell(st, row, "arrival_time");
        const auto dep = cell(st, row, "departure_time");
        if (arr.empty() && dep.empty()) {
            throw ParseError("stop_times row for trip '" + x.trip_id + "' has no times (interpolation unsupported)");
        }
        x.arrival_s = parse_gtfs_time(arr.empty() ? dep : arr);
        x.departure_s = parse_gtfs_time(dep.empty() ? arr : dep);
        if (!trip_ids.contains(x.trip_id)) {
            throw SchemaError("stop_times references unknown trip '" + x.trip_id + "'");
        }
        if (!stop_ids.contains(x.stop_id)) {
            throw SchemaError("stop_times references unknown stop '" + x.stop_id + "'");
        }
        feed.stop_times.push_back(std::move(x));
    }
    return feed;
}

GtfsFeed read_gtfs(const std::filesystem::path& zip_or_dir)
{
    std::map<std::string, std::string> files;
    if (std::filesystem::is_directory(zip_or_dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(zip_or_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".txt") {
                files[entry.path().filename().string()] = read_text_file(entry.path());
            }
        }
    }
    else {
        files = read_zip_entries(zip_or_dir);
    }
    return parse_gtfs(files);
}

std::map<std::string, std::string> write_gtfs(const GtfsFeed& feed)
{
    std::map<std::string, std::string> out;
    std::string agency = csv_line({"agency_id", "agency_name", "agency_url", "agency_timezone"});
    agency += csv_line({"toy", "Toy Transit", "https://example.org", "Europe/Berlin"});
    out["agency.txt"] = agency;

    std::string stops = csv_line({"stop_id", "stop_name", "stop_lat", "stop_lon"});
    char lat[32], lon[32];
    for (const auto& s : feed.stops) {
        std::snprintf(lat, sizeof lat, "%.7f", s.lat);
        std::snprintf(lon, sizeof lon, "%.7f", s.lon);
        stops += csv_line({s.stop_id, s.name, lat, lon});
    }
    out["stops.txt"] = stops;

    std::string routes = csv_line({"route_id", "agency_id", "route_short_name", "route_type"});
    for (const auto& [id, name] : feed.routes) {
        routes += csv_line({id, "toy", name, "3"});
    }
    out["routes.txt"] = routes;

    std::string trips = csv_line({"route_id", "service_id", "trip_id"});
    for (const auto& t : feed.trips) {
        trips += csv_line({t.route_id, t.service_id, t.trip_id});
    }
    out["trips.txt"] = trips;

    std::string st = csv_line({"trip_id", "arrival_time", "departure_time", "stop_id", "stop_sequence"});
    for (const auto& x : feed.stop_times) {
        st += csv_line({x.trip_id, format_gtfs_time(x.arrival_s), format_gtfs_time(x.departure_s), x.stop_id,
                        std::to_string(x.sequence)});
    }
    out["stop_times.txt"] = st;

    std::vector<std::string> header = {"service_id"};
    header.insert(header.end(), kDayColumns.begin(), kDayColumns.end());
    header.push_back("start_date");
    header.push_back("end_date");
    std::string cal = csv_line(header);
    for (const auto& svc : feed.services) {
        std::vector<std::string> row = {svc.service_id};
        for (bool d : svc.days) {
            row.push_back(d ? "1" : "0");
        }
        row.push_back("20240101");
        row.push_back("20301231");
        cal += csv_line(row);
    }
    out["calendar.txt"] = cal;
    return out;
}

double TransitItinerary::length_m() const
{
    double len = access_m + egress_m + transfer_walk_m;
    for (const auto& r : rides) {
        len += r.distance_m;
    }
    return len;
}

// ---- timetable --------------------------------------------------------------

Timetable::Timetable(const GtfsFeed& feed, const LocalProjection& projection, std::string_view day_of_week,
                     const TransitOptions& options)
    : m_options(options)
{
    const int day = weekday_index(day_of_week);
    for (const auto& s : feed.stops) {
        m_stop_lookup[s.stop_id] = static_cast<std::int32_t>(m_stop_ids.size());
        m_stop_ids.push_back(s.stop_id);
        m_stop_pos.push_back(projection.project(s.lat, s.lon));
    }
    std::set<std::string> active;
    for (const auto& svc : feed.services) {
        if (svc.days[static_cast<std::size_t>(day)]) {
            active.insert(svc.service_id);
        }
    }
    std::map<std::string, std::vector<const GtfsStopTime*>> by_trip;
    for (const auto& x : feed.stop_times) {
        by_trip[x.trip_id].push_back(&x);
    }
    std::map<std::pair<std::string, std::vector<std::int32_t>>, std::size_t> pattern_of;
    for (const auto& trip : feed.trips) {
        if (!active.contains(trip.service_id)) {
            continue;
        }
        auto it = by_trip.find(trip.trip_id);
        if (it == by_trip.end() || it->second.size() < 2) {
            continue;
        }
        auto& times = it->second;
        std::sort(times.begin(), times.end(),
                  [](const GtfsStopTime* a, const GtfsStopTime* b) { return a->sequence < b->sequence; });
        std::vector<std::int32_t> stops;
        Pattern::Trip t{trip.trip_id, {}, {}};
        for (std::size_t i = 0; i < times.size(); ++i) {
            const auto* x = times[i];
            if (x->departure_s < x->arrival_s || (i > 0 && x->arrival_s < times[i - 1]->departure_s)) {
                throw SchemaError("trip '" + trip.trip_id + "' has decreasing stop times");
            }
            stops.push_back(m_stop_lookup.at(x->stop_id));
            t.arr.push_back(x->arrival_s);
            t.dep.push_back(x->departure_s);
        }
        const auto key = std::make_pair(trip.route_id, stops);
        auto [pit, inserted] = pattern_of.try_emplace(key, m_patterns.size());
        if (inserted) {
            Pattern p;
            p.route_id = trip.route_id;
            p.stops = stops;
            for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
                p.hop_m.push_back((stop_position(stops[i + 1]) - stop_position(stops[i])).norm());
            }
            m_patterns.push_back(std::move(p));
        }
        m_patterns[pit->second].trips.push_back(std::move(t));
    }
    for (auto& p : m_patterns) {
        std::stable_sort(p.trips.begin(), p.trips.end(), [](const Pattern::Trip& a, const Pattern::Trip& b) {
            return std::tie(a.dep[0], a.trip_id) < std::tie(b.dep[0], b.trip_id);
        });
    }
    m_stop_patterns.assign(m_stop_ids.size(), {});
    for (std::size_t r = 0; r < m_patterns.size(); ++r) {
        const auto& stops = m_patterns[r].stops;
        for (std::size_t i = 0; i < stops.size(); ++i) {
            m_stop_patterns[static_cast<std::size_t>(stops[i])].emplace_back(static_cast<std::int32_t>(r),
                                                                             static_cast<std::int32_t>(i));
        }
    }
    std::vector<std::int64_t> ids(m_stop_ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ids[i] = static_cast<std::int64_t>(i);
    }
    m_index = GridIndex(std::move(ids), m_stop_pos, 250.0);
    m_footpaths.assign(m_stop_ids.size(), {});
    for (std::size_t s = 0; s < m_stop_ids.size(); ++s) {
        for (auto q : m_index.within(m_stop_pos[s], options.transfer_radius_m)) {
            if (q != static_cast<std::int64_t>(s)) {
                m_footpaths[s].push_back(
                    {static_cast<std::int32_t>(q), (m_stop_pos[static_cast<std::size_t>(q)] - m_stop_pos[s]).norm()});
            }
        }
    }
}

std::int32_t Timetable::stop_index(const std::string& stop_id) const
{
    const auto it = m_stop_lookup.find(stop_id);
    if (it == m_stop_lookup.end()) {
        throw InputError("unknown stop '" + stop_id + "'");
    }
    return it->second;
}

std::vector<std::int32_t> Timetable::stops_within(const Eigen::Vector2d& p, double radius) const
{
    std::vector<std::int32_t> out;
    for (auto id : m_index.within(p, radius)) {
        out.push_back(static_cast<std::int32_t>(id));
    }
    return out;
}

// ---- earliest arrival -------------------------------------------------------

namespace
{

struct Label {
    enum class Kind
    {
        None,
        Access,
        Ride,
        Walk,
        Copy
    };
    Kind kind = Kind::None;
    std::int32_t pattern = -1;
    std::int32_t trip = -1;
    std::int32_t board_pos = -1;
    std::int32_t alight_pos = -1;
    std::int32_t from_stop = -1;
};

} // namespace

std::optional<TransitItinerary> transit_earliest_arrival(const Timetable& tt, const Eigen::Vector2d& origin,
                                                         const Eigen::Vector2d& destination, int depart_s)
{
    const auto& opt = tt.options();
    const std::size_t S = tt.stop_count();
    const int rounds = opt.max_transfers + 1;
    if (S == 0) {
        return std::nullopt;
    }
    std::vector<std::vector<double>> tau(static_cast<std::size_t>(rounds) + 1, std::vector<double>(S, INFINITY));
    std::vector<std::vector<Label>> parent(static_cast<std::size_t>(rounds) + 1, std::vector<Label>(S));
    // Best ride arrival per stop, and best arrival of any kind. A walk label never
    // dominates a ride label because only rides may continue on foot.
    std::vector<double> best_ride(S, INFINITY);
    std::vector<double> best_any(S, INFINITY);
    // Ride labels are kept apart so that a later footpath into a stop cannot hide the
    // ride another footpath started from.
    std::vector<std::vector<double>> ride_tau(static_cast<std::size_t>(rounds) + 1, std::vector<double>(S, INFINITY));
    std::vector<std::vector<Label>> ride_parent(static_cast<std::size_t>(rounds) + 1, std::vector<Label>(S));

    std::vector<char> marked(S, 0);
    for (auto s : tt.stops_within(origin, opt.access_radius_m)) {
        const double walk = (tt.stop_position(s) - origin).norm() / opt.walk_mps;
        tau[0][static_cast<std::size_t>(s)] = depart_s + walk;
        parent[0][static_cast<std::size_t>(s)].kind = Label::Kind::Access;
        marked[static_cast<std::size_t>(s)] = 1;
    }
    std::vector<std::pair<std::int32_t, double>> egress;
    for (auto s : tt.stops_within(destination, opt.access_radius_m)) {
        egress.emplace_back(s, (tt.stop_position(s) - destination).norm() / opt.walk_mps);
    }
    if (egress.empty() || std::none_of(marked.begin(), marked.end(), [](char c) { return c != 0; })) {
        return std::nullopt;
    }

    double best_arrival = INFINITY;
    int best_round = -1;
    std::int32_t best_egress = -1;

    for (int k = 1; k <= rounds; ++k) {
        auto& cur = tau[static_cast<std::size_t>(k)];
        auto& cur_parent = parent[static_cast<std::size_t>(k)];
        const auto& prev = tau[static_cast<std::size_t>(k - 1)];
        if (k >= 2) {
            cur = prev;
            for (std::size_t s = 0; s < S; ++s) {
                if (std::isfinite(prev[s])) {
                    cur_parent[s].kind = Label::Kind::Copy;
                }
            }
        }
        // Patterns to scan, each from its earliest marked position.
        std::map<std::int32_t, std::int32_t> queue;
        for (std::size_t s = 0; s < S; ++s) {
            if (!marked[s]) {
                continue;
            }
            for (const auto& [r, pos] : tt.stop_patterns()[s]) {
                auto [it, inserted] = queue.try_emplace(r, pos);
                if (!inserted) {
                    it->second = std::min(it->second, pos);
                }
            }
        }
        std::fill(marked.begin(), marked.end(), 0);
        std::vector<char> ride_marked(S, 0);

        for (const auto& [r, start] : queue) {
            const auto& pat = tt.patterns()[static_cast<std::size_t>(r)];
            std::int32_t trip = -1;
            std::int32_t board = -1;
            for (std::size_t i = static_cast<std::size_t>(start); i < pat.stops.size(); ++i) {
                const auto s = static_cast<std::size_t>(pat.stops[i]);
                if (trip >= 0) {
                    const double arr = pat.trips[static_cast<std::size_t>(trip)].arr[i];
                    if (arr < best_ride[s] && arr < best_arrival) {
                        const Label lab{Label::Kind::Ride, r, trip, board, static_cast<std::int32_t>(i), -1};
                        if (arr < cur[s]) {
                            cur[s] = arr;
                            cur_parent[s] = lab;
                        }
                        best_ride[s] = arr;
                        best_any[s] = std::min(best_any[s], arr);
                        ride_tau[static_cast<std::size_t>(k)][s] = arr;
                        ride_parent[static_cast<std::size_t>(k)][s] = lab;
                        ride_marked[s] = 1;
                    }
                }
                if (std::isfinite(prev[s])) {
                    // Earliest departure at this stop catchable from the previous round.
                    std::int32_t cand = -1;
                    for (std::size_t t = 0; t < pat.trips.size(); ++t) {
                        const int dep = pat.trips[t].dep[i];
                        if (dep >= prev[s] && (cand < 0 || dep < pat.trips[static_cast<std::size_t>(cand)].dep[i])) {
                            cand = static_cast<std::int32_t>(t);
                        }
                    }
                    if (cand >= 0 && (trip < 0 || pat.trips[static_cast<std::size_t>(cand)].dep[i] <
                                                      pat.trips[static_cast<std::size_t>(trip)].dep[i])) {
                        trip = cand;
                        board = static_cast<std::int32_t>(i);
                    }
                }
            }
        }
        for (std::size_t s = 0; s < S; ++s) {
            if (!ride_marked[s]) {
                continue;
            }
            marked[s] = 1;
            for (const auto& fp : tt.footpaths(static_cast<std::int32_t>(s))) {
                const auto q = static_cast<std::size_t>(fp.to);
                const double t = ride_tau[static_cast<std::size_t>(k)][s] + fp.distance_m / opt.walk_mps;
                if (t < best_any[q] && t < cur[q] && t < best_arrival) {
                    cur[q] = t;
                    best_any[q] = t;
                    cur_parent[q] = {Label::Kind::Walk, -1, -1, -1, -1, static_cast<std::int32_t>(s)};
                    marked[q] = 1;
                }
            }
        }
        for (const auto& [e, walk] : egress) {
            const double t = cur[static_cast<std::size_t>(e)] + walk;
            if (t < best_arrival) {
                best_arrival = t;
                best_round = k;
                best_egress = e;
            }
        }
        if (std::none_of(marked.begin(), marked.end(), [](char c) { return c != 0; })) {
            break;
        }
    }
    if (best_round < 0) {
        return std::nullopt;
    }

    TransitItinerary it;
    it.depart_s = depart_s;
    it.arrival_s = static_cast<int>(std::ceil(best_arrival - 1e-9));
    it.egress_m = (tt.stop_position(best_egress) - destination).norm();
    it.egress_s = it.egress_m / opt.walk_mps;

    int k = best_round;
    std::int32_t s = best_egress;
    bool after_walk = false;
    while (k > 0) {
        const auto& lab = after_walk ? ride_parent[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)]
                                     : parent[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)];
        after_walk = false;
        switch (lab.kind) {
        case Label::Kind::Copy:
            --k;
            break;
        case Label::Kind::Walk: {
            const double d = (tt.stop_position(s) - tt.stop_position(lab.from_stop)).norm();
            it.transfer_walk_m += d;
            it.transfer_walk_s += d / opt.walk_mps;
            s = lab.from_stop;
            after_walk = true;
            break;
        }
        case Label::Kind::Ride: {
            const auto& pat = tt.patterns()[static_cast<std::size_t>(lab.pattern)];
            const auto& trip = pat.trips[static_cast<std::size_t>(lab.trip)];
            TransitRide ride;
            ride.route_id = pat.route_id;
            ride.trip_id = trip.trip_id;
            ride.board_stop = pat.stops[static_cast<std::size_t>(lab.board_pos)];
            ride.alight_stop = s;
            ride.board_time = trip.dep[static_cast<std::size_t>(lab.board_pos)];
            ride.alight_time = trip.arr[static_cast<std::size_t>(lab.alight_pos)];
            for (auto h = lab.board_pos; h < lab.alight_pos; ++h) {
                ride.distance_m += pat.hop_m[static_cast<std::size_t>(h)];
            }
            it.in_vehicle_s += ride.alight_time - ride.board_time;
            it.rides.push_back(ride);
            s = ride.board_stop;
            --k;
            break;
        }
        default:
            throw Error("transit search: broken label chain");
        }
    }
    if (parent[0][static_cast<std::size_t>(s)].kind != Label::Kind::Access) {
        throw Error("transit search: itinerary does not start with an access walk");
    }
    std::reverse(it.rides.begin(), it.rides.end());
    it.access_m = (tt.stop_position(s) - origin).norm();
    it.access_s = it.access_m / opt.walk_mps;
    it.wait_s = std::max(0.0, best_arrival - depart_s - it.access_s - it.egress_s - it.in_vehicle_s - it.transfer_walk_s);
    return it;
}

} // namespace agentsim
