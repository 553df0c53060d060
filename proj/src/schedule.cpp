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
#include "agentsim/schedule.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "agentsim/lenient_json.hpp"
#include "agentsim/parallel.hpp"

namespace agentsim
{

const std::vector<std::string>& transport_location_categories()
{
    static const std::vector<std::string> cats = {
        "parking",        "bicycle_parking", "motorcycle_parking", "parking_space", "parking_entrance",
        "fuel",           "charging_station", "bus_station",       "bus_stop",      "taxi",
        "car_rental",     "bicycle_rental",  "car_sharing",        "ferry_terminal", "train_station",
        "station",        "platform",        "garage",             "garages",       "carport",
        "transportation", "car_wash"};
    return cats;
}

const std::vector<std::string>& default_transport_phrases()
{
    static const std::vector<std::string> phrases = {
        "walking by foot", "driving a car",   "taking the bus",     "taking the train", "taking the tram",
        "taking the subway", "taking the s-bahn", "taking the u-bahn", "taking a taxi", "riding a bike",
        "riding my bike",  "cycling to",      "driving to",         "commuting",        "on the bus",
        "on the train"};
    return phrases;
}

bool DateContext::is_weekend() const
{
    return day_of_week == "saturday" || day_of_week == "sunday";
}

Json DateContext::to_json() const
{
    return {{"description", description}, {"day_of_week", day_of_week}, {"external_factor", external_factor}};
}

DateContext DateContext::from_json(const Json& doc)
{
    DateContext d;
    d.description = doc.value("description", d.description);
    d.day_of_week = to_lower(doc.value("day_of_week", d.day_of_week));
    d.external_factor = doc.value("external_factor", std::string());
    static const std::set<std::string> days = {"monday", "tuesday", "wednesday", "thursday",
                                               "friday", "saturday", "sunday"};
    if (!days.contains(d.day_of_week)) {
        throw InputError("day_of_week must be an English weekday, got '" + d.day_of_week + "'");
    }
    return d;
}

std::string to_string(ScheduleViolation::Kind kind)
{
    switch (kind) {
    case ScheduleViolation::Kind::TransportPhrase:
        return "transport_phrase";
    case ScheduleViolation::Kind::UnknownCategory:
        return "unknown_category";
    case ScheduleViolation::Kind::MissingHomeStart:
        return "missing_home_start";
    case ScheduleViolation::Kind::DuplicateTime:
        return "duplicate_time";
    case ScheduleViolation::Kind::Empty:
        return "empty";
    }
    return "unknown";
}

Prompt build_schedule_prompt(const std::string& persona_text, const DateContext& date,
                             const std::vector<std::string>& categories)
{
    std::string user = "You are: " + persona_text + "\n";
    user += "Today is " + date.description + ".\n";
    if (!trim(date.external_factor).empty()) {
        user += trim(date.external_factor) + "\n";
    }
    user += "Write in broad strokes what you are doing during the day. Start the day at home.\n";
    user += "Only include tasks that occur at a specific location which must be one of the provided building "
            "options and do not include any transportation or commuting tasks (for example, do not include "
            "actions like \"walking by foot\" or \"driving a car\" or \"taking the bus\") or locations (for "
            "example, \"parking\", bicycle_parking\", etc.).\n";
    user += "building options:\n";
    for (std::size_t i = 0; i < categories.size(); ++i) {
        user += (i ? ", " : "") + categories[i];
    }
    user += "\n";
    user += "Respond with a JSON array only, one object per activity in time order, each of the form "
            "{\"time\": \"HH:MM\", \"activity\": \"<what you are doing>\", \"building\": \"<one of the building "
            "options>\"}.";
    return Prompt{std::nullopt, std::move(user)};
}

int parse_clock(std::string_view text)
{
    static const std::regex re(R"(^\s*(\d{1,2}):(\d{2})(?::\d{2})?\s*$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(text.begin(), text.end(), m, re)) {
        throw ParseError("unparseable time '" + std::string(text) + "'");
    }
    const int h = std::stoi(m[1].str());
    const int mi = std::stoi(m[2].str());
    if (h > 23 || mi > 59) {
        throw ParseError("time '" + std::string(text) + "' is outside 00:00-23:59");
    }
    return h * 60 + mi;
}

std::string format_clock(int minutes)
{
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d:%02d", (minutes / 60) % 100, minutes % 60);
    return buf;
}

namespace
{

struct RawEntry {
    std::string time;
    std::string text;
    std::string category;
};

std::string json_string_field(const Json& obj, std::initializer_list<const char*> keys)
{
    for (const char* k : keys) {
        if (obj.contains(k) && obj[k].is_string()) {
            return obj[k].get<std::string>();
        }
    }
    return {};
}

std::optional<std::vector<RawEntry>> json_entries(std::string_view response)
{
    std::vector<Json> objs;
    try {
        objs = extract_json_objects(response);
    }
    catch (const ParseError&) {
        return std::nullopt;
    }
    // A wrapper object such as {"schedule": [...]}.
    if (objs.size() == 1 && !objs[0].contains("time")) {
        for (const auto& [k, v] : objs[0].items()) {
            if (v.is_array()) {
                std::vector<Json> inner(v.begin(), v.end());
                objs = std::move(inner);
                break;
            }
        }
    }
    if (objs.empty()) {
        return std::nullopt;
    }
    std::vector<RawEntry> out;
    for (const auto& o : objs) {
        if (!o.is_object() || !o.contains("time")) {
            return std::nullopt;
        }
        RawEntry e;
        e.time = json_string_field(o, {"time"});
        if (e.time.empty()) {
            throw ParseError("schedule entry has a non-string time");
        }
        e.text = json_string_field(o, {"activity", "description", "task"});
        e.category = json_string_field(o, {"building", "location", "category"});
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<RawEntry> line_entries(std::string_view response)
{
    static const std::regex timed(R"(^\s*(?:[-*]\s*)?(\d{1,2}:\d{2})\b\s*[:\-]?\s*(.*)$)");
    static const std::regex tail(R"(^(.*?)\s*\[([^\]]*)\]\s*$)");
    std::vector<RawEntry> out;
    std::size_t pos = 0;
    while (pos <= response.size()) {
        auto nl = response.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = response.size();
        }
        const std::string line(response.substr(pos, nl - pos));
        pos = nl + 1;
        std::smatch m;
        if (!std::regex_match(line, m, timed)) {
            continue;
        }
        const std::string rest = m[2].str();
        std::smatch t;
        if (!std::regex_match(rest, t, tail)) {
            throw ParseError("schedule line '" + trim(line) + "' has no [category]");
        }
        out.push_back({m[1].str(), trim(t[1].str()), t[2].str()});
    }
    return out;
}

bool contains_ci(const std::string& haystack_lower, const std::string& needle)
{
    return haystack_lower.find(to_lower(needle)) != std::string::npos;
}

} // namespace

DaySchedule parse_schedule(std::string_view response, const std::vector<std::string>& categories)
{
    std::vector<RawEntry> raw;
    if (auto j = json_entries(response)) {
        raw = std::move(*j);
    }
    else {
        raw = line_entries(response);
    }
    if (raw.empty()) {
        throw ParseError("empty schedule");
    }
    const std::set<std::string> allowed(categories.begin(), categories.end());
    const auto& transport = transport_location_categories();

    DaySchedule s;
    for (const auto& e : raw) {
        Activity a;
        a.start_time = parse_clock(e.time);
        a.activity_text = trim(e.text);
        a.location_category = to_snake_case(e.category);
        if (a.location_category.empty()) {
            throw ParseError("activity at " + e.time + " has no location category");
        }
        if (std::find(transport.begin(), transport.end(), a.location_category) != transport.end()) {
            throw ParseError("'" + a.location_category + "' is a transport location, not an activity location");
        }
        if (!allowed.contains(a.location_category)) {
            throw ParseError("unknown location category '" + a.location_category + "'");
        }
        s.activities.push_back(std::move(a));
    }
    const bool sorted = std::is_sorted(s.activities.begin(), s.activities.end(),
                                       [](const Activity& x, const Activity& y) { return x.start_time < y.start_time; });
    if (!sorted) {
        std::stable_sort(s.activities.begin(), s.activities.end(),
                         [](const Activity& x, const Activity& y) { return x.start_time < y.start_time; });
        s.warnings.push_back("activities were out of time order and have been sorted");
    }
    return s;
}

std::vector<ScheduleViolation> validate_schedule(const DaySchedule& schedule, const std::vector<std::string>& categories,
                                                 const std::vector<std::string>& phrases)
{
    using Kind = ScheduleViolation::Kind;
    std::vector<ScheduleViolation> out;
    if (schedule.activities.empty()) {
        out.push_back({Kind::Empty, -1, "schedule has no activities"});
        return out;
    }
    const std::set<std::string> allowed(categories.begin(), categories.end());
    if (schedule.activities.front().location_category != "house") {
        out.push_back({Kind::MissingHomeStart, 0, "missing home start"});
    }
    for (std::size_t i = 0; i < schedule.activities.size(); ++i) {
        const auto& a = schedule.activities[i];
        const int idx = static_cast<int>(i);
        const std::string lower = to_lower(a.activity_text);
        for (const auto& p : phrases) {
            if (contains_ci(lower, p)) {
                out.push_back({Kind::TransportPhrase, idx, "transport phrase '" + p + "' in \"" + a.activity_text + "\""});
                break;
            }
        }
        if (!allowed.contains(a.location_category)) {
            out.push_back({Kind::UnknownCategory, idx, "unknown category '" + a.location_category + "'"});
        }
        if (i > 0 && a.start_time <= schedule.activities[i - 1].start_time) {
            out.push_back({Kind::DuplicateTime, idx, "duplicate time " + format_clock(a.start_time)});
        }
    }
    return out;
}

int repair_schedule(DaySchedule& schedule, const std::vector<std::string>& categories,
                    const std::vector<std::string>& phrases)
{
    std::set<int> drop;
    for (const auto& v : validate_schedule(schedule, categories, phrases)) {
        if (v.kind == ScheduleViolation::Kind::TransportPhrase || v.kind == ScheduleViolation::Kind::UnknownCategory ||
            v.kind == ScheduleViolation::Kind::DuplicateTime) {
            drop.insert(v.activity_index);
        }
    }
    std::vector<Activity> kept;
    for (std::size_t i = 0; i < schedule.activities.size(); ++i) {
        if (!drop.contains(static_cast<int>(i))) {
            kept.push_back(schedule.activities[i]);
        }
    }
    int dropped = static_cast<int>(drop.size());
    // A day must begin at home; a non-home activity at midnight cannot be preceded by one.
    while (!kept.empty() && kept.front().location_category != "house" && kept.front().start_time == 0) {
        kept.erase(kept.begin());
        ++dropped;
    }
    if (kept.empty() || kept.front().location_category != "house") {
        kept.insert(kept.begin(), Activity{0, "Starting the day at home", "house"});
        schedule.warnings.push_back("home start inserted at 00:00");
    }
    schedule.activities = std::move(kept);
    schedule.dropped += dropped;
    return dropped;
}

std::string format_schedule(const DaySchedule& schedule)
{
    std::string out;
    for (const auto& a : schedule.activities) {
        out += " - " + format_clock(a.start_time) + ": " + a.activity_text + " [" + a.location_category + "]\n";
    }
    return out;
}

std::vector<TripIntent> extract_trips(const DaySchedule& schedule)
{
    std::vector<TripIntent> trips;
    const auto& acts = schedule.activities;
    for (std::size_t i = 1; i < acts.size(); ++i) {
        if (acts[i].location_category == acts[i - 1].location_category) {
            continue;
        }
        TripIntent t;
        t.sequence_index = static_cast<int>(trips.size());
        t.from_activity = static_cast<int>(i - 1);
        t.to_activity = static_cast<int>(i);
        t.depart_after = std::min(acts[i - 1].start_time + kDwellMinutes, acts[i].start_time);
        t.arrive_by = acts[i].start_time;
        t.from_category = acts[i - 1].location_category;
        t.to_category = acts[i].location_category;
        t.purpose_text = acts[i].activity_text;
        trips.push_back(std::move(t));
    }
    return trips;
}

namespace
{

DaySchedule home_only_day(const AgentProfile& profile, const DateContext& date)
{
    DaySchedule s;
    s.agent_id = profile.agent_id;
    s.date = date;
    s.activities = {Activity{0, "Spending the day at home", "house"}};
    s.fallback = true;
    s.warnings.push_back("no usable schedule response; home-only day substituted");
    return s;
}

} // namespace

DaySchedule generate_schedule(const AgentProfile& profile, const DateContext& date,
                              const std::vector<std::string>& categories, GenerationBackend& backend,
                              std::uint64_t global_seed, const ScheduleOptions& options)
{
    GenerationRequest req;
    req.task = TaskKind::Schedule;
    req.key = "schedule/" + std::to_string(profile.agent_id);
    req.prompt = build_schedule_prompt(profile.persona_text, date, categories);
    req.context = {{"attributes", attributes_to_json(profile.attributes)},
                   {"persona", profile.persona_text},
                   {"date", date.to_json()},
                   {"categories", categories}};
    const std::uint64_t base_seed = derive_seed(global_seed, static_cast<std::uint64_t>(profile.agent_id), "schedule");

    std::optional<DaySchedule> last;
    std::exception_ptr transport;
    int transport_failures = 0;
    const int total = 1 + std::max(0, options.max_regenerations);
    for (int attempt = 0; attempt < total; ++attempt) {
        req.attempt = attempt;
        req.seed = attempt == 0 ? base_seed : splitmix64(base_seed + static_cast<std::uint64_t>(attempt));
        std::string response;
        try {
            response = backend.generate(req);
        }
        catch (const TransportError&) {
            transport = std::current_exception();
            ++transport_failures;
            continue;
        }
        try {
            DaySchedule s = parse_schedule(response, categories);
            s.agent_id = profile.agent_id;
            s.date = date;
            s.attempts = attempt + 1;
            const bool clean = validate_schedule(s, categories, options.transport_phrases).empty();
            last = std::move(s);
            if (clean) {
                return *last;
            }
        }
        catch (const ParseError&) {
        }
    }
    if (transport_failures == total) {
        std::rethrow_exception(transport);
    }
    if (!last) {
        auto s = home_only_day(profile, date);
        s.attempts = total;
        return s;
    }
    last->attempts = total;
    repair_schedule(*last, categories, options.transport_phrases);
    return *last;
}

std::vector<DaySchedule> generate_schedules(const std::vector<AgentProfile>& profiles, const DateContext& date,
                                            const std::vector<std::string>& categories, GenerationBackend& backend,
                                            std::uint64_t global_seed, const ScheduleOptions& options)
{
    std::vector<const AgentProfile*> order;
    for (const auto& p : profiles) {
        order.push_back(&p);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const AgentProfile* a, const AgentProfile* b) { return a->agent_id < b->agent_id; });
    std::vector<DaySchedule> out(order.size());
    parallel_for(order.size(), static_cast<std::size_t>(options.workers), [&](std::size_t i) {
        out[i] = generate_schedule(*order[i], date, categories, backend, global_seed, options);
    });
    return out;
}

Json schedule_to_json(const DaySchedule& schedule)
{
    Json acts = Json::array();
    for (const auto& a : schedule.activities) {
        acts.push_back({{"time", format_clock(a.start_time)}, {"activity", a.activity_text}, {"building", a.location_category}});
    }
    return {{"agent_id", schedule.agent_id}, {"date", schedule.date.to_json()}, {"activities", acts},
            {"warnings", schedule.warnings},  {"attempts", schedule.attempts},  {"dropped", schedule.dropped},
            {"fallback", schedule.fallback}};
}

DaySchedule schedule_from_json(const Json& doc)
{
    DaySchedule s;
    s.agent_id = doc.at("agent_id").get<std::int64_t>();
    s.date = DateContext::from_json(doc.at("date"));
    for (const auto& a : doc.at("activities")) {
        s.activities.push_back({parse_clock(a.at("time").get<std::string>()), a.at("activity").get<std::string>(),
                                a.at("building").get<std::string>()});
    }
    if (s.activities.empty()) {
        throw SchemaError("schedule for agent " + std::to_string(s.agent_id) + " has no activities");
    }
    s.warnings = doc.value("warnings", std::vector<std::string>{});
    s.attempts = doc.value("attempts", 1);
    s.dropped = doc.value("dropped", 0);
    s.fallback = doc.value("fallback", false);
    return s;
}

std::string schedules_to_ndjson(const std::vector<DaySchedule>& schedules)
{
    std::string out;
    for (const auto& s : schedules) {
        out += schedule_to_json(s).dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<DaySchedule> schedules_from_ndjson(const std::filesystem::path& path)
{
    std::vector<DaySchedule> out;
    for (const auto& line : read_ndjson(path)) {
        out.push_back(schedule_from_json(line));
    }
    return out;
}

// ---- stub rules -------------------------------------------------------------

namespace
{

std::optional<std::string> first_present(const std::set<std::string>& cats, std::initializer_list<const char*> prefs)
{
    for (const char* p : prefs) {
        if (cats.contains(p)) {
            return std::string(p);
        }
    }
    return std::nullopt;
}

int quarter(Rng& rng, int lo, int hi)
{
    const int steps = (hi - lo) / 15;
    return lo + 15 * static_cast<int>(rng.below(static_cast<std::uint64_t>(steps + 1)));
}

} // namespace

std::string stub_schedule_response(const Json& context, std::uint64_t seed, int /*version*/)
{
    std::set<std::string> cats;
    for (const auto& c : context.value("categories", Json::array())) {
        cats.insert(c.get<std::string>());
    }
    const Json attrs = context.value("attributes", Json::object());
    const std::string occ = attrs.value("occupation", std::string("other"));
    const DateContext date = context.contains("date") ? DateContext::from_json(context["date"]) : DateContext{};
    Rng rng(seed);

    Json day = Json::array();
    auto add = [&](int t, const std::string& text, const std::string& cat) {
        day.push_back({{"time", format_clock(t)}, {"activity", text}, {"building", cat}});
    };

    const int wake = quarter(rng, 360, 480);
    add(wake, "Waking up and having breakfast", "house");

    std::optional<std::string> main;
    std::string main_text;
    const bool workday = !date.is_weekend();
    if (workday && (occ == "full_time" || occ == "part_time" || occ == "trainee")) {
        main = first_present(cats, {"office", "company", "commercial", "industrial", "government", "retail"});
        main_text = "Working";
    }
    else if (workday && occ == "student") {
        main = first_present(cats, {"university", "college", "school"});
        main_text = "Attending lectures";
    }
    else if (workday && (occ == "pupil" || occ == "child")) {
        main = first_present(cats, {"school", "kindergarten"});
        main_text = "At school";
    }

    const auto lunch = first_present(cats, {"canteen", "restaurant", "cafe", "fast_food"});
    const auto shop = first_present(cats, {"supermarket", "bakery", "convenience", "mall"});
    std::vector<std::string> leisure;
    for (const char* c : {"park", "cafe", "library", "community_centre", "sports_centre", "cinema", "restaurant"}) {
        if (cats.contains(c)) {
            leisure.emplace_back(c);
        }
    }

    int t = wake;
    if (main) {
        t = std::max(t + 60, quarter(rng, 450, 570));
        add(t, main_text, *main);
        const bool full = occ != "part_time";
        if (full && lunch && rng.bernoulli(0.5)) {
            add(720, "Having lunch", *lunch);
            add(780, main_text + " after lunch", *main);
        }
        t = full ? quarter(rng, 960, 1080) : quarter(rng, 750, 840);
        if (shop && rng.bernoulli(0.4)) {
            add(t, "Buying groceries", *shop);
            t += 45;
        }
        add(t, "Back home for the evening", "house");
    }
    else {
        t = std::max(t + 60, quarter(rng, 540, 660));
        if (shop && rng.bernoulli(0.7)) {
            add(t, "Buying groceries", *shop);
            t += 60;
            add(t, "Putting the shopping away", "house");
        }
        if (!leisure.empty() && rng.bernoulli(0.6)) {
            const auto& place = leisure[rng.below(leisure.size())];
            t = std::max(t + 60, quarter(rng, 840, 960));
            add(t, "Spending the afternoon out", place);
            t += 90;
            add(t, "Returning home", "house");
        }
    }
    add(std::max(t + 60, 1260), "Relaxing before bed", "house");
    return day.dump();
}

} // namespace agentsim
