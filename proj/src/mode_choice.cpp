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
#include "agentsim/mode_choice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <sstream>

#include "agentsim/errors.hpp"
#include "agentsim/lenient_json.hpp"
#include "agentsim/parallel.hpp"
#include "agentsim/random.hpp"

namespace agentsim
{

namespace
{

double numeric_attribute(const Attributes& attrs, const std::string& key)
{
    const auto it = attrs.find(key);
    if (it == attrs.end()) {
        return 0.0;
    }
    return parse_double(it->second).value_or(0.0);
}

std::string km(double metres)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f km", metres / 1000.0);
    return buf;
}

std::string minutes(double seconds)
{
    return std::to_string(static_cast<long>(std::lround(seconds / 60.0))) + " min";
}

std::string system_block(const ModePromptOptions& o, bool exemplars)
{
    std::string s = "You live in " + o.city +
                    " and have several tasks to complete today, for which you need to plan several trips. " +
                    o.residents +
                    " typically\n"
                    "- walk for very short trips (<1 km), \n"
                    "- bike for medium trips (1-5 km), \n"
                    "- use public transport for longer trips (>5 km), \n"
                    "- and drive only if they have a car immediately available.\n";
    if (exemplars) {
        s += "\nThe eight examples below are *shuffled*, but together they reflect a typical " + o.city +
             " modal split (2 walk, 1 bicycle, 3 car, 2 public transport): \n"
             "\n"
             "1. 0.3 km in 5 min -> **walk** (\"300 m is fastest on foot\") \n"
             "2. 4.0 km in 10 min -> **car** (\"fastest for a 4 km morning commute\") \n"
             "3. 8.0 km in 20 min -> **public transportation** (\"subway is most reliable\") \n"
             "4. 1.5 km in 7 min -> **bicycle** (\"" +
             o.city +
             "'s bike paths make this ideal\") \n"
             "5. 0.7 km in 10 min (with groceries) -> **walk** (\"easiest to carry bags\") \n"
             "6. 5.0 km in 15 min -> **public transportation** (\"smooth transfer on S-Bahn\") \n"
             "7. 3.0 km in 12 min (rainy) -> **car** (\"stay dry and faster than cycling\") \n"
             "8. 12.0 km in 30 min -> **car** (\"direct suburban route is best by car\")\n";
    }
    return s;
}

} // namespace

std::string to_string(PromptVariant v)
{
    switch (v) {
    case PromptVariant::DefaultFewshotCot:
        return "default_fewshot_cot";
    case PromptVariant::NoSystemPrompt:
        return "no_system_prompt";
    case PromptVariant::FewshotNoCot:
        return "fewshot_no_cot";
    case PromptVariant::ZeroshotCot:
        return "zeroshot_cot";
    }
    return "default_fewshot_cot";
}

PromptVariant prompt_variant_from_string(std::string_view name)
{
    for (auto v : {PromptVariant::DefaultFewshotCot, PromptVariant::NoSystemPrompt, PromptVariant::FewshotNoCot,
                   PromptVariant::ZeroshotCot}) {
        if (to_string(v) == name) {
            return v;
        }
    }
    throw InputError("unknown prompt variant '" + std::string(name) + "'");
}

VehicleState VehicleState::at_home(const Attributes& attributes, std::int64_t home)
{
    VehicleState s;
    if (numeric_attribute(attributes, "car_ownership") > 0) {
        s.car = home;
    }
    if (numeric_attribute(attributes, "bike_ownership") > 0) {
        s.bike = home;
    }
    return s;
}

std::string format_route_options(const std::vector<TripChoice>& trips)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const auto& t = trips[i].trip;
        out << "Location Change " << (i + 1) << ":\n"
            << "  Purpose: " << t.purpose << " [" << t.to_category << " @ " << format_clock(t.arrive_by) << "]\n"
            << "  From: " << t.from_category << "\n"
            << "  To:   " << t.to_category << "\n";
        for (const auto& o : trips[i].options) {
            out << "  - route_id " << o.route_id << ", " << to_string(o.mode) << ": " << km(o.length_m) << " in "
                << minutes(o.duration_s);
            if (o.mode == Mode::PublicTransport) {
                out << " (" << o.transfers << (o.transfers == 1 ? " transfer" : " transfers") << ")";
            }
            out << "\n";
        }
    }
    return out.str();
}

Prompt build_mode_prompt(const AgentProfile& profile, const std::vector<TripChoice>& trips,
                         const ModePromptOptions& o)
{
    for (const auto& t : trips) {
        if (t.options.empty()) {
            throw InputError("trip " + std::to_string(t.trip.leg) + " of agent " + std::to_string(t.trip.agent_id) +
                             " has no route options");
        }
    }
    const bool cot = o.variant != PromptVariant::FewshotNoCot;
    const bool exemplars = o.variant != PromptVariant::ZeroshotCot;

    Prompt p;
    const std::string preamble = system_block(o, exemplars);
    std::string user = "You are: " + profile.persona_text + "\n\n";
    if (o.variant == PromptVariant::NoSystemPrompt) {
        // the preamble is simply absent
    }
    else {
        p.system = preamble;
    }
    if (!o.external_factor.empty()) {
        user += o.external_factor + "\n";
    }
    user += "You live in " + o.city + ". Today, you will go to several places. You have checked various ways to get "
            "from one place to another. ";
    user += cot ? "For each route, first reason in one sentence how you would usually cover the distance, then "
                  "select the means of transport. "
                : "For each route, select the means of transport. ";
    user += "Switch transportation modes only when it logically fits the scenario. For example, you may only use "
            "your bicycle or car if it is already with you, and you should choose walking or public transit only if "
            "your bicycle or car remains at home or is scheduled to be picked up later. Your route options are as "
            "follows:\n";
    user += format_route_options(trips);
    if (o.variant == PromptVariant::ZeroshotCot) {
        user += "Let's think step by step.\n";
    }
    user += cot ? "Respond with a JSON list containing one object per location change, in the form "
                  "[{\"route_id\": <route_id>, \"reasoning\": \"<one sentence>\", \"means_of_transport\": "
                  "\"<pedestrian|bicycle|passenger|public_transport>\"}]."
                : "Respond with a JSON list containing one object per location change, in the form "
                  "[{\"route_id\": <route_id>, \"means_of_transport\": "
                  "\"<pedestrian|bicycle|passenger|public_transport>\"}].";
    p.user = std::move(user);
    return p;
}

std::optional<Mode> normalize_mode(std::string_view text)
{
    std::string key = to_snake_case(trim(text));
    key.erase(std::remove(key.begin(), key.end(), '*'), key.end());
    static const std::map<std::string, Mode> table = {
        {"pedestrian", Mode::Pedestrian},
        {"walk", Mode::Pedestrian},
        {"walking", Mode::Pedestrian},
        {"on_foot", Mode::Pedestrian},
        {"foot", Mode::Pedestrian},
        {"bicycle", Mode::Bicycle},
        {"bike", Mode::Bicycle},
        {"cycling", Mode::Bicycle},
        {"cycle", Mode::Bicycle},
        {"passenger", Mode::Passenger},
        {"car", Mode::Passenger},
        {"drive", Mode::Passenger},
        {"driving", Mode::Passenger},
        {"mit", Mode::Passenger},
        {"public_transport", Mode::PublicTransport},
        {"public_transportation", Mode::PublicTransport},
        {"public_transit", Mode::PublicTransport},
        {"transit", Mode::PublicTransport},
        {"pt", Mode::PublicTransport},
    };
    const auto it = table.find(key);
    if (it == table.end()) {
        return std::nullopt;
    }
    return it->second;
}

namespace
{

struct RawDecision {
    std::optional<std::int64_t> route_id;
    std::string mode;
    std::string reasoning;
};

std::optional<std::int64_t> json_int(const Json& v)
{
    if (v.is_number_integer()) {
        return v.get<std::int64_t>();
    }
    if (v.is_number()) {
        return static_cast<std::int64_t>(std::llround(v.get<double>()));
    }
    if (v.is_string()) {
        if (auto n = parse_int(trim(v.get<std::string>()))) {
            return static_cast<std::int64_t>(*n);
        }
    }
    return std::nullopt;
}

std::optional<RawDecision> raw_from_json(const Json& obj)
{
    if (!obj.is_object()) {
        return std::nullopt;
    }
    RawDecision r;
    for (const char* k : {"route_id", "routeId", "route"}) {
        if (obj.contains(k)) {
            r.route_id = json_int(obj[k]);
            break;
        }
    }
    for (const char* k : {"means_of_transport", "mode", "transport"}) {
        if (obj.contains(k) && obj[k].is_string()) {
            r.mode = obj[k].get<std::string>();
            break;
        }
    }
    if (obj.contains("reasoning") && obj["reasoning"].is_string()) {
        r.reasoning = obj["reasoning"].get<std::string>();
    }
    if (!r.route_id && r.mode.empty()) {
        return std::nullopt;
    }
    return r;
}

// Some answers carry unbalanced quotes that no JSON reading recovers; pull the fields out
// of each brace-delimited chunk directly.
std::vector<RawDecision> raw_from_text(std::string_view text)
{
    static const std::regex route_re(R"re(['"]?route_id['"]?\s*:\s*['"]?(\d+))re");
    static const std::regex mode_re(R"re(['"]?means_of_transport['"]?\s*:\s*['"]([^'"]+)['"])re");
    static const std::regex reason_re(R"re(['"]?reasoning['"]?\s*:\s*['"](.*?)['"]\s*,\s*['"]?(?:route_id|means_of_transport))re");
    std::vector<RawDecision> out;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos) {
        const auto end = text.find('}', pos);
        if (end == std::string_view::npos) {
            break;
        }
        const std::string chunk(text.substr(pos, end - pos + 1));
        RawDecision r;
        std::smatch m;
        if (std::regex_search(chunk, m, route_re)) {
            r.route_id = std::stoll(m[1].str());
        }
        if (std::regex_search(chunk, m, mode_re)) {
            r.mode = m[1].str();
        }
        if (std::regex_search(chunk, m, reason_re)) {
            r.reasoning = m[1].str();
        }
        if (r.route_id || !r.mode.empty()) {
            out.push_back(std::move(r));
        }
        pos = end + 1;
    }
    return out;
}

void flatten_into(const Json& v, std::vector<Json>& out)
{
    if (v.is_array()) {
        for (const auto& e : v) {
            flatten_into(e, out);
        }
        return;
    }
    if (!v.is_object()) {
        return;
    }
    if (v.contains("route_id") || v.contains("means_of_transport")) {
        out.push_back(v);
        return;
    }
    // wrapper such as {"decisions": [...]}
    for (const auto& [k, inner] : v.items()) {
        if (inner.is_array() || inner.is_object()) {
            flatten_into(inner, out);
        }
    }
}

} // namespace

std::vector<std::optional<ModeDecision>> parse_decision(std::string_view response, const std::vector<TripChoice>& trips)
{
    std::vector<RawDecision> raws;
    try {
        std::vector<Json> objs;
        for (const auto& o : extract_json_objects(response)) {
            flatten_into(o, objs);
        }
        for (const auto& o : objs) {
            if (auto r = raw_from_json(o)) {
                raws.push_back(std::move(*r));
            }
        }
    }
    catch (const ParseError&) {
    }
    if (raws.empty()) {
        raws = raw_from_text(response);
    }
    if (raws.empty()) {
        throw ParseError("no decision object in response");
    }

    std::map<std::int64_t, std::size_t> by_route;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        if (!trips[i].options.empty()) {
            by_route[trips[i].options.front().route_id] = i;
        }
    }
    std::vector<std::optional<ModeDecision>> out(trips.size());
    for (const auto& r : raws) {
        if (!r.route_id) {
            throw ParseError("decision without route_id");
        }
        const auto it = by_route.find(*r.route_id);
        if (it == by_route.end()) {
            throw ParseError("route_id " + std::to_string(*r.route_id) + " was not offered");
        }
        const auto mode = normalize_mode(r.mode);
        if (!mode) {
            throw ParseError("unknown means of transport '" + r.mode + "'");
        }
        const auto& trip = trips[it->second];
        const bool offered = std::any_of(trip.options.begin(), trip.options.end(),
                                         [&](const RouteOption& o) { return o.mode == *mode; });
        if (!offered) {
            throw ParseError("route " + std::to_string(*r.route_id) + " has no " + to_string(*mode) + " option");
        }
        auto& slot = out[it->second];
        if (slot) {
            continue; // first answer for a route wins
        }
        ModeDecision d;
        d.agent_id = trip.trip.agent_id;
        d.leg = trip.trip.leg;
        d.route_id = *r.route_id;
        d.mode = *mode;
        d.reasoning = r.reasoning;
        slot = std::move(d);
    }
    return out;
}

std::size_t fastest_option(const std::vector<RouteOption>& options)
{
    if (options.empty()) {
        throw EmptySetError("no route options");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < options.size(); ++i) {
        if (options[i].duration_s < options[best].duration_s) {
            best = i;
        }
    }
    return best;
}

ConsistencyReport enforce_vehicle_consistency(const std::vector<ModeDecision>& decisions,
                                              const std::vector<TripChoice>& trips, VehicleState state)
{
    if (decisions.size() != trips.size()) {
        throw InputError("one decision per trip expected");
    }
    ConsistencyReport rep;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const auto& trip = trips[i].trip;
        const auto& opts = trips[i].options;
        auto usable = [&](Mode m) {
            switch (m) {
            case Mode::Passenger:
                return state.car_at(trip.from_building);
            case Mode::Bicycle:
                return state.bike_at(trip.from_building);
            default:
                return true;
            }
        };
        ModeDecision d = decisions[i];
        const bool offered = std::any_of(opts.begin(), opts.end(), [&](const RouteOption& o) { return o.mode == d.mode; });
        if (!offered || !usable(d.mode)) {
            std::optional<std::size_t> best;
            for (std::size_t k = 0; k < opts.size(); ++k) {
                if (usable(opts[k].mode) && (!best || opts[k].duration_s < opts[*best].duration_s)) {
                    best = k;
                }
            }
            std::string why = !offered ? "not offered"
                              : d.mode == Mode::Passenger
                                  ? (state.car == VehicleState::kNotOwned ? "no car in the household" : "car is elsewhere")
                                  : (state.bike == VehicleState::kNotOwned ? "no bicycle in the household"
                                                                           : "bicycle is elsewhere");
            if (!best) {
                rep.violations.push_back("agent " + std::to_string(trip.agent_id) + " leg " + std::to_string(trip.leg) +
                                         ": " + to_string(d.mode) + " (" + why + "), no feasible option; leg dropped");
                rep.dropped_legs.push_back(trip.leg);
                continue;
            }
            rep.violations.push_back("agent " + std::to_string(trip.agent_id) + " leg " + std::to_string(trip.leg) +
                                     ": " + to_string(d.mode) + " (" + why + ") -> " + to_string(opts[*best].mode));
            d.mode = opts[*best].mode;
            d.route_id = opts[*best].route_id;
            d.repaired = true;
        }
        if (d.mode == Mode::Passenger) {
            state.car = trip.to_building;
        }
        else if (d.mode == Mode::Bicycle) {
            state.bike = trip.to_building;
        }
        rep.decisions.push_back(std::move(d));
    }
    return rep;
}

std::vector<std::string> replay_vehicle_violations(const std::vector<ModeDecision>& decisions,
                                                   const std::vector<TripChoice>& trips, const Attributes& attributes,
                                                   std::int64_t home)
{
    // vehicle name -> parked building; absent when not owned
    std::map<std::string, std::int64_t> parked;
    const auto owns = [&](const char* key) {
        const auto it = attributes.find(key);
        return it != attributes.end() && parse_double(it->second).value_or(0.0) >= 1.0;
    };
    if (owns("car_ownership")) {
        parked["car"] = home;
    }
    if (owns("bike_ownership")) {
        parked["bicycle"] = home;
    }
    std::map<int, const ModeDecision*> by_leg;
    for (const auto& d : decisions) {
        by_leg[d.leg] = &d;
    }
    std::vector<std::string> out;
    for (const auto& tc : trips) {
        const auto it = by_leg.find(tc.trip.leg);
        if (it == by_leg.end()) {
            continue;
        }
        const ModeDecision& d = *it->second;
        const std::string where = "leg " + std::to_string(tc.trip.leg) + ": ";
        const auto opt = std::find_if(tc.options.begin(), tc.options.end(),
                                      [&](const RouteOption& o) { return o.mode == d.mode && o.route_id == d.route_id; });
        if (opt == tc.options.end()) {
            out.push_back(where + "decision does not reference an offered option");
        }
        const char* vehicle = d.mode == Mode::Passenger ? "car" : d.mode == Mode::Bicycle ? "bicycle" : nullptr;
        if (vehicle) {
            const auto p = parked.find(vehicle);
            if (p == parked.end()) {
                out.push_back(where + vehicle + " used but not owned");
            }
            else if (p->second != tc.trip.from_building) {
                out.push_back(where + vehicle + " parked at building " + std::to_string(p->second) +
                              ", trip starts at " + std::to_string(tc.trip.from_building));
            }
            parked[vehicle] = tc.trip.to_building;
        }
    }
    return out;
}

namespace
{

Json trips_context(const std::vector<TripChoice>& trips)
{
    Json arr = Json::array();
    for (const auto& t : trips) {
        Json opts = Json::array();
        for (const auto& o : t.options) {
            opts.push_back({{"mode", to_string(o.mode)}, {"duration_s", o.duration_s}, {"length_m", o.length_m}});
        }
        arr.push_back({{"route_id", t.options.empty() ? 0 : t.options.front().route_id},
                       {"from", t.trip.from_building},
                       {"to", t.trip.to_building},
                       {"options", opts}});
    }
    return arr;
}

} // namespace

AgentDecisions decide_modes(const AgentDay& day, GenerationBackend& backend, std::uint64_t global_seed,
                            const ModeChoiceOptions& options)
{
    AgentDecisions out;
    out.agent_id = day.profile.agent_id;
    if (day.trips.empty()) {
        return out;
    }
    GenerationRequest req;
    req.task = TaskKind::ModeChoice;
    req.key = "modes/" + std::to_string(day.profile.agent_id);
    req.prompt = build_mode_prompt(day.profile, day.trips, options.prompt);
    req.context = {{"attributes", attributes_to_json(day.profile.attributes)},
                   {"home", day.home_building},
                   {"trips", trips_context(day.trips)}};
    const std::uint64_t base_seed =
        derive_seed(global_seed, static_cast<std::uint64_t>(day.profile.agent_id), "mode_choice");

    std::vector<std::optional<ModeDecision>> best;
    std::size_t best_count = 0;
    std::exception_ptr transport;
    int transport_failures = 0;
    const int total = 1 + std::max(0, options.max_regenerations);
    for (int attempt = 0; attempt < total; ++attempt) {
        req.attempt = attempt;
        req.seed = attempt == 0 ? base_seed : splitmix64(base_seed + static_cast<std::uint64_t>(attempt));
        out.attempts = attempt + 1;
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
            auto parsed = parse_decision(response, day.trips);
            const auto n = static_cast<std::size_t>(std::count_if(parsed.begin(), parsed.end(),
                                                                  [](const auto& d) { return d.has_value(); }));
            if (n > best_count || best.empty()) {
                best = std::move(parsed);
                best_count = n;
            }
            if (n == day.trips.size()) {
                break;
            }
        }
        catch (const ParseError&) {
        }
    }
    if (transport_failures == total) {
        std::rethrow_exception(transport);
    }
    best.resize(day.trips.size());

    std::vector<ModeDecision> filled;
    for (std::size_t i = 0; i < day.trips.size(); ++i) {
        if (best[i]) {
            filled.push_back(*best[i]);
            continue;
        }
        const auto& tc = day.trips[i];
        const auto& o = tc.options[fastest_option(tc.options)];
        ModeDecision d;
        d.agent_id = tc.trip.agent_id;
        d.leg = tc.trip.leg;
        d.route_id = o.route_id;
        d.mode = o.mode;
        d.defaulted = true;
        filled.push_back(std::move(d));
    }
    auto rep = enforce_vehicle_consistency(filled, day.trips,
                                           VehicleState::at_home(day.profile.attributes, day.home_building));
    out.decisions = std::move(rep.decisions);
    out.violations = std::move(rep.violations);
    out.dropped_legs = std::move(rep.dropped_legs);
    return out;
}

std::vector<AgentDecisions> decide_modes_all(const std::vector<AgentDay>& days, GenerationBackend& backend,
                                             std::uint64_t global_seed, const ModeChoiceOptions& options)
{
    std::vector<AgentDecisions> out(days.size());
    parallel_for(days.size(), static_cast<std::size_t>(std::max(1, options.workers)),
                 [&](std::size_t i) { out[i] = decide_modes(days[i], backend, global_seed, options); });
    std::stable_sort(out.begin(), out.end(),
                     [](const AgentDecisions& a, const AgentDecisions& b) { return a.agent_id < b.agent_id; });
    return out;
}

DecidedTrip make_decided_trip(const ModeDecision& d, const TripChoice& tc)
{
    const auto it = std::find_if(tc.options.begin(), tc.options.end(),
                                 [&](const RouteOption& o) { return o.mode == d.mode && o.route_id == d.route_id; });
    if (it == tc.options.end()) {
        throw InputError("decision for route " + std::to_string(d.route_id) + " does not match an option");
    }
    DecidedTrip t;
    t.agent_id = d.agent_id;
    t.leg = d.leg;
    t.route_id = d.route_id;
    t.mode = d.mode;
    t.reasoning = d.reasoning;
    t.repaired = d.repaired;
    t.defaulted = d.defaulted;
    t.duration_s = it->duration_s;
    t.length_m = it->length_m;
    const int earliest = tc.trip.depart_after * 60;
    const int latest = tc.trip.arrive_by * 60 - static_cast<int>(std::ceil(it->duration_s));
    t.depart_s = std::max(earliest, latest);
    t.from_building = tc.trip.from_building;
    t.to_building = tc.trip.to_building;
    return t;
}

Json decided_trip_to_json(const DecidedTrip& t)
{
    return {{"agent_id", t.agent_id},
            {"leg", t.leg},
            {"route_id", t.route_id},
            {"mode", to_string(t.mode)},
            {"reasoning", t.reasoning},
            {"repaired", t.repaired},
            {"defaulted", t.defaulted},
            {"duration_s", t.duration_s},
            {"length_m", t.length_m},
            {"depart_s", t.depart_s},
            {"from_building", t.from_building},
            {"to_building", t.to_building}};
}

DecidedTrip decided_trip_from_json(const Json& d)
{
    DecidedTrip t;
    t.agent_id = d.at("agent_id").get<std::int64_t>();
    t.leg = d.at("leg").get<int>();
    t.route_id = d.at("route_id").get<std::int64_t>();
    t.mode = mode_from_string(d.at("mode").get<std::string>());
    t.reasoning = d.value("reasoning", std::string());
    t.repaired = d.value("repaired", false);
    t.defaulted = d.value("defaulted", false);
    t.duration_s = d.at("duration_s").get<double>();
    t.length_m = d.at("length_m").get<double>();
    t.depart_s = d.at("depart_s").get<int>();
    t.from_building = d.at("from_building").get<std::int64_t>();
    t.to_building = d.at("to_building").get<std::int64_t>();
    return t;
}

std::string decided_trips_to_ndjson(const std::vector<DecidedTrip>& trips)
{
    std::vector<Json> rows;
    rows.reserve(trips.size());
    for (const auto& t : trips) {
        rows.push_back(decided_trip_to_json(t));
    }
    return to_ndjson(rows);
}

std::vector<DecidedTrip> decided_trips_from_ndjson(const std::filesystem::path& path)
{
    std::vector<DecidedTrip> out;
    for (const auto& row : read_ndjson(path)) {
        try {
            out.push_back(decided_trip_from_json(row));
        }
        catch (const Json::exception& e) {
            throw SchemaError(path.string() + ": " + e.what());
        }
    }
    return out;
}

double stub_car_probability(std::string_view status)
{
    static const std::map<std::string, double, std::less<>> table = {
        {"very_low", 0.30}, {"low", 0.45}, {"medium", 0.60}, {"high", 0.75}, {"very_high", 0.85}};
    const auto it = table.find(status);
    return it == table.end() ? 0.6 : it->second;
}

// Distance bands follow the prompt's rule of thumb. Vehicles are tracked so that a car
// or bike taken somewhere is ridden onward instead of being abandoned.
std::string stub_mode_response(const Json& context, std::uint64_t seed, int /*version*/)
{
    Rng rng(seed);
    const Json attrs = context.value("attributes", Json::object());
    auto attr_num = [&](const char* key) {
        if (!attrs.contains(key)) {
            return 0.0;
        }
        const auto& v = attrs[key];
        if (v.is_number()) {
            return v.get<double>();
        }
        return v.is_string() ? parse_double(v.get<std::string>()).value_or(0.0) : 0.0;
    };
    const std::int64_t home = context.value("home", std::int64_t{0});
    std::int64_t car = attr_num("car_ownership") > 0 ? home : VehicleState::kNotOwned;
    std::int64_t bike = attr_num("bike_ownership") > 0 ? home : VehicleState::kNotOwned;
    const double p_car = stub_car_probability(attrs.value("economic_status", std::string("medium")));

    Json out = Json::array();
    for (const auto& t : context.value("trips", Json::array())) {
        const std::int64_t from = t.at("from").get<std::int64_t>();
        const std::int64_t to = t.at("to").get<std::int64_t>();
        std::map<std::string, double> length;
        for (const auto& o : t.at("options")) {
            length[o.at("mode").get<std::string>()] = o.at("length_m").get<double>();
        }
        auto has = [&](const char* m) { return length.count(m) > 0; };
        double d_km = 0.0;
        if (has("pedestrian")) {
            d_km = length["pedestrian"] / 1000.0;
        }
        else {
            d_km = INFINITY;
            for (const auto& [m, l] : length) {
                d_km = std::min(d_km, l / 1000.0);
            }
        }
        const bool car_here = car != VehicleState::kNotOwned && car == from && has("passenger");
        const bool bike_here = bike != VehicleState::kNotOwned && bike == from && has("bicycle");
        // the car draw is made for every leg so later legs do not shift with earlier ones
        const bool wants_car = rng.bernoulli(p_car);

        std::string mode;
        std::string why;
        if (d_km >= 1.0 && car_here && car != home) {
            mode = "passenger";
            why = "The car is parked here, so I drive it onward.";
        }
        else if (d_km >= 1.0 && bike_here && bike != home) {
            mode = "bicycle";
            why = "My bike is with me, so I ride it onward.";
        }
        else if (d_km < 1.0) {
            mode = "pedestrian";
            why = "It is a very short distance, so I walk.";
        }
        else if (d_km > 2.0 && car_here && wants_car) {
            mode = "passenger";
            why = "The car is available and driving is convenient for this distance.";
        }
        else if (d_km < 5.0) {
            if (bike_here) {
                mode = "bicycle";
                why = "A medium distance is easy by bike.";
            }
            else if (has("public_transport")) {
                mode = "public_transport";
                why = "Without a bike at hand, public transport covers this distance.";
            }
            else {
                mode = "pedestrian";
                why = "No other option is at hand, so I walk.";
            }
        }
        else if (has("public_transport")) {
            mode = "public_transport";
            why = "For a longer trip public transport is the usual choice.";
        }
        else if (bike_here) {
            mode = "bicycle";
            why = "There is no transit connection, so I cycle.";
        }
        else if (car_here) {
            mode = "passenger";
            why = "There is no transit connection, so I drive.";
        }
        else {
            mode = "pedestrian";
            why = "No other option is at hand, so I walk.";
        }
        if (!has(mode.c_str())) {
            // fall back to whatever is fastest
            double best = INFINITY;
            for (const auto& o : t.at("options")) {
                const double dur = o.at("duration_s").get<double>();
                if (dur < best) {
                    best = dur;
                    mode = o.at("mode").get<std::string>();
                }
            }
            why = "This is the fastest option.";
        }
        if (mode == "passenger") {
            car = to;
        }
        else if (mode == "bicycle") {
            bike = to;
        }
        out.push_back({{"route_id", t.at("route_id")}, {"reasoning", why}, {"means_of_transport", mode}});
    }
    return out.dump(2);
}

} // namespace agentsim
