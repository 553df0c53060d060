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
#include "agentsim/random.hpp"
#include "fake_backend.hpp"
#include "mode_fixtures.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace agentsim;

using namespace fixtures;

TEST(ModePrompt, default_variant_has_exemplars_and_reasoning)
{
    const AgentProfile p{3828, kCarOwner, "A commuter."};
    const auto prompt = build_mode_prompt(p, commuter_day());
    ASSERT_TRUE(prompt.system.has_value());
    EXPECT_NE(prompt.system->find("0.3 km in 5 min -> **walk**"), std::string::npos);
    EXPECT_NE(prompt.system->find("(2 walk, 1 bicycle, 3 car, 2 public transport)"), std::string::npos);
    EXPECT_NE(prompt.system->find("8. 12.0 km in 30 min -> **car**"), std::string::npos);
    EXPECT_NE(prompt.user.find("You are: A commuter."), std::string::npos);
    EXPECT_NE(prompt.user.find("first reason in one sentence"), std::string::npos);
    EXPECT_NE(prompt.user.find("route_id 38280304, passenger"), std::string::npos);
    EXPECT_NE(prompt.user.find("6.0 km"), std::string::npos);
}

TEST(ModePrompt, variants_remove_their_part)
{
    const AgentProfile p{3828, kCarOwner, "A commuter."};
    ModePromptOptions o;
    o.variant = PromptVariant::FewshotNoCot;
    const auto no_cot = build_mode_prompt(p, commuter_day(), o);
    EXPECT_EQ(no_cot.text().find("first reason in one sentence"), std::string::npos);
    EXPECT_NE(no_cot.text().find("0.3 km in 5 min -> **walk**"), std::string::npos);

    o.variant = PromptVariant::ZeroshotCot;
    const auto zero = build_mode_prompt(p, commuter_day(), o);
    EXPECT_NE(zero.text().find("step by step"), std::string::npos);
    EXPECT_EQ(zero.text().find("-> **"), std::string::npos);
    EXPECT_NE(zero.text().find("typically"), std::string::npos);

    o.variant = PromptVariant::NoSystemPrompt;
    const auto bare = build_mode_prompt(p, commuter_day(), o);
    EXPECT_FALSE(bare.system.has_value());
    EXPECT_EQ(bare.text().find("typically"), std::string::npos);
    EXPECT_NE(bare.text().find("You are: A commuter."), std::string::npos);

    o.variant = PromptVariant::DefaultFewshotCot;
    o.external_factor = "It is snowing.";
    EXPECT_NE(build_mode_prompt(p, commuter_day(), o).user.find("It is snowing.\n"), std::string::npos);

    auto empty = commuter_day();
    empty[1].options.clear();
    EXPECT_THROW(build_mode_prompt(p, empty), InputError);
    EXPECT_EQ(prompt_variant_from_string("zeroshot_cot"), PromptVariant::ZeroshotCot);
    EXPECT_THROW(prompt_variant_from_string("fancy"), InputError);
}

TEST(ModeParse, synonyms)
{
    EXPECT_EQ(normalize_mode("walk"), Mode::Pedestrian);
    EXPECT_EQ(normalize_mode("Public Transport"), Mode::PublicTransport);
    EXPECT_EQ(normalize_mode("public transportation"), Mode::PublicTransport);
    EXPECT_EQ(normalize_mode("car"), Mode::Passenger);
    EXPECT_EQ(normalize_mode("**bike**"), Mode::Bicycle);
    EXPECT_FALSE(normalize_mode("hovercraft").has_value());
}

TEST(ModeParse, python_literal_transcript)
{
    const auto d = parse_decision(kCommuterAnswer, commuter_day());
    ASSERT_EQ(d.size(), 4u);
    ASSERT_TRUE(d[0] && d[1] && d[2] && d[3]);
    EXPECT_EQ(d[0]->mode, Mode::Passenger);
    EXPECT_EQ(d[0]->route_id, 38280001);
    EXPECT_EQ(d[1]->mode, Mode::Pedestrian);
    EXPECT_EQ(d[3]->route_id, 38280304);
    EXPECT_NE(d[2]->reasoning.find("carry groceries"), std::string::npos);
}

TEST(ModeParse, unbalanced_quotes_fall_back_to_field_extraction)
{
    std::vector<TripChoice> day = {trip(8001, 0, 0, 1, "house", "community_centre", all_modes(1.5)),
                                   trip(8001, 1, 1, 2, "community_centre", "cafe", all_modes(2.0))};
    const char* answer = R"({       'means_of_transport': 'bicycle',
        'reasoning': 'Given the short distance and my preference for cycling, "I'll bike to the community centre.",
        'route_id': 80010001}
{       'means_of_transport': 'public transport',
        'reasoning': "As I'll be meeting colleagues for lunch, I'll take the public transport for its reliability.',
        'route_id': 80010102})";
    const auto d = parse_decision(answer, day);
    ASSERT_TRUE(d[0] && d[1]);
    EXPECT_EQ(d[0]->mode, Mode::Bicycle);
    EXPECT_EQ(d[1]->mode, Mode::PublicTransport);
    EXPECT_EQ(d[1]->route_id, 80010102);
}

TEST(ModeParse, errors_and_missing_legs)
{
    const auto day = commuter_day();
    EXPECT_THROW(parse_decision(R"([{"route_id": 99990001, "means_of_transport": "walk"}])", day), ParseError);
    EXPECT_THROW(parse_decision(R"([{"route_id": 38280001, "means_of_transport": "teleport"}])", day), ParseError);
    EXPECT_THROW(parse_decision("No decision.", day), ParseError);
    auto walk_only = day;
    walk_only[0].options.resize(1);
    EXPECT_THROW(parse_decision(R"([{"route_id": 38280001, "means_of_transport": "car"}])", walk_only), ParseError);
    const auto partial = parse_decision(R"({"decisions": [{"route_id": "38280102", "means_of_transport": "walk"}]})", day);
    EXPECT_FALSE(partial[0].has_value());
    ASSERT_TRUE(partial[1].has_value());
    EXPECT_EQ(partial[1]->mode, Mode::Pedestrian);
}

TEST(Vehicles, commuter_day_replays_cleanly)
{
    const auto day = commuter_day();
    const auto parsed = parse_decision(kCommuterAnswer, day);
    std::vector<ModeDecision> ds;
    for (const auto& d : parsed) {
        ds.push_back(*d);
    }
    EXPECT_TRUE(replay_vehicle_violations(ds, day, kCarOwner, 0).empty());
    const auto rep = enforce_vehicle_consistency(ds, day, VehicleState::at_home(kCarOwner, 0));
    EXPECT_TRUE(rep.violations.empty());
    EXPECT_EQ(rep.decisions, ds);
}

TEST(Vehicles, car_left_at_home_is_repaired)
{
    const auto day = commuter_day();
    std::vector<ModeDecision> ds = {decision(3828, 0, Mode::PublicTransport), decision(3828, 1, Mode::Pedestrian),
                                    decision(3828, 2, Mode::Pedestrian), decision(3828, 3, Mode::Passenger)};
    EXPECT_EQ(replay_vehicle_violations(ds, day, kCarOwner, 0).size(), 1u);
    const auto rep = enforce_vehicle_consistency(ds, day, VehicleState::at_home(kCarOwner, 0));
    ASSERT_EQ(rep.violations.size(), 1u);
    EXPECT_TRUE(rep.decisions[3].repaired);
    // fastest among walk, transit (no bike owned): 6 km by transit is 1300 s
    EXPECT_EQ(rep.decisions[3].mode, Mode::PublicTransport);
    EXPECT_TRUE(replay_vehicle_violations(rep.decisions, day, kCarOwner, 0).empty());
}

TEST(Vehicles, bike_out_and_back_is_accepted)
{
    const Attributes cyclist = {{"car_ownership", "0"}, {"bike_ownership", "2"}};
    std::vector<TripChoice> day = {trip(5, 0, 10, 11, "house", "office", all_modes(3.0)),
                                   trip(5, 1, 11, 10, "office", "house", all_modes(3.0))};
    std::vector<ModeDecision> ds = {decision(5, 0, Mode::Bicycle), decision(5, 1, Mode::Bicycle)};
    const auto rep = enforce_vehicle_consistency(ds, day, VehicleState::at_home(cyclist, 10));
    EXPECT_TRUE(rep.violations.empty());
    EXPECT_TRUE(replay_vehicle_violations(rep.decisions, day, cyclist, 10).empty());
}

TEST(Vehicles, household_without_car_never_drives)
{
    const Attributes no_car = {{"car_ownership", "0"}, {"bike_ownership", "0"}};
    std::vector<TripChoice> day = {trip(6, 0, 10, 11, "house", "office", all_modes(10.0))};
    std::vector<ModeDecision> ds = {decision(6, 0, Mode::Passenger)};
    EXPECT_EQ(replay_vehicle_violations(ds, day, no_car, 10).size(), 1u);
    const auto rep = enforce_vehicle_consistency(ds, day, VehicleState::at_home(no_car, 10));
    ASSERT_EQ(rep.violations.size(), 1u);
    EXPECT_NE(rep.violations[0].find("no car"), std::string::npos);
    EXPECT_EQ(rep.decisions[0].mode, Mode::PublicTransport);
}

TEST(Vehicles, infeasible_leg_is_dropped)
{
    const Attributes no_car = {{"car_ownership", "0"}};
    std::vector<TripChoice> day = {trip(6, 0, 10, 11, "house", "office", {{Mode::Passenger, 600, 8000}})};
    const auto rep = enforce_vehicle_consistency({decision(6, 0, Mode::Passenger)}, day,
                                                 VehicleState::at_home(no_car, 10));
    EXPECT_TRUE(rep.decisions.empty());
    EXPECT_EQ(rep.dropped_legs, std::vector<int>{0});
}

TEST(Vehicles, repaired_random_days_replay_without_violations)
{
    Rng rng(31);
    int violations = 0;
    int repaired = 0;
    for (int a = 0; a < 1000; ++a) {
        Attributes attrs = {{"car_ownership", std::to_string(rng.below(3))},
                            {"bike_ownership", std::to_string(rng.below(3))}};
        const std::int64_t home = 0;
        const int legs = 1 + static_cast<int>(rng.below(6));
        std::vector<TripChoice> day;
        std::int64_t at = home;
        for (int l = 0; l < legs; ++l) {
            std::int64_t next = l + 1 == legs ? home : static_cast<std::int64_t>(1 + rng.below(5));
            if (next == at) {
                next = at == home ? 1 : home;
            }
            std::vector<std::tuple<Mode, double, double>> opts;
            for (const auto& o : all_modes(rng.uniform(0.2, 15))) {
                if (rng.bernoulli(0.8)) {
                    opts.push_back(o);
                }
            }
            if (opts.empty()) {
                opts.push_back(all_modes(1.0)[2]);
            }
            day.push_back(trip(a, l, at, next, "x", "y", opts));
            at = next;
        }
        std::vector<ModeDecision> ds;
        for (const auto& t : day) {
            ds.push_back(decision(a, t.trip.leg, t.options[rng.below(t.options.size())].mode));
        }
        const auto rep = enforce_vehicle_consistency(ds, day, VehicleState::at_home(attrs, home));
        repaired += static_cast<int>(rep.violations.size());
        violations += static_cast<int>(replay_vehicle_violations(rep.decisions, day, attrs, home).size());
        for (const auto& d : rep.decisions) {
            const auto& opts = day[static_cast<std::size_t>(d.leg)].options;
            EXPECT_TRUE(std::any_of(opts.begin(), opts.end(), [&](const RouteOption& o) {
                return o.mode == d.mode && o.route_id == d.route_id;
            }));
        }
    }
    EXPECT_EQ(violations, 0);
    EXPECT_GT(repaired, 100); // the random decisions do need repairs
}

TEST(DecideModes, stub_is_consistent_and_reproducible)
{
    TempDir dir;
    StubBackend stub;
    RecordingBackend rec(stub);
    std::vector<AgentDay> days;
    for (int a = 1; a <= 20; ++a) {
        AgentDay d;
        d.profile = {a, a % 2 ? kCarOwner : Attributes{{"car_ownership", "0"}, {"bike_ownership", "1"}}, "Someone."};
        d.home_building = 0;
        d.trips = commuter_day();
        for (auto& t : d.trips) {
            t.trip.agent_id = a;
            for (auto& o : t.options) {
                o.route_id = encode_route_id(a, t.trip.leg);
            }
        }
        days.push_back(std::move(d));
    }
    const auto live = decide_modes_all(days, rec, 9);
    rec.flush(dir.path() / "backend_modes.jsonl");
    ReplayBackend replay(dir.path());
    const auto again = decide_modes_all(days, replay, 9);
    ASSERT_EQ(live.size(), again.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
        EXPECT_EQ(live[i].decisions, again[i].decisions);
        EXPECT_TRUE(replay_vehicle_violations(live[i].decisions, days[i].trips, days[i].profile.attributes, 0).empty());
        EXPECT_EQ(live[i].attempts, 1);
        // short hops are walked
        EXPECT_EQ(live[i].decisions[1].mode, Mode::Pedestrian);
    }
}

TEST(DecideModes, bad_route_is_regenerated_once_then_defaulted)
{
    FunctionBackend bad([](const GenerationRequest&) {
        return std::string(R"([{"route_id": 11110001, "means_of_transport": "walk"}])");
    });
    CountingBackend counting(bad);
    AgentDay day{{3828, kCarOwner, "x"}, 0, commuter_day()};
    const auto out = decide_modes(day, counting, 1);
    EXPECT_EQ(counting.calls(), 2);
    ASSERT_EQ(out.decisions.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_TRUE(out.decisions[i].defaulted);
    }
    // driving is fastest for the commute; the short hops default to cycling, which the
    // household cannot do, and become the car that is parked at the office
    EXPECT_EQ(out.decisions[0].mode, Mode::Passenger);
    EXPECT_FALSE(out.decisions[0].repaired);
    EXPECT_EQ(out.decisions[1].mode, Mode::Passenger);
    EXPECT_TRUE(out.decisions[1].repaired);
    EXPECT_TRUE(replay_vehicle_violations(out.decisions, day.trips, kCarOwner, 0).empty());
}

TEST(DecideModes, missing_decision_defaults_to_fastest)
{
    // the second leg of the retiree's day comes back without a decision
    std::vector<TripChoice> trips = {trip(1847, 0, 0, 1, "house", "bench", all_modes(0.4)),
                                     trip(1847, 1, 1, 0, "bench", "house", all_modes(0.4))};
    FunctionBackend half([](const GenerationRequest&) {
        return std::string("{'means_of_transport': 'pedestrian', 'reasoning': 'short', 'route_id': 18470001}\n"
                           "No decision.");
    });
    const auto out = decide_modes({{1847, kCarOwner, "x"}, 0, trips}, half, 1);
    ASSERT_EQ(out.decisions.size(), 2u);
    EXPECT_FALSE(out.decisions[0].defaulted);
    EXPECT_TRUE(out.decisions[1].defaulted);
    EXPECT_EQ(out.attempts, 2);
    // cycling would be fastest and the car is at home, so the repair walks back
    EXPECT_EQ(out.decisions[1].mode, Mode::Pedestrian);
    EXPECT_TRUE(out.decisions[1].repaired);
}

TEST(DecidedTrips, departure_and_round_trip)
{
    const auto day = commuter_day();
    auto d = decision(3828, 0, Mode::Passenger);
    const auto t = make_decided_trip(d, day[0]);
    // arrive_by 09:00 minus 870 s driving, but not before 08:00
    EXPECT_EQ(t.depart_s, 9 * 3600 - 870);
    EXPECT_NEAR(t.length_m, 6600, 1e-9);
    TempDir dir;
    write_text_file(dir.path() / "d.ndjson", decided_trips_to_ndjson({t}));
    EXPECT_EQ(decided_trips_from_ndjson(dir.path() / "d.ndjson"), std::vector<DecidedTrip>{t});
    d.mode = Mode::Bicycle;
    d.route_id = 1;
    EXPECT_THROW(make_decided_trip(d, day[0]), InputError);
}
