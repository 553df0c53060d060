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
#include "fake_backend.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace agentsim;

namespace
{

const std::vector<std::string> kCategories = {"house", "office", "canteen", "bench", "community_centre",
                                              "cafe",  "social_centre", "supermarket", "school"};

const char* kCommuterDay = R"( - 06:00: Waking up and getting ready for the day [house]
 - 07:00: Having breakfast with the family [house]
 - 08:00: Helping the children with their homework [house]
 - 09:00: Leaving for work after ensuring the family is prepared for the day [house]
 - 10:00: Attending a meeting with colleagues at the office [office]
 - 12:00: Having lunch at the office canteen [canteen]
 - 13:00: Continuing work at the office [office]
 - 17:00: Heading home from work [office]
 - 18:00: Spending quality time with the family, preparing dinner together [house]
 - 20:00: Eating dinner together as a family [house]
 - 21:00: Relaxing with the family in the evening [house]
)";

const char* kRetireeDay = R"( - 06:00: Waking up and having a morning coffee [house]
 - 07:00: Watching TV and checking the news [house]
 - 08:00: Preparing breakfast [house]
 - 09:00: Having breakfast with my husband [house]
 - 10:00: Going for a walk in our garden [house]
 - 11:00: Doing some light gardening [house]
 - 12:00: Having lunch [house]
 - 13:00: Watching a movie [house]
 - 15:00: Taking a short walk to the nearby park [house]
 - 16:00: Sitting on a bench in the park and socializing with neighbors [bench]
 - 18:00: Having dinner [house]
 - 19:00: Watching TV or reading a book [house]
 - 21:00: Going to bed [house]
)";

const char* kVolunteerDay = R"( - 07:00: Having breakfast with my household members in our kitchen [house]
 - 08:00: Checking and responding to personal emails and messages before starting work [house]
 - 09:00: Leaving the house to get some fresh air and water the plants in our small garden [house]
 - 10:00: Working on a community project in our local community centre [community_centre]
 - 12:00: Meeting with colleagues for lunch at a nearby cafe [cafe]
 - 13:00: Attending a workshop on sustainable living at the local social centre [social_centre]
 - 16:00: Picking up some groceries at the nearby supermarket [supermarket]
 - 17:00: Preparing dinner with my household members in our kitchen [house]
 - 18:30: Spending time with family and friends at our house [house]
 - 20:00: Reviewing the day's activities and planning for the next day in our living room [house]
)";

bool has_kind(const std::vector<ScheduleViolation>& v, ScheduleViolation::Kind k)
{
    return std::any_of(v.begin(), v.end(), [&](const ScheduleViolation& x) { return x.kind == k; });
}

} // namespace

TEST(Clock, parse_and_format)
{
    EXPECT_EQ(parse_clock("06:00"), 360);
    EXPECT_EQ(parse_clock("18:30"), 1110);
    EXPECT_EQ(parse_clock("7:05"), 425);
    EXPECT_EQ(format_clock(425), "07:05");
    EXPECT_THROW(parse_clock("24:00"), ParseError);
    EXPECT_THROW(parse_clock("12:60"), ParseError);
    EXPECT_THROW(parse_clock("noon"), ParseError);
    for (int m = 0; m < 24 * 60; m += 7) {
        EXPECT_EQ(parse_clock(format_clock(m)), m);
    }
}

TEST(ScheduleParse, single_line)
{
    const auto s = parse_schedule("06:00 Waking up [house]", kCategories);
    ASSERT_EQ(s.activities.size(), 1u);
    EXPECT_EQ(s.activities[0].start_time, 360);
    EXPECT_EQ(s.activities[0].activity_text, "Waking up");
    EXPECT_EQ(s.activities[0].location_category, "house");
}

TEST(ScheduleParse, transcripts_are_clean)
{
    for (const char* day : {kCommuterDay, kRetireeDay, kVolunteerDay}) {
        const auto s = parse_schedule(day, kCategories);
        EXPECT_TRUE(validate_schedule(s, kCategories).empty()) << day;
        EXPECT_TRUE(s.warnings.empty());
    }
}

TEST(ScheduleParse, trip_counts)
{
    const auto commuter = extract_trips(parse_schedule(kCommuterDay, kCategories));
    ASSERT_EQ(commuter.size(), 4u);
    EXPECT_EQ(commuter[0].from_category, "house");
    EXPECT_EQ(commuter[0].to_category, "office");
    EXPECT_EQ(commuter[0].arrive_by, 600);
    // previous activity 09:00 plus the dwell
    EXPECT_EQ(commuter[0].depart_after, 540 + kDwellMinutes);
    EXPECT_EQ(commuter[1].to_category, "canteen");
    EXPECT_EQ(commuter[2].to_category, "office");
    EXPECT_EQ(commuter[3].from_category, "office");
    EXPECT_EQ(commuter[3].to_category, "house");
    // the trip leaves from the last office activity (17:00)
    EXPECT_EQ(commuter[3].depart_after, 1020 + kDwellMinutes);
    EXPECT_EQ(extract_trips(parse_schedule(kRetireeDay, kCategories)).size(), 2u);
    EXPECT_EQ(extract_trips(parse_schedule(kVolunteerDay, kCategories)).size(), 5u);
}

TEST(ScheduleParse, json_forms)
{
    const auto a = parse_schedule(
        R"([{"time": "06:30", "activity": "Up", "building": "House"}, {"time": "09:00", "activity": "Work", "building": "office"}])",
        kCategories);
    ASSERT_EQ(a.activities.size(), 2u);
    EXPECT_EQ(a.activities[0].location_category, "house");
    const auto b = parse_schedule(
        R"(Here is the plan: {"schedule": [{"time": "06:30", "description": "Up", "location": "house"}]})", kCategories);
    ASSERT_EQ(b.activities.size(), 1u);
    EXPECT_EQ(b.activities[0].activity_text, "Up");
}

TEST(ScheduleParse, rejects_transport_and_unknown_categories)
{
    EXPECT_THROW(parse_schedule("06:00 Up [house]\n08:00 Park the car [parking]", kCategories), ParseError);
    EXPECT_THROW(parse_schedule("06:00 Up [castle]", kCategories), ParseError);
    EXPECT_THROW(parse_schedule("", kCategories), ParseError);
}

TEST(ScheduleParse, out_of_order_is_sorted_with_warning)
{
    const auto s = parse_schedule("09:00 Work [office]\n06:00 Up [house]", kCategories);
    ASSERT_EQ(s.activities.size(), 2u);
    EXPECT_EQ(s.activities[0].start_time, 360);
    EXPECT_FALSE(s.warnings.empty());
}

TEST(ScheduleValidate, flags_violations)
{
    auto bus = parse_schedule("06:00 Up [house]\n08:00 taking the bus downtown [office]", kCategories);
    EXPECT_TRUE(has_kind(validate_schedule(bus, kCategories), ScheduleViolation::Kind::TransportPhrase));

    auto office_first = parse_schedule("08:00 Work [office]\n17:00 Home [house]", kCategories);
    EXPECT_TRUE(has_kind(validate_schedule(office_first, kCategories), ScheduleViolation::Kind::MissingHomeStart));

    auto twice = parse_schedule("06:00 Up [house]\n06:00 Coffee [cafe]", kCategories);
    EXPECT_TRUE(has_kind(validate_schedule(twice, kCategories), ScheduleViolation::Kind::DuplicateTime));
}

TEST(ScheduleRepair, result_is_clean)
{
    auto s = parse_schedule("08:00 Work [office]\n12:00 taking the bus to lunch [cafe]\n12:00 Lunch [canteen]\n"
                            "17:00 Home [house]",
                            kCategories);
    const int dropped = repair_schedule(s, kCategories);
    EXPECT_GE(dropped, 1);
    EXPECT_TRUE(validate_schedule(s, kCategories).empty());
    ASSERT_FALSE(s.activities.empty());
    EXPECT_EQ(s.activities.front().location_category, "house");
    EXPECT_EQ(s.activities.front().start_time, 0);
}

TEST(ScheduleFormat, round_trip)
{
    const auto s = parse_schedule(kCommuterDay, kCategories);
    const auto again = parse_schedule(format_schedule(s), kCategories);
    EXPECT_EQ(s.activities, again.activities);
    EXPECT_EQ(format_schedule(s), kCommuterDay);
}

TEST(SchedulePrompt, carries_persona_date_and_categories)
{
    DateContext date;
    date.external_factor = "It is raining heavily today.";
    const auto p = build_schedule_prompt("A retiree.", date, kCategories);
    EXPECT_NE(p.text().find("You are: A retiree."), std::string::npos);
    EXPECT_NE(p.text().find("Tuesday, a regular working day"), std::string::npos);
    EXPECT_NE(p.text().find("It is raining heavily today."), std::string::npos);
    EXPECT_NE(p.text().find("community_centre"), std::string::npos);
}

TEST(ScheduleGenerate, stub_days_are_clean_and_deterministic)
{
    StubBackend stub;
    const Attributes worker = {{"age", "40"}, {"occupation", "full_time"}, {"car_ownership", "1"}};
    std::vector<AgentProfile> profiles;
    for (int i = 1; i <= 40; ++i) {
        profiles.push_back({i, worker, "A worker."});
    }
    const auto a = generate_schedules(profiles, {}, kCategories, stub, 5);
    const auto b = generate_schedules(profiles, {}, kCategories, stub, 5);
    ASSERT_EQ(a.size(), 40u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].activities, b[i].activities);
        EXPECT_TRUE(validate_schedule(a[i], kCategories).empty());
        EXPECT_FALSE(a[i].fallback);
        EXPECT_GE(extract_trips(a[i]).size(), 2u);
    }
}

TEST(ScheduleGenerate, bounded_regeneration_then_repair)
{
    FunctionBackend bus([](const GenerationRequest&) {
        return std::string("06:00 Up [house]\n08:00 taking the bus to the office [office]\n12:00 Lunch [canteen]");
    });
    CountingBackend counting(bus);
    const auto s = generate_schedule({9, {}, "x"}, {}, kCategories, counting, 1);
    EXPECT_EQ(counting.calls(), 4);
    EXPECT_TRUE(validate_schedule(s, kCategories).empty());
    EXPECT_EQ(s.dropped, 1);
    EXPECT_EQ(s.activities.size(), 2u);
}

TEST(ScheduleGenerate, unparseable_falls_back_to_home_day)
{
    FunctionBackend junk([](const GenerationRequest&) { return std::string("I cannot help with that."); });
    const auto s = generate_schedule({9, {}, "x"}, {}, kCategories, junk, 1);
    EXPECT_TRUE(s.fallback);
    EXPECT_TRUE(extract_trips(s).empty());
    FunctionBackend down([](const GenerationRequest&) -> std::string { throw TransportError("down"); });
    EXPECT_THROW(generate_schedule({9, {}, "x"}, {}, kCategories, down, 1), TransportError);
}

TEST(ScheduleIo, ndjson_round_trip)
{
    auto s = parse_schedule(kVolunteerDay, kCategories);
    s.agent_id = 8001;
    const auto back = schedule_from_json(schedule_to_json(s));
    EXPECT_EQ(back.agent_id, 8001);
    EXPECT_EQ(back.activities, s.activities);
}
