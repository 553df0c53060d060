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
#include <string>
#include <vector>

#include "agentsim/backend.hpp"
#include "agentsim/persona.hpp"

namespace agentsim
{

/// Locations that are part of travel rather than destinations; never valid for an activity.
const std::vector<std::string>& transport_location_categories();
/// Phrases that mark an activity as a transport task (matched case-insensitively).
const std::vector<std::string>& default_transport_phrases();

struct DateContext {
    std::string description = "Tuesday, a regular working day";
    std::string day_of_week = "tuesday"; ///< lowercase English weekday, selects transit services
    std::string external_factor;           ///< empty when absent

    bool is_weekend() const;
    Json to_json() const;
    static DateContext from_json(const Json& doc);
};

struct Activity {
    int start_time = 0; ///< minutes after midnight
    std::string activity_text;
    std::string location_category;

    bool operator==(const Activity&) const = default;
};

struct DaySchedule {
    std::int64_t agent_id = 0;
    DateContext date;
    std::vector<Activity> activities;
    std::vector<std::string> warnings;
    int attempts = 1;        ///< backend requests spent
    int dropped = 0;         ///< activities removed by the repair pass
    bool fallback = false;   ///< no usable response; home-only day substituted
};

struct TripIntent {
    int sequence_index = 0;
    int from_activity = 0;
    int to_activity = 0;
    int depart_after = 0; ///< previous activity start + dwell
    int arrive_by = 0;    ///< destination activity start
    std::string from_category;
    std::string to_category;
    std::string purpose_text;

    bool operator==(const TripIntent&) const = default;
};

struct ScheduleViolation {
    enum class Kind
    {
        TransportPhrase,
        UnknownCategory,
        MissingHomeStart,
        DuplicateTime,
        Empty
    };
    Kind kind;
    int activity_index = -1;
    std::string message;
};

std::string to_string(ScheduleViolation::Kind kind);

Prompt build_schedule_prompt(const std::string& persona_text, const DateContext& date,
                             const std::vector<std::string>& categories);

/// "HH:MM" -> minutes. Throws ParseError outside 00:00..23:59.
int parse_clock(std::string_view text);
std::string format_clock(int minutes);

/// Accepts a JSON array of {time, activity, building} or the transcript line format
/// "- HH:MM: text [category]". Sorts by time (warning if reordered) and normalizes
/// categories to lowercase snake case. Throws ParseError on a bad time, an unknown or
/// transport category, or an empty schedule.
DaySchedule parse_schedule(std::string_view response, const std::vector<std::string>& categories);

/// Report-only checks; an empty result means the schedule is clean.
std::vector<ScheduleViolation> validate_schedule(const DaySchedule& schedule, const std::vector<std::string>& categories,
                                                 const std::vector<std::string>& phrases = default_transport_phrases());

/// Drops offending activities and forces a home start. Returns the number dropped.
int repair_schedule(DaySchedule& schedule, const std::vector<std::string>& categories,
                    const std::vector<std::string>& phrases = default_transport_phrases());

/// Transcript line format; parse_schedule(format_schedule(s)) reproduces s.activities.
std::string format_schedule(const DaySchedule& schedule);

inline constexpr int kDwellMinutes = 10;

/// One trip per change of location category between consecutive activities.
std::vector<TripIntent> extract_trips(const DaySchedule& schedule);

struct ScheduleOptions {
    int max_regenerations = 3;
    int workers = 4;
    std::vector<std::string> transport_phrases = default_transport_phrases();
};

DaySchedule generate_schedule(const AgentProfile& profile, const DateContext& date,
                              const std::vector<std::string>& categories, GenerationBackend& backend,
                              std::uint64_t global_seed, const ScheduleOptions& options = {});

std::vector<DaySchedule> generate_schedules(const std::vector<AgentProfile>& profiles, const DateContext& date,
                                            const std::vector<std::string>& categories, GenerationBackend& backend,
                                            std::uint64_t global_seed, const ScheduleOptions& options = {});

Json schedule_to_json(const DaySchedule& schedule);
DaySchedule schedule_from_json(const Json& doc);
std::string schedules_to_ndjson(const std::vector<DaySchedule>& schedules);
std::vector<DaySchedule> schedules_from_ndjson(const std::filesystem::path& path);

} // namespace agentsim
