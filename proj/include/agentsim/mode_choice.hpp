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
#include <optional>
#include <string>
#include <vector>

#include "agentsim/backend.hpp"
#include "agentsim/persona.hpp"
#include "agentsim/routing.hpp"

namespace agentsim
{

enum class PromptVariant
{
    DefaultFewshotCot,
    NoSystemPrompt,
    FewshotNoCot,
    ZeroshotCot
};

std::string to_string(PromptVariant variant);
/// default_fewshot_cot | no_system_prompt | fewshot_no_cot | zeroshot_cot
PromptVariant prompt_variant_from_string(std::string_view name);

/// One leg of the day with its feasible options (at least one).
struct TripChoice {
    PlannedTrip trip;
    std::vector<RouteOption> options;
};

struct ModeDecision {
    std::int64_t agent_id = 0;
    int leg = 0;
    std::int64_t route_id = 0;
    Mode mode = Mode::Pedestrian;
    std::string reasoning;
    bool repaired = false;  ///< replaced by the vehicle-consistency pass
    bool defaulted = false; ///< no usable decision from the backend; fastest option taken

    bool operator==(const ModeDecision&) const = default;
};

/// Where the agent's car and bicycle are parked. Vehicles move with the agent only
/// while a leg is travelled, so between legs a location is always a building.
struct VehicleState {
    static constexpr std::int64_t kNotOwned = -1;

    std::int64_t car = kNotOwned;
    std::int64_t bike = kNotOwned;

    /// Owned vehicles (car_ownership / bike_ownership > 0) start at home.
    static VehicleState at_home(const Attributes& attributes, std::int64_t home_building);
    bool car_at(std::int64_t building) const
    {
        return car != kNotOwned && car == building;
    }
    bool bike_at(std::int64_t building) const
    {
        return bike != kNotOwned && bike == building;
    }
};

struct ModePromptOptions {
    PromptVariant variant = PromptVariant::DefaultFewshotCot;
    std::string city = "Berlin";
    std::string residents = "Berliners";
    std::string external_factor; ///< empty when absent
};

/// Route option listing as shown to the model.
std::string format_route_options(const std::vector<TripChoice>& trips);

/// Throws InputError when a trip has no options.
Prompt build_mode_prompt(const AgentProfile& profile, const std::vector<TripChoice>& trips,
                         const ModePromptOptions& options = {});

/// "public transport" -> public_transport, "walk" -> pedestrian, "car" -> passenger, ...
/// nullopt for words outside the synonym table.
std::optional<Mode> normalize_mode(std::string_view text);

/// Decisions aligned with `trips`; entries are nullopt for trips the response does not
/// cover. Throws ParseError when nothing decodes, a route_id was not offered, or the
/// mode is not among that route's options.
std::vector<std::optional<ModeDecision>> parse_decision(std::string_view response,
                                                        const std::vector<TripChoice>& trips);

/// Index of the fastest option (ties: first in vocabulary order).
std::size_t fastest_option(const std::vector<RouteOption>& options);

struct ConsistencyReport {
    std::vector<ModeDecision> decisions;
    std::vector<std::string> violations; ///< one line per repaired decision
    std::vector<int> dropped_legs;       ///< legs with no feasible option at all
};

/// Forward pass over the day: a passenger or bicycle decision whose vehicle is not at
/// the trip origin (or not owned) becomes the fastest feasible option. Legs with no
/// feasible option are dropped.
ConsistencyReport enforce_vehicle_consistency(const std::vector<ModeDecision>& decisions,
                                              const std::vector<TripChoice>& trips, VehicleState state);

/// Independent replay of vehicle movements. Returns one message per violation.
std::vector<std::string> replay_vehicle_violations(const std::vector<ModeDecision>& decisions,
                                                   const std::vector<TripChoice>& trips,
                                                   const Attributes& attributes, std::int64_t home_building);

struct ModeChoiceOptions {
    ModePromptOptions prompt;
    int max_regenerations = 1;
    int workers = 4;
};

struct AgentDay {
    AgentProfile profile;
    std::int64_t home_building = 0;
    std::vector<TripChoice> trips;
};

struct AgentDecisions {
    std::int64_t agent_id = 0;
    std::vector<ModeDecision> decisions;
    std::vector<std::string> violations;
    std::vector<int> dropped_legs;
    int attempts = 0;
};

/// Requests decisions (one regeneration on a parse failure or missing legs), defaults
/// what is still missing to the fastest option and applies the consistency pass.
AgentDecisions decide_modes(const AgentDay& day, GenerationBackend& backend, std::uint64_t global_seed,
                            const ModeChoiceOptions& options = {});

std::vector<AgentDecisions> decide_modes_all(const std::vector<AgentDay>& days, GenerationBackend& backend,
                                             std::uint64_t global_seed, const ModeChoiceOptions& options = {});

/// A decided leg with the chosen option's figures, as persisted between stages.
struct DecidedTrip {
    std::int64_t agent_id = 0;
    int leg = 0;
    std::int64_t route_id = 0;
    Mode mode = Mode::Pedestrian;
    std::string reasoning;
    bool repaired = false;
    bool defaulted = false;
    double duration_s = 0.0;
    double length_m = 0.0;
    int depart_s = 0; ///< max(depart_after, arrive_by - duration)
    std::int64_t from_building = 0;
    std::int64_t to_building = 0;

    bool operator==(const DecidedTrip&) const = default;
};

DecidedTrip make_decided_trip(const ModeDecision& decision, const TripChoice& trip);
Json decided_trip_to_json(const DecidedTrip& trip);
DecidedTrip decided_trip_from_json(const Json& doc);
std::string decided_trips_to_ndjson(const std::vector<DecidedTrip>& trips);
std::vector<DecidedTrip> decided_trips_from_ndjson(const std::filesystem::path& path);

/// Probability that the stub drives a >2 km leg when the car is at hand.
double stub_car_probability(std::string_view economic_status);

} // namespace agentsim
