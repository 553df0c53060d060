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

// Staged pipeline over a run directory. Every stage reads and writes declared files
// only; a manifest records per-stage config hashes and file digests so unchanged
// stages are skipped and outputs from another configuration are refused.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentsim/assignment.hpp"
#include "agentsim/backend.hpp"
#include "agentsim/io.hpp"
#include "agentsim/mode_choice.hpp"
#include "agentsim/schedule.hpp"

namespace agentsim
{

struct RunConfig {
    std::filesystem::path base_dir; ///< relative paths resolve against this
    std::uint64_t seed = 42;
    std::int64_t population_total = 0;
    double sample_fraction = 1.0;
    std::optional<double> scale_factor; ///< defaults to 1 / sample_fraction
    int workers = 4;
    std::string city = "Berlin";
    std::string residents = "Berliners";
    DateContext date;
    BackendConfig backend;
    PromptVariant prompt_variant = PromptVariant::DefaultFewshotCot;
    int mode_regenerations = 1;
    int schedule_regenerations = 3;
    AssignmentConfig assignment;
    std::size_t min_group_agents = 5;

    struct Marginal {
        std::string attribute;
        std::filesystem::path path;
    };
    struct Paths {
        std::filesystem::path microdata;
        std::filesystem::path schema; ///< empty: default mobility schema
        std::vector<Marginal> marginals;
        std::filesystem::path osm;
        std::filesystem::path categories; ///< empty: default category map
        std::filesystem::path gtfs;       ///< empty: no public transport
        std::filesystem::path reference;
        std::vector<std::filesystem::path> states;
        std::filesystem::path stations;
        std::filesystem::path observed_counts;
    } paths;
    std::map<std::string, bool> stages; ///< stage -> enabled (absent = enabled)

    /// Throws SchemaError for wrongly typed fields. Range checks are left to
    /// validate_config so that they can be reported together.
    static RunConfig from_json(const Json& doc, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& path);
    Json to_json() const;

    double scale() const
    {
        return scale_factor.value_or(1.0 / sample_fraction);
    }
    std::int64_t target_size() const;
    std::filesystem::path resolve(const std::filesystem::path& p) const;
    bool enabled(const std::string& stage) const;
    /// SHA-256 of the config sections a stage depends on.
    std::string stage_hash(const std::string& stage) const;
};

/// Report-only checks: fraction bounds, required and existing files per enabled stage,
/// backend reachability for remote endpoints. Empty when valid.
std::vector<std::string> validate_config(const RunConfig& config, bool probe_backend = true);

/// synth, personas, schedules, locations, routes, modes, assign, evaluate
const std::vector<std::string>& stage_names();

struct StageRecord {
    std::string config_hash;
    std::map<std::string, std::string> inputs;  ///< file -> sha256
    std::map<std::string, std::string> outputs; ///< run-dir file -> sha256
    double seconds = 0.0;
    Json tallies = Json::object();
};

struct RunManifest {
    std::map<std::string, StageRecord> stages;

    static RunManifest load(const std::filesystem::path& run_dir);
    void save(const std::filesystem::path& run_dir) const;
    Json to_json() const;
};

struct StageOutcome {
    std::string stage;
    bool skipped = false;
    StageRecord record;
};

/// Runs one stage. Throws MissingArtifactError when an upstream artifact is absent and
/// StaleArtifactError when it was produced under a different stage configuration.
/// `force` reruns even when digests match.
StageOutcome run_stage(const std::string& stage, const RunConfig& config, const std::filesystem::path& run_dir,
                       bool force = false);

/// Every enabled stage in order.
std::vector<StageOutcome> run_all(const RunConfig& config, const std::filesystem::path& run_dir, bool force = false);

} // namespace agentsim
