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

// A small synthetic city with every input the pipeline reads: street grid and
// buildings (OSM XML), a dense bus grid (GTFS), weighted microdata with marginals,
// count stations, observed counts and survey-style references. All numbers are
// invented; the city exists for offline end-to-end runs.

#include <cstdint>
#include <filesystem>

#include "agentsim/io.hpp"

namespace agentsim
{

struct ToyCityOptions {
    std::uint64_t seed = 7;
    double size_m = 6000.0;
    double street_spacing_m = 500.0;
    double line_spacing_m = 750.0;  ///< distance between parallel bus lines
    double stop_spacing_m = 500.0;
    int headway_s = 600;
    int records = 80;               ///< microdata rows
    int population_total = 5000;    ///< residents the marginals describe
    double sample_fraction = 0.1;   ///< 500 simulated agents by default
};

/// Writes city.osm, transit.zip, microdata.csv, marginals_*.csv, stations.csv,
/// observed_counts.csv, reference.json, states/*.json and config.json into `dir`.
/// Output is a pure function of the options. Returns the config document.
Json write_toy_city(const std::filesystem::path& dir, const ToyCityOptions& options = {});

} // namespace agentsim
