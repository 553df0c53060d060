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

// Helpers shared by the pipeline tests and the acceptance runner.

#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

#include "agentsim/mode_choice.hpp"
#include "agentsim/pipeline.hpp"
#include "agentsim/routing.hpp"
#include "agentsim/toy_city.hpp"

namespace toy
{

inline agentsim::RunConfig make_city(const std::filesystem::path& dir, const agentsim::ToyCityOptions& options = {})
{
    agentsim::write_toy_city(dir, options);
    return agentsim::RunConfig::load(dir / "config.json");
}

/// Walk and transit share per distance band [0,1), [1,5), [5,inf) km, where the
/// distance is the walking route length the stub policy looks at.
struct BandShares {
    std::array<double, 3> walk{};
    std::array<double, 3> transit{};
    std::array<std::size_t, 3> trips{};
};

inline BandShares band_shares(const std::filesystem::path& run_dir)
{
    using agentsim::Mode;
    const auto options = agentsim::read_route_options_csv(run_dir / "route_options.csv");
    BandShares s;
    for (const auto& t : agentsim::decided_trips_from_ndjson(run_dir / "decisions.jsonl")) {
        double d_km = INFINITY;
        for (const auto& o : options.at({t.agent_id, t.leg})) {
            if (o.mode == Mode::Pedestrian) {
                d_km = o.length_m / 1000.0;
            }
        }
        const std::size_t band = d_km < 1.0 ? 0 : (d_km < 5.0 ? 1 : 2);
        ++s.trips[band];
        s.walk[band] += t.mode == Mode::Pedestrian ? 1.0 : 0.0;
        s.transit[band] += t.mode == Mode::PublicTransport ? 1.0 : 0.0;
    }
    for (std::size_t b = 0; b < 3; ++b) {
        if (s.trips[b] > 0) {
            s.walk[b] /= static_cast<double>(s.trips[b]);
            s.transit[b] /= static_cast<double>(s.trips[b]);
        }
    }
    return s;
}

} // namespace toy
