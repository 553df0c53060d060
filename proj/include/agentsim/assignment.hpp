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

// Static assignment by hour: car trips are loaded onto the road graph and averaged
// toward user equilibrium with the method of successive averages over BPR link costs.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "agentsim/io.hpp"
#include "agentsim/location.hpp"
#include "agentsim/mode_choice.hpp"
#include "agentsim/network.hpp"

namespace agentsim
{

inline constexpr int kHours = 24;

struct AssignmentConfig {
    double bpr_alpha = 0.15;
    double bpr_beta = 4.0;
    int max_iterations = 50;
    double gap_tolerance = 1e-3;
    /// Persons represented by one simulated agent; link loads are flows times this.
    double scale_factor = 1.0;
    /// Radius for relocating the extra replicas of a scaled trip; 0 keeps them in place.
    double replica_radius_m = 2000.0;
    int workers = 4;

    /// Throws InputError when alpha < 0, beta < 1, gap_tolerance <= 0, max_iterations < 1
    /// or scale_factor <= 0.
    void validate() const;
    static AssignmentConfig from_json(const Json& doc);
    Json to_json() const;
};

/// t0 * (1 + alpha * (v / c)^beta)
inline double bpr_travel_time(double t0, double v, double c, double alpha = 0.15, double beta = 4.0)
{
    return t0 * (1.0 + alpha * std::pow(v / c, beta));
}

/// Element-wise BPR over link vectors.
template <typename T0, typename V, typename C>
Eigen::Array<typename T0::Scalar, Eigen::Dynamic, 1> bpr_travel_times(const Eigen::ArrayBase<T0>& t0,
                                                                     const Eigen::ArrayBase<V>& v,
                                                                     const Eigen::ArrayBase<C>& c, double alpha,
                                                                     double beta)
{
    return t0 * (1.0 + alpha * (v / c).pow(beta));
}

/// One unit of car demand between two graph nodes in a departure hour.
struct CarDemand {
    std::int32_t origin = 0;
    std::int32_t destination = 0;
    int hour = 0;
    double weight = 1.0; ///< in simulated agents
    std::int64_t trip_key = 0;
};

struct AssignmentResult {
    /// Link flows in simulated agents per hour, one column per hour.
    Eigen::MatrixXd flows;
    /// Congested link times (s) at the final flows.
    Eigen::MatrixXd times;
    std::vector<double> gap_history; ///< gap before each averaging step
    double relative_gap = 0.0;
    int iterations = 0;
    bool converged = false;
    std::size_t unroutable = 0; ///< demands with no directed path; left unloaded
    /// Per demand: (path edges, share of its weight), shares summing to one.
    std::vector<std::vector<std::pair<std::vector<std::size_t>, double>>> path_shares;
};

/// (sum f t - sum of demand times shortest path cost) / the latter; 0 without demand.
double relative_gap(const Eigen::Ref<const Eigen::VectorXd>& flows, const Eigen::Ref<const Eigen::VectorXd>& times,
                    double shortest_path_cost);

/// Capacities scaled to simulated agents: c / scale_factor.
AssignmentResult msa_assign(const RoadGraph& car, const std::vector<CarDemand>& demand, const AssignmentConfig& config);

/// Demand from decided passenger trips. Each trip becomes K = ceil(scale) replicas of
/// weight 1/K; replicas after the first have both endpoints resampled within the
/// replica radius in the same category (seeded per trip).
std::vector<CarDemand> car_demand(const std::vector<DecidedTrip>& trips, const LocationCatalog& catalog,
                                  const RoadGraph& car, const AssignmentConfig& config, std::uint64_t seed);

struct StationCounts {
    std::string station_id;
    std::size_t edge = 0;
    Eigen::VectorXd counts; ///< 24 hourly vehicle counts (flows times scale factor)
};

/// station_id,edge_id. Throws InputError for unknown edges.
std::vector<std::pair<std::string, std::size_t>> read_station_map(const std::filesystem::path& path,
                                                                  const RoadGraph& car);
std::vector<StationCounts> emit_counts(const AssignmentResult& result,
                                       const std::vector<std::pair<std::string, std::size_t>>& stations,
                                       double scale_factor);
/// station_id,hour,simulated_count
std::string counts_to_csv(const std::vector<StationCounts>& counts);
/// edge_id,from,to,way_id,length_m,capacity_vph,free_flow_s,x,y (midpoint), for building station maps.
std::string car_edges_csv(const RoadGraph& car);

} // namespace agentsim
