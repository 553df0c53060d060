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

// Validation indicators: modal split, length and duration distributions, their RMSE
// against survey references, and daily traffic-count profile shapes.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "agentsim/census.hpp"
#include "agentsim/io.hpp"
#include "agentsim/mode_choice.hpp"

namespace agentsim
{

/// Survey categories, in this order: walk, bike, MIT (car), public transport.
inline constexpr std::array<const char*, 4> kSplitCategories = {"walk", "bike", "mit", "public_transport"};
std::size_t split_index(Mode mode);

/// Trip shares in percent. Throws EmptySetError without trips; `weights`, when given,
/// must align with `trips` and carry a positive total.
Eigen::Vector4d modal_split(const std::vector<DecidedTrip>& trips, const std::vector<double>* weights = nullptr);

enum class Dimension
{
    Length,  ///< km
    Duration ///< minutes
};
std::string to_string(Dimension dimension);

struct Histogram {
    Dimension dimension = Dimension::Length;
    std::vector<double> edges; ///< strictly increasing; the last may be +inf
    Eigen::VectorXd percent;   ///< one entry per bin

    std::size_t bins() const
    {
        return edges.size() - 1;
    }
    /// "0-0.5", "50+" and the like.
    std::string bin_label(std::size_t bin) const;
};

std::vector<double> default_edges(Dimension dimension);
/// Throws InputError unless edges are strictly increasing with at least two entries.
void check_edges(const std::vector<double>& edges);

/// Bins are [e_k, e_k+1). Values below the first edge fall into the first bin. An empty
/// trip set gives all-zero percentages.
Histogram distribution_histogram(const std::vector<DecidedTrip>& trips, Dimension dimension,
                                 const std::vector<double>& edges);
inline Histogram distribution_histogram(const std::vector<DecidedTrip>& trips, Dimension dimension)
{
    return distribution_histogram(trips, dimension, default_edges(dimension));
}

/// Root mean squared difference in percentage points. Throws InputError on length mismatch
/// or empty vectors.
double rmse(const Eigen::Ref<const Eigen::VectorXd>& simulated, const Eigen::Ref<const Eigen::VectorXd>& reference);

struct IndicatorScores {
    std::optional<double> modality;
    std::optional<double> duration;
    std::optional<double> length;
    std::vector<std::string> skipped; ///< indicators missing from the reference

    /// Arithmetic mean of the available indicators; nullopt when none is available.
    std::optional<double> aggregate() const;
};

/// Survey distributions for one region. Any indicator may be absent.
struct ReferenceDataset {
    std::string region;
    std::optional<Eigen::Vector4d> modal_split;
    std::optional<Histogram> length;
    std::optional<Histogram> duration;
    /// attribute -> group value -> split
    std::map<std::string, std::map<std::string, Eigen::Vector4d>> stratified;

    /// Throws SchemaError when a distribution is negative or misses 100 by more than
    /// 0.5 points per category (survey rounding).
    void validate() const;
    static ReferenceDataset from_json(const Json& doc);
    static ReferenceDataset load(const std::filesystem::path& path);
    Json to_json() const;
};

struct SimulatedIndicators {
    Eigen::Vector4d modal_split = Eigen::Vector4d::Zero();
    Histogram length;
    Histogram duration;
};

/// Histograms use the reference's bin edges where it has them, the defaults otherwise.
SimulatedIndicators simulate_indicators(const std::vector<DecidedTrip>& trips, const ReferenceDataset& reference);
IndicatorScores score(const SimulatedIndicators& simulated, const ReferenceDataset& reference);

struct GroupSplit {
    std::string group;
    std::size_t agents = 0;
    std::size_t trips = 0;
    Eigen::Vector4d split = Eigen::Vector4d::Zero();
    bool excluded = false; ///< fewer than the minimum agents, or no trips
};

/// Modal split per value of `attribute`, groups sorted by value. Throws InputError when
/// an agent with trips has no such attribute or is missing from `population`.
std::vector<GroupSplit> split_by_attribute(const std::vector<DecidedTrip>& trips,
                                           const std::map<std::int64_t, Attributes>& population,
                                           const std::string& attribute, std::size_t min_agents = 5);

struct ComparisonRow {
    std::string name;
    IndicatorScores scores;
    bool simulation = false;
};

/// Sorts by aggregate (ascending, missing last), ties by name.
std::vector<ComparisonRow> rank_rows(std::vector<ComparisonRow> rows);

/// Each state is scored against `target` as if it were a simulation; the simulation's
/// own scores are inserted and the table ranked. Throws InputError without states.
std::vector<ComparisonRow> interregional_compare(const IndicatorScores& simulation, const ReferenceDataset& target,
                                                 const std::vector<ReferenceDataset>& states);

struct CountProfiles {
    Eigen::VectorXd simulated; ///< unit peak
    Eigen::VectorXd observed;  ///< unit peak
    double shape_rmse = 0.0;
    bool simulated_all_zero = false;
};

/// Divides each profile by its own maximum. Throws InputError on size mismatch,
/// negative entries, or an observed profile without a positive peak.
CountProfiles normalize_counts(const Eigen::Ref<const Eigen::VectorXd>& simulated,
                               const Eigen::Ref<const Eigen::VectorXd>& observed);

/// station_id,hour,count -> 24-vectors. Missing hours are zero.
std::map<std::string, Eigen::VectorXd> read_hourly_counts(const std::filesystem::path& path,
                                                          const std::string& value_column = "count");

struct StationProfile {
    std::string station_id;
    CountProfiles profiles;
};

struct EvalReport {
    std::string region;
    SimulatedIndicators simulated;
    ReferenceDataset reference;
    IndicatorScores scores;
    std::map<std::string, std::vector<GroupSplit>> stratified;
    std::vector<ComparisonRow> interregional;
    std::vector<StationProfile> stations;
    std::size_t trips = 0;

    Json to_json() const;
    /// modal_split.csv, histograms.csv, stratified.csv, interregional.csv, count_profiles.csv
    std::map<std::string, std::string> csv_tables() const;
};

struct EvaluationInputs {
    std::vector<DecidedTrip> trips;
    std::map<std::int64_t, Attributes> population;
    ReferenceDataset reference;
    std::vector<ReferenceDataset> states;
    std::map<std::string, Eigen::VectorXd> simulated_counts;
    std::map<std::string, Eigen::VectorXd> observed_counts;
    std::vector<std::string> stratify_by = {"economic_status", "occupation"};
    std::size_t min_group_agents = 5;
};

/// Stations present in both count maps are compared; the rest are ignored.
EvalReport evaluate(const EvaluationInputs& inputs);

} // namespace agentsim
