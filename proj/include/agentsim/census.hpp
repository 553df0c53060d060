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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "agentsim/errors.hpp"
#include "agentsim/io.hpp"

namespace agentsim
{

/// Attribute name -> value. Numeric values are kept in their textual form so that
/// rendering and hashing are exact.
using Attributes = std::map<std::string, std::string>;

struct AttributeSpec {
    enum class Kind
    {
        Categorical,
        Numeric
    };

    std::string name;
    Kind kind = Kind::Categorical;
    std::vector<std::string> categories; // Categorical only
    double min_value = -INFINITY;        // Numeric only
    double max_value = INFINITY;
    bool required = true;
};

/// Declarative attribute schema. Order matters: prompts render attributes in schema order.
class AttributeSchema
{
public:
    AttributeSchema() = default;
    explicit AttributeSchema(std::vector<AttributeSpec> specs);

    /// Mobility-survey attribute list (age, sex, occupation, economic status, household
    /// size, car and bike ownership, income band).
    static AttributeSchema default_mobility();
    static AttributeSchema from_json(const Json& doc);
    static AttributeSchema load(const std::filesystem::path& path);

    const std::vector<AttributeSpec>& specs() const noexcept
    {
        return m_specs;
    }
    const AttributeSpec* find(std::string_view name) const;

    /// Throws SchemaError on unknown keys, missing required keys, undeclared categories
    /// or non-numeric / out-of-range numeric values. Empty optional values are allowed.
    void validate(const Attributes& attributes) const;

private:
    std::vector<AttributeSpec> m_specs;
};

struct SurveyRecord {
    std::string record_id;
    Attributes attributes;
    double weight = 1.0;
};

struct Agent {
    std::int64_t agent_id = 0;
    std::string source_record_id;
    Attributes attributes;

    bool operator==(const Agent&) const = default;
};

struct SyntheticPopulation {
    std::vector<Agent> agents;
    std::int64_t target_size = 0;
    std::uint64_t seed = 0;

    bool operator==(const SyntheticPopulation&) const = default;
};

struct MarginalTable {
    std::string attribute;
    std::vector<std::string> categories;
    Eigen::VectorXd totals;

    /// Throws InputError on duplicate categories, negative or non-finite totals.
    void validate() const;
};

/// CSV microdata: one column per attribute plus `weight`; `record_id` (or `id`) is
/// optional and defaults to the 1-based row number.
std::vector<SurveyRecord> read_microdata_csv(const std::filesystem::path& path, const AttributeSchema& schema);
/// Newline-delimited JSON microdata, either flat or with a nested `attributes` object.
std::vector<SurveyRecord> read_microdata_ndjson(const std::filesystem::path& path, const AttributeSchema& schema);
/// Dispatches on extension (.csv vs .jsonl/.ndjson/.json).
std::vector<SurveyRecord> read_microdata(const std::filesystem::path& path, const AttributeSchema& schema);

/// CSV with header `category,total`.
MarginalTable read_marginals_csv(const std::filesystem::path& path, std::string attribute);

/// w_i* = w_i N / sum_j w_j.
Eigen::VectorXd scale_weights(std::span<const SurveyRecord> records, std::int64_t target_size);

/// Truncate, replicate, sample. Integer parts are replicated; the remainder
/// R = N - sum floor(w_i*) is drawn without replacement by systematic sampling over
/// the fractional parts, so P(unit i gets the extra replica) = frac(w_i*).
std::vector<std::int64_t> trs_sample(const Eigen::VectorXd& scaled_weights, std::uint64_t seed);

struct IpfOptions {
    double tol = 1e-8;
    int max_iters = 1000;
};

struct IpfResult {
    Eigen::MatrixXd table;
    int iterations = 0;
    double max_deviation = 0.0;
};

/// Max absolute deviation of row/column sums from the targets.
template <typename Derived>
double marginal_deviation(const Eigen::MatrixBase<Derived>& table, const Eigen::VectorXd& rows,
                          const Eigen::VectorXd& cols)
{
    const double dr = (table.rowwise().sum() - rows).cwiseAbs().maxCoeff();
    const double dc = (table.colwise().sum().transpose() - cols).cwiseAbs().maxCoeff();
    return std::max(dr, dc);
}

/// Iterative proportional fitting of a nonnegative seed table to row/column marginals.
/// Zero cells of the seed stay zero. Throws InputError for inconsistent inputs and
/// ConvergenceError (carrying the last deviation) after max_iters.
IpfResult ipf_fit(const Eigen::MatrixXd& seed_table, const MarginalTable& row_marginals,
                  const MarginalTable& col_marginals, const IpfOptions& options = {});

/// Agents in record_id order then replica order; ids dense from 0.
SyntheticPopulation expand_population(std::span<const SurveyRecord> records, std::span<const std::int64_t> counts,
                                      std::uint64_t seed);

/// One agent per line: {"agent_id", "source_record_id", "attributes"}.
std::string population_to_ndjson(const SyntheticPopulation& population);
SyntheticPopulation population_from_ndjson(const std::filesystem::path& path);

Json attributes_to_json(const Attributes& attributes);
Attributes attributes_from_json(const Json& obj);

} // namespace agentsim
