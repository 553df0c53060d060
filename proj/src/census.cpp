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
#include "agentsim/census.hpp"
#include "agentsim/random.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace agentsim
{

AttributeSchema::AttributeSchema(std::vector<AttributeSpec> specs)
    : m_specs(std::move(specs))
{
    std::set<std::string> seen;
    for (const auto& s : m_specs) {
        if (s.name.empty() || s.name == "weight" || s.name == "record_id") {
            throw SchemaError("invalid attribute name '" + s.name + "'");
        }
        if (!seen.insert(s.name).second) {
            throw SchemaError("duplicate attribute '" + s.name + "'");
        }
        if (s.kind == AttributeSpec::Kind::Categorical && s.categories.empty()) {
            throw SchemaError("categorical attribute '" + s.name + "' declares no categories");
        }
    }
}

AttributeSchema AttributeSchema::default_mobility()
{
    using K = AttributeSpec::Kind;
    return AttributeSchema({
        {"age", K::Numeric, {}, 0, 120, true},
        {"sex", K::Categorical, {"male", "female", "diverse"}, -INFINITY, INFINITY, true},
        {"occupation",
         K::Categorical,
         {"full_time", "part_time", "trainee", "student", "pupil", "child", "homemaker", "unemployed", "retiree",
          "other"},
         -INFINITY,
         INFINITY,
         true},
        {"economic_status", K::Categorical, {"very_low", "low", "medium", "high", "very_high"}, -INFINITY, INFINITY,
         true},
        {"household_size", K::Numeric, {}, 1, 20, true},
        {"car_ownership", K::Numeric, {}, 0, 10, true},
        {"bike_ownership", K::Numeric, {}, 0, 20, true},
        {"income_band",
         K::Categorical,
         {"under_900", "900_1499", "1500_1999", "2000_2999", "3000_3999", "4000_4999", "5000_plus"},
         -INFINITY,
         INFINITY,
         false},
    });
}

AttributeSchema AttributeSchema::from_json(const Json& doc)
{
    if (!doc.contains("attributes") || !doc["attributes"].is_array()) {
        throw SchemaError("schema document needs an 'attributes' array");
    }
    std::vector<AttributeSpec> specs;
    for (const auto& a : doc["attributes"]) {
        AttributeSpec s;
        s.name = a.at("name").get<std::string>();
        const auto type = a.value("type", std::string("categorical"));
        if (type == "numeric") {
            s.kind = AttributeSpec::Kind::Numeric;
            s.min_value = a.value("min", -INFINITY);
            s.max_value = a.value("max", INFINITY);
        }
        else if (type == "categorical") {
            s.kind = AttributeSpec::Kind::Categorical;
            s.categories = a.at("values").get<std::vector<std::string>>();
        }
        else {
            throw SchemaError("attribute '" + s.name + "': unknown type '" + type + "'");
        }
        s.required = a.value("required", true);
        specs.push_back(std::move(s));
    }
    return AttributeSchema(std::move(specs));
}

AttributeSchema AttributeSchema::load(const std::filesystem::path& path)
{
    try {
        return from_json(Json::parse(read_text_file(path)));
    }
    catch (const Json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

const AttributeSpec* AttributeSchema::find(std::string_view name) const
{
    for (const auto& s : m_specs) {
        if (s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

void AttributeSchema::validate(const Attributes& attributes) const
{
    for (const auto& [key, value] : attributes) {
        const AttributeSpec* spec = find(key);
        if (!spec) {
            throw SchemaError("unknown attribute '" + key + "'");
        }
        if (value.empty()) {
            if (spec->required) {
                throw SchemaError("required attribute '" + key + "' is empty");
            }
            continue;
        }
        if (spec->kind == AttributeSpec::Kind::Numeric) {
            const auto v = parse_double(value);
            if (!v || !std::isfinite(*v)) {
                throw SchemaError("attribute '" + key + "': '" + value + "' is not numeric");
            }
            if (*v < spec->min_value || *v > spec->max_value) {
                throw SchemaError("attribute '" + key + "': " + value + " out of range");
            }
        }
        else if (std::find(spec->categories.begin(), spec->categories.end(), value) == spec->categories.end()) {
            throw SchemaError("attribute '" + key + "': undeclared category '" + value + "'");
        }
    }
    for (const auto& s : m_specs) {
        if (s.required && !attributes.contains(s.name)) {
            throw SchemaError("required attribute '" + s.name + "' missing");
        }
    }
}

void MarginalTable::validate() const
{
    std::set<std::string> seen;
    for (const auto& c : categories) {
        if (!seen.insert(c).second) {
            throw InputError("marginal '" + attribute + "': duplicate category '" + c + "'");
        }
    }
    if (static_cast<std::size_t>(totals.size()) != categories.size()) {
        throw InputError("marginal '" + attribute + "': categories and totals differ in length");
    }
    for (Eigen::Index i = 0; i < totals.size(); ++i) {
        if (!std::isfinite(totals[i]) || totals[i] < 0) {
            throw InputError("marginal '" + attribute + "': totals must be finite and nonnegative");
        }
    }
}

namespace
{

SurveyRecord make_record(std::string id, Attributes attrs, std::optional<double> weight,
                         const AttributeSchema& schema, const std::string& where)
{
    if (!weight || !std::isfinite(*weight)) {
        throw InputError(where + ": missing or non-numeric weight");
    }
    if (*weight <= 0) {
        throw InputError(where + ": weight must be positive");
    }
    try {
        schema.validate(attrs);
    }
    catch (const SchemaError& e) {
        throw SchemaError(where + ": " + e.what());
    }
    return SurveyRecord{std::move(id), std::move(attrs), *weight};
}

} // namespace

std::vector<SurveyRecord> read_microdata_csv(const std::filesystem::path& path, const AttributeSchema& schema)
{
    const CsvTable table = read_csv(path);
    const std::size_t wcol = table.column("weight");
    std::optional<std::size_t> idcol = table.find_column("record_id");
    if (!idcol) {
        idcol = table.find_column("id");
    }

    std::vector<SurveyRecord> records;
    records.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        Attributes attrs;
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (c == wcol || (idcol && c == *idcol)) {
                continue;
            }
            const std::string value = trim(row[c]);
            const AttributeSpec* spec = schema.find(table.header[c]);
            if (value.empty() && spec && !spec->required) {
                continue;
            }
            attrs[table.header[c]] = value;
        }
        std::string id = idcol ? trim(row[*idcol]) : std::to_string(r + 1);
        records.push_back(make_record(std::move(id), std::move(attrs), parse_double(row[wcol]), schema,
                                      path.string() + ":" + std::to_string(r + 2)));
    }
    return records;
}

std::vector<SurveyRecord> read_microdata_ndjson(const std::filesystem::path& path, const AttributeSchema& schema)
{
    std::vector<SurveyRecord> records;
    std::size_t line = 0;
    for (const auto& obj : read_ndjson(path)) {
        ++line;
        const std::string where = path.string() + ":" + std::to_string(line);
        if (!obj.is_object()) {
            throw ParseError(where + ": expected an object");
        }
        Attributes attrs;
        std::optional<double> weight;
        std::string id = std::to_string(line);
        const Json& source = obj.contains("attributes") ? obj["attributes"] : obj;
        for (auto it = source.begin(); it != source.end(); ++it) {
            if (it.key() == "weight" || it.key() == "record_id" || it.key() == "id") {
                continue;
            }
            if (it.value().is_null()) {
                continue;
            }
            attrs[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
        }
        if (obj.contains("weight") && obj["weight"].is_number()) {
            weight = obj["weight"].get<double>();
        }
        for (const char* key : {"record_id", "id"}) {
            if (obj.contains(key)) {
                id = obj[key].is_string() ? obj[key].get<std::string>() : obj[key].dump();
                break;
            }
        }
        records.push_back(make_record(std::move(id), std::move(attrs), weight, schema, where));
    }
    return records;
}

std::vector<SurveyRecord> read_microdata(const std::filesystem::path& path, const AttributeSchema& schema)
{
    const auto ext = to_lower(path.extension().string());
    if (ext == ".csv") {
        return read_microdata_csv(path, schema);
    }
    return read_microdata_ndjson(path, schema);
}

MarginalTable read_marginals_csv(const std::filesystem::path& path, std::string attribute)
{
    const CsvTable table = read_csv(path);
    const std::size_t ccol = table.column("category");
    const std::size_t tcol = table.column("total");
    MarginalTable m;
    m.attribute = std::move(attribute);
    m.totals.resize(static_cast<Eigen::Index>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        m.categories.push_back(trim(table.rows[r][ccol]));
        const auto v = parse_double(table.rows[r][tcol]);
        if (!v) {
            throw ParseError(path.string() + ": non-numeric total in row " + std::to_string(r + 2));
        }
        m.totals[static_cast<Eigen::Index>(r)] = *v;
    }
    m.validate();
    return m;
}

Eigen::VectorXd scale_weights(std::span<const SurveyRecord> records, std::int64_t target_size)
{
    if (records.empty()) {
        throw InputError("scale_weights: empty record list");
    }
    if (target_size < 1) {
        throw InputError("scale_weights: target size must be at least 1");
    }
    Eigen::VectorXd w(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!(records[i].weight > 0) || !std::isfinite(records[i].weight)) {
            throw InputError("scale_weights: record '" + records[i].record_id + "' has nonpositive weight");
        }
        w[static_cast<Eigen::Index>(i)] = records[i].weight;
    }
    return w * (static_cast<double>(target_size) / w.sum());
}

std::vector<std::int64_t> trs_sample(const Eigen::VectorXd& scaled_weights, std::uint64_t seed)
{
    const Eigen::Index n = scaled_weights.size();
    if (n == 0) {
        throw InputError("trs_sample: empty weight vector");
    }
    if ((scaled_weights.array() < 0).any() || !scaled_weights.allFinite()) {
        throw InputError("trs_sample: weights must be finite and nonnegative");
    }
    const double total = scaled_weights.sum();
    const auto target = static_cast<std::int64_t>(std::llround(total));
    if (std::abs(total - static_cast<double>(target)) > 1e-6 * std::max(1.0, total)) {
        throw InputError("trs_sample: scaled weights must sum to an integer population size");
    }

    // Truncate + replicate. The epsilon keeps 2.9999999999 from truncating to 2.
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n));
    Eigen::VectorXd frac(n);
    std::int64_t floor_sum = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = scaled_weights[i];
        auto whole = static_cast<std::int64_t>(std::floor(w + 1e-9));
        double f = w - static_cast<double>(whole);
        if (f < 1e-12) {
            f = 0.0;
        }
        counts[static_cast<std::size_t>(i)] = whole;
        frac[i] = f;
        floor_sum += whole;
    }
    const std::int64_t remainder = target - floor_sum;
    if (remainder < 0) {
        throw DegenerateWeightsError("trs_sample: integer parts exceed the target size");
    }
    if (remainder == 0) {
        return counts;
    }
    const auto positive = static_cast<std::int64_t>((frac.array() > 0).count());
    if (remainder > positive) {
        throw DegenerateWeightsError("trs_sample: remainder of " + std::to_string(remainder) + " exceeds the " +
                                     std::to_string(positive) + " records with a fractional part");
    }

    // Systematic sampling: R equally spaced pointers over the cumulated fractional parts.
    const double frac_total = frac.sum();
    const double step = frac_total / static_cast<double>(remainder);
    Rng rng(seed);
    double pointer = rng.uniform() * step;
    std::int64_t drawn = 0;
    double cum = 0.0;
    std::vector<bool> selected(static_cast<std::size_t>(n), false);
    std::int64_t overflow = 0;
    for (Eigen::Index i = 0; i < n && drawn < remainder; ++i) {
        cum += frac[i];
        int hits = 0;
        while (drawn < remainder && pointer < cum) {
            ++hits;
            ++drawn;
            pointer += step;
        }
        if (hits > 0) {
            selected[static_cast<std::size_t>(i)] = true;
            overflow += hits - 1;
        }
    }
    // rounding can leave the last pointer just past the end
    overflow += remainder - drawn;
    // Pointer spacing >= every fractional part except in floating-point edge cases;
    // hand any double hit to the next unselected unit so the draw stays without replacement.
    for (Eigen::Index i = 0; i < n && overflow > 0; ++i) {
        if (!selected[static_cast<std::size_t>(i)] && frac[i] > 0) {
            selected[static_cast<std::size_t>(i)] = true;
            --overflow;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (selected[static_cast<std::size_t>(i)]) {
            ++counts[static_cast<std::size_t>(i)];
        }
    }
    return counts;
}

IpfResult ipf_fit(const Eigen::MatrixXd& seed_table, const MarginalTable& row_marginals,
                  const MarginalTable& col_marginals, const IpfOptions& options)
{
    row_marginals.validate();
    col_marginals.validate();
    const Eigen::VectorXd& rows = row_marginals.totals;
    const Eigen::VectorXd& cols = col_marginals.totals;
    if (seed_table.rows() != rows.size() || seed_table.cols() != cols.size()) {
        throw InputError("ipf_fit: seed table dimensions do not match the marginals");
    }
    if (!seed_table.allFinite() || (seed_table.array() < 0).any()) {
        throw InputError("ipf_fit: seed table must be finite and nonnegative");
    }
    const double rt = rows.sum();
    const double ct = cols.sum();
    if (std::abs(rt - ct) > 1e-6 * std::max({1.0, rt, ct})) {
        throw InputError("ipf_fit: row and column marginal totals differ");
    }
    const Eigen::VectorXd row_mass = seed_table.rowwise().sum();
    const Eigen::VectorXd col_mass = seed_table.colwise().sum().transpose();
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
        if (rows[i] > 0 && row_mass[i] <= 0) {
            throw InputError("ipf_fit: row '" + row_marginals.categories[static_cast<std::size_t>(i)] +
                             "' has a positive marginal but no seed mass");
        }
    }
    for (Eigen::Index j = 0; j < cols.size(); ++j) {
        if (cols[j] > 0 && col_mass[j] <= 0) {
            throw InputError("ipf_fit: column '" + col_marginals.categories[static_cast<std::size_t>(j)] +
                             "' has a positive marginal but no seed mass");
        }
    }

    IpfResult result;
    result.table = seed_table;
    Eigen::MatrixXd& t = result.table;
    result.max_deviation = marginal_deviation(t, rows, cols);
    while (result.max_deviation >= options.tol) {
        if (result.iterations >= options.max_iters) {
            throw ConvergenceError("ipf_fit: no convergence after " + std::to_string(options.max_iters) +
                                       " iterations",
                                   result.max_deviation);
        }
        const Eigen::VectorXd rs = t.rowwise().sum();
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
            t.row(i) *= rs[i] > 0 ? rows[i] / rs[i] : 0.0;
        }
        const Eigen::VectorXd cs = t.colwise().sum().transpose();
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
            t.col(j) *= cs[j] > 0 ? cols[j] / cs[j] : 0.0;
        }
        ++result.iterations;
        result.max_deviation = marginal_deviation(t, rows, cols);
    }
    return result;
}

SyntheticPopulation expand_population(std::span<const SurveyRecord> records, std::span<const std::int64_t> counts,
                                      std::uint64_t seed)
{
    if (records.size() != counts.size()) {
        throw InputError("expand_population: one count per record required");
    }
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return natural_less(records[a].record_id, records[b].record_id);
    });

    SyntheticPopulation pop;
    pop.seed = seed;
    std::int64_t next_id = 0;
    for (std::size_t idx : order) {
        if (counts[idx] < 0) {
            throw InputError("expand_population: negative count");
        }
        for (std::int64_t r = 0; r < counts[idx]; ++r) {
            pop.agents.push_back(Agent{next_id++, records[idx].record_id, records[idx].attributes});
        }
    }
    pop.target_size = next_id;
    return pop;
}

Json attributes_to_json(const Attributes& attributes)
{
    Json obj = Json::object();
    for (const auto& [k, v] : attributes) {
        obj[k] = v;
    }
    return obj;
}

Attributes attributes_from_json(const Json& obj)
{
    Attributes attrs;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        attrs[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
    }
    return attrs;
}

std::string population_to_ndjson(const SyntheticPopulation& population)
{
    std::string out;
    for (const auto& a : population.agents) {
        Json line;
        line["agent_id"] = a.agent_id;
        line["source_record_id"] = a.source_record_id;
        line["attributes"] = attributes_to_json(a.attributes);
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

SyntheticPopulation population_from_ndjson(const std::filesystem::path& path)
{
    SyntheticPopulation pop;
    for (const auto& line : read_ndjson(path)) {
        pop.agents.push_back(Agent{line.at("agent_id").get<std::int64_t>(),
                                   line.at("source_record_id").get<std::string>(),
                                   attributes_from_json(line.at("attributes"))});
    }
    pop.target_size = static_cast<std::int64_t>(pop.agents.size());
    return pop;
}

} // namespace agentsim
