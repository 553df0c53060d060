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
#include "agentsim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "agentsim/errors.hpp"

namespace agentsim
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v, const char* spec = "%.4f")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Json opt_json(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

Json split_json(const Eigen::Vector4d& s)
{
    Json o = Json::object();
    for (std::size_t k = 0; k < kSplitCategories.size(); ++k) {
        o[kSplitCategories[k]] = s(static_cast<Eigen::Index>(k));
    }
    return o;
}

Eigen::Vector4d split_from_json(const Json& o, const std::string& where)
{
    if (!o.is_object()) {
        throw SchemaError(where + ": modal split must be an object");
    }
    Eigen::Vector4d s;
    for (std::size_t k = 0; k < kSplitCategories.size(); ++k) {
        if (!o.contains(kSplitCategories[k]) || !o[kSplitCategories[k]].is_number()) {
            throw SchemaError(where + ": modal split lacks '" + kSplitCategories[k] + "'");
        }
        s(static_cast<Eigen::Index>(k)) = o[kSplitCategories[k]].get<double>();
    }
    return s;
}

Json edges_json(const std::vector<double>& edges)
{
    Json a = Json::array();
    for (double e : edges) {
        a.push_back(std::isinf(e) ? Json("inf") : Json(e));
    }
    return a;
}

Json histogram_json(const Histogram& h)
{
    Json p = Json::array();
    for (Eigen::Index i = 0; i < h.percent.size(); ++i) {
        p.push_back(h.percent(i));
    }
    return {{"unit", h.dimension == Dimension::Length ? "km" : "min"}, {"edges", edges_json(h.edges)}, {"percent", p}};
}

Histogram histogram_from_json(const Json& o, Dimension dim, const std::string& where)
{
    Histogram h;
    h.dimension = dim;
    if (!o.is_object() || !o.contains("edges") || !o.contains("percent")) {
        throw SchemaError(where + ": histogram needs 'edges' and 'percent'");
    }
    for (const auto& e : o["edges"]) {
        if (e.is_null() || (e.is_string() && e.get<std::string>() == "inf")) {
            h.edges.push_back(kInf);
        }
        else if (e.is_number()) {
            h.edges.push_back(e.get<double>());
        }
        else {
            throw SchemaError(where + ": histogram edge must be a number, \"inf\" or null");
        }
    }
    try {
        check_edges(h.edges);
    }
    catch (const InputError& e) {
        throw SchemaError(where + ": " + e.what());
    }
    const auto& p = o["percent"];
    if (!p.is_array() || p.size() != h.bins()) {
        throw SchemaError(where + ": histogram needs one percentage per bin");
    }
    h.percent.resize(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        h.percent(static_cast<Eigen::Index>(i)) = p[i].get<double>();
    }
    return h;
}

void check_distribution(const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& what)
{
    if ((v.array() < 0).any()) {
        throw SchemaError(what + " has negative percentages");
    }
    const double tol = 0.5 * static_cast<double>(v.size());
    if (std::abs(v.sum() - 100.0) > tol) {
        throw SchemaError(what + " sums to " + fmt(v.sum(), "%.2f") + ", not 100");
    }
}

} // namespace

std::size_t split_index(Mode mode)
{
    switch (mode) {
    case Mode::Pedestrian:
        return 0;
    case Mode::Bicycle:
        return 1;
    case Mode::Passenger:
        return 2;
    case Mode::PublicTransport:
        return 3;
    }
    return 0;
}

Eigen::Vector4d modal_split(const std::vector<DecidedTrip>& trips, const std::vector<double>* weights)
{
    if (trips.empty()) {
        throw EmptySetError("modal split of an empty trip set");
    }
    if (weights && weights->size() != trips.size()) {
        throw InputError("trip weights do not align with trips");
    }
    Eigen::Vector4d tally = Eigen::Vector4d::Zero();
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const double w = weights ? (*weights)[i] : 1.0;
        if (!(w >= 0)) {
            throw InputError("negative trip weight");
        }
        tally(static_cast<Eigen::Index>(split_index(trips[i].mode))) += w;
    }
    const double total = tally.sum();
    if (!(total > 0)) {
        throw EmptySetError("trip weights sum to zero");
    }
    return 100.0 * tally / total;
}

std::string to_string(Dimension dimension)
{
    return dimension == Dimension::Length ? "length" : "duration";
}

std::string Histogram::bin_label(std::size_t bin) const
{
    const double lo = edges[bin];
    const double hi = edges[bin + 1];
    if (std::isinf(hi)) {
        return fmt(lo, "%g") + "+";
    }
    return fmt(lo, "%g") + "-" + fmt(hi, "%g");
}

std::vector<double> default_edges(Dimension dimension)
{
    if (dimension == Dimension::Length) {
        return {0, 0.5, 1, 2, 5, 10, 20, 50, kInf};
    }
    return {0, 5, 10, 15, 20, 30, 45, 60, kInf};
}

void check_edges(const std::vector<double>& edges)
{
    if (edges.size() < 2) {
        throw InputError("a histogram needs at least two edges");
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (std::isnan(edges[i]) || (i + 1 < edges.size() && !(edges[i] < edges[i + 1]))) {
            throw InputError("histogram edges must be strictly increasing");
        }
    }
}

Histogram distribution_histogram(const std::vector<DecidedTrip>& trips, Dimension dimension,
                                 const std::vector<double>& edges)
{
    check_edges(edges);
    Histogram h;
    h.dimension = dimension;
    h.edges = edges;
    h.percent = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.bins()));
    if (trips.empty()) {
        return h;
    }
    for (const auto& t : trips) {
        const double v = dimension == Dimension::Length ? t.length_m / 1000.0 : t.duration_s / 60.0;
        const auto it = std::upper_bound(edges.begin(), edges.end(), v);
        const auto bin = std::clamp<std::ptrdiff_t>(it - edges.begin() - 1, 0,
                                                    static_cast<std::ptrdiff_t>(h.bins()) - 1);
        h.percent(bin) += 1.0;
    }
    h.percent *= 100.0 / static_cast<double>(trips.size());
    return h;
}

double rmse(const Eigen::Ref<const Eigen::VectorXd>& simulated, const Eigen::Ref<const Eigen::VectorXd>& reference)
{
    if (simulated.size() != reference.size()) {
        throw InputError("rmse of vectors with different lengths");
    }
    if (simulated.size() == 0) {
        throw InputError("rmse of empty vectors");
    }
    return std::sqrt((simulated - reference).squaredNorm() / static_cast<double>(simulated.size()));
}

std::optional<double> IndicatorScores::aggregate() const
{
    double sum = 0;
    int n = 0;
    for (const auto& v : {modality, duration, length}) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) {
        return std::nullopt;
    }
    return sum / n;
}

void ReferenceDataset::validate() const
{
    if (modal_split) {
        check_distribution(*modal_split, region + " modal split");
    }
    for (const auto* h : {length ? &*length : nullptr, duration ? &*duration : nullptr}) {
        if (h) {
            check_edges(h->edges);
            check_distribution(h->percent, region + " " + to_string(h->dimension) + " histogram");
        }
    }
    for (const auto& [attr, groups] : stratified) {
        for (const auto& [g, s] : groups) {
            check_distribution(s, region + " " + attr + "=" + g + " split");
        }
    }
}

ReferenceDataset ReferenceDataset::from_json(const Json& doc)
{
    if (!doc.is_object()) {
        throw SchemaError("reference dataset must be a JSON object");
    }
    ReferenceDataset r;
    r.region = doc.value("region", std::string());
    if (r.region.empty()) {
        throw SchemaError("reference dataset lacks 'region'");
    }
    if (doc.contains("modal_split")) {
        r.modal_split = split_from_json(doc["modal_split"], r.region);
    }
    if (doc.contains("length_histogram")) {
        r.length = histogram_from_json(doc["length_histogram"], Dimension::Length, r.region);
    }
    if (doc.contains("duration_histogram")) {
        r.duration = histogram_from_json(doc["duration_histogram"], Dimension::Duration, r.region);
    }
    if (doc.contains("stratified")) {
        for (const auto& [attr, groups] : doc["stratified"].items()) {
            for (const auto& [g, s] : groups.items()) {
                r.stratified[attr][g] = split_from_json(s, r.region + " " + attr);
            }
        }
    }
    r.validate();
    return r;
}

ReferenceDataset ReferenceDataset::load(const std::filesystem::path& path)
{
    try {
        return from_json(Json::parse(read_text_file(path), nullptr, true, true));
    }
    catch (const Json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

Json ReferenceDataset::to_json() const
{
    Json o = {{"region", region}};
    if (modal_split) {
        o["modal_split"] = split_json(*modal_split);
    }
    if (length) {
        o["length_histogram"] = histogram_json(*length);
    }
    if (duration) {
        o["duration_histogram"] = histogram_json(*duration);
    }
    if (!stratified.empty()) {
        Json s = Json::object();
        for (const auto& [attr, groups] : stratified) {
            for (const auto& [g, split] : groups) {
                s[attr][g] = split_json(split);
            }
        }
        o["stratified"] = s;
    }
    return o;
}

SimulatedIndicators simulate_indicators(const std::vector<DecidedTrip>& trips, const ReferenceDataset& reference)
{
    SimulatedIndicators s;
    s.modal_split = modal_split(trips);
    s.length = distribution_histogram(trips, Dimension::Length,
                                      reference.length ? reference.length->edges : default_edges(Dimension::Length));
    s.duration = distribution_histogram(
        trips, Dimension::Duration, reference.duration ? reference.duration->edges : default_edges(Dimension::Duration));
    return s;
}

IndicatorScores score(const SimulatedIndicators& sim, const ReferenceDataset& ref)
{
    IndicatorScores out;
    if (ref.modal_split) {
        out.modality = rmse(sim.modal_split, *ref.modal_split);
    }
    else {
        out.skipped.push_back("modality");
    }
    auto hist = [&](const Histogram& s, const std::optional<Histogram>& r, std::optional<double>& slot,
                    const char* name) {
        if (!r) {
            out.skipped.push_back(name);
            return;
        }
        if (s.edges != r->edges) {
            throw InputError(std::string(name) + " histograms of " + ref.region + " use different bin edges");
        }
        slot = rmse(s.percent, r->percent);
    };
    hist(sim.duration, ref.duration, out.duration, "duration");
    hist(sim.length, ref.length, out.length, "length");
    return out;
}

std::vector<GroupSplit> split_by_attribute(const std::vector<DecidedTrip>& trips,
                                           const std::map<std::int64_t, Attributes>& population,
                                           const std::string& attribute, std::size_t min_agents)
{
    std::map<std::string, std::set<std::int64_t>> agents;
    for (const auto& [id, attrs] : population) {
        const auto it = attrs.find(attribute);
        if (it != attrs.end()) {
            agents[it->second].insert(id);
        }
    }
    std::map<std::string, std::vector<DecidedTrip>> by_group;
    for (const auto& t : trips) {
        const auto p = population.find(t.agent_id);
        if (p == population.end()) {
            throw InputError("trip of agent " + std::to_string(t.agent_id) + " has no population record");
        }
        const auto a = p->second.find(attribute);
        if (a == p->second.end()) {
            throw InputError("unknown attribute '" + attribute + "' for agent " + std::to_string(t.agent_id));
        }
        by_group[a->second].push_back(t);
    }
    std::vector<GroupSplit> out;
    for (const auto& [value, members] : agents) {
        GroupSplit g;
        g.group = value;
        g.agents = members.size();
        const auto it = by_group.find(value);
        g.trips = it == by_group.end() ? 0 : it->second.size();
        g.excluded = g.agents < min_agents || g.trips == 0;
        if (!g.excluded) {
            g.split = modal_split(it->second);
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<ComparisonRow> rank_rows(std::vector<ComparisonRow> rows)
{
    std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
        const auto x = a.scores.aggregate();
        const auto y = b.scores.aggregate();
        if (x.has_value() != y.has_value()) {
            return x.has_value();
        }
        if (x && *x != *y) {
            return *x < *y;
        }
        return a.name < b.name;
    });
    return rows;
}

std::vector<ComparisonRow> interregional_compare(const IndicatorScores& simulation, const ReferenceDataset& target,
                                                 const std::vector<ReferenceDataset>& states)
{
    if (states.empty()) {
        throw InputError("interregional comparison needs at least one state dataset");
    }
    std::vector<ComparisonRow> rows;
    for (const auto& st : states) {
        ComparisonRow row;
        row.name = st.region;
        auto one = [&](const auto& mine, const auto& theirs, std::optional<double>& slot, const char* name) {
            if (!mine || !theirs) {
                row.scores.skipped.push_back(name);
                return;
            }
            slot = rmse(mine->percent, theirs->percent);
        };
        if (st.modal_split && target.modal_split) {
            row.scores.modality = rmse(*st.modal_split, *target.modal_split);
        }
        else {
            row.scores.skipped.push_back("modality");
        }
        if (st.duration && target.duration && st.duration->edges != target.duration->edges) {
            throw InputError("duration histograms of " + st.region + " and " + target.region + " differ in edges");
        }
        if (st.length && target.length && st.length->edges != target.length->edges) {
            throw InputError("length histograms of " + st.region + " and " + target.region + " differ in edges");
        }
        one(st.duration, target.duration, row.scores.duration, "duration");
        one(st.length, target.length, row.scores.length, "length");
        rows.push_back(std::move(row));
    }
    rows.push_back({"simulation", simulation, true});
    return rank_rows(std::move(rows));
}

CountProfiles normalize_counts(const Eigen::Ref<const Eigen::VectorXd>& simulated,
                               const Eigen::Ref<const Eigen::VectorXd>& observed)
{
    if (simulated.size() != observed.size() || simulated.size() == 0) {
        throw InputError("count profiles must be nonempty and of equal length");
    }
    if ((simulated.array() < 0).any() || (observed.array() < 0).any()) {
        throw InputError("negative traffic count");
    }
    const double obs_peak = observed.maxCoeff();
    if (!(obs_peak > 0)) {
        throw InputError("observed counts have no positive peak");
    }
    CountProfiles p;
    p.observed = observed / obs_peak;
    const double sim_peak = simulated.maxCoeff();
    p.simulated_all_zero = !(sim_peak > 0);
    p.simulated = p.simulated_all_zero ? Eigen::VectorXd::Zero(simulated.size()) : Eigen::VectorXd(simulated / sim_peak);
    p.shape_rmse = rmse(p.simulated, p.observed);
    return p;
}

std::map<std::string, Eigen::VectorXd> read_hourly_counts(const std::filesystem::path& path,
                                                          const std::string& value_column)
{
    const auto table = read_csv(path);
    const auto cs = table.column("station_id");
    const auto ch = table.column("hour");
    const auto cv = table.column(value_column);
    std::map<std::string, Eigen::VectorXd> out;
    for (const auto& row : table.rows) {
        const auto h = parse_int(row[ch]);
        const auto v = parse_double(row[cv]);
        if (!h || *h < 0 || *h > 23 || !v) {
            throw ParseError("malformed count row for station " + row[cs] + " in " + path.string());
        }
        auto [it, fresh] = out.try_emplace(row[cs], Eigen::VectorXd::Zero(24));
        it->second(*h) += *v;
    }
    return out;
}

Json EvalReport::to_json() const
{
    auto scores_json = [](const IndicatorScores& s) {
        return Json{{"modality", opt_json(s.modality)},
                    {"duration", opt_json(s.duration)},
                    {"length", opt_json(s.length)},
                    {"aggregate", opt_json(s.aggregate())},
                    {"skipped", s.skipped}};
    };
    Json strat = Json::object();
    for (const auto& [attr, groups] : stratified) {
        Json a = Json::array();
        for (const auto& g : groups) {
            a.push_back({{"group", g.group},
                         {"agents", g.agents},
                         {"trips", g.trips},
                         {"excluded", g.excluded},
                         {"split", g.excluded ? Json(nullptr) : split_json(g.split)}});
        }
        strat[attr] = a;
    }
    Json inter = Json::array();
    for (const auto& r : interregional) {
        Json row = scores_json(r.scores);
        row["name"] = r.name;
        row["simulation"] = r.simulation;
        inter.push_back(row);
    }
    Json st = Json::array();
    for (const auto& s : stations) {
        Json sim = Json::array(), obs = Json::array();
        for (Eigen::Index h = 0; h < s.profiles.simulated.size(); ++h) {
            sim.push_back(s.profiles.simulated(h));
            obs.push_back(s.profiles.observed(h));
        }
        st.push_back({{"station_id", s.station_id},
                      {"shape_rmse", s.profiles.shape_rmse},
                      {"simulated_all_zero", s.profiles.simulated_all_zero},
                      {"simulated", sim},
                      {"observed", obs}});
    }
    return {{"region", region},
            {"trips", trips},
            {"rmse", scores_json(scores)},
            {"simulated",
             {{"modal_split", split_json(simulated.modal_split)},
              {"length_histogram", histogram_json(simulated.length)},
              {"duration_histogram", histogram_json(simulated.duration)}}},
            {"reference", reference.to_json()},
            {"stratified", strat},
            {"interregional", inter},
            {"count_profiles", st}};
}

std::map<std::string, std::string> EvalReport::csv_tables() const
{
    std::map<std::string, std::string> out;
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };

    std::string ms = csv_line({"category", "simulated", "reference"});
    for (std::size_t k = 0; k < kSplitCategories.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        ms += csv_line({kSplitCategories[k], fmt(simulated.modal_split(i)),
                        reference.modal_split ? fmt((*reference.modal_split)(i)) : std::string()});
    }
    out["modal_split.csv"] = ms;

    std::string hs = csv_line({"dimension", "bin", "simulated", "reference"});
    for (const auto* pair : {&simulated.length, &simulated.duration}) {
        const auto& ref = pair->dimension == Dimension::Length ? reference.length : reference.duration;
        for (std::size_t b = 0; b < pair->bins(); ++b) {
            const auto i = static_cast<Eigen::Index>(b);
            hs += csv_line({to_string(pair->dimension), pair->bin_label(b), fmt(pair->percent(i)),
                            ref ? fmt(ref->percent(i)) : std::string()});
        }
    }
    out["histograms.csv"] = hs;

    std::string ss = csv_line({"attribute", "group", "agents", "trips", "excluded", "walk", "bike", "mit",
                               "public_transport"});
    for (const auto& [attr, groups] : stratified) {
        for (const auto& g : groups) {
            std::vector<std::string> row = {attr, g.group, std::to_string(g.agents), std::to_string(g.trips),
                                            g.excluded ? "1" : "0"};
            for (Eigen::Index k = 0; k < 4; ++k) {
                row.push_back(g.excluded ? std::string() : fmt(g.split(k)));
            }
            ss += csv_line(row);
        }
    }
    out["stratified.csv"] = ss;

    std::string is = csv_line({"rank", "name", "modality", "duration", "length", "average", "simulation"});
    for (std::size_t r = 0; r < interregional.size(); ++r) {
        const auto& row = interregional[r];
        is += csv_line({std::to_string(r + 1), row.name, opt(row.scores.modality), opt(row.scores.duration),
                        opt(row.scores.length), opt(row.scores.aggregate()), row.simulation ? "1" : "0"});
    }
    out["interregional.csv"] = is;

    std::string cs = csv_line({"station_id", "hour", "simulated_norm", "observed_norm"});
    for (const auto& s : stations) {
        for (Eigen::Index h = 0; h < s.profiles.simulated.size(); ++h) {
            cs += csv_line({s.station_id, std::to_string(h), fmt(s.profiles.simulated(h)), fmt(s.profiles.observed(h))});
        }
    }
    out["count_profiles.csv"] = cs;
    return out;
}

EvalReport evaluate(const EvaluationInputs& in)
{
    EvalReport r;
    r.region = in.reference.region;
    r.reference = in.reference;
    r.trips = in.trips.size();
    r.simulated = simulate_indicators(in.trips, in.reference);
    r.scores = score(r.simulated, in.reference);
    for (const auto& attr : in.stratify_by) {
        r.stratified[attr] = split_by_attribute(in.trips, in.population, attr, in.min_group_agents);
    }
    if (!in.states.empty()) {
        r.interregional = interregional_compare(r.scores, in.reference, in.states);
    }
    for (const auto& [id, sim] : in.simulated_counts) {
        const auto it = in.observed_counts.find(id);
        if (it != in.observed_counts.end()) {
            r.stations.push_back({id, normalize_counts(sim, it->second)});
        }
    }
    return r;
}

} // namespace agentsim
