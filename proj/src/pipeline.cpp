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
#include "agentsim/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <set>

#include "agentsim/census.hpp"
#include "agentsim/digest.hpp"
#include "agentsim/errors.hpp"
#include "agentsim/evaluation.hpp"
#include "agentsim/location.hpp"
#include "agentsim/parallel.hpp"
#include "agentsim/persona.hpp"
#include "agentsim/random.hpp"
#include "agentsim/routing.hpp"

namespace fs = std::filesystem;

namespace agentsim
{

// ---- configuration -----------------------------------------------------------

namespace
{

template <typename T>
T field(const Json& doc, const char* key, T fallback)
{
    if (!doc.contains(key) || doc[key].is_null()) {
        return fallback;
    }
    try {
        return doc[key].get<T>();
    }
    catch (const Json::exception&) {
        throw SchemaError(std::string("config field '") + key + "' has the wrong type");
    }
}

fs::path path_field(const Json& doc, const char* key)
{
    return fs::path(field<std::string>(doc, key, std::string()));
}

} // namespace

RunConfig RunConfig::from_json(const Json& doc, const fs::path& base_dir)
{
    if (!doc.is_object()) {
        throw SchemaError("run config must be a JSON object");
    }
    RunConfig c;
    c.base_dir = base_dir;
    c.seed = field<std::uint64_t>(doc, "seed", c.seed);
    c.population_total = field<std::int64_t>(doc, "population_total", c.population_total);
    c.sample_fraction = field<double>(doc, "sample_fraction", c.sample_fraction);
    if (doc.contains("scale_factor") && !doc["scale_factor"].is_null()) {
        c.scale_factor = field<double>(doc, "scale_factor", 1.0);
    }
    c.workers = field<int>(doc, "workers", c.workers);
    c.city = field<std::string>(doc, "city", c.city);
    c.residents = field<std::string>(doc, "residents", c.residents);
    if (doc.contains("date")) {
        c.date = DateContext::from_json(doc["date"]);
    }
    if (doc.contains("backend")) {
        c.backend = BackendConfig::from_json(doc["backend"]);
    }
    if (doc.contains("mode_choice")) {
        const auto& m = doc["mode_choice"];
        c.prompt_variant = prompt_variant_from_string(field<std::string>(m, "prompt_variant", "default_fewshot_cot"));
        c.city = field<std::string>(m, "city", c.city);
        c.residents = field<std::string>(m, "residents", c.residents);
        c.mode_regenerations = field<int>(m, "max_regenerations", c.mode_regenerations);
    }
    if (doc.contains("schedules")) {
        c.schedule_regenerations = field<int>(doc["schedules"], "max_regenerations", c.schedule_regenerations);
    }
    if (doc.contains("assignment")) {
        const auto& a = doc["assignment"];
        c.assignment.bpr_alpha = field<double>(a, "bpr_alpha", c.assignment.bpr_alpha);
        c.assignment.bpr_beta = field<double>(a, "bpr_beta", c.assignment.bpr_beta);
        c.assignment.max_iterations = field<int>(a, "max_iterations", c.assignment.max_iterations);
        c.assignment.gap_tolerance = field<double>(a, "gap_tolerance", c.assignment.gap_tolerance);
        c.assignment.replica_radius_m = field<double>(a, "replica_radius_m", c.assignment.replica_radius_m);
    }
    if (doc.contains("evaluation")) {
        c.min_group_agents = field<std::size_t>(doc["evaluation"], "min_group_agents", c.min_group_agents);
    }
    if (doc.contains("paths")) {
        const auto& p = doc["paths"];
        c.paths.microdata = path_field(p, "microdata");
        c.paths.schema = path_field(p, "schema");
        c.paths.osm = path_field(p, "osm");
        c.paths.categories = path_field(p, "categories");
        c.paths.gtfs = path_field(p, "gtfs");
        c.paths.reference = path_field(p, "reference");
        c.paths.stations = path_field(p, "stations");
        c.paths.observed_counts = path_field(p, "observed_counts");
        for (const auto& m : p.value("marginals", Json::array())) {
            c.paths.marginals.push_back({field<std::string>(m, "attribute", ""), path_field(m, "path")});
        }
        for (const auto& s : p.value("states", Json::array())) {
            c.paths.states.emplace_back(s.get<std::string>());
        }
    }
    const Json toggles = doc.contains("stages") ? doc["stages"] : Json::object();
    for (const auto& [k, v] : toggles.items()) {
        if (!v.is_boolean()) {
            throw SchemaError("stage toggle '" + k + "' must be true or false");
        }
        c.stages[k] = v.get<bool>();
    }
    c.assignment.workers = c.workers;
    c.backend.workers = c.workers;
    return c;
}

RunConfig RunConfig::load(const fs::path& path)
{
    Json doc;
    try {
        doc = Json::parse(read_text_file(path), nullptr, true, true);
    }
    catch (const Json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return from_json(doc, fs::absolute(path).parent_path());
}

Json RunConfig::to_json() const
{
    Json marg = Json::array();
    for (const auto& m : paths.marginals) {
        marg.push_back({{"attribute", m.attribute}, {"path", m.path.string()}});
    }
    Json states = Json::array();
    for (const auto& s : paths.states) {
        states.push_back(s.string());
    }
    Json backend_doc = backend.to_json();
    backend_doc.erase("workers");
    Json doc = {{"seed", seed},
                {"population_total", population_total},
                {"sample_fraction", sample_fraction},
                {"scale_factor", scale_factor ? Json(*scale_factor) : Json(nullptr)},
                {"workers", workers},
                {"city", city},
                {"residents", residents},
                {"date", date.to_json()},
                {"backend", backend_doc},
                {"mode_choice", {{"prompt_variant", to_string(prompt_variant)}, {"max_regenerations", mode_regenerations}}},
                {"schedules", {{"max_regenerations", schedule_regenerations}}},
                {"assignment", assignment.to_json()},
                {"evaluation", {{"min_group_agents", min_group_agents}}},
                {"paths",
                 {{"microdata", paths.microdata.string()},
                  {"schema", paths.schema.string()},
                  {"marginals", marg},
                  {"osm", paths.osm.string()},
                  {"categories", paths.categories.string()},
                  {"gtfs", paths.gtfs.string()},
                  {"reference", paths.reference.string()},
                  {"states", states},
                  {"stations", paths.stations.string()},
                  {"observed_counts", paths.observed_counts.string()}}},
                {"stages", stages}};
    doc["assignment"].erase("workers");
    return doc;
}

std::int64_t RunConfig::target_size() const
{
    return std::max<std::int64_t>(1, std::llround(static_cast<double>(population_total) * sample_fraction));
}

fs::path RunConfig::resolve(const fs::path& p) const
{
    if (p.empty() || p.is_absolute()) {
        return p;
    }
    return base_dir / p;
}

bool RunConfig::enabled(const std::string& stage) const
{
    const auto it = stages.find(stage);
    return it == stages.end() || it->second;
}

std::string RunConfig::stage_hash(const std::string& stage) const
{
    const Json d = to_json();
    const Json& p = d["paths"];
    Json part = {{"stage", stage}};
    if (stage == "synth") {
        part["v"] = {d["seed"], d["population_total"], d["sample_fraction"], p["microdata"], p["schema"], p["marginals"]};
    }
    else if (stage == "personas") {
        part["v"] = {d["seed"], d["backend"], d["city"], p["schema"]};
    }
    else if (stage == "schedules") {
        part["v"] = {d["seed"], d["backend"], d["date"], d["schedules"], p["osm"], p["categories"]};
    }
    else if (stage == "locations") {
        part["v"] = {d["seed"], p["osm"], p["categories"]};
    }
    else if (stage == "routes") {
        part["v"] = {d["date"]["day_of_week"], p["osm"], p["categories"], p["gtfs"]};
    }
    else if (stage == "modes") {
        part["v"] = {d["seed"], d["backend"], d["mode_choice"], d["city"], d["residents"], d["date"]["external_factor"]};
    }
    else if (stage == "assign") {
        part["v"] = {d["seed"], d["assignment"], scale(), p["osm"], p["categories"], p["stations"]};
    }
    else if (stage == "evaluate") {
        part["v"] = {d["evaluation"], p["reference"], p["states"], p["observed_counts"]};
    }
    else {
        throw InputError("unknown stage '" + stage + "'");
    }
    return sha256_hex(part.dump());
}

const std::vector<std::string>& stage_names()
{
    static const std::vector<std::string> names = {"synth",  "personas", "schedules", "locations",
                                                   "routes", "modes",    "assign",    "evaluate"};
    return names;
}

std::vector<std::string> validate_config(const RunConfig& c, bool probe_backend)
{
    std::vector<std::string> v;
    if (!(c.sample_fraction > 0) || c.sample_fraction > 1) {
        v.push_back("sample_fraction must be in (0, 1], got " + std::to_string(c.sample_fraction));
    }
    if (c.population_total < 1) {
        v.push_back("population_total must be at least 1");
    }
    if (c.scale_factor && !(*c.scale_factor > 0)) {
        v.push_back("scale_factor must be positive");
    }
    if (c.workers < 1) {
        v.push_back("workers must be at least 1");
    }
    try {
        c.assignment.validate();
    }
    catch (const InputError& e) {
        v.push_back(std::string("assignment: ") + e.what());
    }
    for (const auto& s : c.stages) {
        if (std::find(stage_names().begin(), stage_names().end(), s.first) == stage_names().end()) {
            v.push_back("unknown stage toggle '" + s.first + "'");
        }
    }
    auto need = [&](const fs::path& p, const char* what, bool required) {
        if (p.empty()) {
            if (required) {
                v.push_back(std::string("paths.") + what + " is required");
            }
            return;
        }
        if (!fs::exists(c.resolve(p))) {
            v.push_back(std::string("paths.") + what + ": " + c.resolve(p).string() + " does not exist");
        }
    };
    if (c.enabled("synth")) {
        need(c.paths.microdata, "microdata", true);
        for (const auto& m : c.paths.marginals) {
            need(m.path, "marginals", true);
            if (m.attribute.empty()) {
                v.push_back("marginal table without attribute name");
            }
        }
        if (c.paths.marginals.size() > 2) {
            v.push_back("at most two marginal tables are supported");
        }
    }
    need(c.paths.schema, "schema", false);
    need(c.paths.categories, "categories", false);
    if (c.enabled("schedules") || c.enabled("locations") || c.enabled("routes") || c.enabled("assign")) {
        need(c.paths.osm, "osm", true);
    }
    need(c.paths.gtfs, "gtfs", false);
    if (c.enabled("evaluate")) {
        need(c.paths.reference, "reference", true);
        for (const auto& s : c.paths.states) {
            need(s, "states", true);
        }
        need(c.paths.observed_counts, "observed_counts", false);
    }
    need(c.paths.stations, "stations", false);
    if (c.backend.kind == BackendConfig::Kind::Replay && !c.backend.replay_path.empty()) {
        need(c.backend.replay_path, "backend.replay_path", true);
    }
    if (probe_backend) {
        if (auto problem = probe_endpoint(c.backend)) {
            v.push_back("backend: " + *problem);
        }
    }
    return v;
}

// ---- manifest ----------------------------------------------------------------

Json RunManifest::to_json() const
{
    Json st = Json::object();
    for (const auto& [name, r] : stages) {
        st[name] = {{"config_hash", r.config_hash},
                    {"inputs", r.inputs},
                    {"outputs", r.outputs},
                    {"seconds", r.seconds},
                    {"tallies", r.tallies}};
    }
    return {{"stages", st}};
}

RunManifest RunManifest::load(const fs::path& run_dir)
{
    RunManifest m;
    const auto path = run_dir / "manifest.json";
    if (!fs::exists(path)) {
        return m;
    }
    const Json doc = Json::parse(read_text_file(path));
    const Json stages = doc.contains("stages") ? doc["stages"] : Json::object();
    for (auto it = stages.begin(); it != stages.end(); ++it) {
        const std::string name = it.key();
        const Json& r = it.value();
        StageRecord rec;
        rec.config_hash = r.value("config_hash", std::string());
        rec.inputs = r.value("inputs", std::map<std::string, std::string>{});
        rec.outputs = r.value("outputs", std::map<std::string, std::string>{});
        rec.seconds = r.value("seconds", 0.0);
        rec.tallies = r.value("tallies", Json::object());
        m.stages[name] = rec;
    }
    return m;
}

void RunManifest::save(const fs::path& run_dir) const
{
    write_text_file(run_dir / "manifest.json", to_json().dump(2) + "\n");
}

// ---- stages --------------------------------------------------------------------

namespace
{

struct Context {
    const RunConfig& config;
    fs::path dir;
    Json tallies = Json::object();

    fs::path out(const std::string& name) const
    {
        return dir / name;
    }
};

AttributeSchema load_schema(const RunConfig& c)
{
    return c.paths.schema.empty() ? AttributeSchema::default_mobility() : AttributeSchema::load(c.resolve(c.paths.schema));
}

CategoryMap load_categories(const RunConfig& c)
{
    return c.paths.categories.empty() ? CategoryMap::default_map() : CategoryMap::load(c.resolve(c.paths.categories));
}

struct World {
    OsmData osm;
    LocationCatalog catalog;
};

World load_world(const RunConfig& c)
{
    World w;
    w.osm = read_osm(c.resolve(c.paths.osm));
    w.catalog = ingest_osm(w.osm, load_categories(c));
    return w;
}

// Backend for one stage: replay reads the stage log, everything else is recorded to it.
struct StageBackend {
    std::unique_ptr<GenerationBackend> inner;
    std::unique_ptr<RecordingBackend> recorder;
    fs::path log;

    GenerationBackend& get()
    {
        return recorder ? static_cast<GenerationBackend&>(*recorder) : *inner;
    }
    void finish() const
    {
        if (recorder) {
            recorder->flush(log);
        }
    }
};

StageBackend stage_backend(const Context& ctx, const std::string& stage)
{
    StageBackend b;
    b.log = ctx.out("backend_" + stage + ".jsonl");
    BackendConfig cfg = ctx.config.backend;
    if (cfg.kind == BackendConfig::Kind::Replay) {
        cfg.replay_path = cfg.replay_path.empty() ? b.log : ctx.config.resolve(cfg.replay_path);
        b.inner = make_backend(cfg);
        return b;
    }
    b.inner = make_backend(cfg);
    if (cfg.record) {
        b.recorder = std::make_unique<RecordingBackend>(*b.inner);
    }
    return b;
}

bool records_backend(const RunConfig& c)
{
    return c.backend.kind != BackendConfig::Kind::Replay && c.backend.record;
}

void stage_synth(Context& ctx)
{
    const auto& c = ctx.config;
    const auto schema = load_schema(c);
    auto records = read_microdata(c.resolve(c.paths.microdata), schema);
    if (records.empty()) {
        throw EmptySetError("microdata has no records");
    }
    std::vector<MarginalTable> margs;
    for (const auto& m : c.paths.marginals) {
        margs.push_back(read_marginals_csv(c.resolve(m.path), m.attribute));
    }
    auto cell = [&](const SurveyRecord& r, const MarginalTable& m) {
        const auto it = r.attributes.find(m.attribute);
        const auto pos = it == r.attributes.end() ? m.categories.end()
                                                  : std::find(m.categories.begin(), m.categories.end(), it->second);
        if (pos == m.categories.end()) {
            throw InputError("record " + r.record_id + " has a " + m.attribute + " value outside the marginal table");
        }
        return static_cast<Eigen::Index>(pos - m.categories.begin());
    };
    if (margs.size() == 1) {
        // one table: rake the weights to it
        Eigen::VectorXd seed = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(margs[0].categories.size()));
        for (const auto& r : records) {
            seed(cell(r, margs[0])) += r.weight;
        }
        for (auto& r : records) {
            const auto k = cell(r, margs[0]);
            r.weight *= margs[0].totals(k) / seed(k);
        }
    }
    else if (margs.size() == 2) {
        Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(margs[0].categories.size()),
                                                     static_cast<Eigen::Index>(margs[1].categories.size()));
        for (const auto& r : records) {
            seed(cell(r, margs[0]), cell(r, margs[1])) += r.weight;
        }
        const auto fit = ipf_fit(seed, margs[0], margs[1]);
        for (auto& r : records) {
            const auto i = cell(r, margs[0]);
            const auto j = cell(r, margs[1]);
            r.weight *= fit.table(i, j) / seed(i, j);
        }
        ctx.tallies["ipf_iterations"] = fit.iterations;
        ctx.tallies["ipf_max_deviation"] = fit.max_deviation;
    }
    else if (margs.size() > 2) {
        throw InputError("at most two marginal tables are supported");
    }
    // records whose cell received no mass drop out
    std::erase_if(records, [](const SurveyRecord& r) { return !(r.weight > 0); });
    const auto scaled = scale_weights(records, c.target_size());
    const auto counts = trs_sample(scaled, derive_seed(c.seed, 0, "trs"));
    const auto pop = expand_population(records, counts, c.seed);
    write_text_file(ctx.out("population.jsonl"), population_to_ndjson(pop));
    ctx.tallies["agents"] = pop.agents.size();
    ctx.tallies["records"] = records.size();
}

void stage_personas(Context& ctx)
{
    const auto& c = ctx.config;
    const auto pop = population_from_ndjson(ctx.out("population.jsonl"));
    auto backend = stage_backend(ctx, "personas");
    PersonaOptions opt;
    opt.population_name = c.city;
    opt.max_retries = c.backend.max_retries;
    opt.workers = c.workers;
    const auto profiles = generate_personas(pop, backend.get(), c.seed, load_schema(c), opt);
    backend.finish();
    write_text_file(ctx.out("personas.jsonl"), profiles_to_ndjson(profiles));
    ctx.tallies["profiles"] = profiles.size();
}

void stage_schedules(Context& ctx)
{
    const auto& c = ctx.config;
    const auto profiles = profiles_from_ndjson(ctx.out("personas.jsonl"));
    const auto world = load_world(c);
    auto backend = stage_backend(ctx, "schedules");
    ScheduleOptions opt;
    opt.max_regenerations = c.schedule_regenerations;
    opt.workers = c.workers;
    const auto days = generate_schedules(profiles, c.date, world.catalog.categories(), backend.get(), c.seed, opt);
    backend.finish();
    write_text_file(ctx.out("schedules.jsonl"), schedules_to_ndjson(days));
    std::size_t dropped = 0, fallbacks = 0, regenerated = 0;
    for (const auto& d : days) {
        dropped += static_cast<std::size_t>(d.dropped);
        fallbacks += d.fallback ? 1 : 0;
        regenerated += d.attempts > 1 ? 1 : 0;
    }
    ctx.tallies["schedules"] = days.size();
    ctx.tallies["activities_dropped"] = dropped;
    ctx.tallies["fallback_days"] = fallbacks;
    ctx.tallies["regenerated"] = regenerated;
}

void stage_locations(Context& ctx)
{
    const auto& c = ctx.config;
    const auto days = schedules_from_ndjson(ctx.out("schedules.jsonl"));
    const auto world = load_world(c);
    std::vector<Json> rows(days.size());
    parallel_for(days.size(), static_cast<std::size_t>(c.workers), [&](std::size_t i) {
        const auto& d = days[i];
        const auto home = sample_home(world.catalog, derive_seed(c.seed, static_cast<std::uint64_t>(d.agent_id), "home"));
        rows[i] = {{"agent_id", d.agent_id}, {"home", home},
                   {"buildings", resolve_activity_locations(d, home, world.catalog)}};
    });
    write_text_file(ctx.out("locations.jsonl"), to_ndjson(rows));
    write_text_file(ctx.out("catalog.csv"), catalog_to_csv(world.catalog));
    ctx.tallies["buildings"] = world.catalog.buildings().size();
    ctx.tallies["agents"] = rows.size();
}

struct AgentPlace {
    std::int64_t home = 0;
    std::vector<std::int64_t> buildings;
};

std::map<std::int64_t, AgentPlace> read_locations(const fs::path& path)
{
    std::map<std::int64_t, AgentPlace> out;
    for (const auto& row : read_ndjson(path)) {
        out[row.at("agent_id").get<std::int64_t>()] = {row.at("home").get<std::int64_t>(),
                                                       row.at("buildings").get<std::vector<std::int64_t>>()};
    }
    return out;
}

void stage_routes(Context& ctx)
{
    const auto& c = ctx.config;
    const auto days = schedules_from_ndjson(ctx.out("schedules.jsonl"));
    const auto places = read_locations(ctx.out("locations.jsonl"));
    const auto world = load_world(c);
    std::optional<GtfsFeed> feed;
    if (!c.paths.gtfs.empty()) {
        feed = read_gtfs(c.resolve(c.paths.gtfs));
    }
    const auto net = build_network(world.osm, world.catalog.projection(), feed ? &*feed : nullptr, c.date.day_of_week);

    std::vector<PlannedTrip> trips;
    for (const auto& d : days) {
        const auto it = places.find(d.agent_id);
        if (it == places.end()) {
            throw SchemaError("no locations for agent " + std::to_string(d.agent_id));
        }
        for (auto& t : plan_trips(d, it->second.buildings)) {
            trips.push_back(std::move(t));
        }
    }
    std::vector<std::vector<RouteOption>> options(trips.size());
    parallel_for(trips.size(), static_cast<std::size_t>(c.workers), [&](std::size_t i) {
        const auto& t = trips[i];
        ItineraryQuery q;
        q.agent_id = t.agent_id;
        q.leg = t.leg;
        q.origin = world.catalog.building(t.from_building).position;
        q.destination = world.catalog.building(t.to_building).position;
        q.depart_after_s = t.depart_after * 60;
        options[i] = route_options(net, q);
    });
    std::vector<Json> kept;
    std::string csv = route_options_csv_header();
    std::size_t unroutable = 0, rows = 0;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        if (options[i].empty()) {
            ++unroutable;
            continue;
        }
        kept.push_back(planned_trip_to_json(trips[i]));
        for (const auto& o : options[i]) {
            csv += route_option_csv_row(trips[i].agent_id, trips[i].leg, o);
            ++rows;
        }
    }
    write_text_file(ctx.out("trips.jsonl"), to_ndjson(kept));
    write_text_file(ctx.out("route_options.csv"), csv);
    ctx.tallies["trips"] = kept.size();
    ctx.tallies["unroutable_trips"] = unroutable;
    ctx.tallies["options"] = rows;
    ctx.tallies["transit"] = feed.has_value();
}

void stage_modes(Context& ctx)
{
    const auto& c = ctx.config;
    const auto profiles = profiles_from_ndjson(ctx.out("personas.jsonl"));
    const auto places = read_locations(ctx.out("locations.jsonl"));
    const auto options = read_route_options_csv(ctx.out("route_options.csv"));
    std::map<std::int64_t, std::vector<TripChoice>> by_agent;
    for (const auto& row : read_ndjson(ctx.out("trips.jsonl"))) {
        TripChoice tc;
        tc.trip = planned_trip_from_json(row);
        const auto it = options.find({tc.trip.agent_id, tc.trip.leg});
        if (it == options.end()) {
            throw SchemaError("trip " + std::to_string(tc.trip.agent_id) + "/" + std::to_string(tc.trip.leg) +
                              " has no route options");
        }
        tc.options = it->second;
        by_agent[tc.trip.agent_id].push_back(std::move(tc));
    }
    std::vector<AgentDay> days;
    for (const auto& p : profiles) {
        auto it = by_agent.find(p.agent_id);
        if (it == by_agent.end()) {
            continue;
        }
        days.push_back({p, places.at(p.agent_id).home, std::move(it->second)});
    }
    auto backend = stage_backend(ctx, "modes");
    ModeChoiceOptions opt;
    opt.prompt.variant = c.prompt_variant;
    opt.prompt.city = c.city;
    opt.prompt.residents = c.residents;
    opt.prompt.external_factor = c.date.external_factor;
    opt.max_regenerations = c.mode_regenerations;
    opt.workers = c.workers;
    const auto decided = decide_modes_all(days, backend.get(), c.seed, opt);
    backend.finish();

    std::vector<DecidedTrip> out;
    std::vector<Json> audit;
    std::size_t repaired = 0, defaulted = 0, dropped = 0, violations = 0;
    for (std::size_t a = 0; a < decided.size(); ++a) {
        const auto& ad = decided[a];
        const auto& day = days[a];
        for (const auto& d : ad.decisions) {
            const auto it = std::find_if(day.trips.begin(), day.trips.end(),
                                         [&](const TripChoice& t) { return t.trip.leg == d.leg; });
            out.push_back(make_decided_trip(d, *it));
            repaired += d.repaired ? 1 : 0;
            defaulted += d.defaulted ? 1 : 0;
        }
        dropped += ad.dropped_legs.size();
        violations += ad.violations.size();
        if (!ad.violations.empty() || !ad.dropped_legs.empty() || ad.attempts > 1) {
            audit.push_back({{"agent_id", ad.agent_id},
                             {"attempts", ad.attempts},
                             {"violations", ad.violations},
                             {"dropped_legs", ad.dropped_legs}});
        }
    }
    write_text_file(ctx.out("decisions.jsonl"), decided_trips_to_ndjson(out));
    write_text_file(ctx.out("mode_audit.jsonl"), to_ndjson(audit));
    ctx.tallies["decisions"] = out.size();
    ctx.tallies["repaired"] = repaired;
    ctx.tallies["defaulted"] = defaulted;
    ctx.tallies["dropped_legs"] = dropped;
    ctx.tallies["violations"] = violations;
}

std::string fmt(double v, const char* spec)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

void stage_assign(Context& ctx)
{
    const auto& c = ctx.config;
    const auto trips = decided_trips_from_ndjson(ctx.out("decisions.jsonl"));
    const auto world = load_world(c);
    const auto car = build_road_graph(world.osm, world.catalog.projection(), RoadMode::Car);
    AssignmentConfig cfg = c.assignment;
    cfg.scale_factor = c.scale();
    const auto demand = car_demand(trips, world.catalog, car, cfg, c.seed);
    const auto res = msa_assign(car, demand, cfg);

    std::vector<std::pair<std::string, std::size_t>> stations;
    if (!c.paths.stations.empty()) {
        stations = read_station_map(c.resolve(c.paths.stations), car);
    }
    write_text_file(ctx.out("counts.csv"), counts_to_csv(emit_counts(res, stations, cfg.scale_factor)));
    std::string flows = csv_line({"edge_id", "hour", "vehicles", "travel_time_s"});
    for (Eigen::Index e = 0; e < res.flows.rows(); ++e) {
        for (int h = 0; h < kHours; ++h) {
            if (res.flows(e, h) > 0) {
                flows += csv_line({std::to_string(e), std::to_string(h), fmt(res.flows(e, h) * cfg.scale_factor, "%.3f"),
                                   fmt(res.times(e, h), "%.2f")});
            }
        }
    }
    write_text_file(ctx.out("link_flows.csv"), flows);
    write_text_file(ctx.out("car_edges.csv"), car_edges_csv(car));
    Json cfg_doc = cfg.to_json();
    cfg_doc.erase("workers");
    const Json summary = {{"demands", demand.size()},         {"iterations", res.iterations},
                          {"converged", res.converged},       {"relative_gap", res.relative_gap},
                          {"gap_history", res.gap_history},   {"unroutable", res.unroutable},
                          {"scale_factor", cfg.scale_factor}, {"config", cfg_doc}};
    write_text_file(ctx.out("assignment.json"), summary.dump(2) + "\n");
    ctx.tallies["demands"] = demand.size();
    ctx.tallies["iterations"] = res.iterations;
    ctx.tallies["converged"] = res.converged;
    ctx.tallies["relative_gap"] = res.relative_gap;
}

void stage_evaluate(Context& ctx)
{
    const auto& c = ctx.config;
    EvaluationInputs in;
    in.trips = decided_trips_from_ndjson(ctx.out("decisions.jsonl"));
    for (const auto& a : population_from_ndjson(ctx.out("population.jsonl")).agents) {
        in.population[a.agent_id] = a.attributes;
    }
    in.reference = ReferenceDataset::load(c.resolve(c.paths.reference));
    for (const auto& s : c.paths.states) {
        in.states.push_back(ReferenceDataset::load(c.resolve(s)));
    }
    if (fs::exists(ctx.out("counts.csv")) && c.enabled("assign")) {
        in.simulated_counts = read_hourly_counts(ctx.out("counts.csv"), "simulated_count");
    }
    if (!c.paths.observed_counts.empty()) {
        in.observed_counts = read_hourly_counts(c.resolve(c.paths.observed_counts));
    }
    in.min_group_agents = c.min_group_agents;
    // stratify only by attributes every agent carries
    in.stratify_by.clear();
    for (const char* attr : {"economic_status", "occupation"}) {
        const bool everywhere = std::all_of(in.population.begin(), in.population.end(),
                                            [&](const auto& kv) { return kv.second.contains(attr); });
        if (everywhere) {
            in.stratify_by.emplace_back(attr);
        }
    }
    const auto report = evaluate(in);
    write_text_file(ctx.out("report.json"), report.to_json().dump(2) + "\n");
    for (const auto& [name, text] : report.csv_tables()) {
        write_text_file(ctx.out("report_" + name), text);
    }
    const auto agg = report.scores.aggregate();
    ctx.tallies["trips"] = report.trips;
    ctx.tallies["aggregate_rmse"] = agg ? Json(*agg) : Json(nullptr);
}

struct StageSpec {
    std::vector<std::string> upstream;                       ///< run-dir artifacts
    std::function<std::vector<fs::path>(const RunConfig&)> external;
    std::function<std::vector<std::string>(const RunConfig&)> outputs;
    std::function<void(Context&)> run;
};

std::vector<std::string> with_log(const RunConfig& c, std::vector<std::string> files, const std::string& stage)
{
    if (records_backend(c)) {
        files.push_back("backend_" + stage + ".jsonl");
    }
    return files;
}

const std::map<std::string, StageSpec>& specs()
{
    static const std::map<std::string, StageSpec> s = [] {
        std::map<std::string, StageSpec> m;
        auto world_files = [](const RunConfig& c) {
            std::vector<fs::path> v = {c.resolve(c.paths.osm)};
            if (!c.paths.categories.empty()) {
                v.push_back(c.resolve(c.paths.categories));
            }
            return v;
        };
        auto schema_files = [](const RunConfig& c) {
            return c.paths.schema.empty() ? std::vector<fs::path>{} : std::vector<fs::path>{c.resolve(c.paths.schema)};
        };
        auto replay_inputs = [](const RunConfig& c, std::vector<fs::path> v) {
            if (c.backend.kind == BackendConfig::Kind::Replay && !c.backend.replay_path.empty()) {
                v.push_back(c.resolve(c.backend.replay_path));
            }
            return v;
        };
        m["synth"] = {{},
                      [=](const RunConfig& c) {
                          auto v = schema_files(c);
                          v.push_back(c.resolve(c.paths.microdata));
                          for (const auto& mg : c.paths.marginals) {
                              v.push_back(c.resolve(mg.path));
                          }
                          return v;
                      },
                      [](const RunConfig&) { return std::vector<std::string>{"population.jsonl"}; },
                      stage_synth};
        m["personas"] = {{"population.jsonl"},
                         [=](const RunConfig& c) { return replay_inputs(c, schema_files(c)); },
                         [](const RunConfig& c) { return with_log(c, {"personas.jsonl"}, "personas"); },
                         stage_personas};
        m["schedules"] = {{"personas.jsonl"},
                          [=](const RunConfig& c) { return replay_inputs(c, world_files(c)); },
                          [](const RunConfig& c) { return with_log(c, {"schedules.jsonl"}, "schedules"); },
                          stage_schedules};
        m["locations"] = {{"schedules.jsonl"},
                          world_files,
                          [](const RunConfig&) { return std::vector<std::string>{"locations.jsonl", "catalog.csv"}; },
                          stage_locations};
        m["routes"] = {{"schedules.jsonl", "locations.jsonl"},
                       [=](const RunConfig& c) {
                           auto v = world_files(c);
                           if (!c.paths.gtfs.empty()) {
                               v.push_back(c.resolve(c.paths.gtfs));
                           }
                           return v;
                       },
                       [](const RunConfig&) { return std::vector<std::string>{"trips.jsonl", "route_options.csv"}; },
                       stage_routes};
        m["modes"] = {{"personas.jsonl", "locations.jsonl", "trips.jsonl", "route_options.csv"},
                      [=](const RunConfig& c) { return replay_inputs(c, {}); },
                      [](const RunConfig& c) { return with_log(c, {"decisions.jsonl", "mode_audit.jsonl"}, "modes"); },
                      stage_modes};
        m["assign"] = {{"decisions.jsonl"},
                       [=](const RunConfig& c) {
                           auto v = world_files(c);
                           if (!c.paths.stations.empty()) {
                               v.push_back(c.resolve(c.paths.stations));
                           }
                           return v;
                       },
                       [](const RunConfig&) {
                           return std::vector<std::string>{"counts.csv", "link_flows.csv", "car_edges.csv",
                                                           "assignment.json"};
                       },
                       stage_assign};
        m["evaluate"] = {{"decisions.jsonl", "population.jsonl"},
                         [](const RunConfig& c) {
                             std::vector<fs::path> v = {c.resolve(c.paths.reference)};
                             for (const auto& s : c.paths.states) {
                                 v.push_back(c.resolve(s));
                             }
                             if (!c.paths.observed_counts.empty()) {
                                 v.push_back(c.resolve(c.paths.observed_counts));
                             }
                             return v;
                         },
                         [](const RunConfig&) {
                             return std::vector<std::string>{"report.json",
                                                             "report_modal_split.csv",
                                                             "report_histograms.csv",
                                                             "report_stratified.csv",
                                                             "report_interregional.csv",
                                                             "report_count_profiles.csv"};
                         },
                         stage_evaluate};
        return m;
    }();
    return s;
}

std::string producer_of(const std::string& artifact)
{
    for (const auto& [name, spec] : specs()) {
        // outputs do not depend on the config except for backend logs, which are never upstream
        for (const auto& o : spec.outputs(RunConfig{})) {
            if (o == artifact) {
                return name;
            }
        }
    }
    throw InputError("no stage produces " + artifact);
}

std::vector<std::string> upstream_of(const std::string& stage, const RunConfig& c)
{
    auto up = specs().at(stage).upstream;
    if (stage == "evaluate" && c.enabled("assign")) {
        up.push_back("counts.csv");
    }
    return up;
}

} // namespace

StageOutcome run_stage(const std::string& stage, const RunConfig& config, const fs::path& run_dir, bool force)
{
    const auto it = specs().find(stage);
    if (it == specs().end()) {
        throw InputError("unknown stage '" + stage + "'");
    }
    const auto& spec = it->second;
    fs::create_directories(run_dir);
    RunManifest manifest = RunManifest::load(run_dir);

    StageRecord rec;
    rec.config_hash = config.stage_hash(stage);
    for (const auto& f : upstream_of(stage, config)) {
        const auto path = run_dir / f;
        const auto producer = producer_of(f);
        if (!fs::exists(path)) {
            throw MissingArtifactError(stage + " needs " + f + "; run the " + producer + " stage first");
        }
        const auto p = manifest.stages.find(producer);
        if (p == manifest.stages.end() || p->second.config_hash != config.stage_hash(producer)) {
            throw StaleArtifactError(f + " was produced under a different " + producer +
                                     " configuration; rerun " + producer);
        }
        const auto digest = sha256_file(path);
        if (p->second.outputs.count(f) == 0 || p->second.outputs.at(f) != digest) {
            throw StaleArtifactError(f + " changed after the " + producer + " stage wrote it; rerun " + producer);
        }
        rec.inputs[f] = digest;
    }
    for (const auto& path : spec.external(config)) {
        if (path.empty() || !fs::exists(path)) {
            throw MissingArtifactError(stage + " needs input file " + (path.empty() ? "(unset)" : path.string()));
        }
        rec.inputs[path.string()] = sha256_file(path);
    }

    const auto outputs = spec.outputs(config);
    if (!force) {
        const auto prev = manifest.stages.find(stage);
        if (prev != manifest.stages.end() && prev->second.config_hash == rec.config_hash &&
            prev->second.inputs == rec.inputs) {
            const bool intact = std::all_of(outputs.begin(), outputs.end(), [&](const std::string& o) {
                return fs::exists(run_dir / o) && prev->second.outputs.count(o) &&
                       prev->second.outputs.at(o) == sha256_file(run_dir / o);
            });
            if (intact) {
                return {stage, true, prev->second};
            }
        }
    }

    Context ctx{config, run_dir};
    const auto t0 = std::chrono::steady_clock::now();
    spec.run(ctx);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.tallies = ctx.tallies;
    for (const auto& o : outputs) {
        rec.outputs[o] = sha256_file(run_dir / o);
    }
    manifest.stages[stage] = rec;
    manifest.save(run_dir);
    return {stage, false, rec};
}

std::vector<StageOutcome> run_all(const RunConfig& config, const fs::path& run_dir, bool force)
{
    std::vector<StageOutcome> out;
    for (const auto& s : stage_names()) {
        if (config.enabled(s)) {
            out.push_back(run_stage(s, config, run_dir, force));
        }
    }
    return out;
}

} // namespace agentsim
