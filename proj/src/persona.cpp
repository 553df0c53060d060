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
#include "agentsim/persona.hpp"

#include <array>

#include "agentsim/lenient_json.hpp"
#include "agentsim/parallel.hpp"

namespace agentsim
{

Prompt build_description_prompt(const Attributes& attributes, const AttributeSchema& schema,
                                const PersonaOptions& options)
{
    for (const auto& [key, value] : attributes) {
        if (!schema.find(key)) {
            throw SchemaError("attribute '" + key + "' is not declared in the schema");
        }
    }
    std::string user = "Sample attributes from the " + options.population_name + " population:\n";
    for (const auto& spec : schema.specs()) {
        const auto it = attributes.find(spec.name);
        if (it == attributes.end() || trim(it->second).empty()) {
            continue;
        }
        user += spec.name + ": " + it->second + "\n";
    }
    user += "Imagine a realistic person with these attributes. Write a specific one paragraph description:\n";
    user += "Respond with a single JSON object and nothing else, in the form "
            "{\"description\": \"<one paragraph>\"}.";
    return Prompt{std::nullopt, std::move(user)};
}

std::string parse_persona_response(std::string_view response)
{
    Json obj;
    try {
        obj = extract_json_object(response);
    }
    catch (const ParseError& e) {
        throw ParseError(std::string("persona response: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("description")) {
        throw ParseError("persona response has no 'description' field");
    }
    if (!obj["description"].is_string()) {
        throw ParseError("persona 'description' is not a string");
    }
    auto text = obj["description"].get<std::string>();
    if (trim(text).empty()) {
        throw ParseError("persona 'description' is empty");
    }
    return text;
}

AgentProfile generate_persona(const Agent& agent, GenerationBackend& backend, std::uint64_t global_seed,
                              const AttributeSchema& schema, const PersonaOptions& options)
{
    schema.validate(agent.attributes);
    GenerationRequest req;
    req.task = TaskKind::Persona;
    req.key = "persona/" + std::to_string(agent.agent_id);
    req.prompt = build_description_prompt(agent.attributes, schema, options);
    req.seed = derive_seed(global_seed, static_cast<std::uint64_t>(agent.agent_id), "persona");
    req.context = {{"attributes", attributes_to_json(agent.attributes)}, {"population", options.population_name}};

    AgentProfile profile{agent.agent_id, agent.attributes, {}};
    profile.persona_text = request_with_retries(backend, std::move(req), options.max_retries, parse_persona_response);
    return profile;
}

std::vector<AgentProfile> generate_personas(const SyntheticPopulation& population, GenerationBackend& backend,
                                            std::uint64_t global_seed, const AttributeSchema& schema,
                                            const PersonaOptions& options)
{
    std::vector<const Agent*> order;
    order.reserve(population.agents.size());
    for (const auto& a : population.agents) {
        order.push_back(&a);
    }
    std::stable_sort(order.begin(), order.end(), [](const Agent* a, const Agent* b) { return a->agent_id < b->agent_id; });

    std::vector<AgentProfile> out(order.size());
    parallel_for(order.size(), static_cast<std::size_t>(options.workers), [&](std::size_t i) {
        out[i] = generate_persona(*order[i], backend, global_seed, schema, options);
    });
    return out;
}

std::string profiles_to_ndjson(const std::vector<AgentProfile>& profiles)
{
    std::string out;
    for (const auto& p : profiles) {
        const Json line = {
            {"agent_id", p.agent_id}, {"attributes", attributes_to_json(p.attributes)}, {"persona_text", p.persona_text}};
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<AgentProfile> profiles_from_ndjson(const std::filesystem::path& path)
{
    std::vector<AgentProfile> out;
    for (const auto& line : read_ndjson(path)) {
        AgentProfile p;
        p.agent_id = line.at("agent_id").get<std::int64_t>();
        p.attributes = attributes_from_json(line.at("attributes"));
        p.persona_text = line.at("persona_text").get<std::string>();
        if (trim(p.persona_text).empty()) {
            throw SchemaError("profile " + std::to_string(p.agent_id) + " has an empty persona_text");
        }
        out.push_back(std::move(p));
    }
    return out;
}

// ---- stub rules -------------------------------------------------------------

namespace
{

std::string attr(const Json& attrs, const char* key, const char* fallback = "")
{
    if (attrs.contains(key) && attrs[key].is_string() && !attrs[key].get<std::string>().empty()) {
        return attrs[key].get<std::string>();
    }
    return fallback;
}

std::string occupation_phrase(const std::string& occ)
{
    static const std::map<std::string, std::string> phrases = {
        {"full_time", "full-time employee"}, {"part_time", "part-time employee"}, {"trainee", "trainee"},
        {"student", "university student"},   {"pupil", "pupil"},                  {"child", "child"},
        {"homemaker", "homemaker"},          {"unemployed", "job seeker"},         {"retiree", "retiree"},
        {"other", "resident"}};
    const auto it = phrases.find(occ);
    return it == phrases.end() ? (occ.empty() ? std::string("resident") : occ) : it->second;
}

std::string count_phrase(const std::string& n, const char* noun)
{
    const auto v = parse_int(n).value_or(0);
    if (v <= 0) {
        return std::string("no ") + noun;
    }
    return std::to_string(v) + " " + noun + (v == 1 ? "" : "s");
}

} // namespace

std::string stub_persona_response(const Json& context, std::uint64_t seed, int /*version*/)
{
    static constexpr std::array<const char*, 6> traits = {
        "values a predictable daily routine.",
        "likes to keep errands close to home.",
        "is rarely in a hurry and enjoys time outdoors.",
        "plans the day carefully and dislikes delays.",
        "is sociable and often meets friends in the neighbourhood.",
        "keeps an eye on expenses and prefers practical choices.",
    };
    const Json& attrs = context.contains("attributes") ? context["attributes"] : Json::object();
    const std::string population = context.value("population", std::string("the city"));
    const std::string age = attr(attrs, "age", "adult");
    std::string who = occupation_phrase(attr(attrs, "occupation"));
    const std::string sex = attr(attrs, "sex");

    std::string text = "A " + age + (age == "adult" ? " " : "-year-old ") + who;
    if (!sex.empty()) {
        text += " (" + sex + ")";
    }
    text += " living in " + population;
    if (const auto hh = attr(attrs, "household_size"); !hh.empty()) {
        text += " in a household of " + hh;
    }
    text += ".";
    if (const auto status = attr(attrs, "economic_status"); !status.empty()) {
        std::string readable = status;
        std::replace(readable.begin(), readable.end(), '_', ' ');
        text += " Economic status is " + readable + ".";
    }
    text += " The household has " + count_phrase(attr(attrs, "car_ownership", "0"), "car") + " and " +
            count_phrase(attr(attrs, "bike_ownership", "0"), "bike") + ".";
    text += " This person ";
    text += traits[seed % traits.size()];
    return Json{{"description", text}}.dump();
}

} // namespace agentsim
