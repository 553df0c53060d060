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
#include "fake_backend.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace agentsim;

namespace
{

const char* kThomas =
    "Meet 43-year-old Thomas, a married man living in Berlin with his wife and two children. As a full-time "
    "working professional, he spends most of his days commuting to the city center for work, although he "
    "occasionally uses his car for short trips around the city with his family.";

Attributes retiree()
{
    return {{"age", "78"},           {"sex", "female"},        {"occupation", "retiree"},
            {"economic_status", "low"}, {"household_size", "2"}, {"car_ownership", "1"},
            {"bike_ownership", "0"}};
}

Agent agent(std::int64_t id, Attributes a)
{
    return {id, "r" + std::to_string(id), std::move(a)};
}

} // namespace

TEST(PersonaPrompt, lists_attributes_in_schema_order)
{
    const auto schema = AttributeSchema::default_mobility();
    const auto p = build_description_prompt(retiree(), schema);
    EXPECT_FALSE(p.system.has_value());
    EXPECT_NE(p.user.find("Sample attributes from the Berlin population:\n"), std::string::npos);
    EXPECT_NE(p.user.find("Imagine a realistic person with these attributes"), std::string::npos);
    const auto age = p.user.find("age: 78\n");
    const auto occ = p.user.find("occupation: retiree\n");
    const auto cars = p.user.find("car_ownership: 1\n");
    ASSERT_NE(age, std::string::npos);
    EXPECT_LT(age, occ);
    EXPECT_LT(occ, cars);
    // the optional income band is absent and must not be rendered
    EXPECT_EQ(p.user.find("income_band"), std::string::npos);
}

TEST(PersonaPrompt, unknown_attribute_is_schema_error)
{
    auto a = retiree();
    a["favourite_colour"] = "blue";
    EXPECT_THROW(build_description_prompt(a, AttributeSchema::default_mobility()), SchemaError);
}

TEST(PersonaParse, accepts_wrapped_json_and_python_literals)
{
    EXPECT_EQ(parse_persona_response("Sure!\n```json\n{\"description\": \"A person.\"}\n```"), "A person.");
    EXPECT_EQ(parse_persona_response("{'description': 'Single quoted.'}"), "Single quoted.");
    EXPECT_THROW(parse_persona_response("{\"text\": \"no description key\"}"), ParseError);
    EXPECT_THROW(parse_persona_response("{\"description\": \"   \"}"), ParseError);
    EXPECT_THROW(parse_persona_response("plain prose"), ParseError);
}

TEST(PersonaGenerate, stub_describes_the_attributes)
{
    StubBackend stub;
    const auto prof = generate_persona(agent(1847, retiree()), stub, 7, AttributeSchema::default_mobility());
    EXPECT_EQ(prof.agent_id, 1847);
    EXPECT_NE(prof.persona_text.find("78-year-old retiree"), std::string::npos);
    EXPECT_NE(prof.persona_text.find("1 car"), std::string::npos);
    EXPECT_EQ(prof.attributes, retiree());
}

TEST(PersonaGenerate, recorded_paragraph_is_kept_verbatim)
{
    FunctionBackend echo([](const GenerationRequest&) { return Json{{"description", kThomas}}.dump(); });
    auto attrs = retiree();
    attrs["age"] = "43";
    attrs["occupation"] = "full_time";
    const auto prof = generate_persona(agent(3828, attrs), echo, 1, AttributeSchema::default_mobility());
    EXPECT_EQ(prof.persona_text, kThomas);
    EXPECT_EQ(echo.last.key, "persona/3828");
    EXPECT_EQ(echo.last.task, TaskKind::Persona);
}

TEST(PersonaGenerate, missing_description_exhausts_retries)
{
    FunctionBackend bad([](const GenerationRequest&) { return std::string("{\"name\": \"x\"}"); });
    CountingBackend counting(bad);
    PersonaOptions opts;
    opts.max_retries = 2;
    EXPECT_THROW(generate_persona(agent(1, retiree()), counting, 1, AttributeSchema::default_mobility(), opts),
                 ParseError);
    EXPECT_EQ(counting.calls(), 3);
}

TEST(PersonaGenerate, retry_recovers_after_a_bad_answer)
{
    FunctionBackend flaky([](const GenerationRequest& r) {
        return r.attempt == 0 ? std::string("oops") : std::string("{\"description\": \"ok\"}");
    });
    CountingBackend counting(flaky);
    const auto prof = generate_persona(agent(5, retiree()), counting, 1, AttributeSchema::default_mobility());
    EXPECT_EQ(prof.persona_text, "ok");
    EXPECT_EQ(counting.calls(), 2);
}

TEST(PersonaGenerate, deterministic_and_order_independent)
{
    SyntheticPopulation pop;
    for (int i = 30; i > 0; --i) {
        auto a = retiree();
        a["age"] = std::to_string(18 + i);
        pop.agents.push_back(agent(i, a));
    }
    StubBackend stub;
    PersonaOptions serial;
    serial.workers = 1;
    PersonaOptions wide;
    wide.workers = 8;
    const auto a = generate_personas(pop, stub, 11, AttributeSchema::default_mobility(), serial);
    const auto b = generate_personas(pop, stub, 11, AttributeSchema::default_mobility(), wide);
    EXPECT_EQ(a, b);
    ASSERT_EQ(a.size(), 30u);
    for (std::size_t i = 1; i < a.size(); ++i) {
        EXPECT_LT(a[i - 1].agent_id, a[i].agent_id);
    }
    const auto c = generate_personas(pop, stub, 12, AttributeSchema::default_mobility(), serial);
    EXPECT_NE(a, c);
}

TEST(PersonaGenerate, record_then_replay_reproduces_profiles)
{
    TempDir dir;
    SyntheticPopulation pop;
    for (int i = 1; i <= 5; ++i) {
        pop.agents.push_back(agent(i, retiree()));
    }
    StubBackend stub;
    RecordingBackend rec(stub);
    const auto live = generate_personas(pop, rec, 3, AttributeSchema::default_mobility());
    rec.flush(dir.path() / "backend_personas.jsonl");
    ReplayBackend replay(dir.path());
    const auto again = generate_personas(pop, replay, 3, AttributeSchema::default_mobility());
    EXPECT_EQ(live, again);
    // a different seed is a different request, which the log cannot answer
    EXPECT_THROW(generate_personas(pop, replay, 4, AttributeSchema::default_mobility()), TransportError);
}

TEST(PersonaIo, ndjson_round_trip)
{
    TempDir dir;
    std::vector<AgentProfile> profiles = {{1, retiree(), "first"}, {2, retiree(), "second \"quoted\""}};
    write_text_file(dir.path() / "p.ndjson", profiles_to_ndjson(profiles));
    EXPECT_EQ(profiles_from_ndjson(dir.path() / "p.ndjson"), profiles);
    write_text_file(dir.path() / "bad.ndjson", "{\"agent_id\": 1, \"attributes\": {}, \"persona_text\": \"\"}\n");
    EXPECT_THROW(profiles_from_ndjson(dir.path() / "bad.ndjson"), SchemaError);
}
