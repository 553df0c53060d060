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
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "agentsim/errors.hpp"
#include "agentsim/pipeline.hpp"
#include "agentsim/toy_city.hpp"

namespace fs = std::filesystem;
using namespace agentsim;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitStage = 3;

struct Options {
    std::string config;
    std::string out = "run";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> stages;
    bool force = false;
    bool no_probe = false;
};

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("-c,--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", o.out, "run directory");
    cmd->add_option("--seed", o.seed, "override the global seed");
    cmd->add_flag("--force", o.force, "rerun even when digests match");
}

RunConfig load(const Options& o)
{
    auto c = RunConfig::load(o.config);
    if (o.seed) {
        c.seed = *o.seed;
    }
    return c;
}

void report(const StageOutcome& s)
{
    if (s.skipped) {
        std::printf("%-10s skipped (up to date)\n", s.stage.c_str());
        return;
    }
    std::printf("%-10s done in %.2f s  %s\n", s.stage.c_str(), s.record.seconds, s.record.tallies.dump().c_str());
}

int run_stages(const Options& o, const std::vector<std::string>& stages)
{
    RunConfig c;
    try {
        c = load(o);
    }
    catch (const Error& e) {
        std::cerr << "config: " << e.what() << "\n";
        return kExitInvalid;
    }
    const auto problems = validate_config(c, c.backend.kind == BackendConfig::Kind::RemoteChat && !o.no_probe);
    if (!problems.empty()) {
        for (const auto& p : problems) {
            std::cerr << "invalid config: " << p << "\n";
        }
        return kExitInvalid;
    }
    try {
        for (const auto& s : stages) {
            report(run_stage(s, c, o.out, o.force));
        }
    }
    catch (const std::exception& e) {
        std::cerr << "stage failed: " << e.what() << "\n";
        return kExitStage;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"agentsim: staged agent-based travel demand simulation"};
    app.require_subcommand(1);
    Options o;

    const std::vector<std::pair<std::string, std::vector<std::string>>> single = {
        {"synth", {"synth"}},
        {"personas", {"personas"}},
        {"schedules", {"schedules"}},
        {"locations", {"locations"}},
        {"routes", {"locations", "routes"}},
        {"modes", {"modes"}},
        {"assign", {"assign"}},
        {"evaluate", {"evaluate"}},
    };
    std::vector<std::pair<CLI::App*, std::vector<std::string>>> stage_cmds;
    for (const auto& [name, stages] : single) {
        auto* cmd = app.add_subcommand(name, "run the " + name + " stage");
        add_common(cmd, o);
        stage_cmds.emplace_back(cmd, stages);
    }

    auto* all = app.add_subcommand("run-all", "run every enabled stage in order");
    add_common(all, o);
    all->add_option("--stages", o.stages, "restrict to these stages (comma separated)")->delimiter(',');

    auto* validate = app.add_subcommand("validate-config", "check a configuration without running it");
    validate->add_option("-c,--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    validate->add_flag("--no-probe", o.no_probe, "skip the backend reachability probe");

    std::string toy_dir;
    ToyCityOptions toy;
    auto* make_toy = app.add_subcommand("make-toy-city", "write the synthetic toy city inputs");
    make_toy->add_option("dir", toy_dir, "output directory")->required();
    make_toy->add_option("--seed", toy.seed, "generator seed");
    make_toy->add_option("--fraction", toy.sample_fraction, "sample fraction written to config.json");

    CLI11_PARSE(app, argc, argv);

    for (const auto& [cmd, stages] : stage_cmds) {
        if (cmd->parsed()) {
            return run_stages(o, stages);
        }
    }
    if (all->parsed()) {
        std::vector<std::string> chosen;
        RunConfig c;
        try {
            c = load(o);
        }
        catch (const Error& e) {
            std::cerr << "config: " << e.what() << "\n";
            return kExitInvalid;
        }
        for (const auto& s : stage_names()) {
            const bool picked = o.stages.empty() || std::find(o.stages.begin(), o.stages.end(), s) != o.stages.end();
            if (picked && c.enabled(s)) {
                chosen.push_back(s);
            }
        }
        for (const auto& s : o.stages) {
            if (std::find(stage_names().begin(), stage_names().end(), s) == stage_names().end()) {
                std::cerr << "unknown stage '" << s << "'\n";
                return kExitInvalid;
            }
        }
        return run_stages(o, chosen);
    }
    if (validate->parsed()) {
        try {
            const auto c = RunConfig::load(o.config);
            const auto problems = validate_config(c, !o.no_probe);
            for (const auto& p : problems) {
                std::cout << "violation: " << p << "\n";
            }
            if (problems.empty()) {
                std::cout << "config ok\n";
                return kExitOk;
            }
            return kExitInvalid;
        }
        catch (const Error& e) {
            std::cout << "violation: " << e.what() << "\n";
            return kExitInvalid;
        }
    }
    if (make_toy->parsed()) {
        try {
            write_toy_city(toy_dir, toy);
            std::cout << "toy city written to " << toy_dir << "\n";
            return kExitOk;
        }
        catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return kExitStage;
        }
    }
    return kExitInvalid;
}
