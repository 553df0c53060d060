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
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "agentsim/backend.hpp"
#include "agentsim/digest.hpp"

#include <algorithm>

namespace agentsim
{

std::string to_string(TaskKind task)
{
    switch (task) {
    case TaskKind::Persona:
        return "persona";
    case TaskKind::Schedule:
        return "schedule";
    case TaskKind::ModeChoice:
        return "mode_choice";
    }
    return "unknown";
}

TaskKind task_from_string(std::string_view name)
{
    if (name == "persona") {
        return TaskKind::Persona;
    }
    if (name == "schedule") {
        return TaskKind::Schedule;
    }
    if (name == "mode_choice") {
        return TaskKind::ModeChoice;
    }
    throw ParseError("unknown task kind '" + std::string(name) + "'");
}

std::vector<ChatMessage> Prompt::messages() const
{
    std::vector<ChatMessage> out;
    if (system) {
        out.push_back({"system", *system});
    }
    out.push_back({"user", user});
    return out;
}

std::string Prompt::text() const
{
    return system ? *system + "\n\n" + user : user;
}

namespace
{

Json messages_json(const Prompt& prompt)
{
    Json arr = Json::array();
    for (const auto& m : prompt.messages()) {
        arr.push_back({{"role", m.role}, {"content", m.content}});
    }
    return arr;
}

} // namespace

std::string GenerationRequest::digest() const
{
    const Json doc = {{"task", to_string(task)}, {"messages", messages_json(prompt)}, {"seed", seed},
                      {"attempt", attempt}};
    return sha256_hex(doc.dump());
}

BackendConfig BackendConfig::from_json(const Json& doc)
{
    BackendConfig c;
    const auto kind = doc.value("kind", std::string("stub"));
    if (kind == "stub") {
        c.kind = Kind::Stub;
    }
    else if (kind == "remote" || kind == "remote_chat") {
        c.kind = Kind::RemoteChat;
    }
    else if (kind == "replay") {
        c.kind = Kind::Replay;
    }
    else {
        throw InputError("backend kind must be stub, remote or replay, got '" + kind + "'");
    }
    c.endpoint = doc.value("endpoint", std::string());
    c.model = doc.value("model", std::string());
    c.temperature = doc.value("temperature", c.temperature);
    c.max_retries = doc.value("max_retries", c.max_retries);
    c.timeout_seconds = doc.value("timeout_seconds", c.timeout_seconds);
    c.workers = doc.value("workers", c.workers);
    c.stub_version = doc.value("stub_version", c.stub_version);
    c.replay_path = doc.value("replay_path", std::string());
    c.record = doc.value("record", c.record);
    if (c.max_retries < 0 || c.max_retries > 20) {
        throw InputError("backend max_retries must be in [0, 20]");
    }
    if (c.workers < 1) {
        throw InputError("backend workers must be at least 1");
    }
    return c;
}

Json BackendConfig::to_json() const
{
    const char* k = kind == Kind::Stub ? "stub" : kind == Kind::RemoteChat ? "remote" : "replay";
    return {{"kind", k},
            {"endpoint", endpoint},
            {"model", model},
            {"temperature", temperature},
            {"max_retries", max_retries},
            {"timeout_seconds", timeout_seconds},
            {"workers", workers},
            {"stub_version", stub_version},
            {"replay_path", replay_path.string()},
            {"record", record}};
}

std::string StubBackend::generate(const GenerationRequest& request)
{
    switch (request.task) {
    case TaskKind::Persona:
        return stub_persona_response(request.context, request.seed, m_version);
    case TaskKind::Schedule:
        return stub_schedule_response(request.context, request.seed, m_version);
    case TaskKind::ModeChoice:
        return stub_mode_response(request.context, request.seed, m_version);
    }
    throw TransportError("stub: unknown task");
}

namespace
{

// "http://host:8000/v1/chat/completions" -> ("http://host:8000", "/v1/chat/completions")
std::pair<std::string, std::string> split_url(const std::string& url)
{
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw InputError("endpoint '" + url + "' lacks a scheme (http:// or https://)");
    }
    const auto path = url.find('/', scheme + 3);
    if (path == std::string::npos) {
        return {url, "/v1/chat/completions"};
    }
    return {url.substr(0, path), url.substr(path)};
}

} // namespace

RemoteChatBackend::RemoteChatBackend(BackendConfig config)
    : m_config(std::move(config))
{
    if (m_config.endpoint.empty()) {
        throw InputError("remote backend requires an endpoint URL");
    }
    std::tie(m_base, m_path) = split_url(m_config.endpoint);
}

std::string RemoteChatBackend::generate(const GenerationRequest& request)
{
    httplib::Client client(m_base);
    client.set_connection_timeout(std::min(m_config.timeout_seconds, 30), 0);
    client.set_read_timeout(m_config.timeout_seconds, 0);
    client.set_write_timeout(m_config.timeout_seconds, 0);

    Json body = {{"model", m_config.model},
                 {"messages", messages_json(request.prompt)},
                 {"temperature", m_config.temperature},
                 {"seed", request.seed}};
    auto res = client.Post(m_path, body.dump(), "application/json");
    if (!res) {
        throw TransportError("POST " + m_config.endpoint + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw TransportError("POST " + m_config.endpoint + " returned HTTP " + std::to_string(res->status));
    }
    try {
        const Json doc = Json::parse(res->body);
        if (doc.contains("choices") && !doc["choices"].empty()) {
            const auto& choice = doc["choices"][0];
            if (choice.contains("message") && choice["message"].contains("content")) {
                return choice["message"]["content"].get<std::string>();
            }
            if (choice.contains("text")) {
                return choice["text"].get<std::string>();
            }
        }
        if (doc.contains("content") && doc["content"].is_string()) {
            return doc["content"].get<std::string>();
        }
    }
    catch (const Json::exception&) {
    }
    throw TransportError("response from " + m_config.endpoint + " is not a chat completion");
}

ReplayBackend::ReplayBackend(const std::filesystem::path& log_path_or_dir)
{
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(log_path_or_dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(log_path_or_dir)) {
            const auto name = entry.path().filename().string();
            if (name.starts_with("backend_") && name.ends_with(".jsonl")) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    }
    else if (std::filesystem::exists(log_path_or_dir)) {
        files.push_back(log_path_or_dir);
    }
    else {
        throw InputError("replay log '" + log_path_or_dir.string() + "' does not exist");
    }
    for (const auto& f : files) {
        for (const auto& entry : read_ndjson(f)) {
            m_responses[entry.at("digest").get<std::string>()] = entry.at("response").get<std::string>();
        }
    }
}

std::string ReplayBackend::generate(const GenerationRequest& request)
{
    const auto it = m_responses.find(request.digest());
    if (it == m_responses.end()) {
        throw TransportError("replay: no recorded response for " + request.key + " (attempt " +
                             std::to_string(request.attempt) + ")");
    }
    return it->second;
}

std::string RecordingBackend::generate(const GenerationRequest& request)
{
    Json entry = {{"key", request.key},
                  {"task", to_string(request.task)},
                  {"attempt", request.attempt},
                  {"seed", request.seed},
                  {"digest", request.digest()},
                  {"messages", messages_json(request.prompt)}};
    try {
        std::string response = m_inner.generate(request);
        entry["response"] = response;
        std::lock_guard lock(m_mutex);
        m_entries[{request.key, request.attempt}] = std::move(entry);
        return response;
    }
    catch (const TransportError& e) {
        entry["error"] = e.what();
        std::lock_guard lock(m_mutex);
        m_entries[{request.key, request.attempt}] = std::move(entry);
        throw;
    }
}

std::string RecordingBackend::to_ndjson() const
{
    std::lock_guard lock(m_mutex);
    std::string out;
    for (const auto& [k, entry] : m_entries) {
        if (!entry.contains("response")) {
            continue;
        }
        out += entry.dump();
        out.push_back('\n');
    }
    return out;
}

void RecordingBackend::flush(const std::filesystem::path& path) const
{
    write_text_file(path, to_ndjson());
}

std::size_t RecordingBackend::size() const
{
    std::lock_guard lock(m_mutex);
    return m_entries.size();
}

std::unique_ptr<GenerationBackend> make_backend(const BackendConfig& config)
{
    switch (config.kind) {
    case BackendConfig::Kind::Stub:
        return std::make_unique<StubBackend>(config.stub_version);
    case BackendConfig::Kind::RemoteChat:
        return std::make_unique<RemoteChatBackend>(config);
    case BackendConfig::Kind::Replay:
        return std::make_unique<ReplayBackend>(config.replay_path);
    }
    throw InputError("unknown backend kind");
}

std::optional<std::string> probe_endpoint(const BackendConfig& config)
{
    if (config.kind != BackendConfig::Kind::RemoteChat) {
        return std::nullopt;
    }
    if (config.endpoint.empty()) {
        return "remote backend has no endpoint";
    }
    std::pair<std::string, std::string> parts;
    try {
        parts = split_url(config.endpoint);
    }
    catch (const InputError& e) {
        return std::string(e.what());
    }
    httplib::Client client(parts.first);
    client.set_connection_timeout(3, 0);
    client.set_read_timeout(5, 0);
    auto res = client.Get("/");
    if (!res) {
        return "cannot reach " + parts.first + ": " + httplib::to_string(res.error());
    }
    return std::nullopt;
}

} // namespace agentsim
