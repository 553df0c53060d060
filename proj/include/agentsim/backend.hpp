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

// Text-generation backends. Every model call in the pipeline goes through
// GenerationBackend::generate; the concrete kinds are a chat-completions HTTP client,
// a deterministic offline stub, and a replay of a recorded session.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "agentsim/errors.hpp"
#include "agentsim/io.hpp"
#include "agentsim/random.hpp"

namespace agentsim
{

enum class TaskKind
{
    Persona,
    Schedule,
    ModeChoice
};

std::string to_string(TaskKind task);
TaskKind task_from_string(std::string_view name);

struct ChatMessage {
    std::string role;
    std::string content;
};

/// A rendered prompt: optional system message plus the user message.
struct Prompt {
    std::optional<std::string> system;
    std::string user;

    std::vector<ChatMessage> messages() const;
    /// System and user text joined by a blank line.
    std::string text() const;
};

struct GenerationRequest {
    TaskKind task = TaskKind::Persona;
    /// Stable identifier of the call site, e.g. "persona/42".
    std::string key;
    Prompt prompt;
    std::uint64_t seed = 0;
    int attempt = 0;
    /// Structured view of what the prompt encodes. Only the stub reads it; it is not
    /// part of the request digest.
    Json context;

    /// SHA-256 over task, messages, seed and attempt.
    std::string digest() const;
};

class GenerationBackend
{
public:
    virtual ~GenerationBackend() = default;
    /// Raw model response text. Throws TransportError when no response is available.
    virtual std::string generate(const GenerationRequest& request) = 0;
};

struct BackendConfig {
    enum class Kind
    {
        RemoteChat,
        Stub,
        Replay
    };

    Kind kind = Kind::Stub;
    std::string endpoint; ///< full URL of the chat-completions route
    std::string model;
    double temperature = 0.7;
    int max_retries = 2;
    int timeout_seconds = 120;
    int workers = 4;
    int stub_version = 1;
    std::filesystem::path replay_path; ///< log file or directory of logs
    bool record = true;

    static BackendConfig from_json(const Json& doc);
    Json to_json() const;
};

/// Deterministic rule-based responder for offline runs and tests.
class StubBackend final : public GenerationBackend
{
public:
    explicit StubBackend(int rule_version = 1)
        : m_version(rule_version)
    {
    }
    std::string generate(const GenerationRequest& request) override;

private:
    int m_version;
};

/// POSTs {"model", "messages", "temperature", "seed"} to a chat-completions endpoint
/// and returns choices[0].message.content.
class RemoteChatBackend final : public GenerationBackend
{
public:
    explicit RemoteChatBackend(BackendConfig config);
    std::string generate(const GenerationRequest& request) override;

private:
    BackendConfig m_config;
    std::string m_base;
    std::string m_path;
};

/// Serves responses recorded by RecordingBackend, keyed by request digest.
class ReplayBackend final : public GenerationBackend
{
public:
    explicit ReplayBackend(const std::filesystem::path& log_path_or_dir);
    std::string generate(const GenerationRequest& request) override;
    std::size_t size() const noexcept
    {
        return m_responses.size();
    }

private:
    std::map<std::string, std::string> m_responses;
};

/// Forwards to an inner backend and keeps every exchange. flush() writes the
/// exchanges sorted by (key, attempt), independent of worker completion order.
class RecordingBackend final : public GenerationBackend
{
public:
    explicit RecordingBackend(GenerationBackend& inner)
        : m_inner(inner)
    {
    }
    std::string generate(const GenerationRequest& request) override;
    std::string to_ndjson() const;
    void flush(const std::filesystem::path& path) const;
    std::size_t size() const;

private:
    GenerationBackend& m_inner;
    mutable std::mutex m_mutex;
    std::map<std::pair<std::string, int>, Json> m_entries;
};

/// Counts calls; used to check retry bounds.
class CountingBackend final : public GenerationBackend
{
public:
    explicit CountingBackend(GenerationBackend& inner)
        : m_inner(inner)
    {
    }
    std::string generate(const GenerationRequest& request) override
    {
        {
            std::lock_guard lock(m_mutex);
            ++m_calls;
        }
        return m_inner.generate(request);
    }
    int calls() const
    {
        std::lock_guard lock(m_mutex);
        return m_calls;
    }

private:
    GenerationBackend& m_inner;
    mutable std::mutex m_mutex;
    int m_calls = 0;
};

std::unique_ptr<GenerationBackend> make_backend(const BackendConfig& config);

/// Connectivity check for remote endpoints: nullopt when reachable, otherwise a
/// human-readable probe detail.
std::optional<std::string> probe_endpoint(const BackendConfig& config);

/// Issues the request, re-requesting (attempt 1..max_retries, with a derived seed) on
/// TransportError or ParseError from `parse`. At most 1 + max_retries calls; the last
/// error is rethrown.
template <typename Parse>
auto request_with_retries(GenerationBackend& backend, GenerationRequest request, int max_retries, Parse&& parse)
    -> decltype(parse(std::string{}))
{
    const std::uint64_t base_seed = request.seed;
    std::exception_ptr last;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        request.attempt = attempt;
        request.seed = attempt == 0 ? base_seed : splitmix64(base_seed + static_cast<std::uint64_t>(attempt));
        try {
            return parse(backend.generate(request));
        }
        catch (const ParseError&) {
            last = std::current_exception();
        }
        catch (const TransportError&) {
            last = std::current_exception();
        }
    }
    std::rethrow_exception(last);
}

// Stub rule tables, implemented next to the prompts they answer.
std::string stub_persona_response(const Json& context, std::uint64_t seed, int version);
std::string stub_schedule_response(const Json& context, std::uint64_t seed, int version);
std::string stub_mode_response(const Json& context, std::uint64_t seed, int version);

} // namespace agentsim
