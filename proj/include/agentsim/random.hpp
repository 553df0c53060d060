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

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace agentsim
{

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Independent stream seed for (global seed, agent, stage). Parallel workers draw
/// from these, so results never depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t agent_id,
                                    std::string_view stage) noexcept
{
    return splitmix64(splitmix64(global_seed ^ fnv1a64(stage)) + splitmix64(agent_id + 0x632be59bd9b4e019ULL));
}

/// Platform-stable generator. std::mt19937_64 output is fixed by the standard; the
/// distribution helpers below avoid the implementation-defined std distributions.
class Rng
{
public:
    explicit Rng(std::uint64_t seed)
        : m_engine(splitmix64(seed))
    {
    }

    std::uint64_t next()
    {
        return m_engine();
    }

    /// Uniform in [0, 1).
    double uniform()
    {
        return static_cast<double>(m_engine() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi)
    {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n)
    {
        // Lemire-style rejection keeps the draw exactly uniform.
        const std::uint64_t bound = n;
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = m_engine();
            if (r >= threshold) {
                return static_cast<std::size_t>(r % bound);
            }
        }
    }

    bool bernoulli(double p)
    {
        return uniform() < p;
    }

private:
    std::mt19937_64 m_engine;
};

} // namespace agentsim
