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

#include <stdexcept>
#include <string>

namespace agentsim
{

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad weights, inconsistent marginals, ...).
class InputError : public Error
{
public:
    using Error::Error;
};

/// Attribute or category not declared in the active schema.
class SchemaError : public Error
{
public:
    using Error::Error;
};

/// Text could not be parsed (CSV, JSON, OSM, GTFS, backend responses).
class ParseError : public Error
{
public:
    using Error::Error;
};

/// TRS remainder cannot be drawn without replacement.
class DegenerateWeightsError : public Error
{
public:
    using Error::Error;
};

/// Iterative fit stopped at max_iters; carries the last deviation.
class ConvergenceError : public Error
{
public:
    ConvergenceError(const std::string& what, double deviation)
        : Error(what)
        , m_deviation(deviation)
    {
    }

    double deviation() const noexcept
    {
        return m_deviation;
    }

private:
    double m_deviation;
};

/// Backend request could not be delivered or answered.
class TransportError : public Error
{
public:
    using Error::Error;
};

/// No path or itinerary exists for a query in a given mode.
class NoRouteError : public Error
{
public:
    using Error::Error;
};

/// Lookup in an empty choice set (no buildings of a category, no residential buildings).
class EmptySetError : public Error
{
public:
    using Error::Error;
};

/// Pipeline stage started without its upstream artifacts.
class MissingArtifactError : public Error
{
public:
    using Error::Error;
};

/// Upstream artifacts were produced under a different configuration.
class StaleArtifactError : public Error
{
public:
    using Error::Error;
};

} // namespace agentsim
