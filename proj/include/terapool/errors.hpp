/*
 * Copyright 2026 The TeraPool-Sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
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

namespace terapool {

/// Base of every error raised by the simulator and its models.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Word address outside the configured L1.
class AddressError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value, preset, or structural invariant.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Operand shapes that do not conform (FFT size, matrix dims).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Kernel working set does not fit the L1 region it is mapped to.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Division by zero or a similar numerical failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A load curve never reaches a throughput plateau.
class NotSaturated : public Error {
public:
    using Error::Error;
};

/// Cycle budget exhausted while requests were still in flight.
class DeadlockSuspected : public Error {
public:
    DeadlockSuspected(const std::string& what, unsigned long long in_flight)
        : Error(what), in_flight_(in_flight) {}

    [[nodiscard]] unsigned long long in_flight() const noexcept { return in_flight_; }

private:
    unsigned long long in_flight_;
};

}  // namespace terapool
