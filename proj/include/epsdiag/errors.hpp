/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <stdexcept>
#include <string>

namespace epsdiag {

/// Invalid configuration value. Message names the offending field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or non-finite input data.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dimension mismatch between data and a model or operation.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operation called on an object in an unusable state (e.g. empty store).
class StateError : public std::runtime_error {
public:
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem read/write failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A trained artifact failed a quality gate (e.g. model-bank correlation).
class QualityGateError : public std::runtime_error {
public:
    explicit QualityGateError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace epsdiag
