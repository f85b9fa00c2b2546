#pragma once

#include <stdexcept>
#include <string>

namespace imrl {

/// Thrown on shape/schema violations in any module boundary.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a loss or gradient goes non-finite; training cannot continue.
class TrainingAbort : public std::runtime_error {
public:
    explicit TrainingAbort(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when rank statistics are undefined (zero rank variance).
class UndefinedCorrelation : public std::runtime_error {
public:
    explicit UndefinedCorrelation(const std::string& what) : std::runtime_error(what) {}
};

} // namespace imrl
