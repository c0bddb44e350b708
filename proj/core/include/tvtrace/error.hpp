#pragma once

#include <stdexcept>
#include <string>

namespace tvtrace {

/// Malformed or unreadable input (capture files, CSV fixtures, configuration).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An analysis stage was handed data that violates its preconditions
/// (series too short, empty selection, degenerate fit range).
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tvtrace
