// Exception type shared by every spinrat module.
//
// Each failure carries an ErrorKind so callers (the CLI in particular) can map
// numerical-contract violations and configuration problems onto exit codes
// without parsing messages.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spinrat {

enum class ErrorKind {
    InvalidParameter,
    Bounds,
    Degeneracy,
    ContractViolation,
    TrackingLost,
    IntegrationAccuracy,
    EnergyOutOfFamily,
    NotFound,
    IslandNotFound,
    NotConverged,
    TracingFailed,
    StepSize,
    UnstablePoint,
    DegenerateIsland,
    Domain,
    InvalidFit,
    Config,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace spinrat
