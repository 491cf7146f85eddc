#include "spinrat/errors.hpp"

namespace spinrat {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidParameter: return "invalid-parameter";
        case ErrorKind::Bounds: return "bounds";
        case ErrorKind::Degeneracy: return "degeneracy";
        case ErrorKind::ContractViolation: return "contract-violation";
        case ErrorKind::TrackingLost: return "tracking-lost";
        case ErrorKind::IntegrationAccuracy: return "integration-accuracy";
        case ErrorKind::EnergyOutOfFamily: return "energy-out-of-family";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::IslandNotFound: return "island-not-found";
        case ErrorKind::NotConverged: return "not-converged";
        case ErrorKind::TracingFailed: return "tracing-failed";
        case ErrorKind::StepSize: return "step-size";
        case ErrorKind::UnstablePoint: return "unstable-point";
        case ErrorKind::DegenerateIsland: return "degenerate-island";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::InvalidFit: return "invalid-fit";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace spinrat
