#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace apmcf {

/// Base class of every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Chart point outside the domain of the ambient chart.
struct DomainError : Error {
    using Error::Error;
};

/// Ambient metric lost positive definiteness (smallest eigenvalue <= 1e-12).
struct DegenerateMetricError : Error {
    using Error::Error;
};

/// Operation asked of the wrong ambient kind (e.g. Ricci estimate outside Schwarzschild).
struct KindError : Error {
    using Error::Error;
};

/// Induced metric degenerate (det g <= 0) at some grid node.
struct DegenerateSurfaceError : Error {
    using Error::Error;
};

/// Integral of H over the surface is nonpositive; the h0 global term is undefined.
struct NonpositiveMeanCurvatureError : Error {
    using Error::Error;
};

/// Surface about to leave the radial-graph class (<nu, omega> margin failed).
struct GraphDegenerationError : Error {
    using Error::Error;
};

/// A time step failed its mid-step invariants even after the retry budget.
struct StepRejectedError : Error {
    using Error::Error;
};

/// Sphere fit impossible (nodes coplanar to working precision).
struct SingularFitError : Error {
    using Error::Error;
};

/// Decay fit asked on a series that is not strictly positive on the window.
struct NonpositiveSeriesError : Error {
    using Error::Error;
};

/// File system failure while writing or reading run artifacts.
struct IoError : Error {
    using Error::Error;
};

/// Configuration errors carry one message per offending line.
struct ConfigError : Error {
    std::vector<std::string> issues;
    explicit ConfigError(const std::string& what, std::vector<std::string> list = {})
        : Error(what), issues(std::move(list)) {}
};

struct ParseError : ConfigError {
    using ConfigError::ConfigError;
};

struct ValidationError : ConfigError {
    using ConfigError::ConfigError;
};

struct UnknownKeyError : ConfigError {
    using ConfigError::ConfigError;
};

}  // namespace apmcf
