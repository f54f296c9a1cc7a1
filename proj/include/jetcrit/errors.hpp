#pragma once

#include <stdexcept>
#include <string>

namespace jetcrit {

/// Base class for all runtime numerical failures (CLI exit code 1).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configuration / input errors (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivergentIntegral : NumericalError { using NumericalError::NumericalError; };
struct OutOfRange : NumericalError { using NumericalError::NumericalError; };
struct ProfileDegenerate : NumericalError { using NumericalError::NumericalError; };
struct InvalidModel : ConfigError { using ConfigError::ConfigError; };

struct ToleranceNotMet : NumericalError { using NumericalError::NumericalError; };
struct NonFiniteSample : NumericalError { using NumericalError::NumericalError; };
struct NoSignChange : NumericalError { using NumericalError::NumericalError; };
struct SingularPivot : NumericalError { using NumericalError::NumericalError; };
struct NoConvergence : NumericalError { using NumericalError::NumericalError; };

struct ResolutionTooCoarse : ConfigError { using ConfigError::ConfigError; };
struct GridMismatch : NumericalError { using NumericalError::NumericalError; };

struct SeedBracketFailure : NumericalError { using NumericalError::NumericalError; };
struct ChordBoundDegenerate : NumericalError { using NumericalError::NumericalError; };
struct NoFeasibleBeta : NumericalError { using NumericalError::NumericalError; };
struct NoRoot : NumericalError { using NumericalError::NumericalError; };
struct DerivativeBounded : NumericalError { using NumericalError::NumericalError; };

}  // namespace jetcrit
