#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace passnet {

/// Error classes raised by the library. The CLI maps each class onto an exit
/// code through `exit_code()`.
enum class ErrorKind {
    MalformedInput,
    MissingStarters,
    DuplicateMatch,
    UnresolvableSubstitution,
    NoPositions,
    InsufficientHistory,
    TooFewRows,
    DegenerateData,
    NonFiniteFeature,
    FeatureMismatch,
    SingleClassLabels,
    KTooLarge,
    SingleCluster,
    LengthMismatch,
    EmptyData,
    InvalidRepeats,
    TooManyFeaturesForExact,
    EmptyBackground,
    ZeroVariance,
    TooShort,
    MissingTeam,
    UnknownLeague,
    MissingArtifact,
    ConfigError,
    NumericFailure,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// 2 config error, 3 data error, 4 numeric failure.
int exit_code(ErrorKind kind);

}  // namespace passnet
