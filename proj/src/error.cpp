#include "passnet/error.hpp"

namespace passnet {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedInput: return "MalformedInput";
        case ErrorKind::MissingStarters: return "MissingStarters";
        case ErrorKind::DuplicateMatch: return "DuplicateMatch";
        case ErrorKind::UnresolvableSubstitution: return "UnresolvableSubstitution";
        case ErrorKind::NoPositions: return "NoPositions";
        case ErrorKind::InsufficientHistory: return "InsufficientHistory";
        case ErrorKind::TooFewRows: return "TooFewRows";
        case ErrorKind::DegenerateData: return "DegenerateData";
        case ErrorKind::NonFiniteFeature: return "NonFiniteFeature";
        case ErrorKind::FeatureMismatch: return "FeatureMismatch";
        case ErrorKind::SingleClassLabels: return "SingleClassLabels";
        case ErrorKind::KTooLarge: return "KTooLarge";
        case ErrorKind::SingleCluster: return "SingleCluster";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::EmptyData: return "EmptyData";
        case ErrorKind::InvalidRepeats: return "InvalidRepeats";
        case ErrorKind::TooManyFeaturesForExact: return "TooManyFeaturesForExact";
        case ErrorKind::EmptyBackground: return "EmptyBackground";
        case ErrorKind::ZeroVariance: return "ZeroVariance";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::MissingTeam: return "MissingTeam";
        case ErrorKind::UnknownLeague: return "UnknownLeague";
        case ErrorKind::MissingArtifact: return "MissingArtifact";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::NumericFailure: return "NumericFailure";
    }
    return "Unknown";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ConfigError:
        case ErrorKind::MissingArtifact:
        case ErrorKind::UnknownLeague:
        case ErrorKind::InvalidRepeats:
        case ErrorKind::TooManyFeaturesForExact:
            return 2;
        case ErrorKind::NumericFailure:
        case ErrorKind::ZeroVariance:
        case ErrorKind::SingleClassLabels:
            return 4;
        default:
            return 3;
    }
}

}  // namespace passnet
