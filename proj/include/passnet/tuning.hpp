#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "passnet/features.hpp"
#include "passnet/models.hpp"

namespace passnet {

struct IntRange {
    long lo = 0;
    long hi = 0;
};
struct LogUniform {
    double lo = 1.0;
    double hi = 1.0;
};

struct ParamDomain {
    std::string name;
    std::variant<IntRange, LogUniform> domain;
};

using SearchSpace = std::vector<ParamDomain>;

/// The declared search grid for each family.
SearchSpace default_search_space(ModelFamily family);

ModelSpec sample_spec(ModelFamily family, const SearchSpace& space, Rng& rng, std::uint64_t seed);

/// Mean cross-validated score: AUC for two-class data, macro F1 otherwise.
double cross_validated_score(const ModelSpec& spec, const LabeledData& data, std::size_t folds,
                             std::uint64_t fold_seed);

struct Candidate {
    ModelSpec spec;
    std::optional<double> score;
    /// Set when training failed and the candidate was skipped.
    std::string diagnostic;
};

struct TuneResult {
    ModelSpec best;
    double best_score = 0.0;
    std::vector<Candidate> candidates;
};

/// Seeded random search: `budget` specs drawn from `space`, each scored by
/// stratified k-fold CV with a shared fold assignment. Ties keep the
/// first-drawn candidate.
TuneResult tune(ModelFamily family, const LabeledData& data, std::size_t budget, std::uint64_t seed,
                std::size_t folds = 10, const SearchSpace& space = {});

}  // namespace passnet
