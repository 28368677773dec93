#include "passnet/tuning.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "passnet/error.hpp"
#include "passnet/evaluation.hpp"
#include "passnet/parallel.hpp"

namespace passnet {

SearchSpace default_search_space(ModelFamily family) {
    switch (family) {
        case ModelFamily::LogisticRegression:
            return {{"l2_strength", LogUniform{1e-4, 1e2}}};
        case ModelFamily::RandomForest:
            return {{"n_trees", IntRange{100, 500}}, {"max_depth", IntRange{3, 20}}};
        case ModelFamily::GradientBoosting:
            return {{"n_rounds", IntRange{50, 500}},
                    {"learning_rate", LogUniform{0.01, 0.3}},
                    {"max_depth", IntRange{2, 8}}};
    }
    return {};
}

ModelSpec sample_spec(ModelFamily family, const SearchSpace& space, Rng& rng, std::uint64_t seed) {
    ModelSpec spec;
    spec.family = family;
    spec.seed = seed;
    for (const auto& param : space) {
        std::visit(
            [&](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, IntRange>) {
                    spec.hyperparameters[param.name] = static_cast<double>(rng.integer(d.lo, d.hi));
                } else {
                    spec.hyperparameters[param.name] =
                        std::exp(rng.uniform(std::log(d.lo), std::log(d.hi)));
                }
            },
            param.domain);
    }
    return spec;
}

double cross_validated_score(const ModelSpec& spec, const LabeledData& data, std::size_t folds,
                             std::uint64_t fold_seed) {
    const auto assignment = stratified_kfold(data.y, folds, fold_seed);
    const std::set<int> distinct(data.y.begin(), data.y.end());
    const bool binary = distinct.size() == 2 && distinct.count(0) && distinct.count(1);

    double total = 0.0;
    for (std::size_t f = 0; f < assignment.size(); ++f) {
        std::vector<std::size_t> train_rows;
        for (std::size_t g = 0; g < assignment.size(); ++g) {
            if (g != f) train_rows.insert(train_rows.end(), assignment[g].begin(), assignment[g].end());
        }
        std::sort(train_rows.begin(), train_rows.end());
        const LabeledData train_part = data.subset(train_rows);
        const LabeledData test_part = data.subset(assignment[f]);
        const TrainedModel model = train(spec, train_part);
        const Eigen::MatrixXd proba = predict_proba(model, test_part);
        const auto report = evaluate(proba, test_part.y, model.classes,
                                     binary ? Averaging::BinaryPositive : Averaging::Macro);
        total += binary ? report.auc.value_or(0.5) : report.f1;
    }
    return total / static_cast<double>(assignment.size());
}

TuneResult tune(ModelFamily family, const LabeledData& data, std::size_t budget, std::uint64_t seed,
                std::size_t folds, const SearchSpace& space) {
    if (budget == 0) throw Error(ErrorKind::ConfigError, "tuning budget must be at least 1");
    const SearchSpace& domain = space.empty() ? default_search_space(family) : space;

    TuneResult result;
    Rng rng(derive_seed(seed, 0));
    for (std::size_t i = 0; i < budget; ++i) {
        result.candidates.push_back({sample_spec(family, domain, rng, derive_seed(seed, i + 1)), {}, {}});
    }
    const std::uint64_t fold_seed = derive_seed(seed, budget + 1);
    parallel_for(budget, [&](std::size_t i) {
        auto& candidate = result.candidates[i];
        try {
            candidate.score = cross_validated_score(candidate.spec, data, folds, fold_seed);
        } catch (const Error& err) {
            if (err.kind() == ErrorKind::TooFewRows) throw;
            candidate.diagnostic = fmt::format("{}: {}", to_string(err.kind()), err.what());
        }
    });

    const Candidate* best = nullptr;
    for (const auto& c : result.candidates) {
        if (c.score && (best == nullptr || *c.score > *best->score)) best = &c;
    }
    if (best == nullptr) {
        throw Error(ErrorKind::NumericFailure,
                    fmt::format("all {} candidates failed; first: {}", budget,
                                result.candidates.front().diagnostic));
    }
    result.best = best->spec;
    result.best_score = *best->score;
    return result;
}

}  // namespace passnet
