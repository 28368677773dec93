#include "passnet/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "passnet/error.hpp"
#include "passnet/evaluation.hpp"
#include "passnet/io_util.hpp"
#include "passnet/parallel.hpp"
#include "passnet/random.hpp"

namespace passnet {

namespace {

std::vector<std::size_t> descending_ranking(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return order;
}

double score_model(const TrainedModel& model, const Eigen::MatrixXd& x, const LabeledData& data,
                   ImportanceMetric metric) {
    const Eigen::MatrixXd proba = predict_proba(model, x, data.feature_names);
    const bool binary = model.classes == std::vector<int>{0, 1};
    const auto report =
        evaluate(proba, data.y, model.classes, binary ? Averaging::BinaryPositive : Averaging::Macro);
    if (metric == ImportanceMetric::Auc) {
        if (!report.auc) throw Error(ErrorKind::SingleClassLabels, "AUC undefined on held-out labels");
        return *report.auc;
    }
    return report.accuracy;
}

// Mean scorer output over the background with coalition columns taken from `row`.
Eigen::VectorXd coalition_values(const BatchScorer& scorer, const Eigen::RowVectorXd& row,
                                 const Eigen::MatrixXd& background,
                                 const std::vector<std::vector<bool>>& coalitions) {
    const auto b = background.rows();
    const auto p = background.cols();
    Eigen::MatrixXd batch(static_cast<Eigen::Index>(coalitions.size()) * b, p);
    for (std::size_t s = 0; s < coalitions.size(); ++s) {
        auto block = batch.middleRows(static_cast<Eigen::Index>(s) * b, b);
        block = background;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (coalitions[s][static_cast<std::size_t>(j)]) block.col(j).setConstant(row(j));
        }
    }
    const Eigen::VectorXd out = scorer(batch);
    Eigen::VectorXd values(static_cast<Eigen::Index>(coalitions.size()));
    for (std::size_t s = 0; s < coalitions.size(); ++s) {
        values(static_cast<Eigen::Index>(s)) = out.segment(static_cast<Eigen::Index>(s) * b, b).mean();
    }
    return values;
}

Eigen::VectorXd exact_row(const BatchScorer& scorer, const Eigen::RowVectorXd& row,
                          const Eigen::MatrixXd& background) {
    const auto p = static_cast<std::size_t>(row.size());
    const std::size_t count = std::size_t{1} << p;
    std::vector<std::vector<bool>> coalitions(count, std::vector<bool>(p));
    for (std::size_t mask = 0; mask < count; ++mask) {
        for (std::size_t j = 0; j < p; ++j) coalitions[mask][j] = (mask >> j) & 1U;
    }
    const Eigen::VectorXd v = coalition_values(scorer, row, background, coalitions);

    // weight(s) = s! (p-s-1)! / p!
    std::vector<double> weight(p);
    for (std::size_t s = 0; s < p; ++s) {
        weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                             std::lgamma(static_cast<double>(p - s)) -
                             std::lgamma(static_cast<double>(p) + 1.0));
    }
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (std::size_t mask = 0; mask < count; ++mask) {
        const auto size = static_cast<std::size_t>(std::popcount(mask));
        for (std::size_t j = 0; j < p; ++j) {
            if ((mask >> j) & 1U) continue;
            const std::size_t with = mask | (std::size_t{1} << j);
            phi(static_cast<Eigen::Index>(j)) +=
                weight[size] * (v(static_cast<Eigen::Index>(with)) - v(static_cast<Eigen::Index>(mask)));
        }
    }
    return phi;
}

Eigen::VectorXd sampled_row(const BatchScorer& scorer, const Eigen::RowVectorXd& row,
                            const Eigen::MatrixXd& background, std::size_t samples, Rng& rng) {
    const auto p = static_cast<std::size_t>(row.size());
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    std::vector<std::size_t> order(p);
    std::vector<std::vector<bool>> chain(p + 1, std::vector<bool>(p, false));
    for (std::size_t s = 0; s < samples; ++s) {
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t step = 1; step <= p; ++step) {
            chain[step] = chain[step - 1];
            chain[step][order[step - 1]] = true;
        }
        const Eigen::VectorXd v = coalition_values(scorer, row, background, chain);
        for (std::size_t step = 1; step <= p; ++step) {
            phi(static_cast<Eigen::Index>(order[step - 1])) +=
                v(static_cast<Eigen::Index>(step)) - v(static_cast<Eigen::Index>(step - 1));
        }
    }
    return phi / static_cast<double>(samples);
}

}  // namespace

BatchScorer class_one_scorer(const TrainedModel& model) {
    const int column = class_column(model, 1);
    if (column < 0) throw Error(ErrorKind::FeatureMismatch, "model has no class 1");
    return [&model, column](const Eigen::MatrixXd& x) -> Eigen::VectorXd {
        return predict_proba(model, x, model.feature_names).col(column);
    };
}

ImportanceReport permutation_importance(const TrainedModel& model, const LabeledData& held_out,
                                        std::size_t repeats, std::uint64_t seed,
                                        ImportanceMetric metric) {
    if (repeats == 0) throw Error(ErrorKind::InvalidRepeats, "permutation importance needs repeats >= 1");
    if (held_out.feature_names != model.feature_names) {
        throw Error(ErrorKind::FeatureMismatch, "held-out features do not match the model");
    }
    ImportanceReport report;
    report.baseline = score_model(model, held_out.x, held_out, metric);

    const auto p = static_cast<std::size_t>(held_out.x.cols());
    const auto n = static_cast<std::size_t>(held_out.x.rows());
    report.features.resize(p);
    parallel_for(p, [&](std::size_t j) {
        std::vector<double> drops(repeats);
        Eigen::MatrixXd shuffled = held_out.x;
        std::vector<std::size_t> order(n);
        for (std::size_t r = 0; r < repeats; ++r) {
            Rng rng(derive_seed(seed, j * repeats + r));
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(std::span<std::size_t>(order));
            for (std::size_t i = 0; i < n; ++i) {
                shuffled(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    held_out.x(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(j));
            }
            drops[r] = report.baseline - score_model(model, shuffled, held_out, metric);
        }
        const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / static_cast<double>(repeats);
        double ss = 0.0;
        for (const double d : drops) ss += (d - mean) * (d - mean);
        report.features[j] = {held_out.feature_names[j], mean, std::sqrt(ss / static_cast<double>(repeats)), 0};
    });

    std::vector<double> means(p);
    for (std::size_t j = 0; j < p; ++j) means[j] = report.features[j].mean_drop;
    report.ranking = descending_ranking(means);
    for (std::size_t r = 0; r < p; ++r) report.features[report.ranking[r]].rank = r + 1;
    return report;
}

std::string importance_csv(const ImportanceReport& report, std::size_t top_n) {
    std::string out = "feature,mean_drop,std_drop,rank\n";
    const std::size_t limit = top_n == 0 ? report.ranking.size() : std::min(top_n, report.ranking.size());
    for (std::size_t r = 0; r < limit; ++r) {
        const auto& f = report.features[report.ranking[r]];
        out += fmt::format("{},{},{},{}\n", f.feature, io::format_double(f.mean_drop),
                           io::format_double(f.std_drop), f.rank);
    }
    return out;
}

ShapleyMatrix shapley_values(const BatchScorer& scorer, const std::vector<std::string>& feature_names,
                             const Eigen::MatrixXd& rows, const Eigen::MatrixXd& background,
                             const ShapleyOptions& options) {
    if (background.rows() == 0) throw Error(ErrorKind::EmptyBackground, "background set is empty");
    const auto p = static_cast<std::size_t>(rows.cols());
    if (feature_names.size() != p || background.cols() != rows.cols()) {
        throw Error(ErrorKind::FeatureMismatch, "rows, background and feature names disagree");
    }
    if (options.mode == ShapleyMode::Exact && p > kMaxExactFeatures) {
        throw Error(ErrorKind::TooManyFeaturesForExact,
                    fmt::format("exact Shapley supports at most {} features, got {}", kMaxExactFeatures, p));
    }
    if (options.mode == ShapleyMode::MonteCarlo && options.samples == 0) {
        throw Error(ErrorKind::ConfigError, "Monte-Carlo Shapley needs samples >= 1");
    }

    ShapleyMatrix out;
    out.feature_names = feature_names;
    out.rows = rows;
    out.base_value = scorer(background).mean();
    out.contributions.resize(rows.rows(), rows.cols());
    parallel_for(static_cast<std::size_t>(rows.rows()), [&](std::size_t i) {
        const Eigen::RowVectorXd row = rows.row(static_cast<Eigen::Index>(i));
        Eigen::VectorXd phi;
        if (options.mode == ShapleyMode::Exact) {
            phi = exact_row(scorer, row, background);
        } else {
            Rng rng(derive_seed(options.seed, i));
            phi = sampled_row(scorer, row, background, options.samples, rng);
        }
        out.contributions.row(static_cast<Eigen::Index>(i)) = phi.transpose();
    });
    return out;
}

ShapSummary shap_summary(const ShapleyMatrix& matrix) {
    ShapSummary summary;
    summary.features = matrix.feature_names;
    const auto p = static_cast<std::size_t>(matrix.contributions.cols());
    summary.mean_abs.resize(p, 0.0);
    if (matrix.contributions.rows() > 0) {
        for (std::size_t j = 0; j < p; ++j) {
            summary.mean_abs[j] = matrix.contributions.col(static_cast<Eigen::Index>(j)).cwiseAbs().mean();
        }
    }
    summary.ranking = descending_ranking(summary.mean_abs);
    return summary;
}

std::string shapley_csv(const ShapleyMatrix& matrix, const std::vector<std::string>& row_ids) {
    std::string out = "row_id,feature,feature_value,contribution\n";
    for (Eigen::Index i = 0; i < matrix.contributions.rows(); ++i) {
        const std::string id = static_cast<std::size_t>(i) < row_ids.size()
                                   ? row_ids[static_cast<std::size_t>(i)]
                                   : std::to_string(i);
        for (Eigen::Index j = 0; j < matrix.contributions.cols(); ++j) {
            out += fmt::format("{},{},{},{}\n", id, matrix.feature_names[static_cast<std::size_t>(j)],
                               io::format_double(matrix.rows(i, j)),
                               io::format_double(matrix.contributions(i, j)));
        }
    }
    return out;
}

nlohmann::json to_json(const ShapSummary& summary, double base_value, std::size_t top_n) {
    nlohmann::json ranking = nlohmann::json::array();
    const std::size_t limit = top_n == 0 ? summary.ranking.size() : std::min(top_n, summary.ranking.size());
    for (std::size_t r = 0; r < limit; ++r) {
        const std::size_t j = summary.ranking[r];
        ranking.push_back({{"feature", summary.features[j]},
                           {"mean_abs_contribution", summary.mean_abs[j]},
                           {"rank", r + 1}});
    }
    return {{"base_value", base_value}, {"ranking", ranking}};
}

}  // namespace passnet
