#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "passnet/features.hpp"
#include "passnet/models.hpp"

namespace passnet {

/// Maps a batch of rows to one output per row.
using BatchScorer = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Probability of label 1 (home win) under `model`.
BatchScorer class_one_scorer(const TrainedModel& model);

enum class ImportanceMetric { Accuracy, Auc };

struct FeatureImportance {
    std::string feature;
    double mean_drop = 0.0;
    double std_drop = 0.0;
    std::size_t rank = 0;  // 1-based
};

struct ImportanceReport {
    /// In feature order; `ranking` lists indices by descending mean drop.
    std::vector<FeatureImportance> features;
    std::vector<std::size_t> ranking;
    double baseline = 0.0;
};

/// Score drop when one column of held-out data is shuffled, averaged over
/// `repeats` shuffles per feature.
ImportanceReport permutation_importance(const TrainedModel& model, const LabeledData& held_out,
                                        std::size_t repeats, std::uint64_t seed,
                                        ImportanceMetric metric = ImportanceMetric::Accuracy);

/// `feature,mean_drop,std_drop,rank`, best first, at most `top_n` rows (0 = all).
std::string importance_csv(const ImportanceReport& report, std::size_t top_n);

enum class ShapleyMode { Exact, MonteCarlo };

struct ShapleyOptions {
    ShapleyMode mode = ShapleyMode::MonteCarlo;
    std::size_t samples = 128;
    std::uint64_t seed = 0;
};

struct ShapleyMatrix {
    std::vector<std::string> feature_names;
    Eigen::MatrixXd rows;           // explained rows
    Eigen::MatrixXd contributions;  // rows x features
    double base_value = 0.0;
};

inline constexpr std::size_t kMaxExactFeatures = 12;

/// Interventional Shapley values: absent features take background values and
/// the coalition value is the mean score over the background rows.
/// Exact enumerates all coalitions; MonteCarlo averages marginal gains over
/// `samples` random feature orderings per row.
ShapleyMatrix shapley_values(const BatchScorer& scorer, const std::vector<std::string>& feature_names,
                             const Eigen::MatrixXd& rows, const Eigen::MatrixXd& background,
                             const ShapleyOptions& options);

struct ShapSummary {
    std::vector<std::string> features;
    std::vector<double> mean_abs;   // per feature, in feature order
    std::vector<std::size_t> ranking;
};

ShapSummary shap_summary(const ShapleyMatrix& matrix);

/// `row_id,feature,feature_value,contribution`
std::string shapley_csv(const ShapleyMatrix& matrix, const std::vector<std::string>& row_ids);
nlohmann::json to_json(const ShapSummary& summary, double base_value, std::size_t top_n);

}  // namespace passnet
