#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "passnet/features.hpp"
#include "passnet/tree.hpp"

namespace passnet {

enum class ModelFamily { LogisticRegression, RandomForest, GradientBoosting };

std::string_view to_string(ModelFamily family);
ModelFamily parse_model_family(std::string_view text);

/// Hyperparameters by name:
///   LR  l2_strength
///   RF  n_trees, max_depth, min_leaf, features_per_split (0 = floor(sqrt(p))), bootstrap
///   GB  n_rounds, learning_rate, max_depth, min_leaf
/// Missing entries fall back to defaults.
struct ModelSpec {
    ModelFamily family = ModelFamily::RandomForest;
    std::map<std::string, double> hyperparameters;
    std::uint64_t seed = 0;

    double get(const std::string& name) const;
    bool operator==(const ModelSpec&) const = default;
};

double default_hyperparameter(ModelFamily family, const std::string& name);

struct LogisticParams {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    /// classes x features, on standardized inputs. Row 0 is pinned at zero.
    Eigen::MatrixXd weights;
    Eigen::VectorXd intercepts;
    std::size_t iterations = 0;
    /// Objective value after every accepted iterate, starting at the origin.
    std::vector<double> objective_trace;
};

struct ForestParams {
    std::vector<DecisionTree> trees;
};

struct BoostParams {
    /// One additive sequence per modelled class: a single sequence for class
    /// index 1 in the binary case, one per class (one-vs-rest) otherwise.
    std::vector<double> base_scores;
    std::vector<std::vector<DecisionTree>> rounds;
    double learning_rate = 0.1;
};

struct TrainedModel {
    ModelSpec spec;
    std::vector<std::string> feature_names;
    /// Distinct training labels, ascending; probability columns follow this order.
    std::vector<int> classes;
    std::variant<LogisticParams, ForestParams, BoostParams> params;
};

/// Row indices of the train and test partitions, each ascending.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

Split stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

/// k disjoint folds of row indices (each ascending) covering every row.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, std::size_t k,
                                                       std::uint64_t seed);

TrainedModel train(const ModelSpec& spec, const LabeledData& data);

/// n x classes probability matrix. Throws FeatureMismatch when `feature_names`
/// differ from the model's.
Eigen::MatrixXd predict_proba(const TrainedModel& model, const Eigen::MatrixXd& x,
                              const std::vector<std::string>& feature_names);
Eigen::MatrixXd predict_proba(const TrainedModel& model, const LabeledData& data);

/// Column of `label` in the probability matrix, or -1.
int class_column(const TrainedModel& model, int label);

nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);

}  // namespace passnet
