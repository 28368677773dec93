#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace passnet {

enum class Averaging { BinaryPositive, Macro };

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const CurvePoint&) const = default;
};

struct EvaluationReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Averaging averaging = Averaging::BinaryPositive;
    /// Missing for macro reports and for single-class label sets.
    std::optional<double> auc;
    std::vector<int> classes;
    /// confusion[true class][predicted class].
    std::vector<std::vector<long>> confusion;
    /// (false positive rate, true positive rate), from (0,0) to (1,1).
    std::vector<CurvePoint> roc;
    /// (recall, precision) per distinct threshold, descending threshold.
    std::vector<CurvePoint> pr;
};

/// Binary reports threshold the probability of label 1 (column of label 1 in
/// `classes`). Macro reports take the argmax class and average one-vs-rest
/// precision, recall and F1 over classes.
EvaluationReport evaluate(const Eigen::MatrixXd& probabilities, std::span<const int> labels,
                          std::span<const int> classes, Averaging averaging,
                          double threshold = 0.5);

/// Mann-Whitney statistic: P(score of random positive > random negative),
/// ties counted one half. nullopt when either class is absent.
std::optional<double> auc_rank(std::span<const double> scores, std::span<const int> positive);

std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const int> positive);
std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const int> positive);
double trapezoid_area(const std::vector<CurvePoint>& curve);

nlohmann::json to_json(const EvaluationReport& report);
std::string curve_csv(const std::vector<CurvePoint>& curve, std::string_view x_name,
                      std::string_view y_name);

}  // namespace passnet
