#include "passnet/evaluation.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "passnet/error.hpp"
#include "passnet/io_util.hpp"

namespace passnet {

namespace {

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f_score(double precision, double recall) {
    return safe_ratio(2.0 * precision * recall, precision + recall);
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

// Cumulative (false positives, true positives) after each distinct threshold.
std::vector<std::pair<double, double>> sweep(std::span<const double> scores,
                                             std::span<const int> positive) {
    const auto order = descending_order(scores);
    std::vector<std::pair<double, double>> counts;
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (positive[order[i]] ? tp : fp) += 1.0;
        if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]]) {
            counts.emplace_back(fp, tp);
        }
    }
    return counts;
}

}  // namespace

std::optional<double> auc_rank(std::span<const double> scores, std::span<const int> positive) {
    if (scores.size() != positive.size()) {
        throw Error(ErrorKind::LengthMismatch, "scores and labels differ in length");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tied groups (1-based).
    double positive_rank_sum = 0.0;
    double n_pos = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (positive[order[k]]) {
                positive_rank_sum += rank;
                n_pos += 1.0;
            }
        }
        i = j;
    }
    const double n_neg = static_cast<double>(scores.size()) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;
    return (positive_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const int> positive) {
    const double n_pos = static_cast<double>(std::count_if(positive.begin(), positive.end(),
                                                           [](int p) { return p != 0; }));
    const double n_neg = static_cast<double>(positive.size()) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) return {};
    std::vector<CurvePoint> curve{{0.0, 0.0}};
    for (const auto& [fp, tp] : sweep(scores, positive)) curve.push_back({fp / n_neg, tp / n_pos});
    return curve;
}

std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const int> positive) {
    const double n_pos = static_cast<double>(std::count_if(positive.begin(), positive.end(),
                                                           [](int p) { return p != 0; }));
    if (n_pos == 0.0) return {};
    std::vector<CurvePoint> curve;
    for (const auto& [fp, tp] : sweep(scores, positive)) curve.push_back({tp / n_pos, tp / (tp + fp)});
    return curve;
}

double trapezoid_area(const std::vector<CurvePoint>& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        area += (curve[i].x - curve[i - 1].x) * (curve[i].y + curve[i - 1].y) / 2.0;
    }
    return area;
}

EvaluationReport evaluate(const Eigen::MatrixXd& probabilities, std::span<const int> labels,
                          std::span<const int> classes, Averaging averaging, double threshold) {
    const auto n = static_cast<std::size_t>(probabilities.rows());
    if (labels.size() != n || probabilities.cols() != static_cast<Eigen::Index>(classes.size())) {
        throw Error(ErrorKind::LengthMismatch, "probabilities, labels and classes are misaligned");
    }
    if (n == 0) throw Error(ErrorKind::EmptyData, "nothing to evaluate");

    EvaluationReport report;
    report.averaging = averaging;
    report.classes.assign(classes.begin(), classes.end());
    const std::size_t k = classes.size();
    report.confusion.assign(k, std::vector<long>(k, 0));
    const auto column_of = [&](int label) -> std::size_t {
        const auto it = std::find(classes.begin(), classes.end(), label);
        if (it == classes.end()) {
            throw Error(ErrorKind::LengthMismatch, fmt::format("label {} not among classes", label));
        }
        return static_cast<std::size_t>(it - classes.begin());
    };

    if (averaging == Averaging::BinaryPositive) {
        if (k != 2) throw Error(ErrorKind::LengthMismatch, "binary evaluation needs two classes");
        const std::size_t pos = column_of(1);
        const std::size_t neg = 1 - pos;
        std::vector<double> scores(n);
        std::vector<int> positive(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = probabilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pos));
            positive[i] = labels[i] == 1 ? 1 : 0;
            const std::size_t predicted = scores[i] >= threshold ? pos : neg;
            ++report.confusion[column_of(labels[i])][predicted];
        }
        const double tp = static_cast<double>(report.confusion[pos][pos]);
        const double fp = static_cast<double>(report.confusion[neg][pos]);
        const double fn = static_cast<double>(report.confusion[pos][neg]);
        report.precision = safe_ratio(tp, tp + fp);
        report.recall = safe_ratio(tp, tp + fn);
        report.f1 = f_score(report.precision, report.recall);
        report.auc = auc_rank(scores, positive);
        report.roc = roc_curve(scores, positive);
        report.pr = pr_curve(scores, positive);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            probabilities.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
            ++report.confusion[column_of(labels[i])][static_cast<std::size_t>(best)];
        }
        for (std::size_t c = 0; c < k; ++c) {
            double tp = static_cast<double>(report.confusion[c][c]);
            double predicted = 0.0;
            double actual = 0.0;
            for (std::size_t o = 0; o < k; ++o) {
                predicted += static_cast<double>(report.confusion[o][c]);
                actual += static_cast<double>(report.confusion[c][o]);
            }
            const double p = safe_ratio(tp, predicted);
            const double r = safe_ratio(tp, actual);
            report.precision += p;
            report.recall += r;
            report.f1 += f_score(p, r);
        }
        report.precision /= static_cast<double>(k);
        report.recall /= static_cast<double>(k);
        report.f1 /= static_cast<double>(k);
    }
    long correct = 0;
    for (std::size_t c = 0; c < k; ++c) correct += report.confusion[c][c];
    report.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return report;
}

nlohmann::json to_json(const EvaluationReport& report) {
    nlohmann::json doc = {
        {"accuracy", report.accuracy},
        {"precision", report.precision},
        {"recall", report.recall},
        {"f1", report.f1},
        {"averaging", report.averaging == Averaging::BinaryPositive ? "binary" : "macro"},
        {"auc", report.auc ? nlohmann::json(*report.auc) : nlohmann::json(nullptr)},
        {"classes", report.classes},
        {"confusion_matrix", report.confusion}};
    return doc;
}

std::string curve_csv(const std::vector<CurvePoint>& curve, std::string_view x_name,
                      std::string_view y_name) {
    std::string out = fmt::format("{},{}\n", x_name, y_name);
    for (const auto& p : curve) {
        out += fmt::format("{},{}\n", io::format_double(p.x), io::format_double(p.y));
    }
    return out;
}

}  // namespace passnet
