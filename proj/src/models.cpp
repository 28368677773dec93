#include "passnet/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "passnet/error.hpp"
#include "passnet/parallel.hpp"
#include "passnet/random.hpp"

namespace passnet {

namespace {

constexpr double kGradientTolerance = 1e-8;
constexpr std::size_t kMaxNewtonIterations = 5000;

void check_finite(const Eigen::MatrixXd& x) {
    if (!x.allFinite()) throw Error(ErrorKind::NonFiniteFeature, "feature matrix contains NaN or inf");
}

// Maps raw labels onto [0, classes.size()).
std::vector<int> class_indices(std::span<const int> labels, const std::vector<int>& classes) {
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) -
                                  classes.begin());
    }
    return out;
}

// ---------------------------------------------------------------- logistic

// Multinomial logistic regression with class 0 as reference, mean negative
// log-likelihood plus (l2/2)||W||^2 (intercepts unpenalized).
class LogisticObjective {
public:
    LogisticObjective(const Eigen::MatrixXd& design, std::span<const int> y, int n_classes, double l2)
        : design_(design), y_(y), free_(n_classes - 1), l2_(l2),
          dim_(design.cols()) {}

    Eigen::Index size() const { return free_ * dim_; }

    Eigen::MatrixXd logits(const Eigen::VectorXd& theta) const {
        Eigen::MatrixXd eta(design_.rows(), free_ + 1);
        eta.col(0).setZero();
        for (Eigen::Index k = 0; k < free_; ++k) {
            eta.col(k + 1) = design_ * theta.segment(k * dim_, dim_);
        }
        return eta;
    }

    static Eigen::MatrixXd softmax(const Eigen::MatrixXd& eta) {
        Eigen::MatrixXd p = eta;
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            const double top = p.row(i).maxCoeff();
            p.row(i) = (p.row(i).array() - top).exp();
            p.row(i) /= p.row(i).sum();
        }
        return p;
    }

    double value(const Eigen::VectorXd& theta) const {
        const Eigen::MatrixXd eta = logits(theta);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < eta.rows(); ++i) {
            const double top = eta.row(i).maxCoeff();
            const double lse = top + std::log((eta.row(i).array() - top).exp().sum());
            loss += lse - eta(i, y_[static_cast<std::size_t>(i)]);
        }
        return loss / static_cast<double>(eta.rows()) + 0.5 * l2_ * penalty(theta);
    }

    void derivatives(const Eigen::VectorXd& theta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
        const Eigen::MatrixXd p = softmax(logits(theta));
        const double n = static_cast<double>(design_.rows());
        grad.resize(size());
        hess.resize(size(), size());
        for (Eigen::Index k = 0; k < free_; ++k) {
            Eigen::VectorXd residual = p.col(k + 1);
            for (Eigen::Index i = 0; i < residual.size(); ++i) {
                if (y_[static_cast<std::size_t>(i)] == k + 1) residual(i) -= 1.0;
            }
            grad.segment(k * dim_, dim_) = design_.transpose() * residual / n;
            grad.segment(k * dim_ + 1, dim_ - 1) += l2_ * theta.segment(k * dim_ + 1, dim_ - 1);
            for (Eigen::Index l = 0; l < free_; ++l) {
                Eigen::VectorXd w = -p.col(k + 1).cwiseProduct(p.col(l + 1));
                if (k == l) w += p.col(k + 1);
                hess.block(k * dim_, l * dim_, dim_, dim_) =
                    design_.transpose() * w.asDiagonal() * design_ / n;
            }
            for (Eigen::Index j = 1; j < dim_; ++j) hess(k * dim_ + j, k * dim_ + j) += l2_;
        }
    }

private:
    double penalty(const Eigen::VectorXd& theta) const {
        double sq = 0.0;
        for (Eigen::Index k = 0; k < free_; ++k) {
            sq += theta.segment(k * dim_ + 1, dim_ - 1).squaredNorm();
        }
        return sq;
    }

    const Eigen::MatrixXd& design_;
    std::span<const int> y_;
    Eigen::Index free_;
    double l2_;
    Eigen::Index dim_;
};

LogisticParams fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                            double l2) {
    const auto n = x.rows();
    const auto p = x.cols();
    LogisticParams fit;
    fit.mean = x.colwise().mean().transpose();
    fit.scale.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double sd = std::sqrt((x.col(j).array() - fit.mean(j)).square().mean());
        fit.scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) =
        (x.rowwise() - fit.mean.transpose()).array().rowwise() / fit.scale.transpose().array();

    const LogisticObjective objective(design, y, n_classes, l2);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(objective.size());
    double current = objective.value(theta);
    fit.objective_trace.push_back(current);

    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    for (fit.iterations = 0; fit.iterations < kMaxNewtonIterations; ++fit.iterations) {
        objective.derivatives(theta, grad, hess);
        if (grad.lpNorm<Eigen::Infinity>() < kGradientTolerance) break;

        Eigen::VectorXd step;
        const Eigen::LDLT<Eigen::MatrixXd> solver(hess);
        if (solver.info() == Eigen::Success) step = -solver.solve(grad);
        if (step.size() == 0 || !step.allFinite() || step.dot(grad) >= 0.0) step = -grad;

        // Armijo backtracking keeps the objective non-increasing.
        const double slope = step.dot(grad);
        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            const Eigen::VectorXd candidate = theta + t * step;
            const double value = objective.value(candidate);
            if (value <= current + 1e-4 * t * slope) {
                theta = candidate;
                current = value;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;  // no representable decrease left
        fit.objective_trace.push_back(current);
    }

    fit.weights = Eigen::MatrixXd::Zero(n_classes, p);
    fit.intercepts = Eigen::VectorXd::Zero(n_classes);
    for (int k = 1; k < n_classes; ++k) {
        fit.intercepts(k) = theta((k - 1) * (p + 1));
        fit.weights.row(k) = theta.segment((k - 1) * (p + 1) + 1, p).transpose();
    }
    return fit;
}

Eigen::MatrixXd predict_logistic(const LogisticParams& fit, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd z =
        (x.rowwise() - fit.mean.transpose()).array().rowwise() / fit.scale.transpose().array();
    Eigen::MatrixXd eta = z * fit.weights.transpose();
    eta.rowwise() += fit.intercepts.transpose();
    return LogisticObjective::softmax(eta);
}

// ------------------------------------------------------------------ forest

ForestParams fit_forest(const ModelSpec& spec, const Eigen::MatrixXd& x, std::span<const int> y,
                        int n_classes) {
    const auto n_trees = static_cast<std::size_t>(spec.get("n_trees"));
    const auto p = static_cast<std::size_t>(x.cols());
    TreeParams params;
    params.max_depth = static_cast<int>(spec.get("max_depth"));
    params.min_leaf = static_cast<std::size_t>(spec.get("min_leaf"));
    const auto requested = static_cast<std::size_t>(spec.get("features_per_split"));
    params.features_per_split =
        requested > 0 ? requested
                      : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(p))));
    const bool bootstrap = spec.get("bootstrap") != 0.0;
    const auto n = static_cast<std::size_t>(x.rows());

    ForestParams forest;
    forest.trees.resize(n_trees);
    parallel_for(n_trees, [&](std::size_t t) {
        Rng rng(derive_seed(spec.seed, t));
        std::vector<std::size_t> rows(n);
        if (bootstrap) {
            for (auto& r : rows) r = rng.index(n);
            std::sort(rows.begin(), rows.end());
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        forest.trees[t] = fit_classification_tree(x, y, n_classes, rows, params, rng);
    });
    return forest;
}

Eigen::MatrixXd predict_forest(const ForestParams& forest, const Eigen::MatrixXd& x, int n_classes) {
    Eigen::MatrixXd proba = Eigen::MatrixXd::Zero(x.rows(), n_classes);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (const auto& tree : forest.trees) {
            const auto& leaf = tree.leaf_value(x.row(i));
            for (int c = 0; c < n_classes; ++c) proba(i, c) += leaf[static_cast<std::size_t>(c)];
        }
    }
    if (!forest.trees.empty()) proba /= static_cast<double>(forest.trees.size());
    return proba;
}

// ----------------------------------------------------------------- boosting

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

BoostParams fit_boosting(const ModelSpec& spec, const Eigen::MatrixXd& x, std::span<const int> y,
                         int n_classes) {
    BoostParams boost;
    boost.learning_rate = spec.get("learning_rate");
    const auto n_rounds = static_cast<std::size_t>(spec.get("n_rounds"));
    TreeParams params;
    params.max_depth = static_cast<int>(spec.get("max_depth"));
    params.min_leaf = static_cast<std::size_t>(spec.get("min_leaf"));

    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);

    std::vector<int> targets;
    if (n_classes == 2) {
        targets = {1};
    } else {
        targets.resize(static_cast<std::size_t>(n_classes));
        std::iota(targets.begin(), targets.end(), 0);
    }
    boost.base_scores.resize(targets.size());
    boost.rounds.resize(targets.size());

    parallel_for(targets.size(), [&](std::size_t t) {
        std::vector<double> target(n);
        for (std::size_t i = 0; i < n; ++i) target[i] = y[i] == targets[t] ? 1.0 : 0.0;
        const double rate = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(n);
        const double base = std::log(rate / (1.0 - rate));
        boost.base_scores[t] = base;

        std::vector<double> score(n, base);
        std::vector<double> residual(n);
        std::vector<double> hessian(n);
        auto& sequence = boost.rounds[t];
        sequence.reserve(n_rounds);
        for (std::size_t round = 0; round < n_rounds; ++round) {
            for (std::size_t i = 0; i < n; ++i) {
                const double prob = sigmoid(score[i]);
                residual[i] = target[i] - prob;
                hessian[i] = prob * (1.0 - prob);
            }
            DecisionTree tree = fit_regression_tree(x, residual, hessian, rows, params);
            for (std::size_t i = 0; i < n; ++i) {
                score[i] += boost.learning_rate * tree.leaf_value(x.row(static_cast<Eigen::Index>(i)))[0];
            }
            sequence.push_back(std::move(tree));
        }
    });
    return boost;
}

Eigen::MatrixXd predict_boosting(const BoostParams& boost, const Eigen::MatrixXd& x, int n_classes) {
    Eigen::MatrixXd proba(x.rows(), n_classes);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::vector<double> margin(boost.base_scores);
        for (std::size_t t = 0; t < boost.rounds.size(); ++t) {
            for (const auto& tree : boost.rounds[t]) {
                margin[t] += boost.learning_rate * tree.leaf_value(x.row(i))[0];
            }
        }
        if (n_classes == 2) {
            const double p1 = sigmoid(margin[0]);
            proba(i, 0) = 1.0 - p1;
            proba(i, 1) = p1;
        } else {
            double total = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                proba(i, c) = sigmoid(margin[static_cast<std::size_t>(c)]);
                total += proba(i, c);
            }
            proba.row(i) /= total;
        }
    }
    return proba;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd vector_from(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> vector_to(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string_view to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::LogisticRegression: return "lr";
        case ModelFamily::RandomForest: return "rf";
        case ModelFamily::GradientBoosting: return "gb";
    }
    return "rf";
}

ModelFamily parse_model_family(std::string_view text) {
    if (text == "lr") return ModelFamily::LogisticRegression;
    if (text == "rf") return ModelFamily::RandomForest;
    if (text == "gb") return ModelFamily::GradientBoosting;
    throw Error(ErrorKind::ConfigError, fmt::format("unknown model family '{}'", text));
}

double default_hyperparameter(ModelFamily family, const std::string& name) {
    static const std::map<std::pair<ModelFamily, std::string>, double> defaults = {
        {{ModelFamily::LogisticRegression, "l2_strength"}, 1e-2},
        {{ModelFamily::RandomForest, "n_trees"}, 200},
        {{ModelFamily::RandomForest, "max_depth"}, 10},
        {{ModelFamily::RandomForest, "min_leaf"}, 1},
        {{ModelFamily::RandomForest, "features_per_split"}, 0},
        {{ModelFamily::RandomForest, "bootstrap"}, 1},
        {{ModelFamily::GradientBoosting, "n_rounds"}, 100},
        {{ModelFamily::GradientBoosting, "learning_rate"}, 0.1},
        {{ModelFamily::GradientBoosting, "max_depth"}, 3},
        {{ModelFamily::GradientBoosting, "min_leaf"}, 1},
    };
    const auto it = defaults.find({family, name});
    if (it == defaults.end()) {
        throw Error(ErrorKind::ConfigError,
                    fmt::format("{} has no hyperparameter '{}'", to_string(family), name));
    }
    return it->second;
}

double ModelSpec::get(const std::string& name) const {
    const auto it = hyperparameters.find(name);
    return it != hyperparameters.end() ? it->second : default_hyperparameter(family, name);
}

Split stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    if (by_class.size() < 2) {
        throw Error(ErrorKind::TooFewRows, "stratified split needs at least two classes");
    }
    Split split;
    std::size_t stream = 0;
    for (auto& [label, rows] : by_class) {
        if (rows.size() < 2) {
            throw Error(ErrorKind::TooFewRows, fmt::format("class {} has fewer than 2 rows", label));
        }
        Rng rng(derive_seed(seed, stream++));
        rng.shuffle(std::span<std::size_t>(rows));
        auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
        split.test.insert(split.test.end(), rows.begin(), rows.begin() + static_cast<long>(n_test));
        split.train.insert(split.train.end(), rows.begin() + static_cast<long>(n_test), rows.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 2) throw Error(ErrorKind::TooFewRows, "k-fold needs k >= 2");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t stream = 0;
    std::size_t next_fold = 0;
    for (auto& [label, rows] : by_class) {
        if (rows.size() < k) {
            throw Error(ErrorKind::TooFewRows,
                        fmt::format("class {} has {} rows, fewer than {} folds", label, rows.size(), k));
        }
        Rng rng(derive_seed(seed, stream++));
        rng.shuffle(std::span<std::size_t>(rows));
        // Dealing continues where the previous class stopped so fold sizes stay balanced.
        for (const auto r : rows) {
            folds[next_fold].push_back(r);
            next_fold = (next_fold + 1) % k;
        }
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

TrainedModel train(const ModelSpec& spec, const LabeledData& data) {
    check_finite(data.x);
    if (data.x.rows() == 0) throw Error(ErrorKind::EmptyData, "no training rows");
    const std::set<int> distinct(data.y.begin(), data.y.end());
    if (distinct.size() < 2) {
        throw Error(ErrorKind::DegenerateData, "training labels contain a single class");
    }

    TrainedModel model;
    model.spec = spec;
    model.feature_names = data.feature_names;
    model.classes.assign(distinct.begin(), distinct.end());
    const auto y = class_indices(data.y, model.classes);
    const int n_classes = static_cast<int>(model.classes.size());

    switch (spec.family) {
        case ModelFamily::LogisticRegression:
            model.params = fit_logistic(data.x, y, n_classes, spec.get("l2_strength"));
            break;
        case ModelFamily::RandomForest:
            model.params = fit_forest(spec, data.x, y, n_classes);
            break;
        case ModelFamily::GradientBoosting:
            model.params = fit_boosting(spec, data.x, y, n_classes);
            break;
    }
    return model;
}

Eigen::MatrixXd predict_proba(const TrainedModel& model, const Eigen::MatrixXd& x,
                              const std::vector<std::string>& feature_names) {
    if (feature_names != model.feature_names ||
        x.cols() != static_cast<Eigen::Index>(model.feature_names.size())) {
        throw Error(ErrorKind::FeatureMismatch, "feature names do not match the trained model");
    }
    check_finite(x);
    const int n_classes = static_cast<int>(model.classes.size());
    return std::visit(
        [&](const auto& params) -> Eigen::MatrixXd {
            using T = std::decay_t<decltype(params)>;
            if constexpr (std::is_same_v<T, LogisticParams>) {
                return predict_logistic(params, x);
            } else if constexpr (std::is_same_v<T, ForestParams>) {
                return predict_forest(params, x, n_classes);
            } else {
                return predict_boosting(params, x, n_classes);
            }
        },
        model.params);
}

Eigen::MatrixXd predict_proba(const TrainedModel& model, const LabeledData& data) {
    return predict_proba(model, data.x, data.feature_names);
}

int class_column(const TrainedModel& model, int label) {
    const auto it = std::find(model.classes.begin(), model.classes.end(), label);
    return it == model.classes.end() ? -1 : static_cast<int>(it - model.classes.begin());
}

nlohmann::json to_json(const TrainedModel& model) {
    nlohmann::json doc = {{"format", "passnet-model"},
                          {"version", 1},
                          {"family", std::string(to_string(model.spec.family))},
                          {"hyperparameters", model.spec.hyperparameters},
                          {"seed", model.spec.seed},
                          {"feature_names", model.feature_names},
                          {"classes", model.classes}};
    std::visit(
        [&](const auto& params) {
            using T = std::decay_t<decltype(params)>;
            if constexpr (std::is_same_v<T, LogisticParams>) {
                doc["params"] = {{"mean", vector_to(params.mean)},
                                 {"scale", vector_to(params.scale)},
                                 {"weights", matrix_json(params.weights)},
                                 {"intercepts", vector_to(params.intercepts)}};
            } else if constexpr (std::is_same_v<T, ForestParams>) {
                nlohmann::json trees = nlohmann::json::array();
                for (const auto& tree : params.trees) trees.push_back(to_json(tree));
                doc["params"] = {{"trees", trees}};
            } else {
                nlohmann::json rounds = nlohmann::json::array();
                for (const auto& sequence : params.rounds) {
                    nlohmann::json trees = nlohmann::json::array();
                    for (const auto& tree : sequence) trees.push_back(to_json(tree));
                    rounds.push_back(trees);
                }
                doc["params"] = {{"base_scores", params.base_scores},
                                 {"learning_rate", params.learning_rate},
                                 {"rounds", rounds}};
            }
        },
        model.params);
    return doc;
}

TrainedModel model_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "passnet-model" || doc.at("version") != 1) {
            throw Error(ErrorKind::MalformedInput, "unsupported model document version");
        }
        TrainedModel model;
        model.spec.family = parse_model_family(doc.at("family").get<std::string>());
        model.spec.hyperparameters = doc.at("hyperparameters").get<std::map<std::string, double>>();
        model.spec.seed = doc.at("seed").get<std::uint64_t>();
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        model.classes = doc.at("classes").get<std::vector<int>>();
        const auto& params = doc.at("params");
        switch (model.spec.family) {
            case ModelFamily::LogisticRegression: {
                LogisticParams lr;
                lr.mean = vector_from(params.at("mean"));
                lr.scale = vector_from(params.at("scale"));
                lr.intercepts = vector_from(params.at("intercepts"));
                const auto rows = params.at("weights").get<std::vector<std::vector<double>>>();
                lr.weights.resize(static_cast<Eigen::Index>(rows.size()), lr.mean.size());
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    for (std::size_t j = 0; j < rows[i].size(); ++j) {
                        lr.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
                    }
                }
                model.params = std::move(lr);
                break;
            }
            case ModelFamily::RandomForest: {
                ForestParams rf;
                for (const auto& tree : params.at("trees")) rf.trees.push_back(tree_from_json(tree));
                model.params = std::move(rf);
                break;
            }
            case ModelFamily::GradientBoosting: {
                BoostParams gb;
                gb.base_scores = params.at("base_scores").get<std::vector<double>>();
                gb.learning_rate = params.at("learning_rate").get<double>();
                for (const auto& sequence : params.at("rounds")) {
                    auto& out = gb.rounds.emplace_back();
                    for (const auto& tree : sequence) out.push_back(tree_from_json(tree));
                }
                model.params = std::move(gb);
                break;
            }
        }
        return model;
    } catch (const nlohmann::json::exception& err) {
        throw Error(ErrorKind::MalformedInput, fmt::format("bad model JSON: {}", err.what()));
    }
}

}  // namespace passnet
