#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "passnet/error.hpp"
#include "passnet/evaluation.hpp"
#include "passnet/models.hpp"
#include "passnet/random.hpp"
#include "passnet/tuning.hpp"

using namespace passnet;

namespace {

LabeledData make_data(Eigen::MatrixXd x, std::vector<int> y) {
    LabeledData d;
    for (Eigen::Index j = 0; j < x.cols(); ++j) d.feature_names.push_back("f" + std::to_string(j));
    d.x = std::move(x);
    d.y = std::move(y);
    return d;
}

LabeledData separable(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double shift = label == 1 ? 2.0 : -2.0;
        x(static_cast<Eigen::Index>(i), 0) = shift + rng.uniform(-1.0, 1.0);
        x(static_cast<Eigen::Index>(i), 1) = rng.uniform(-1.0, 1.0);
        y[i] = label;
    }
    return make_data(std::move(x), std::move(y));
}

LabeledData xor_data(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Equal quadrant counts keep the classes free of any linear trend.
        const double a = (i % 2 == 0 ? 1.0 : -1.0) * rng.uniform(0.0, 1.0);
        const double b = ((i / 2) % 2 == 0 ? 1.0 : -1.0) * rng.uniform(0.0, 1.0);
        x(static_cast<Eigen::Index>(i), 0) = a;
        x(static_cast<Eigen::Index>(i), 1) = b;
        y[i] = a * b > 0.0 ? 1 : 0;
    }
    return make_data(std::move(x), std::move(y));
}

// Overlapping Gaussian classes so the optimum is interior.
LabeledData noisy(std::size_t n, std::size_t p, int classes, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
        for (std::size_t j = 0; j < p; ++j) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rng.normal() + (j == 0 ? 0.8 * y[i] : 0.0);
        }
    }
    return make_data(std::move(x), std::move(y));
}

double accuracy_of(const TrainedModel& model, const LabeledData& data) {
    const Eigen::MatrixXd proba = predict_proba(model, data);
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < proba.rows(); ++i) {
        Eigen::Index best = 0;
        proba.row(i).maxCoeff(&best);
        hits += model.classes[static_cast<std::size_t>(best)] == data.y[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(data.rows());
}

std::pair<LabeledData, LabeledData> split_data(const LabeledData& data, std::uint64_t seed) {
    const Split s = stratified_split(data.y, 0.3, seed);
    return {data.subset(s.train), data.subset(s.test)};
}

double gini(const std::vector<int>& labels, int n_classes) {
    if (labels.empty()) return 0.0;
    std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
    for (const int l : labels) counts[static_cast<std::size_t>(l)] += 1.0;
    double g = 1.0;
    for (const double c : counts) g -= (c / labels.size()) * (c / labels.size());
    return g;
}

struct Stump {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 1e300;
};

// Every feature and every midpoint between consecutive distinct values.
Stump best_stump(const LabeledData& d, int n_classes) {
    Stump best;
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
        std::vector<double> values(d.x.col(j).data(), d.x.col(j).data() + d.x.rows());
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            const double t = (values[v] + values[v + 1]) / 2.0;
            std::vector<int> left;
            std::vector<int> right;
            for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
                (d.x(i, j) <= t ? left : right).push_back(d.y[static_cast<std::size_t>(i)]);
            }
            const double n = static_cast<double>(d.x.rows());
            const double impurity = left.size() / n * gini(left, n_classes) + right.size() / n * gini(right, n_classes);
            if (impurity < best.impurity - 1e-12) best = {static_cast<int>(j), t, impurity};
        }
    }
    return best;
}

const std::vector<double>& walk(const DecisionTree& tree, const Eigen::RowVectorXd& row) {
    const auto& nodes = tree.nodes();
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        i = static_cast<std::size_t>(row(nodes[i].feature) <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
    }
    return nodes[i].value;
}

ModelSpec spec_of(ModelFamily family, std::map<std::string, double> hp = {}, std::uint64_t seed = 7) {
    ModelSpec s;
    s.family = family;
    s.hyperparameters = std::move(hp);
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("stratified split keeps class proportions") {
    std::vector<int> labels(100);
    for (std::size_t i = 0; i < 100; ++i) labels[i] = i < 60 ? 0 : 1;
    const Split s = stratified_split(labels, 0.3, 11);
    std::size_t zeros = 0;
    for (const auto r : s.test) zeros += labels[r] == 0 ? 1 : 0;
    CHECK(zeros >= 17);
    CHECK(zeros <= 19);
    CHECK(s.test.size() - zeros >= 11);
    CHECK(s.test.size() - zeros <= 13);

    std::vector<std::size_t> all(s.train);
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(100);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(all == expected);

    const Split again = stratified_split(labels, 0.3, 11);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
    const Split other = stratified_split(labels, 0.3, 12);
    CHECK(other.test != s.test);
}

TEST_CASE("stratified split rejects a single class") {
    const std::vector<int> labels(10, 1);
    CHECK_THROWS_AS(stratified_split(labels, 0.3, 1), Error);
    try {
        stratified_split(labels, 0.3, 1);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooFewRows);
    }
}

TEST_CASE("stratified k-fold balance") {
    std::vector<int> balanced(100);
    for (std::size_t i = 0; i < 100; ++i) balanced[i] = static_cast<int>(i % 2);
    const auto folds = stratified_kfold(balanced, 10, 3);
    REQUIRE(folds.size() == 10);
    std::vector<std::size_t> all;
    for (const auto& f : folds) {
        std::size_t ones = 0;
        for (const auto r : f) ones += balanced[r];
        CHECK(f.size() == 10);
        CHECK(ones == 5);
        all.insert(all.end(), f.begin(), f.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(100);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(all == expected);

    // 97 rows: 61 / 36, direct count against the exact proportion.
    std::vector<int> skewed(97);
    for (std::size_t i = 0; i < 97; ++i) skewed[i] = i < 61 ? 0 : 1;
    const auto skew_folds = stratified_kfold(skewed, 10, 5);
    for (const auto& f : skew_folds) {
        for (int c = 0; c < 2; ++c) {
            const double exact = (c == 0 ? 61.0 : 36.0) / 10.0;
            double count = 0.0;
            for (const auto r : f) count += skewed[r] == c ? 1.0 : 0.0;
            CHECK(std::abs(count - exact) <= 1.0);
        }
    }

    const std::vector<int> small = {0, 0, 1, 1, 1};
    CHECK_THROWS_AS(stratified_kfold(small, 3, 1), Error);
}

TEST_CASE("logistic regression fits a separable fixture") {
    const LabeledData data = separable(200, 1);
    const auto [tr, te] = split_data(data, 2);
    const TrainedModel model = train(spec_of(ModelFamily::LogisticRegression, {{"l2_strength", 1e-4}}), tr);
    CHECK(accuracy_of(model, tr) == 1.0);
    CHECK(accuracy_of(model, te) >= 0.99);
}

TEST_CASE("logistic regression objective never increases") {
    for (const int classes : {2, 3}) {
        const LabeledData data = noisy(150, 4, classes, 9);
        const TrainedModel model = train(spec_of(ModelFamily::LogisticRegression), data);
        const auto& fit = std::get<LogisticParams>(model.params);
        REQUIRE(fit.objective_trace.size() >= 2);
        for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
            CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1]);
        }
        CHECK(fit.weights.row(0).isZero());
    }
}

TEST_CASE("duplicating training rows leaves logistic weights unchanged") {
    const LabeledData data = noisy(120, 3, 2, 4);
    LabeledData doubled = data;
    doubled.x.resize(data.x.rows() * 2, data.x.cols());
    doubled.x << data.x, data.x;
    doubled.y.insert(doubled.y.end(), data.y.begin(), data.y.end());

    const auto spec = spec_of(ModelFamily::LogisticRegression);
    const auto& a = std::get<LogisticParams>(train(spec, data).params);
    const auto& b = std::get<LogisticParams>(train(spec, doubled).params);
    CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((a.intercepts - b.intercepts).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("logistic regression with zero weights is uniform") {
    TrainedModel model;
    model.spec = spec_of(ModelFamily::LogisticRegression);
    model.feature_names = {"f0", "f1"};
    model.classes = {0, 1, 2};
    LogisticParams fit;
    fit.mean = Eigen::VectorXd::Zero(2);
    fit.scale = Eigen::VectorXd::Ones(2);
    fit.weights = Eigen::MatrixXd::Zero(3, 2);
    fit.intercepts = Eigen::VectorXd::Zero(3);
    model.params = fit;
    Eigen::MatrixXd x(2, 2);
    x << 5.0, -3.0, 0.0, 100.0;
    const Eigen::MatrixXd proba = predict_proba(model, x, model.feature_names);
    CHECK((proba.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("depth-1 single tree matches the exhaustive Gini stump") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const LabeledData data = noisy(40, 3, seed % 2 == 0 ? 2 : 3, 100 + seed);
        const int classes = seed % 2 == 0 ? 2 : 3;
        const TrainedModel model =
            train(spec_of(ModelFamily::RandomForest,
                          {{"n_trees", 1}, {"max_depth", 1}, {"bootstrap", 0}, {"features_per_split", 3}}),
                  data);
        const auto& tree = std::get<ForestParams>(model.params).trees.at(0);
        const Stump oracle = best_stump(data, classes);
        REQUIRE(!tree.nodes().empty());
        CHECK(tree.nodes()[0].feature == oracle.feature);
        CHECK(tree.nodes()[0].threshold == doctest::Approx(oracle.threshold).epsilon(1e-12));
        CHECK(tree.depth() == 1);
    }
}

TEST_CASE("forest probability is the mean of its trees' leaves") {
    const LabeledData data = noisy(90, 4, 3, 21);
    const TrainedModel model =
        train(spec_of(ModelFamily::RandomForest, {{"n_trees", 3}, {"max_depth", 4}}), data);
    const auto& trees = std::get<ForestParams>(model.params).trees;
    REQUIRE(trees.size() == 3);
    const Eigen::MatrixXd proba = predict_proba(model, data);
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
        const Eigen::RowVectorXd row = data.x.row(i);
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (const auto& t : trees) sum += walk(t, row)[static_cast<std::size_t>(c)];
            CHECK(proba(i, c) == doctest::Approx(sum / 3.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("boosting with zero learning rate predicts the base rate") {
    LabeledData data = noisy(100, 3, 2, 5);
    for (std::size_t i = 0; i < 30; ++i) data.y[i] = 1;  // skew the base rate
    const double rate = std::accumulate(data.y.begin(), data.y.end(), 0.0) / data.y.size();
    const TrainedModel model =
        train(spec_of(ModelFamily::GradientBoosting, {{"learning_rate", 0.0}, {"n_rounds", 5}}), data);
    const Eigen::MatrixXd proba = predict_proba(model, data);
    CHECK((proba.col(1).array() - rate).abs().maxCoeff() < 1e-12);
}

TEST_CASE("probabilities are proper on every family and class count") {
    for (const auto family :
         {ModelFamily::LogisticRegression, ModelFamily::RandomForest, ModelFamily::GradientBoosting}) {
        for (const int classes : {2, 3}) {
            const LabeledData data = noisy(90, 3, classes, 8);
            const TrainedModel model = train(spec_of(family), data);
            const Eigen::MatrixXd proba = predict_proba(model, data);
            CHECK(proba.cols() == classes);
            CHECK(proba.minCoeff() >= 0.0);
            CHECK(proba.maxCoeff() <= 1.0);
            CHECK((proba.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("training is deterministic regardless of worker count") {
    const LabeledData data = noisy(120, 4, 3, 13);
    for (const auto family : {ModelFamily::RandomForest, ModelFamily::GradientBoosting}) {
        const auto spec = spec_of(family, family == ModelFamily::RandomForest
                                              ? std::map<std::string, double>{{"n_trees", 30}}
                                              : std::map<std::string, double>{{"n_rounds", 20}});
        setenv("PASSNET_LAB_THREADS", "1", 1);
        const TrainedModel serial = train(spec, data);
        setenv("PASSNET_LAB_THREADS", "4", 1);
        const TrainedModel threaded = train(spec, data);
        unsetenv("PASSNET_LAB_THREADS");
        CHECK(to_json(serial).dump() == to_json(threaded).dump());
        CHECK((predict_proba(serial, data) - predict_proba(threaded, data)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("training and prediction errors") {
    LabeledData data = noisy(20, 2, 2, 1);
    CHECK_THROWS_AS(predict_proba(train(spec_of(ModelFamily::LogisticRegression), data), data.x,
                                  std::vector<std::string>{"f1", "f0"}),
                    Error);
    try {
        predict_proba(train(spec_of(ModelFamily::LogisticRegression), data), data.x, {"a", "b"});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FeatureMismatch);
    }

    LabeledData constant = data;
    std::fill(constant.y.begin(), constant.y.end(), 1);
    try {
        train(spec_of(ModelFamily::RandomForest), constant);
        FAIL("expected DegenerateData");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateData);
    }

    data.x(3, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
        train(spec_of(ModelFamily::RandomForest), data);
        FAIL("expected NonFiniteFeature");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFiniteFeature);
    }
}

TEST_CASE("nonlinear XOR separates the families") {
    const LabeledData data = xor_data(500, 77);
    const auto [tr, te] = split_data(data, 3);
    const double rf = accuracy_of(train(spec_of(ModelFamily::RandomForest), tr), te);
    const double gb = accuracy_of(train(spec_of(ModelFamily::GradientBoosting), tr), te);
    const double lr = accuracy_of(train(spec_of(ModelFamily::LogisticRegression), tr), te);
    CHECK(rf >= 0.9);
    CHECK(gb >= 0.9);
    CHECK(lr <= 0.65);
}

TEST_CASE("model JSON round trip") {
    const LabeledData data = noisy(80, 3, 3, 31);
    for (const auto family :
         {ModelFamily::LogisticRegression, ModelFamily::RandomForest, ModelFamily::GradientBoosting}) {
        const TrainedModel model = train(spec_of(family, {}), data);
        const TrainedModel back = model_from_json(nlohmann::json::parse(to_json(model).dump()));
        CHECK(back.spec == model.spec);
        CHECK(back.classes == model.classes);
        CHECK(back.feature_names == model.feature_names);
        CHECK((predict_proba(back, data) - predict_proba(model, data)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("AUC examples") {
    const std::vector<double> scores = {0.1, 0.4, 0.35, 0.8};
    const std::vector<int> labels = {0, 0, 1, 1};
    CHECK(auc_rank(scores, labels).value() == 0.75);
    CHECK(oracle::pair_counting_auc(scores, labels) == 0.75);
    CHECK(trapezoid_area(roc_curve(scores, labels)) == doctest::Approx(0.75).epsilon(1e-12));

    const std::vector<double> ties(4, 0.5);
    CHECK(auc_rank(ties, labels).value() == 0.5);
    CHECK(!auc_rank(scores, std::vector<int>{1, 1, 1, 1}).has_value());

    Eigen::MatrixXd perfect(4, 2);
    perfect << 0.9, 0.1, 0.8, 0.2, 0.3, 0.7, 0.1, 0.9;
    const std::vector<int> classes = {0, 1};
    const auto report = evaluate(perfect, labels, classes, Averaging::BinaryPositive);
    CHECK(report.accuracy == 1.0);
    CHECK(report.precision == 1.0);
    CHECK(report.recall == 1.0);
    CHECK(report.f1 == 1.0);
    CHECK(report.auc.value() == 1.0);
    CHECK(report.roc.front() == CurvePoint{0.0, 0.0});
    CHECK(report.roc.back() == CurvePoint{1.0, 1.0});
}

TEST_CASE("threshold-sweep AUC equals pair counting on random fixtures") {
    Rng rng(2024);
    for (int fixture = 0; fixture < 100; ++fixture) {
        const std::size_t n = 5 + rng.index(60);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse grid so ties are common.
            scores[i] = static_cast<double>(rng.index(8)) / 8.0;
            labels[i] = static_cast<int>(rng.index(2));
        }
        labels[0] = 0;
        labels[1] = 1;
        const double oracle_auc = oracle::pair_counting_auc(scores, labels);
        CHECK(std::abs(trapezoid_area(roc_curve(scores, labels)) - oracle_auc) < 1e-12);
        CHECK(std::abs(auc_rank(scores, labels).value() - oracle_auc) < 1e-12);
    }
}

TEST_CASE("macro evaluation and confusion trace") {
    Eigen::MatrixXd proba(6, 3);
    proba << 0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.2, 0.2, 0.6, 0.5, 0.4, 0.1, 0.3, 0.3, 0.4, 0.1, 0.1, 0.8;
    const std::vector<int> labels = {0, 1, 2, 1, 1, 2};
    const std::vector<int> classes = {0, 1, 2};
    const auto report = evaluate(proba, labels, classes, Averaging::Macro);
    long trace = 0;
    for (std::size_t c = 0; c < 3; ++c) trace += report.confusion[c][c];
    CHECK(report.accuracy == doctest::Approx(static_cast<double>(trace) / 6.0));
    CHECK(report.accuracy == doctest::Approx(4.0 / 6.0));
    CHECK(!report.auc.has_value());
    // Per class precision/recall: c0 1/2,1 ; c1 1,1/3 ; c2 2/3,1.
    const double f0 = 2.0 * 0.5 * 1.0 / 1.5;
    const double f1 = 2.0 * 1.0 / 3.0 / (4.0 / 3.0);
    const double f2 = 2.0 * (2.0 / 3.0) / (5.0 / 3.0);
    CHECK(report.f1 == doctest::Approx((f0 + f1 + f2) / 3.0).epsilon(1e-12));
}

TEST_CASE("tuning") {
    const LabeledData data = noisy(80, 3, 2, 17);
    SUBCASE("budget 1 returns the single sampled spec") {
        const auto result = tune(ModelFamily::LogisticRegression, data, 1, 5, 5);
        REQUIRE(result.candidates.size() == 1);
        CHECK(result.best == result.candidates[0].spec);
        const double l2 = result.best.get("l2_strength");
        CHECK(l2 >= 1e-4);
        CHECK(l2 <= 1e2);
    }
    SUBCASE("same seed, same winner; draws stay in the declared grid") {
        const SearchSpace space = {{"n_trees", IntRange{5, 10}}, {"max_depth", IntRange{3, 20}}};
        const auto a = tune(ModelFamily::RandomForest, data, 4, 9, 5, space);
        const auto b = tune(ModelFamily::RandomForest, data, 4, 9, 5, space);
        CHECK(a.best == b.best);
        CHECK(a.best_score == b.best_score);
        for (const auto& c : a.candidates) {
            CHECK(c.spec.get("n_trees") >= 5);
            CHECK(c.spec.get("n_trees") <= 10);
            CHECK(c.spec.get("max_depth") >= 3);
            CHECK(c.spec.get("max_depth") <= 20);
        }
        for (const auto& d : default_search_space(ModelFamily::GradientBoosting)) {
            CHECK((d.name == "n_rounds" || d.name == "learning_rate" || d.name == "max_depth"));
        }
    }
    SUBCASE("winner beats both ends of an exhaustive tiny grid") {
        // Single deterministic tree: no bootstrap, every feature at every node.
        LabeledData flip = noisy(120, 3, 2, 41);
        Rng rng(5);
        for (auto& y : flip.y) {
            if (rng.uniform() < 0.15) y = 1 - y;
        }
        const SearchSpace space = {{"n_trees", IntRange{1, 1}},
                                   {"bootstrap", IntRange{0, 0}},
                                   {"features_per_split", IntRange{3, 3}},
                                   {"max_depth", IntRange{1, 8}}};
        const std::size_t budget = 30;
        const std::uint64_t seed = 23;
        const auto result = tune(ModelFamily::RandomForest, flip, budget, seed, 5, space);
        const std::uint64_t fold_seed = derive_seed(seed, budget + 1);
        std::map<int, double> grid;
        for (int depth = 1; depth <= 8; ++depth) {
            const auto spec = spec_of(ModelFamily::RandomForest,
                                      {{"n_trees", 1}, {"bootstrap", 0}, {"features_per_split", 3}, {"max_depth", depth}});
            grid[depth] = cross_validated_score(spec, flip, 5, fold_seed);
        }
        CHECK(result.best_score >= grid[1]);
        CHECK(result.best_score >= grid[8]);
        std::set<int> seen;
        for (const auto& c : result.candidates) seen.insert(static_cast<int>(c.spec.get("max_depth")));
        double best_seen = -1.0;
        for (const int d : seen) best_seen = std::max(best_seen, grid[d]);
        CHECK(result.best_score == doctest::Approx(best_seen).epsilon(1e-12));
    }
    SUBCASE("zero budget is a config error") {
        CHECK_THROWS_AS(tune(ModelFamily::LogisticRegression, data, 0, 1, 5), Error);
    }
}
