#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "passnet/error.hpp"
#include "passnet/explain.hpp"
#include "passnet/models.hpp"
#include "passnet/random.hpp"

using namespace passnet;

namespace {

std::vector<std::string> names(std::size_t p) {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < p; ++j) out.push_back("x" + std::to_string(j));
    return out;
}

// Interacting, bounded model used for the sampling checks.
Eigen::VectorXd interacting(const Eigen::MatrixXd& x) {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double z = 0.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) z += (0.3 + 0.1 * static_cast<double>(j)) * x(i, j);
        z += x(i, 0) * x(i, 1) - 0.5 * x(i, 2) * x(i, 3);
        out(i) = 1.0 / (1.0 + std::exp(-z));
    }
    return out;
}

Eigen::MatrixXd gaussian(std::size_t n, std::size_t p, Rng& rng) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    }
    return x;
}

// Column 0 decides the label; the rest are noise.
LabeledData informative(std::size_t n, std::size_t noise, std::uint64_t seed) {
    Rng rng(seed);
    LabeledData d;
    d.feature_names = names(1 + noise);
    d.x = gaussian(n, 1 + noise, rng);
    d.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.y[i] = d.x(static_cast<Eigen::Index>(i), 0) > 0.0 ? 1 : 0;
    return d;
}

ModelSpec forest(std::map<std::string, double> hp = {{"n_trees", 50}}) {
    ModelSpec s;
    s.family = ModelFamily::RandomForest;
    s.hyperparameters = std::move(hp);
    s.seed = 3;
    return s;
}

// Coalition value with absent features drawn from each background row, averaged.
double coalition_value(const BatchScorer& f, const Eigen::RowVectorXd& row, const Eigen::MatrixXd& background,
                       const std::vector<bool>& present) {
    Eigen::MatrixXd mixed = background;
    for (Eigen::Index b = 0; b < mixed.rows(); ++b) {
        for (Eigen::Index j = 0; j < mixed.cols(); ++j) {
            if (present[static_cast<std::size_t>(j)]) mixed(b, j) = row(j);
        }
    }
    return f(mixed).mean();
}

}  // namespace

TEST_CASE("additive model gets its own terms") {
    const BatchScorer sum = [](const Eigen::MatrixXd& x) -> Eigen::VectorXd { return x.rowwise().sum(); };
    Eigen::MatrixXd row(1, 2);
    row << 1.0, 1.0;
    const Eigen::MatrixXd origin = Eigen::MatrixXd::Zero(1, 2);
    const ShapleyMatrix m = shapley_values(sum, names(2), row, origin, {ShapleyMode::Exact, 128, 0});
    CHECK(m.contributions(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.contributions(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.base_value == 0.0);
}

TEST_CASE("exact mode matches the all-orderings oracle and is locally accurate") {
    Rng rng(4);
    const std::size_t p = 5;
    const BatchScorer f = interacting;
    const Eigen::MatrixXd rows = gaussian(6, p, rng);
    const Eigen::MatrixXd background = gaussian(4, p, rng);
    const ShapleyMatrix m = shapley_values(f, names(p), rows, background, {ShapleyMode::Exact, 128, 0});
    const Eigen::VectorXd outputs = f(rows);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const Eigen::RowVectorXd row = rows.row(i);
        const auto phi = oracle::shapley_by_orderings(
            [&](const std::vector<bool>& present) { return coalition_value(f, row, background, present); }, p);
        for (std::size_t j = 0; j < p; ++j) {
            CHECK(std::abs(m.contributions(i, static_cast<Eigen::Index>(j)) - phi[j]) < 1e-12);
        }
        CHECK(std::abs(m.base_value + m.contributions.row(i).sum() - outputs(i)) < 1e-6);
    }
    CHECK(m.base_value == doctest::Approx(f(background).mean()).epsilon(1e-14));
}

TEST_CASE("symmetry and dummy axioms") {
    // x0 and x1 play identical roles; x2 is ignored.
    const BatchScorer f = [](const Eigen::MatrixXd& x) -> Eigen::VectorXd {
        return (x.col(0) + x.col(1)).array().tanh() + 0.5 * x.col(3).array();
    };
    Rng rng(8);
    Eigen::MatrixXd rows = gaussian(5, 4, rng);
    rows.col(1) = rows.col(0);
    Eigen::MatrixXd background = gaussian(3, 4, rng);
    background.col(1) = background.col(0);
    const ShapleyMatrix m = shapley_values(f, names(4), rows, background, {ShapleyMode::Exact, 128, 0});
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        CHECK(std::abs(m.contributions(i, 0) - m.contributions(i, 1)) < 1e-9);
        CHECK(std::abs(m.contributions(i, 2)) < 1e-9);
    }
}

TEST_CASE("a feature the forest never splits on contributes nothing") {
    const LabeledData data = informative(200, 3, 12);
    const TrainedModel model = train(forest({{"n_trees", 5}, {"features_per_split", 4}, {"max_depth", 3}}), data);
    std::set<int> used;
    for (const auto& tree : std::get<ForestParams>(model.params).trees) {
        for (const auto& node : tree.nodes()) {
            if (!node.is_leaf()) used.insert(node.feature);
        }
    }
    REQUIRE(used.size() < 4);
    const Eigen::MatrixXd rows = data.x.topRows(5);
    const Eigen::MatrixXd background = data.x.middleRows(100, 5);
    const ShapleyMatrix m =
        shapley_values(class_one_scorer(model), data.feature_names, rows, background, {ShapleyMode::Exact, 0 + 1, 0});
    for (int j = 0; j < 4; ++j) {
        if (used.count(j) != 0) continue;
        CHECK(m.contributions.col(j).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("Monte-Carlo converges to exact on eight features") {
    Rng rng(31);
    const std::size_t p = 8;
    const BatchScorer f = interacting;
    const Eigen::MatrixXd rows = gaussian(4, p, rng);
    const Eigen::MatrixXd background = gaussian(5, p, rng);
    const ShapleyMatrix exact = shapley_values(f, names(p), rows, background, {ShapleyMode::Exact, 1, 0});
    const ShapleyMatrix sampled =
        shapley_values(f, names(p), rows, background, {ShapleyMode::MonteCarlo, 2048, 77});
    CHECK((exact.contributions - sampled.contributions).cwiseAbs().maxCoeff() < 0.05);

    const ShapleyMatrix again = shapley_values(f, names(p), rows, background, {ShapleyMode::MonteCarlo, 2048, 77});
    CHECK((again.contributions - sampled.contributions).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Shapley errors") {
    const BatchScorer f = interacting;
    const Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(1, 3);
    auto kind = [&](auto call) {
        try {
            call();
        } catch (const Error& e) {
            return e.kind();
        }
        FAIL("expected an error");
        return ErrorKind::ConfigError;
    };
    CHECK(kind([&] { shapley_values(f, names(3), rows, Eigen::MatrixXd(0, 3), {}); }) == ErrorKind::EmptyBackground);
    CHECK(kind([&] { shapley_values(f, names(2), rows, rows, {}); }) == ErrorKind::FeatureMismatch);
    const Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(1, 13);
    CHECK(kind([&] { shapley_values(f, names(13), wide, wide, {ShapleyMode::Exact, 1, 0}); }) ==
          ErrorKind::TooManyFeaturesForExact);
}

TEST_CASE("summary ranking and export") {
    ShapleyMatrix zero;
    zero.feature_names = names(3);
    zero.rows = Eigen::MatrixXd::Zero(4, 3);
    zero.contributions = Eigen::MatrixXd::Zero(4, 3);
    const ShapSummary flat = shap_summary(zero);
    for (const double v : flat.mean_abs) CHECK(v == 0.0);

    ShapleyMatrix dominant = zero;
    dominant.contributions.col(2).setConstant(-0.4);
    dominant.contributions.col(0).setConstant(0.1);
    const ShapSummary s = shap_summary(dominant);
    CHECK(s.ranking.front() == 2);
    CHECK(s.mean_abs[2] == doctest::Approx(0.4));
    std::vector<std::size_t> sorted = s.ranking;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2});

    const std::string csv = shapley_csv(dominant, {"a", "b", "c", "d"});
    CHECK(csv.rfind("row_id,feature,feature_value,contribution\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 3);
    const auto doc = to_json(s, 0.5, 2);
    CHECK(doc.dump().find("x2") != std::string::npos);
}

TEST_CASE("permutation importance separates signal from noise") {
    const LabeledData tr = informative(1000, 3, 1);
    const LabeledData held_out = informative(1000, 3, 2);
    const TrainedModel model = train(forest(), tr);
    const ImportanceReport report = permutation_importance(model, held_out, 10, 5);
    CHECK(report.features[0].mean_drop > 0.3);
    for (std::size_t j = 1; j < 4; ++j) CHECK(std::abs(report.features[j].mean_drop) < 0.02);
    CHECK(report.ranking.front() == 0);
    CHECK(report.features[0].rank == 1);
    for (const auto& f : report.features) CHECK(f.std_drop >= 0.0);
    std::vector<std::size_t> sorted = report.ranking;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3});

    const ImportanceReport again = permutation_importance(model, held_out, 10, 5);
    for (std::size_t j = 0; j < 4; ++j) CHECK(again.features[j].mean_drop == report.features[j].mean_drop);

    const ImportanceReport by_auc = permutation_importance(model, held_out, 3, 5, ImportanceMetric::Auc);
    CHECK(by_auc.features[0].mean_drop > 0.3);

    const std::string csv = importance_csv(report, 2);
    CHECK(csv.rfind("feature,mean_drop,std_drop,rank\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    try {
        permutation_importance(model, held_out, 0, 5);
        FAIL("expected InvalidRepeats");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidRepeats);
    }
    LabeledData renamed = held_out;
    renamed.feature_names[1] = "other";
    CHECK_THROWS_AS(permutation_importance(model, renamed, 2, 5), Error);
}

TEST_CASE("a duplicated informative feature loses importance") {
    const LabeledData tr = informative(600, 1, 41);
    const LabeledData te = informative(600, 1, 42);
    auto duplicate = [](const LabeledData& d) {
        LabeledData out = d;
        out.x.conservativeResize(Eigen::NoChange, 3);
        out.x.col(2) = d.x.col(0);
        out.feature_names.push_back("x0_copy");
        return out;
    };
    const double single =
        permutation_importance(train(forest(), tr), te, 5, 9).features[0].mean_drop;
    const double shared =
        permutation_importance(train(forest(), duplicate(tr)), duplicate(te), 5, 9).features[0].mean_drop;
    CHECK(shared < single);
}
