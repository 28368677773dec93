#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "passnet/error.hpp"
#include "passnet/league.hpp"
#include "passnet/random.hpp"

using namespace passnet;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::ConfigError;
}

double plain_r(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

std::string team(int i) { return "T" + std::to_string(i); }

// Double round robin with outcomes drawn from `rng`.
std::vector<MatchResult> round_robin(int teams, Rng& rng) {
    std::vector<MatchResult> out;
    for (int h = 0; h < teams; ++h) {
        for (int a = 0; a < teams; ++a) {
            if (h == a) continue;
            const auto draw = rng.index(3);
            const Outcome o = draw == 0 ? Outcome::HomeWin : draw == 1 ? Outcome::HomeLoss : Outcome::Draw;
            out.push_back({team(h), team(a), o});
        }
    }
    return out;
}

// Feature 0 tracks home strength minus away strength; draws sit near zero.
FeatureTable league_table(std::vector<Competition> leagues, int teams, std::uint64_t seed) {
    Rng rng(seed);
    FeatureTable table;
    table.options.target = TargetKind::Ternary;
    table.feature_names = {"gap", "noise"};
    int counter = 0;
    for (const Competition league : leagues) {
        std::vector<double> strength(static_cast<std::size_t>(teams));
        for (auto& s : strength) s = rng.normal();
        for (int h = 0; h < teams; ++h) {
            for (int a = 0; a < teams; ++a) {
                if (h == a) continue;
                FeatureRow row;
                row.match_id = "M" + std::to_string(counter++);
                row.competition = league;
                row.home_team_id = std::string(to_string(league)) + team(h);
                row.away_team_id = std::string(to_string(league)) + team(a);
                const double gap = strength[static_cast<std::size_t>(h)] - strength[static_cast<std::size_t>(a)];
                const double noisy_gap = gap + 0.3 * rng.normal();
                row.label = noisy_gap > 0.4 ? Outcome::HomeWin : noisy_gap < -0.4 ? Outcome::HomeLoss : Outcome::Draw;
                row.features = {gap + 0.1 * rng.normal(), rng.normal()};
                table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

ModelSpec small_forest() {
    ModelSpec s;
    s.family = ModelFamily::RandomForest;
    s.hyperparameters = {{"n_trees", 30}};
    s.seed = 4;
    return s;
}

}  // namespace

TEST_CASE("pearson examples") {
    const std::vector<double> x = {1, 2, 3};
    const std::vector<double> y = {2, 4, 6};
    const Correlation c = pearson(x, y);
    CHECK(c.r == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.p == 0.0);
    const std::vector<double> neg = {-1, -2, -3};
    CHECK(pearson(x, neg).r == doctest::Approx(-1.0).epsilon(1e-15));

    CHECK(kind_of([&] { pearson(std::vector<double>{1, 2}, std::vector<double>{3, 4}); }) == ErrorKind::TooShort);
    CHECK(kind_of([&] { pearson(x, std::vector<double>{5, 5, 5}); }) == ErrorKind::ZeroVariance);
    CHECK(kind_of([&] { pearson(x, std::vector<double>{1, 2}); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("pearson p-value agrees with a permutation test") {
    Rng rng(99);
    std::vector<double> x(20), y(20);
    for (std::size_t i = 0; i < 20; ++i) {
        x[i] = rng.normal();
        y[i] = 0.35 * x[i] + rng.normal();
    }
    const Correlation c = pearson(x, y);
    CHECK(c.r == doctest::Approx(plain_r(x, y)).epsilon(1e-12));
    REQUIRE(c.p > 0.01);
    REQUIRE(c.p < 0.9);

    const double observed = std::abs(plain_r(x, y));
    std::vector<double> shuffled = y;
    std::size_t extreme = 0;
    const std::size_t draws = 100000;
    for (std::size_t d = 0; d < draws; ++d) {
        rng.shuffle(std::span<double>(shuffled));
        extreme += std::abs(plain_r(x, shuffled)) >= observed - 1e-15 ? 1 : 0;
    }
    CHECK(std::abs(c.p - static_cast<double>(extreme) / draws) < 0.01);
}

TEST_CASE("pearson symmetry and affine invariance") {
    Rng rng(7);
    for (int fixture = 0; fixture < 50; ++fixture) {
        const std::size_t n = 3 + rng.index(30);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal() + 0.5 * x[i];
        }
        const Correlation xy = pearson(x, y);
        const Correlation yx = pearson(y, x);
        CHECK(std::abs(xy.r - yx.r) < 1e-12);
        CHECK(std::abs(xy.p - yx.p) < 1e-12);
        std::vector<double> scaled(n);
        const double a = rng.uniform(0.1, 50.0);
        const double b = rng.uniform(-100.0, 100.0);
        for (std::size_t i = 0; i < n; ++i) scaled[i] = a * x[i] + b;
        CHECK(std::abs(pearson(scaled, y).r - xy.r) < 1e-12);
        CHECK(xy.r >= -1.0);
        CHECK(xy.r <= 1.0);
        CHECK(xy.p >= 0.0);
        CHECK(xy.p <= 1.0);
    }
}

TEST_CASE("points and standings") {
    CHECK(match_points(Outcome::HomeWin) == std::pair{3, 0});
    CHECK(match_points(Outcome::HomeLoss) == std::pair{0, 3});
    CHECK(match_points(Outcome::Draw) == std::pair{1, 1});

    const std::vector<MatchResult> results = {
        {"A", "B", Outcome::HomeWin}, {"C", "A", Outcome::HomeLoss}, {"A", "D", Outcome::Draw}};
    const StandingsTable table = standings_from_outcomes("X", results, Provenance::Simulated);
    const StandingsEntry* a = table.find("A");
    REQUIRE(a != nullptr);
    CHECK(a->points == 7);
    CHECK(a->wins == 2);
    CHECK(a->draws == 1);
    CHECK(a->rank == 1);
    CHECK(table.provenance == Provenance::Simulated);
    CHECK(table.find("nobody") == nullptr);

    // Tie on points and wins falls back to team id.
    const std::vector<MatchResult> level = {{"Z", "Y", Outcome::Draw}};
    const StandingsTable tied = standings_from_outcomes("X", level, Provenance::Real);
    CHECK(tied.entries[0].team == "Y");
    CHECK(tied.entries[1].team == "Z");
}

TEST_CASE("standings invariants over random seasons") {
    Rng rng(12);
    for (int season = 0; season < 30; ++season) {
        const auto results = round_robin(6 + season % 5, rng);
        const StandingsTable table = standings_from_outcomes("L", results, Provenance::Real);
        int points = 0, wins = 0, losses = 0, draws = 0;
        for (std::size_t i = 0; i < table.entries.size(); ++i) {
            const auto& e = table.entries[i];
            CHECK(e.rank == i + 1);
            if (i > 0) CHECK(e.points <= table.entries[i - 1].points);
            CHECK(e.points == 3 * e.wins + e.draws);
            points += e.points;
            wins += e.wins;
            losses += e.losses;
            draws += e.draws;
        }
        int expected = 0;
        for (const auto& r : results) {
            const auto [h, a] = match_points(r.outcome);
            CHECK(h + a == (r.outcome == Outcome::Draw ? 2 : 3));
            expected += h + a;
        }
        CHECK(points == expected);
        CHECK(wins == losses);

        // Identity: the real results as predictions reproduce the table.
        const StandingsTable again = standings_from_outcomes("L", results, Provenance::Simulated);
        const SimulationComparison same = compare_standings(table, again);
        CHECK(same.exact_hits == table.entries.size());
        CHECK(same.within_two == table.entries.size());
        CHECK(same.champion_correct);

        const auto other = standings_from_outcomes("L", round_robin(6 + season % 5, rng), Provenance::Simulated);
        const SimulationComparison cmp = compare_standings(table, other);
        CHECK(cmp.exact_hits <= cmp.within_two);
        CHECK(cmp.within_two <= cmp.teams);
    }

    const StandingsTable a = standings_from_outcomes("L", {{"A", "B", Outcome::Draw}}, Provenance::Real);
    const StandingsTable b = standings_from_outcomes("L", {{"A", "C", Outcome::Draw}}, Provenance::Real);
    CHECK(kind_of([&] { compare_standings(a, b); }) == ErrorKind::MissingTeam);
}

TEST_CASE("metric rank correlations") {
    Rng rng(3);
    const auto results = round_robin(6, rng);
    const StandingsTable table = standings_from_outcomes("L", results, Provenance::Real);
    std::vector<MetricsRow> rows;
    for (const auto& e : table.entries) {
        for (int m = 0; m < 3; ++m) {
            MetricsRow row;
            row.match_id = e.team + "-" + std::to_string(m);
            row.team_id = e.team;
            const double rank = static_cast<double>(e.rank);
            // Per-match noise averages out: the mean is exactly -rank.
            const double jitter = m == 0 ? 0.5 : m == 1 ? -0.5 : 0.0;
            row.values = {-rank + jitter, 4.0, std::nullopt};
            if (m == 2) row.values[2] = rank * rank;
            rows.push_back(row);
        }
    }
    const auto out = metric_rank_correlations(rows, {"neg_rank", "flat", "square"}, table);
    REQUIRE(out.size() == 3);
    REQUIRE(out[0].value.has_value());
    CHECK(out[0].value->r == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(!out[1].value.has_value());
    CHECK(out[1].diagnostic == "ZeroVariance");
    REQUIRE(out[2].value.has_value());
    CHECK(out[2].value->r > 0.9);

    const std::string csv = correlation_csv(out);
    CHECK(csv.rfind("metric,r,p\n", 0) == 0);

    std::vector<MetricsRow> partial(rows.begin() + 3, rows.end());
    CHECK(kind_of([&] { metric_rank_correlations(partial, {"neg_rank", "flat", "square"}, table); }) ==
          ErrorKind::MissingTeam);
}

TEST_CASE("per-league evaluation is deterministic and partitions rows") {
    const FeatureTable table = league_table({Competition::PremierLeague, Competition::Ligue1}, 8, 5);
    FeatureTable binary = table;
    binary.options.target = TargetKind::Binary;
    std::erase_if(binary.rows, [](const FeatureRow& r) { return r.label == Outcome::Draw; });
    EvaluationPlan plan;
    plan.seed = 8;
    plan.family = ModelFamily::LogisticRegression;
    const auto a = per_league_evaluation(binary, plan);
    const auto b = per_league_evaluation(binary, plan);
    REQUIRE(a.size() == 2);
    CHECK(league_evaluation_csv(a) == league_evaluation_csv(b));
    std::size_t rows = 0;
    for (const auto& e : a) {
        rows += e.rows;
        CHECK(e.report.auc.has_value());
        CHECK(e.report.accuracy > 0.6);
    }
    CHECK(rows == binary.rows.size());
}

TEST_CASE("league simulation") {
    const FeatureTable table =
        league_table({Competition::PremierLeague, Competition::Bundesliga, Competition::WorldCup}, 8, 21);
    const SimulationResult sim = simulate_league(Competition::PremierLeague, table, small_forest());
    CHECK(sim.matches == 56);
    CHECK(sim.training_rows == 112);
    CHECK(sim.real.entries.size() == 8);
    CHECK(sim.simulated.entries.size() == 8);
    CHECK(sim.simulated.provenance == Provenance::Simulated);
    CHECK(sim.comparison.exact_hits <= sim.comparison.within_two);
    CHECK(sim.comparison.within_two <= sim.comparison.teams);

    // Conservation over the predicted matches.
    int wins = 0, losses = 0, draws = 0;
    for (const auto& e : sim.simulated.entries) {
        wins += e.wins;
        losses += e.losses;
        draws += e.draws;
    }
    CHECK(wins == losses);
    CHECK(draws % 2 == 0);
    CHECK(static_cast<std::size_t>(wins + draws / 2) == sim.matches);

    const SimulationResult again = simulate_league(Competition::PremierLeague, table, small_forest());
    CHECK(standings_csv({again.simulated}) == standings_csv({sim.simulated}));

    CHECK(kind_of([&] { simulate_league(Competition::WorldCup, table, small_forest()); }) ==
          ErrorKind::UnknownLeague);
    CHECK(kind_of([&] { simulate_league(Competition::SerieA, table, small_forest()); }) == ErrorKind::UnknownLeague);
    FeatureTable binary = table;
    binary.options.target = TargetKind::Binary;
    CHECK(kind_of([&] { simulate_league(Competition::PremierLeague, binary, small_forest()); }) ==
          ErrorKind::ConfigError);
}
