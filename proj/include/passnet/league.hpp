#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "passnet/evaluation.hpp"
#include "passnet/features.hpp"
#include "passnet/ingest.hpp"
#include "passnet/models.hpp"
#include "passnet/netmetrics.hpp"

namespace passnet {

struct Correlation {
    double r = 0.0;
    double p = 1.0;
};

/// Sample correlation with a two-sided t-test p-value.
Correlation pearson(std::span<const double> x, std::span<const double> y);

enum class Provenance { Real, Simulated };
std::string_view to_string(Provenance provenance);

struct StandingsEntry {
    std::string team;
    int points = 0;
    int wins = 0;
    int draws = 0;
    int losses = 0;
    std::size_t rank = 0;  // 1-based
};

struct StandingsTable {
    std::string league;
    std::vector<StandingsEntry> entries;  // rank order
    Provenance provenance = Provenance::Real;

    const StandingsEntry* find(std::string_view team) const;
};

struct MatchResult {
    std::string home_team_id;
    std::string away_team_id;
    Outcome outcome = Outcome::Draw;
};

/// (home points, away points) under 3/1/0.
std::pair<int, int> match_points(Outcome outcome);

/// Ranks by points, then wins, then team id.
StandingsTable standings_from_outcomes(std::string league, const std::vector<MatchResult>& results,
                                       Provenance provenance);

struct SimulationComparison {
    std::size_t exact_hits = 0;
    std::size_t within_two = 0;
    bool champion_correct = false;
    std::size_t teams = 0;
};

/// Throws MissingTeam when the tables list different teams.
SimulationComparison compare_standings(const StandingsTable& real, const StandingsTable& simulated);

struct MetricCorrelation {
    std::string metric;
    std::optional<Correlation> value;
    /// Error class name when the metric could not be correlated.
    std::string diagnostic;
};

/// Correlates each metric column's team-season mean (over `rows` with a value)
/// against final rank. Throws MissingTeam when a ranked team has no rows.
std::vector<MetricCorrelation> metric_rank_correlations(const std::vector<MetricsRow>& rows,
                                                        const std::vector<std::string>& column_names,
                                                        const StandingsTable& standings);

std::string correlation_csv(const std::vector<MetricCorrelation>& correlations);
/// `league,rank,team,points,wins,draws,losses,provenance`
std::string standings_csv(const std::vector<StandingsTable>& tables);
nlohmann::json to_json(const SimulationComparison& comparison);

struct LeagueEvaluation {
    Competition league = Competition::PremierLeague;
    std::size_t rows = 0;
    ModelSpec spec;
    EvaluationReport report;
};

struct EvaluationPlan {
    ModelFamily family = ModelFamily::RandomForest;
    std::uint64_t seed = 0;
    double test_fraction = 0.3;
    /// 0 trains default hyperparameters without search.
    std::size_t tune_budget = 0;
    std::size_t folds = 10;
};

/// Split, tune, train and evaluate on `data` alone.
LeagueEvaluation evaluate_partition(const LabeledData& data, const EvaluationPlan& plan);

/// One evaluation per league present in `table`, each restricted to that
/// league's rows.
std::vector<LeagueEvaluation> per_league_evaluation(const FeatureTable& table, const EvaluationPlan& plan);

std::string league_evaluation_csv(const std::vector<LeagueEvaluation>& evaluations);

struct SimulationResult {
    Competition league = Competition::PremierLeague;
    StandingsTable real;
    StandingsTable simulated;
    SimulationComparison comparison;
    /// Simulated matches (target league rows with features).
    std::size_t matches = 0;
    std::size_t training_rows = 0;
};

/// Trains a three-class model on every row outside `target` and predicts the
/// target league's rows by argmax. Both tables are built over the same set of
/// predicted matches. `table` must be ternary.
SimulationResult simulate_league(Competition target, const FeatureTable& table, const ModelSpec& spec);

}  // namespace passnet
