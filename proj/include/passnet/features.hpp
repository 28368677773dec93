#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "passnet/ingest.hpp"
#include "passnet/network.hpp"

namespace passnet {

struct MatchStats {
    int saves = 0;
    int red_cards = 0;
    int yellow_cards = 0;
    int assists = 0;
    int shots = 0;
    int opponent_shots = 0;
    int shots_on_target = 0;
    int passes = 0;
    int goals = 0;
    int opponent_goals = 0;
    double possession = 0.0;
    double pass_accuracy = 0.0;
    double save_accuracy = 0.0;
    double shot_on_target_accuracy = 0.0;

    /// The fourteen statistic names, in values() order.
    static const std::vector<std::string>& feature_names();
    std::vector<double> values() const;
};

/// Tallies one team's statistics from the match events. Possession is the
/// team's share of all pass attempts in the match.
MatchStats compute_match_stats(const std::vector<Event>& events, const MatchRecord& match,
                               std::string_view team_id);

enum class Venue { Home, Away };
enum class FeatureMode { Nets, Stats, Mixed };
enum class Granularity { FullGame, Halves };
enum class TargetKind { Binary, Ternary };

std::string_view to_string(FeatureMode mode);
std::string_view to_string(Granularity granularity);
std::string_view to_string(TargetKind target);
FeatureMode parse_feature_mode(std::string_view text);
Granularity parse_granularity(std::string_view text);
TargetKind parse_target_kind(std::string_view text);

/// One team's per-match feature values, before averaging.
struct TeamMatchRecord {
    std::string match_id;
    std::chrono::year_month_day date{};
    Venue venue = Venue::Home;
    std::vector<std::optional<double>> values;
};

struct RollingResult {
    /// Mean over the window; nullopt when a feature is missing in every
    /// averaged match.
    std::vector<std::optional<double>> values;
    std::size_t coverage = 0;
};

/// Averages the most recent `window` records dated strictly before `before`
/// (restricted to `venue` when `venue_conditioned`). `history` must be in
/// chronological order. Throws InsufficientHistory when fewer than
/// `min_history` records qualify.
RollingResult rolling_features(std::span<const TeamMatchRecord> history,
                               std::chrono::year_month_day before, Venue venue,
                               std::size_t window, bool venue_conditioned,
                               std::size_t min_history);

using MetricsKey = std::tuple<std::string, std::string, Segment>;
using MetricsStore = std::map<MetricsKey, std::vector<std::optional<double>>>;
using StatsStore = std::map<std::pair<std::string, std::string>, MatchStats>;

struct TableOptions {
    FeatureMode mode = FeatureMode::Mixed;
    Granularity granularity = Granularity::Halves;
    TargetKind target = TargetKind::Binary;
    bool venue_conditioned = true;
    std::size_t window = 5;
    std::size_t min_history = 5;
};

struct FeatureRow {
    std::string match_id;
    std::chrono::year_month_day date{};
    Competition competition = Competition::PremierLeague;
    std::string home_team_id;
    std::string away_team_id;
    std::vector<double> features;
    Outcome label = Outcome::HomeWin;
    std::size_t coverage_home = 0;
    std::size_t coverage_away = 0;
};

struct SkipCounts {
    std::size_t insufficient_history = 0;
    std::size_t missing_values = 0;
    std::size_t draws_excluded = 0;
};

struct FeatureTable {
    TableOptions options;
    std::vector<std::string> feature_names;
    std::vector<FeatureRow> rows;
    SkipCounts skipped;
};

std::vector<std::string> feature_names(FeatureMode mode, Granularity granularity);

/// Class index used by the models: HomeLoss 0, HomeWin 1, Draw 2.
int label_index(Outcome outcome);
Outcome outcome_from_index(int index);

/// Builds one row per eligible match. All matches feed team histories; rows
/// are emitted only for matches whose outcome fits the target kind and whose
/// teams both have enough qualifying history.
FeatureTable build_table(const std::vector<MatchRecord>& matches, const MetricsStore& metrics,
                         const StatsStore& stats, const TableOptions& options);

/// Dense design matrix plus class indices.
struct LabeledData {
    std::vector<std::string> feature_names;
    Eigen::MatrixXd x;
    std::vector<int> y;

    std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
    LabeledData subset(std::span<const std::size_t> indices) const;
};

LabeledData to_labeled(const FeatureTable& table);

/// Header: feature names, then `label` and `match_id`.
std::string write_table_csv(const FeatureTable& table);

struct TableCsv {
    std::vector<std::string> feature_names;
    std::vector<std::string> match_ids;
    LabeledData data;
};

TableCsv read_table_csv(std::string_view csv);

std::string write_stats_csv(const StatsStore& stats);
StatsStore read_stats_csv(std::string_view csv);

}  // namespace passnet
