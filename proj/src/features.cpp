#include "passnet/features.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "passnet/error.hpp"
#include "passnet/io_util.hpp"
#include "passnet/netmetrics.hpp"

namespace passnet {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::vector<Segment> segments_for(Granularity granularity) {
    if (granularity == Granularity::FullGame) return {Segment::Full};
    return {Segment::FirstHalf, Segment::SecondHalf};
}

bool uses_nets(FeatureMode mode) { return mode != FeatureMode::Stats; }
bool uses_stats(FeatureMode mode) { return mode != FeatureMode::Nets; }

// Per-team, per-match raw values in the order feature_names() expects for one
// team tag.
std::vector<std::optional<double>> team_values(const MatchRecord& match,
                                               const std::string& team_id,
                                               const MetricsStore& metrics,
                                               const StatsStore& stats,
                                               const TableOptions& options) {
    std::vector<std::optional<double>> values;
    if (uses_nets(options.mode)) {
        for (const Segment segment : segments_for(options.granularity)) {
            const auto it = metrics.find({match.match_id, team_id, segment});
            if (it == metrics.end()) {
                throw Error(ErrorKind::MissingArtifact,
                            fmt::format("no {} metrics for match {} team {}", to_string(segment),
                                        match.match_id, team_id));
            }
            values.insert(values.end(), it->second.begin(), it->second.end());
        }
    }
    if (uses_stats(options.mode)) {
        const auto it = stats.find({match.match_id, team_id});
        if (it == stats.end()) {
            throw Error(ErrorKind::MissingArtifact,
                        fmt::format("no statistics for match {} team {}", match.match_id, team_id));
        }
        for (const double v : it->second.values()) values.emplace_back(v);
    }
    return values;
}

}  // namespace

const std::vector<std::string>& MatchStats::feature_names() {
    static const std::vector<std::string> names = {
        "saves",          "red_cards",     "yellow_cards", "assists",
        "shots",          "shots_against", "shots_on_target", "passes",
        "goals",          "goals_against", "possession",   "pass_accuracy",
        "save_accuracy",  "shot_on_target_accuracy"};
    return names;
}

std::vector<double> MatchStats::values() const {
    return {static_cast<double>(saves),       static_cast<double>(red_cards),
            static_cast<double>(yellow_cards), static_cast<double>(assists),
            static_cast<double>(shots),       static_cast<double>(opponent_shots),
            static_cast<double>(shots_on_target), static_cast<double>(passes),
            static_cast<double>(goals),       static_cast<double>(opponent_goals),
            possession,                       pass_accuracy,
            save_accuracy,                    shot_on_target_accuracy};
}

MatchStats compute_match_stats(const std::vector<Event>& events, const MatchRecord& match,
                               std::string_view team_id) {
    if (!match.involves(team_id)) {
        throw Error(ErrorKind::MissingTeam,
                    fmt::format("team {} did not play match {}", team_id, match.match_id));
    }
    MatchStats s;
    int completed = 0;
    int all_passes = 0;
    for (const auto& e : events) {
        if (e.match_id != match.match_id) continue;
        const bool own = e.team_id == team_id;
        switch (e.kind) {
            case EventKind::Pass:
                ++all_passes;
                if (own) {
                    ++s.passes;
                    if (e.success) ++completed;
                }
                break;
            case EventKind::Shot:
                if (own) {
                    ++s.shots;
                    if (e.success) ++s.shots_on_target;
                } else {
                    ++s.opponent_shots;
                }
                break;
            case EventKind::Save:
                if (own && e.success) ++s.saves;
                break;
            case EventKind::Goal:
                ++(own ? s.goals : s.opponent_goals);
                break;
            case EventKind::Assist:
                if (own) ++s.assists;
                break;
            case EventKind::YellowCard:
                if (own) ++s.yellow_cards;
                break;
            case EventKind::RedCard:
                if (own) ++s.red_cards;
                break;
            default:
                break;
        }
    }
    s.possession = ratio(s.passes, all_passes);
    s.pass_accuracy = ratio(completed, s.passes);
    s.save_accuracy = ratio(s.saves, s.saves + s.opponent_goals);
    s.shot_on_target_accuracy = ratio(s.shots_on_target, s.shots);
    return s;
}

std::string_view to_string(FeatureMode mode) {
    switch (mode) {
        case FeatureMode::Nets: return "nets";
        case FeatureMode::Stats: return "stats";
        case FeatureMode::Mixed: return "mixed";
    }
    return "mixed";
}

std::string_view to_string(Granularity granularity) {
    return granularity == Granularity::FullGame ? "full" : "halves";
}

std::string_view to_string(TargetKind target) {
    return target == TargetKind::Binary ? "binary" : "ternary";
}

FeatureMode parse_feature_mode(std::string_view text) {
    if (text == "nets") return FeatureMode::Nets;
    if (text == "stats") return FeatureMode::Stats;
    if (text == "mixed") return FeatureMode::Mixed;
    throw Error(ErrorKind::ConfigError, fmt::format("unknown mode '{}'", text));
}

Granularity parse_granularity(std::string_view text) {
    if (text == "full") return Granularity::FullGame;
    if (text == "halves") return Granularity::Halves;
    throw Error(ErrorKind::ConfigError, fmt::format("unknown granularity '{}'", text));
}

TargetKind parse_target_kind(std::string_view text) {
    if (text == "binary") return TargetKind::Binary;
    if (text == "ternary") return TargetKind::Ternary;
    throw Error(ErrorKind::ConfigError, fmt::format("unknown target kind '{}'", text));
}

RollingResult rolling_features(std::span<const TeamMatchRecord> history,
                               std::chrono::year_month_day before, Venue venue,
                               std::size_t window, bool venue_conditioned,
                               std::size_t min_history) {
    std::vector<const TeamMatchRecord*> used;
    for (auto it = history.rbegin(); it != history.rend() && used.size() < window; ++it) {
        if (it->date >= before) continue;
        if (venue_conditioned && it->venue != venue) continue;
        used.push_back(&*it);
    }
    if (used.size() < min_history || used.empty()) {
        throw Error(ErrorKind::InsufficientHistory,
                    fmt::format("{} qualifying prior matches, need {}", used.size(),
                                std::max<std::size_t>(min_history, 1)));
    }

    const std::size_t width = used.front()->values.size();
    RollingResult result;
    result.coverage = used.size();
    result.values.resize(width);
    for (std::size_t f = 0; f < width; ++f) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto* record : used) {
            if (record->values[f]) {
                sum += *record->values[f];
                ++count;
            }
        }
        if (count > 0) result.values[f] = sum / static_cast<double>(count);
    }
    return result;
}

std::vector<std::string> feature_names(FeatureMode mode, Granularity granularity) {
    std::vector<std::string> names;
    if (uses_nets(mode)) {
        for (const char* team : {"T1", "T2"}) {
            for (const Segment segment : segments_for(granularity)) {
                for (const auto& column : NetworkMetrics::column_names()) {
                    names.push_back(granularity == Granularity::FullGame
                                        ? fmt::format("avg_{}_{}", column, team)
                                        : fmt::format("avg_{}_{}_{}", column, team, to_string(segment)));
                }
            }
        }
    }
    if (uses_stats(mode)) {
        for (const char* team : {"T1", "T2"}) {
            for (const auto& stat : MatchStats::feature_names()) {
                names.push_back(fmt::format("avg_{}_{}", stat, team));
            }
        }
    }
    return names;
}

int label_index(Outcome outcome) { return static_cast<int>(outcome); }

Outcome outcome_from_index(int index) {
    switch (index) {
        case 0: return Outcome::HomeLoss;
        case 1: return Outcome::HomeWin;
        case 2: return Outcome::Draw;
        default: break;
    }
    throw Error(ErrorKind::MalformedInput, fmt::format("bad label {}", index));
}

FeatureTable build_table(const std::vector<MatchRecord>& matches, const MetricsStore& metrics,
                         const StatsStore& stats, const TableOptions& options) {
    std::vector<const MatchRecord*> ordered;
    ordered.reserve(matches.size());
    for (const auto& m : matches) ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(), [](const MatchRecord* a, const MatchRecord* b) {
        return std::tie(a->date, a->match_id) < std::tie(b->date, b->match_id);
    });

    // Team histories in chronological order. Values for the two team tags are
    // laid out identically, so one record list per team suffices.
    std::map<std::string, std::vector<TeamMatchRecord>> histories;
    for (const MatchRecord* m : ordered) {
        for (const auto& [team, venue] : {std::pair{m->home_team_id, Venue::Home},
                                          std::pair{m->away_team_id, Venue::Away}}) {
            histories[team].push_back(
                {m->match_id, m->date, venue, team_values(*m, team, metrics, stats, options)});
        }
    }

    FeatureTable table;
    table.options = options;
    table.feature_names = feature_names(options.mode, options.granularity);

    // Nets block of both teams precedes the stats block of both teams.
    const std::size_t nets_width =
        uses_nets(options.mode)
            ? NetworkMetrics::column_names().size() * segments_for(options.granularity).size()
            : 0;
    const std::size_t stats_width = uses_stats(options.mode) ? MatchStats::feature_names().size() : 0;

    for (const MatchRecord* m : ordered) {
        const Outcome outcome = outcome_of(*m);
        if (options.target == TargetKind::Binary && outcome == Outcome::Draw) {
            ++table.skipped.draws_excluded;
            continue;
        }
        RollingResult home;
        RollingResult away;
        try {
            home = rolling_features(histories[m->home_team_id], m->date, Venue::Home,
                                    options.window, options.venue_conditioned, options.min_history);
            away = rolling_features(histories[m->away_team_id], m->date, Venue::Away,
                                    options.window, options.venue_conditioned, options.min_history);
        } catch (const Error& err) {
            if (err.kind() != ErrorKind::InsufficientHistory) throw;
            ++table.skipped.insufficient_history;
            continue;
        }

        FeatureRow row;
        row.match_id = m->match_id;
        row.home_team_id = m->home_team_id;
        row.away_team_id = m->away_team_id;
        row.date = m->date;
        row.competition = m->competition;
        row.label = outcome;
        row.coverage_home = home.coverage;
        row.coverage_away = away.coverage;
        bool missing = false;
        const auto append = [&](const RollingResult& r, std::size_t begin, std::size_t count) {
            for (std::size_t i = begin; i < begin + count; ++i) {
                if (!r.values[i] || !std::isfinite(*r.values[i])) {
                    missing = true;
                    return;
                }
                row.features.push_back(*r.values[i]);
            }
        };
        append(home, 0, nets_width);
        append(away, 0, nets_width);
        append(home, nets_width, stats_width);
        append(away, nets_width, stats_width);
        if (missing) {
            ++table.skipped.missing_values;
            continue;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

LabeledData LabeledData::subset(std::span<const std::size_t> indices) const {
    LabeledData out;
    out.feature_names = feature_names;
    out.x.resize(static_cast<Eigen::Index>(indices.size()), x.cols());
    out.y.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(indices[i]));
        out.y.push_back(y[indices[i]]);
    }
    return out;
}

LabeledData to_labeled(const FeatureTable& table) {
    LabeledData data;
    data.feature_names = table.feature_names;
    data.x.resize(static_cast<Eigen::Index>(table.rows.size()),
                  static_cast<Eigen::Index>(table.feature_names.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < table.feature_names.size(); ++c) {
            data.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                table.rows[r].features[c];
        }
        data.y.push_back(label_index(table.rows[r].label));
    }
    return data;
}

std::string write_table_csv(const FeatureTable& table) {
    std::string out = fmt::format("{},label,match_id\n", fmt::join(table.feature_names, ","));
    for (const auto& row : table.rows) {
        for (const double v : row.features) {
            out += io::format_double(v);
            out += ',';
        }
        out += fmt::format("{},{}\n", label_index(row.label), row.match_id);
    }
    return out;
}

TableCsv read_table_csv(std::string_view csv) {
    const auto rows = io::lines(csv);
    if (rows.empty()) throw Error(ErrorKind::MalformedInput, "empty feature table");
    auto header = io::split(rows.front(), ',');
    if (header.size() < 2 || header[header.size() - 2] != "label" || header.back() != "match_id") {
        throw Error(ErrorKind::MalformedInput, "feature table must end with label,match_id");
    }
    header.resize(header.size() - 2);

    TableCsv out;
    out.feature_names = header;
    out.data.feature_names = header;
    const auto p = static_cast<Eigen::Index>(header.size());
    out.data.x.resize(static_cast<Eigen::Index>(rows.size() - 1), p);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto f = io::split(rows[r], ',');
        if (f.size() != header.size() + 2) {
            throw Error(ErrorKind::MalformedInput, fmt::format("feature table line {}: bad width", r + 1));
        }
        for (Eigen::Index c = 0; c < p; ++c) {
            out.data.x(static_cast<Eigen::Index>(r - 1), c) =
                io::parse_double(f[static_cast<std::size_t>(c)], "feature");
        }
        out.data.y.push_back(static_cast<int>(io::parse_int(f[header.size()], "label")));
        out.match_ids.push_back(f.back());
    }
    return out;
}

std::string write_stats_csv(const StatsStore& stats) {
    std::string out =
        fmt::format("match_id,team_id,{}\n", fmt::join(MatchStats::feature_names(), ","));
    for (const auto& [key, s] : stats) {
        out += fmt::format("{},{}", key.first, key.second);
        for (const double v : s.values()) out += "," + io::format_double(v);
        out += '\n';
    }
    return out;
}

StatsStore read_stats_csv(std::string_view csv) {
    const auto rows = io::lines(csv);
    StatsStore out;
    const std::size_t width = 2 + MatchStats::feature_names().size();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto f = io::split(rows[r], ',');
        if (f.size() != width) {
            throw Error(ErrorKind::MalformedInput, fmt::format("stats CSV line {}: bad width", r + 1));
        }
        std::vector<double> v;
        for (std::size_t c = 2; c < width; ++c) v.push_back(io::parse_double(f[c], "statistic"));
        MatchStats s;
        s.saves = static_cast<int>(v[0]);
        s.red_cards = static_cast<int>(v[1]);
        s.yellow_cards = static_cast<int>(v[2]);
        s.assists = static_cast<int>(v[3]);
        s.shots = static_cast<int>(v[4]);
        s.opponent_shots = static_cast<int>(v[5]);
        s.shots_on_target = static_cast<int>(v[6]);
        s.passes = static_cast<int>(v[7]);
        s.goals = static_cast<int>(v[8]);
        s.opponent_goals = static_cast<int>(v[9]);
        s.possession = v[10];
        s.pass_accuracy = v[11];
        s.save_accuracy = v[12];
        s.shot_on_target_accuracy = v[13];
        out.emplace(std::pair{f[0], f[1]}, s);
    }
    return out;
}

}  // namespace passnet
