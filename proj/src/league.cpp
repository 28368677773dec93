#include "passnet/league.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "passnet/error.hpp"
#include "passnet/io_util.hpp"
#include "passnet/tuning.hpp"

namespace passnet {

Correlation pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::LengthMismatch, fmt::format("lengths {} and {} differ", x.size(), y.size()));
    }
    const std::size_t n = x.size();
    if (n < 3) throw Error(ErrorKind::TooShort, fmt::format("correlation needs 3 points, got {}", n));
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) throw Error(ErrorKind::ZeroVariance, "correlation input has zero variance");
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (std::abs(r) >= 1.0 - 1e-15) return {r, 0.0};

    const double df = static_cast<double>(n - 2);
    const double t = r * std::sqrt(df / (1.0 - r * r));
    const boost::math::students_t dist(df);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return {r, std::min(p, 1.0)};
}

std::string_view to_string(Provenance provenance) {
    return provenance == Provenance::Real ? "real" : "simulated";
}

const StandingsEntry* StandingsTable::find(std::string_view team) const {
    for (const auto& e : entries) {
        if (e.team == team) return &e;
    }
    return nullptr;
}

std::pair<int, int> match_points(Outcome outcome) {
    switch (outcome) {
        case Outcome::HomeWin: return {3, 0};
        case Outcome::HomeLoss: return {0, 3};
        case Outcome::Draw: return {1, 1};
    }
    return {0, 0};
}

StandingsTable standings_from_outcomes(std::string league, const std::vector<MatchResult>& results,
                                       Provenance provenance) {
    std::map<std::string, StandingsEntry> by_team;
    for (const auto& m : results) {
        auto& home = by_team[m.home_team_id];
        auto& away = by_team[m.away_team_id];
        home.team = m.home_team_id;
        away.team = m.away_team_id;
        const auto [hp, ap] = match_points(m.outcome);
        home.points += hp;
        away.points += ap;
        switch (m.outcome) {
            case Outcome::HomeWin: ++home.wins; ++away.losses; break;
            case Outcome::HomeLoss: ++away.wins; ++home.losses; break;
            case Outcome::Draw: ++home.draws; ++away.draws; break;
        }
    }
    StandingsTable table{std::move(league), {}, provenance};
    for (auto& [team, entry] : by_team) table.entries.push_back(std::move(entry));
    std::sort(table.entries.begin(), table.entries.end(), [](const auto& a, const auto& b) {
        if (a.points != b.points) return a.points > b.points;
        if (a.wins != b.wins) return a.wins > b.wins;
        return a.team < b.team;
    });
    for (std::size_t i = 0; i < table.entries.size(); ++i) table.entries[i].rank = i + 1;
    return table;
}

SimulationComparison compare_standings(const StandingsTable& real, const StandingsTable& simulated) {
    if (real.entries.size() != simulated.entries.size()) {
        throw Error(ErrorKind::MissingTeam, fmt::format("tables list {} and {} teams", real.entries.size(),
                                                        simulated.entries.size()));
    }
    SimulationComparison out;
    out.teams = real.entries.size();
    for (const auto& e : real.entries) {
        const StandingsEntry* s = simulated.find(e.team);
        if (s == nullptr) throw Error(ErrorKind::MissingTeam, fmt::format("team {} not simulated", e.team));
        const long diff = static_cast<long>(e.rank) - static_cast<long>(s->rank);
        if (diff == 0) ++out.exact_hits;
        if (std::labs(diff) <= 2) ++out.within_two;
    }
    out.champion_correct = !real.entries.empty() && real.entries.front().team == simulated.entries.front().team;
    return out;
}

std::vector<MetricCorrelation> metric_rank_correlations(const std::vector<MetricsRow>& rows,
                                                        const std::vector<std::string>& column_names,
                                                        const StandingsTable& standings) {
    const std::size_t columns = column_names.size();
    // team -> per column (sum, count)
    std::map<std::string, std::vector<std::pair<double, std::size_t>>> sums;
    std::set<std::string> seen;
    for (const auto& row : rows) {
        if (standings.find(row.team_id) == nullptr) continue;
        seen.insert(row.team_id);
        auto& acc = sums[row.team_id];
        acc.resize(columns);
        for (std::size_t c = 0; c < columns && c < row.values.size(); ++c) {
            if (row.values[c]) {
                acc[c].first += *row.values[c];
                ++acc[c].second;
            }
        }
    }
    for (const auto& e : standings.entries) {
        if (!seen.count(e.team)) throw Error(ErrorKind::MissingTeam, fmt::format("team {} has no networks", e.team));
    }

    std::vector<MetricCorrelation> out;
    for (std::size_t c = 0; c < columns; ++c) {
        MetricCorrelation mc{column_names[c], std::nullopt, {}};
        std::vector<double> metric, rank;
        for (const auto& e : standings.entries) {
            const auto& [sum, count] = sums[e.team][c];
            if (count == 0) continue;
            metric.push_back(sum / static_cast<double>(count));
            rank.push_back(static_cast<double>(e.rank));
        }
        try {
            mc.value = pearson(metric, rank);
        } catch (const Error& err) {
            mc.diagnostic = std::string(to_string(err.kind()));
        }
        out.push_back(std::move(mc));
    }
    return out;
}

std::string correlation_csv(const std::vector<MetricCorrelation>& correlations) {
    std::string out = "metric,r,p\n";
    for (const auto& c : correlations) {
        if (c.value) {
            out += fmt::format("{},{},{}\n", c.metric, io::format_double(c.value->r), io::format_double(c.value->p));
        } else {
            out += fmt::format("{},,\n", c.metric);
        }
    }
    return out;
}

std::string standings_csv(const std::vector<StandingsTable>& tables) {
    std::string out = "league,rank,team,points,wins,draws,losses,provenance\n";
    for (const auto& t : tables) {
        for (const auto& e : t.entries) {
            out += fmt::format("{},{},{},{},{},{},{},{}\n", t.league, e.rank, e.team, e.points, e.wins, e.draws,
                               e.losses, to_string(t.provenance));
        }
    }
    return out;
}

nlohmann::json to_json(const SimulationComparison& comparison) {
    return {{"exact_hits", comparison.exact_hits},
            {"within_two", comparison.within_two},
            {"champion_correct", comparison.champion_correct},
            {"teams", comparison.teams}};
}

LeagueEvaluation evaluate_partition(const LabeledData& data, const EvaluationPlan& plan) {
    const Split split = stratified_split(data.y, plan.test_fraction, derive_seed(plan.seed, 0));
    const LabeledData train_part = data.subset(split.train);
    const LabeledData test_part = data.subset(split.test);

    LeagueEvaluation out;
    out.rows = data.rows();
    if (plan.tune_budget > 0) {
        out.spec = tune(plan.family, train_part, plan.tune_budget, derive_seed(plan.seed, 1), plan.folds).best;
    } else {
        out.spec.family = plan.family;
        out.spec.seed = derive_seed(plan.seed, 2);
    }
    const TrainedModel model = train(out.spec, train_part);
    const bool binary = model.classes == std::vector<int>{0, 1};
    out.report = evaluate(predict_proba(model, test_part), test_part.y, model.classes,
                          binary ? Averaging::BinaryPositive : Averaging::Macro);
    return out;
}

std::vector<LeagueEvaluation> per_league_evaluation(const FeatureTable& table, const EvaluationPlan& plan) {
    const LabeledData all = to_labeled(table);
    std::vector<LeagueEvaluation> out;
    for (const Competition league : {Competition::LaLiga, Competition::PremierLeague, Competition::SerieA,
                                     Competition::Ligue1, Competition::Bundesliga, Competition::WorldCup,
                                     Competition::Euro}) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            if (table.rows[i].competition == league) rows.push_back(i);
        }
        if (rows.empty()) continue;
        LeagueEvaluation eval = evaluate_partition(all.subset(rows), plan);
        eval.league = league;
        out.push_back(std::move(eval));
    }
    return out;
}

std::string league_evaluation_csv(const std::vector<LeagueEvaluation>& evaluations) {
    std::string out = "league,rows,accuracy,precision,recall,f1,auc\n";
    for (const auto& e : evaluations) {
        out += fmt::format("{},{},{},{},{},{},{}\n", to_string(e.league), e.rows, io::format_double(e.report.accuracy),
                           io::format_double(e.report.precision), io::format_double(e.report.recall),
                           io::format_double(e.report.f1),
                           e.report.auc ? io::format_double(*e.report.auc) : std::string());
    }
    return out;
}

SimulationResult simulate_league(Competition target, const FeatureTable& table, const ModelSpec& spec) {
    if (std::find(kDomesticLeagues.begin(), kDomesticLeagues.end(), target) == kDomesticLeagues.end()) {
        throw Error(ErrorKind::UnknownLeague,
                    fmt::format("{} is not a domestic league", to_string(target)));
    }
    if (table.options.target != TargetKind::Ternary) {
        throw Error(ErrorKind::ConfigError, "league simulation needs a ternary feature table");
    }
    std::vector<std::size_t> train_rows, target_rows;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        (table.rows[i].competition == target ? target_rows : train_rows).push_back(i);
    }
    if (target_rows.empty()) {
        throw Error(ErrorKind::UnknownLeague, fmt::format("no feature rows for {}", to_string(target)));
    }

    const LabeledData all = to_labeled(table);
    const TrainedModel model = train(spec, all.subset(train_rows));
    const LabeledData target_data = all.subset(target_rows);
    const Eigen::MatrixXd proba = predict_proba(model, target_data);

    std::vector<MatchResult> predicted, actual;
    for (std::size_t k = 0; k < target_rows.size(); ++k) {
        const FeatureRow& row = table.rows[target_rows[k]];
        Eigen::Index best = 0;
        proba.row(static_cast<Eigen::Index>(k)).maxCoeff(&best);
        const int label = model.classes[static_cast<std::size_t>(best)];
        predicted.push_back({row.home_team_id, row.away_team_id, outcome_from_index(label)});
        actual.push_back({row.home_team_id, row.away_team_id, row.label});
    }

    SimulationResult out;
    out.league = target;
    out.matches = target_rows.size();
    out.training_rows = train_rows.size();
    const std::string name(to_string(target));
    out.real = standings_from_outcomes(name, actual, Provenance::Real);
    out.simulated = standings_from_outcomes(name, predicted, Provenance::Simulated);
    out.comparison = compare_standings(out.real, out.simulated);
    return out;
}

}  // namespace passnet
