#include "passnet/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>

#include <fmt/format.h>

#include "passnet/random.hpp"

namespace passnet {

namespace {

constexpr std::size_t kSquad = 14;

// 4-4-2 reference spots, attacking towards x = 100.
constexpr std::array<std::array<double, 2>, 11> kSpots = {{
    {5, 50}, {25, 15}, {25, 38}, {25, 62}, {25, 85},
    {50, 15}, {50, 38}, {50, 62}, {50, 85}, {72, 35}, {72, 65},
}};

struct Team {
    std::string id;
    double strength = 0.0;
    std::vector<std::string> squad;
};

struct Clock {
    Period period;
    double second;
};

Clock random_time(Rng& rng) {
    const double t = rng.uniform(0.0, 5400.0);
    return t < 2700.0 ? Clock{Period::First, t} : Clock{Period::Second, t - 2700.0};
}

double clamp_pitch(double v) { return std::clamp(v, 0.0, 100.0); }

// Ordered (home, away) pairs of one double round robin, round by round.
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> double_round_robin(std::size_t n) {
    std::vector<long> ring(n);
    for (std::size_t i = 0; i < n; ++i) ring[i] = static_cast<long>(i);
    if (n % 2 == 1) ring.push_back(-1);
    const std::size_t m = ring.size();
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rounds;
    for (std::size_t r = 0; r + 1 < m; ++r) {
        std::vector<std::pair<std::size_t, std::size_t>> round;
        for (std::size_t i = 0; i < m / 2; ++i) {
            const long a = ring[i];
            const long b = ring[m - 1 - i];
            if (a < 0 || b < 0) continue;
            const bool flip = (r + i) % 2 == 1;
            round.emplace_back(static_cast<std::size_t>(flip ? b : a), static_cast<std::size_t>(flip ? a : b));
        }
        rounds.push_back(std::move(round));
        std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
    }
    const std::size_t first_half = rounds.size();
    for (std::size_t r = 0; r < first_half; ++r) {
        auto mirrored = rounds[r];
        for (auto& [h, a] : mirrored) std::swap(h, a);
        rounds.push_back(std::move(mirrored));
    }
    return rounds;
}

void add_event(std::vector<Event>& out, const std::string& match_id, const std::string& team_id,
               const std::string& player, Clock clock, EventKind kind, bool success, double x, double y) {
    Event e;
    e.match_id = match_id;
    e.team_id = team_id;
    e.player_id = player;
    e.period = clock.period;
    e.second = clock.second;
    e.kind = kind;
    e.success = success;
    e.x = clamp_pitch(x);
    e.y = clamp_pitch(y);
    out.push_back(std::move(e));
}

// Events of one side. `goals` and `opponent_goals` are fixed beforehand.
void team_events(std::vector<Event>& out, const std::string& match_id, const Team& team,
                 const Lineup& starters, const std::vector<std::string>& bench, int goals,
                 int opponent_on_target_misses, double passes_mean, Rng& rng) {
    const double s = team.strength;

    // Substitutions in the second half; the incoming player takes the spot.
    struct Change {
        double at;  // seconds from kickoff
        std::size_t slot;
        std::string in;
    };
    std::vector<Change> changes;
    std::vector<std::size_t> slots_left = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    rng.shuffle(std::span<std::size_t>(slots_left));
    const auto n_changes = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(bench.size())));
    for (std::size_t c = 0; c < n_changes; ++c) {
        changes.push_back({2700.0 + rng.uniform(600.0, 2500.0), slots_left[c], bench[c]});
    }
    std::sort(changes.begin(), changes.end(), [](const Change& a, const Change& b) { return a.at < b.at; });
    for (const auto& ch : changes) {
        Event e;
        e.match_id = match_id;
        e.team_id = team.id;
        e.player_id = ch.in;
        e.period = Period::Second;
        e.second = ch.at - 2700.0;
        e.kind = EventKind::Substitution;
        e.success = true;
        e.x = 50.0;
        e.y = 0.0;
        e.sub_out_id = starters[ch.slot];
        e.sub_in_id = ch.in;
        out.push_back(std::move(e));
    }
    const auto player_at = [&](std::size_t slot, double t) {
        std::string who = starters[slot];
        for (const auto& ch : changes) {
            if (ch.slot == slot && ch.at <= t) who = ch.in;
        }
        return who;
    };

    // Stronger sides circulate the ball over longer links.
    const double reach = 18.0 + 9.0 * std::clamp(s + 1.0, 0.0, 3.0);
    std::array<std::array<double, 11>, 11> cumulative{};
    for (std::size_t i = 0; i < 11; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 11; ++j) {
            if (i != j) {
                const double d = std::hypot(kSpots[i][0] - kSpots[j][0], kSpots[i][1] - kSpots[j][1]);
                acc += std::exp(-d / reach);
            }
            cumulative[i][j] = acc;
        }
    }
    std::array<double, 11> involvement{};
    for (std::size_t i = 0; i < 11; ++i) involvement[i] = i == 0 ? 0.4 : 1.0 + 0.2 * rng.normal();
    for (auto& v : involvement) v = std::max(v, 0.2);
    double involvement_total = 0.0;
    for (const double v : involvement) involvement_total += v;

    const int passes = std::max(60, rng.poisson(std::max(passes_mean, 60.0)));
    const double accuracy = std::clamp(0.78 + 0.06 * s, 0.55, 0.93);
    for (int k = 0; k < passes; ++k) {
        double pick = rng.uniform() * involvement_total;
        std::size_t from = 0;
        while (from < 10 && pick >= involvement[from]) pick -= involvement[from++];
        const double target = rng.uniform() * cumulative[from][10];
        std::size_t to = 0;
        while (to < 10 && cumulative[from][to] <= target) ++to;
        if (to == from) to = (to + 1) % 11;

        const Clock clock = random_time(rng);
        const double t = clock.second + (clock.period == Period::Second ? 2700.0 : 0.0);
        const bool success = rng.uniform() < accuracy;
        add_event(out, match_id, team.id, player_at(from, t), clock, EventKind::Pass, success,
                  kSpots[from][0] + 6.0 * rng.normal(), kSpots[from][1] + 6.0 * rng.normal());
        if (success) out.back().recipient_id = player_at(to, t);
    }

    // Shots: every goal is an on-target shot plus a Goal event.
    const int extra_shots = rng.poisson(std::max(9.0 + 2.5 * s, 2.0));
    const double on_target = std::clamp(0.33 + 0.05 * s, 0.15, 0.6);
    for (int g = 0; g < goals; ++g) {
        const Clock clock = random_time(rng);
        const double t = clock.second + (clock.period == Period::Second ? 2700.0 : 0.0);
        const std::size_t shooter = static_cast<std::size_t>(rng.integer(5, 10));
        const std::string who = player_at(shooter, t);
        add_event(out, match_id, team.id, who, clock, EventKind::Shot, true, 88.0 + 4.0 * rng.normal(),
                  50.0 + 10.0 * rng.normal());
        add_event(out, match_id, team.id, who, clock, EventKind::Goal, true, 100.0, 50.0);
        if (rng.uniform() < 0.7) {
            const std::size_t provider = static_cast<std::size_t>(rng.integer(1, 10));
            add_event(out, match_id, team.id, player_at(provider == shooter ? 8 : provider, t), clock,
                      EventKind::Assist, true, 80.0, 50.0);
        }
    }
    for (int k = 0; k < extra_shots; ++k) {
        const Clock clock = random_time(rng);
        const double t = clock.second + (clock.period == Period::Second ? 2700.0 : 0.0);
        add_event(out, match_id, team.id, player_at(static_cast<std::size_t>(rng.integer(5, 10)), t), clock,
                  EventKind::Shot, rng.uniform() < on_target, 82.0 + 6.0 * rng.normal(), 50.0 + 15.0 * rng.normal());
    }
    // The keeper saves opponent shots that were on target but not scored.
    for (int k = 0; k < opponent_on_target_misses; ++k) {
        const Clock clock = random_time(rng);
        add_event(out, match_id, team.id, starters[0], clock, EventKind::Save, true, 3.0, 50.0);
    }

    const int fouls = rng.poisson(12.0 - 1.5 * s);
    for (int k = 0; k < fouls; ++k) {
        const Clock clock = random_time(rng);
        const double t = clock.second + (clock.period == Period::Second ? 2700.0 : 0.0);
        const std::string who = player_at(static_cast<std::size_t>(rng.integer(1, 10)), t);
        add_event(out, match_id, team.id, who, clock, EventKind::Foul, true, rng.uniform(20.0, 80.0),
                  rng.uniform(5.0, 95.0));
        if (rng.uniform() < 0.15) {
            add_event(out, match_id, team.id, who, clock, EventKind::YellowCard, true, out.back().x, out.back().y);
        } else if (rng.uniform() < 0.005) {
            add_event(out, match_id, team.id, who, clock, EventKind::RedCard, true, out.back().x, out.back().y);
        }
    }
}

}  // namespace

SyntheticCorpus generate_corpus(const SyntheticOptions& options) {
    SyntheticCorpus corpus;
    Rng rng(options.seed);
    const std::size_t n_teams = options.teams_per_league;

    std::size_t match_no = 0;
    for (const Competition league : options.leagues) {
        std::vector<Team> teams(n_teams);
        for (std::size_t t = 0; t < n_teams; ++t) {
            teams[t].id = fmt::format("{}-T{:02}", to_string(league), t + 1);
            teams[t].strength = rng.normal();
            for (std::size_t p = 0; p < kSquad; ++p) teams[t].squad.push_back(fmt::format("{}-P{:02}", teams[t].id, p + 1));
        }
        const auto rounds = double_round_robin(n_teams);
        for (std::size_t cycle = 0; cycle < options.cycles; ++cycle) {
            for (std::size_t r = 0; r < rounds.size(); ++r) {
                const auto day = std::chrono::sys_days(options.start) +
                                 std::chrono::days(7 * static_cast<long>(cycle * rounds.size() + r));
                for (const auto& [h, a] : rounds[r]) {
                    const Team& home = teams[h];
                    const Team& away = teams[a];
                    MatchRecord m;
                    m.match_id = fmt::format("S{:05}", ++match_no);
                    m.competition = league;
                    m.date = std::chrono::year_month_day(day);
                    m.home_team_id = home.id;
                    m.away_team_id = away.id;
                    const double gap = home.strength - away.strength;
                    m.home_goals = rng.poisson(std::exp(0.25 + 0.4 * gap));
                    m.away_goals = rng.poisson(std::exp(0.0 - 0.4 * gap));

                    // Occasional rotation: one bench player starts.
                    const auto lineup = [&](const Team& team) {
                        std::vector<std::string> squad = team.squad;
                        if (rng.uniform() < 0.3) {
                            const auto out = static_cast<std::size_t>(rng.integer(1, 10));
                            const auto in = static_cast<std::size_t>(rng.integer(11, kSquad - 1));
                            std::swap(squad[out], squad[in]);
                        }
                        Lineup starters;
                        std::copy_n(squad.begin(), 11, starters.begin());
                        return std::pair{starters, std::vector<std::string>(squad.begin() + 11, squad.end())};
                    };
                    const auto [home_xi, home_bench] = lineup(home);
                    const auto [away_xi, away_bench] = lineup(away);
                    m.home_starters = home_xi;
                    m.away_starters = away_xi;

                    const double share = 1.0 / (1.0 + std::exp(-0.5 * gap));
                    const double total = 2.0 * options.base_passes;
                    const int home_saves = rng.poisson(std::max(3.0 - 0.8 * gap, 0.5));
                    const int away_saves = rng.poisson(std::max(3.0 + 0.8 * gap, 0.5));
                    team_events(corpus.events, m.match_id, home, home_xi, home_bench, m.home_goals, home_saves,
                                total * (0.04 + 0.92 * share), rng);
                    team_events(corpus.events, m.match_id, away, away_xi, away_bench, m.away_goals, away_saves,
                                total * (0.04 + 0.92 * (1.0 - share)), rng);
                    corpus.matches.push_back(std::move(m));
                }
            }
        }
    }
    std::stable_sort(corpus.events.begin(), corpus.events.end(), [](const Event& a, const Event& b) {
        if (a.match_id != b.match_id) return a.match_id < b.match_id;
        if (a.period != b.period) return a.period < b.period;
        return a.second < b.second;
    });
    return corpus;
}

}  // namespace passnet
