#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace passnet {

enum class Period { First, Second };

enum class EventKind {
    Pass,
    Shot,
    Save,
    Foul,
    YellowCard,
    RedCard,
    Substitution,
    Goal,
    Assist,
    Other,
};

/// One atomic match event. Coordinates are percentages of pitch length and
/// width. `recipient_id` is set exactly for completed passes; the substitution
/// fields exactly for substitutions.
struct Event {
    std::string match_id;
    std::string team_id;
    std::string player_id;
    Period period = Period::First;
    double second = 0.0;
    EventKind kind = EventKind::Other;
    bool success = false;
    double x = 0.0;
    double y = 0.0;
    std::optional<std::string> recipient_id;
    std::optional<std::string> sub_out_id;
    std::optional<std::string> sub_in_id;

    bool operator==(const Event&) const = default;
};

enum class Competition { LaLiga, PremierLeague, SerieA, Ligue1, Bundesliga, WorldCup, Euro };

inline constexpr std::array<Competition, 5> kDomesticLeagues = {
    Competition::LaLiga, Competition::PremierLeague, Competition::SerieA,
    Competition::Ligue1, Competition::Bundesliga};

using Lineup = std::array<std::string, 11>;

struct MatchRecord {
    std::string match_id;
    Competition competition = Competition::PremierLeague;
    std::chrono::year_month_day date{};
    std::string home_team_id;
    std::string away_team_id;
    int home_goals = 0;
    int away_goals = 0;
    Lineup home_starters;
    Lineup away_starters;

    bool operator==(const MatchRecord&) const = default;

    const Lineup& starters(std::string_view team_id) const;
    bool is_home(std::string_view team_id) const { return team_id == home_team_id; }
    bool involves(std::string_view team_id) const {
        return team_id == home_team_id || team_id == away_team_id;
    }
};

/// Match result from the home side's perspective.
enum class Outcome { HomeLoss = 0, HomeWin = 1, Draw = 2 };

Outcome outcome_of(const MatchRecord& match);

enum class EventFormat { WyscoutJson, CanonicalCsv };

std::string_view to_string(Period period);
std::string_view to_string(EventKind kind);
std::string_view to_string(Competition competition);
std::string_view to_string(Outcome outcome);
std::string to_string(const std::chrono::year_month_day& date);

Period parse_period(std::string_view text);
EventKind parse_event_kind(std::string_view text);
Competition parse_competition(std::string_view text);
std::chrono::year_month_day parse_date(std::string_view text);

/// Parses an event stream. Events are grouped by match in order of first
/// appearance and stably ordered by (period, second) within each match.
std::vector<Event> parse_event_log(std::string_view stream, EventFormat format);

std::vector<Event> parse_canonical_events(std::string_view csv);
std::string write_canonical_events(const std::vector<Event>& events);

struct MatchDiagnostic {
    std::string match_id;
    std::string reason;
};

struct LoadedMatches {
    std::vector<MatchRecord> matches;
    std::vector<MatchDiagnostic> rejected;
};

/// Parses the matches CSV. Matches without a valid 11-player starting list per
/// side are reported in `rejected` instead of failing the whole load.
LoadedMatches load_matches(std::string_view stream);
std::string write_matches(const std::vector<MatchRecord>& matches);

/// Drops draws unless `include_draws`; order preserved.
std::vector<MatchRecord> filter_outcomes(const std::vector<MatchRecord>& matches,
                                         bool include_draws);

}  // namespace passnet
