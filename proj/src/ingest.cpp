#include "passnet/ingest.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "passnet/error.hpp"
#include "passnet/io_util.hpp"
#include "passnet/wyscout.hpp"

namespace passnet {

namespace {

constexpr std::array<std::string_view, 12> kEventColumns = {
    "match_id", "team_id", "player_id", "period", "second", "kind",
    "success", "x", "y", "recipient_id", "sub_out_id", "sub_in_id"};

constexpr std::array<std::string_view, 9> kMatchColumns = {
    "match_id", "competition", "date", "home_team_id", "away_team_id",
    "home_goals", "away_goals", "home_starters", "away_starters"};

constexpr double kClampTolerance = 0.5;

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
    throw Error(ErrorKind::MalformedInput, fmt::format("line {}: {}", line_no, what));
}

double coordinate(std::string_view text, std::size_t line_no, std::string_view axis) {
    const double v = io::parse_double(text, axis);
    if (v < -kClampTolerance || v > 100.0 + kClampTolerance) {
        malformed(line_no, fmt::format("{} coordinate {} outside [0,100]", axis, v));
    }
    return std::clamp(v, 0.0, 100.0);
}

bool parse_bool(std::string_view text, std::size_t line_no) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    malformed(line_no, fmt::format("bad boolean '{}'", text));
}

std::optional<std::string> optional_field(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return text;
}

// Header name -> column index; every name in `required` must be present.
template <std::size_t N>
std::array<std::size_t, N> column_map(const std::string& header,
                                      const std::array<std::string_view, N>& required) {
    const auto names = io::split(header, ',');
    std::array<std::size_t, N> index{};
    for (std::size_t i = 0; i < N; ++i) {
        const auto it = std::find(names.begin(), names.end(), required[i]);
        if (it == names.end()) {
            throw Error(ErrorKind::MalformedInput,
                        fmt::format("missing required column '{}'", required[i]));
        }
        index[i] = static_cast<std::size_t>(it - names.begin());
    }
    return index;
}

void validate(const Event& e, std::size_t line_no) {
    const bool completed_pass = e.kind == EventKind::Pass && e.success;
    if (completed_pass != e.recipient_id.has_value()) {
        malformed(line_no, "recipient_id must be set exactly for completed passes");
    }
    const bool substitution = e.kind == EventKind::Substitution;
    if (substitution != (e.sub_in_id.has_value() && e.sub_out_id.has_value()) ||
        (!substitution && (e.sub_in_id || e.sub_out_id))) {
        malformed(line_no, "sub_in_id/sub_out_id must be set exactly for substitutions");
    }
    if (e.second < 0.0) malformed(line_no, "negative second");
}

}  // namespace

const Lineup& MatchRecord::starters(std::string_view team_id) const {
    if (team_id == home_team_id) return home_starters;
    if (team_id == away_team_id) return away_starters;
    throw Error(ErrorKind::MissingTeam,
                fmt::format("team {} did not play match {}", team_id, match_id));
}

Outcome outcome_of(const MatchRecord& match) {
    if (match.home_goals > match.away_goals) return Outcome::HomeWin;
    if (match.home_goals < match.away_goals) return Outcome::HomeLoss;
    return Outcome::Draw;
}

std::string_view to_string(Period period) { return period == Period::First ? "1H" : "2H"; }

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Pass: return "Pass";
        case EventKind::Shot: return "Shot";
        case EventKind::Save: return "Save";
        case EventKind::Foul: return "Foul";
        case EventKind::YellowCard: return "YellowCard";
        case EventKind::RedCard: return "RedCard";
        case EventKind::Substitution: return "Substitution";
        case EventKind::Goal: return "Goal";
        case EventKind::Assist: return "Assist";
        case EventKind::Other: return "Other";
    }
    return "Other";
}

std::string_view to_string(Competition competition) {
    switch (competition) {
        case Competition::LaLiga: return "LaLiga";
        case Competition::PremierLeague: return "PremierLeague";
        case Competition::SerieA: return "SerieA";
        case Competition::Ligue1: return "Ligue1";
        case Competition::Bundesliga: return "Bundesliga";
        case Competition::WorldCup: return "WorldCup";
        case Competition::Euro: return "Euro";
    }
    return "PremierLeague";
}

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::HomeWin: return "HomeWin";
        case Outcome::HomeLoss: return "HomeLoss";
        case Outcome::Draw: return "Draw";
    }
    return "Draw";
}

std::string to_string(const std::chrono::year_month_day& date) {
    return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(date.year()),
                       static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
}

Period parse_period(std::string_view text) {
    if (text == "1H") return Period::First;
    if (text == "2H") return Period::Second;
    throw Error(ErrorKind::MalformedInput, fmt::format("bad period '{}'", text));
}

EventKind parse_event_kind(std::string_view text) {
    static const std::map<std::string_view, EventKind, std::less<>> kinds = {
        {"Pass", EventKind::Pass},         {"Shot", EventKind::Shot},
        {"Save", EventKind::Save},         {"Foul", EventKind::Foul},
        {"YellowCard", EventKind::YellowCard}, {"RedCard", EventKind::RedCard},
        {"Substitution", EventKind::Substitution}, {"Goal", EventKind::Goal},
        {"Assist", EventKind::Assist},     {"Other", EventKind::Other}};
    const auto it = kinds.find(text);
    return it == kinds.end() ? EventKind::Other : it->second;
}

Competition parse_competition(std::string_view text) {
    for (const Competition c : {Competition::LaLiga, Competition::PremierLeague,
                                Competition::SerieA, Competition::Ligue1,
                                Competition::Bundesliga, Competition::WorldCup,
                                Competition::Euro}) {
        if (to_string(c) == text) return c;
    }
    throw Error(ErrorKind::MalformedInput, fmt::format("unknown competition '{}'", text));
}

std::chrono::year_month_day parse_date(std::string_view text) {
    const auto parts = io::split(text, '-');
    if (parts.size() != 3) {
        throw Error(ErrorKind::MalformedInput, fmt::format("bad date '{}'", text));
    }
    const std::chrono::year_month_day date{
        std::chrono::year{static_cast<int>(io::parse_int(parts[0], "year"))},
        std::chrono::month{static_cast<unsigned>(io::parse_int(parts[1], "month"))},
        std::chrono::day{static_cast<unsigned>(io::parse_int(parts[2], "day"))}};
    if (!date.ok()) throw Error(ErrorKind::MalformedInput, fmt::format("bad date '{}'", text));
    return date;
}

std::vector<Event> parse_event_log(std::string_view stream, EventFormat format) {
    std::vector<Event> events = format == EventFormat::CanonicalCsv
                                    ? parse_canonical_events(stream)
                                    : wyscout::parse_events(stream);

    std::unordered_map<std::string, std::size_t> match_rank;
    for (const auto& e : events) match_rank.try_emplace(e.match_id, match_rank.size());
    std::stable_sort(events.begin(), events.end(), [&](const Event& a, const Event& b) {
        const auto ra = match_rank.at(a.match_id);
        const auto rb = match_rank.at(b.match_id);
        if (ra != rb) return ra < rb;
        if (a.period != b.period) return a.period < b.period;
        return a.second < b.second;
    });
    return events;
}

std::vector<Event> parse_canonical_events(std::string_view csv) {
    const auto rows = io::lines(csv);
    std::vector<Event> events;
    if (rows.empty()) return events;
    const auto col = column_map(rows.front(), kEventColumns);
    const std::size_t width = *std::max_element(col.begin(), col.end()) + 1;

    events.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::size_t line_no = r + 1;
        if (rows[r].empty()) continue;
        const auto f = io::split(rows[r], ',');
        if (f.size() < width) malformed(line_no, "too few fields");
        Event e;
        e.match_id = f[col[0]];
        e.team_id = f[col[1]];
        e.player_id = f[col[2]];
        if (e.match_id.empty() || e.team_id.empty()) malformed(line_no, "empty id");
        e.period = parse_period(f[col[3]]);
        e.second = io::parse_double(f[col[4]], "second");
        e.kind = parse_event_kind(f[col[5]]);
        e.success = parse_bool(f[col[6]], line_no);
        e.x = coordinate(f[col[7]], line_no, "x");
        e.y = coordinate(f[col[8]], line_no, "y");
        e.recipient_id = optional_field(f[col[9]]);
        e.sub_out_id = optional_field(f[col[10]]);
        e.sub_in_id = optional_field(f[col[11]]);
        validate(e, line_no);
        events.push_back(std::move(e));
    }
    return events;
}

std::string write_canonical_events(const std::vector<Event>& events) {
    std::string out = "match_id,team_id,player_id,period,second,kind,success,x,y,recipient_id,"
                      "sub_out_id,sub_in_id\n";
    for (const auto& e : events) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", e.match_id, e.team_id,
                           e.player_id, to_string(e.period), io::format_double(e.second),
                           to_string(e.kind), e.success ? "true" : "false",
                           io::format_double(e.x), io::format_double(e.y),
                           e.recipient_id.value_or(""), e.sub_out_id.value_or(""),
                           e.sub_in_id.value_or(""));
    }
    return out;
}

LoadedMatches load_matches(std::string_view stream) {
    const auto rows = io::lines(stream);
    LoadedMatches result;
    if (rows.empty()) return result;
    const auto col = column_map(rows.front(), kMatchColumns);
    const std::size_t width = *std::max_element(col.begin(), col.end()) + 1;

    std::set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::size_t line_no = r + 1;
        if (rows[r].empty()) continue;
        const auto f = io::split(rows[r], ',');
        if (f.size() < width) malformed(line_no, "too few fields");

        MatchRecord m;
        m.match_id = f[col[0]];
        if (m.match_id.empty()) malformed(line_no, "empty match_id");
        if (!seen.insert(m.match_id).second) {
            throw Error(ErrorKind::DuplicateMatch, fmt::format("duplicate match_id {}", m.match_id));
        }
        m.competition = parse_competition(f[col[1]]);
        m.date = parse_date(f[col[2]]);
        m.home_team_id = f[col[3]];
        m.away_team_id = f[col[4]];
        if (m.home_team_id.empty() || m.away_team_id.empty() || m.home_team_id == m.away_team_id) {
            malformed(line_no, "home and away teams must be distinct non-empty ids");
        }
        m.home_goals = static_cast<int>(io::parse_int(f[col[5]], "home_goals"));
        m.away_goals = static_cast<int>(io::parse_int(f[col[6]], "away_goals"));
        if (m.home_goals < 0 || m.away_goals < 0) malformed(line_no, "negative goals");

        std::string problem;
        const auto fill = [&](const std::string& joined, Lineup& lineup, std::string_view side) {
            auto ids = joined.empty() ? std::vector<std::string>{} : io::split(joined, ';');
            std::set<std::string> unique(ids.begin(), ids.end());
            if (ids.size() != 11 || unique.size() != 11 || unique.count("")) {
                if (problem.empty()) {
                    problem = fmt::format("{} side lists {} starters ({} distinct), need 11",
                                          side, ids.size(), unique.size());
                }
                return;
            }
            std::copy(ids.begin(), ids.end(), lineup.begin());
        };
        fill(f[col[7]], m.home_starters, "home");
        fill(f[col[8]], m.away_starters, "away");
        if (!problem.empty()) {
            result.rejected.push_back({m.match_id, problem});
            continue;
        }
        result.matches.push_back(std::move(m));
    }
    return result;
}

std::string write_matches(const std::vector<MatchRecord>& matches) {
    std::string out = "match_id,competition,date,home_team_id,away_team_id,home_goals,away_goals,"
                      "home_starters,away_starters\n";
    for (const auto& m : matches) {
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", m.match_id, to_string(m.competition),
                           to_string(m.date), m.home_team_id, m.away_team_id, m.home_goals,
                           m.away_goals, fmt::join(m.home_starters, ";"),
                           fmt::join(m.away_starters, ";"));
    }
    return out;
}

std::vector<MatchRecord> filter_outcomes(const std::vector<MatchRecord>& matches,
                                         bool include_draws) {
    std::vector<MatchRecord> out;
    std::copy_if(matches.begin(), matches.end(), std::back_inserter(out),
                 [&](const MatchRecord& m) { return include_draws || m.home_goals != m.away_goals; });
    return out;
}

}  // namespace passnet
