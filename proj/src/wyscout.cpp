#include "passnet/wyscout.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "passnet/error.hpp"
#include "passnet/io_util.hpp"

namespace passnet::wyscout {

namespace {

using nlohmann::json;

constexpr int kTagGoal = 101;
constexpr int kTagOwnGoal = 102;
constexpr int kTagAssist = 301;
constexpr int kTagRed = 1701;
constexpr int kTagYellow = 1702;
constexpr int kTagSecondYellow = 1703;
constexpr int kTagAccurate = 1801;

constexpr int kEventFoul = 2;
constexpr int kEventFreeKick = 3;
constexpr int kEventPass = 8;
constexpr int kEventSave = 9;
constexpr int kEventShot = 10;
constexpr int kSubEventFreeKickShot = 33;
constexpr int kSubEventPenalty = 35;

constexpr double kHalfSeconds = 45.0 * 60.0;
constexpr double kExtraHalfSeconds = 15.0 * 60.0;

std::string id_string(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<long long>());
    throw Error(ErrorKind::MalformedInput, "id field is neither string nor integer");
}

double clamp_coordinate(double v) {
    if (v < -0.5 || v > 100.5) {
        throw Error(ErrorKind::MalformedInput, fmt::format("coordinate {} outside [0,100]", v));
    }
    return std::clamp(v, 0.0, 100.0);
}

struct RawEvent {
    std::string match_id;
    std::string team_id;
    std::string player_id;
    Period period;
    double second;
    int event_id;
    int sub_event_id;
    std::set<int> tags;
    double x;
    double y;
};

bool has(const RawEvent& e, int tag) { return e.tags.count(tag) > 0; }

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& err) {
        throw Error(ErrorKind::MalformedInput, fmt::format("invalid JSON: {}", err.what()));
    }
}

}  // namespace

Competition competition_from_id(long long competition_id) {
    switch (competition_id) {
        case 364: return Competition::PremierLeague;
        case 795: return Competition::LaLiga;
        case 524: return Competition::SerieA;
        case 412: return Competition::Ligue1;
        case 426: return Competition::Bundesliga;
        case 28: return Competition::WorldCup;
        case 102: return Competition::Euro;
        default: break;
    }
    throw Error(ErrorKind::MalformedInput, fmt::format("unknown competitionId {}", competition_id));
}

std::vector<Event> parse_events(std::string_view text) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
    const json doc = parse_json(text);
    if (!doc.is_array()) throw Error(ErrorKind::MalformedInput, "events document must be an array");

    std::vector<RawEvent> raw;
    raw.reserve(doc.size());
    try {
        for (const auto& item : doc) {
            const std::string period = item.at("matchPeriod").get<std::string>();
            double offset = 0.0;
            Period p = Period::First;
            if (period == "1H") {
                p = Period::First;
            } else if (period == "2H") {
                p = Period::Second;
            } else if (period == "E1") {
                p = Period::Second;
                offset = kHalfSeconds;
            } else if (period == "E2") {
                p = Period::Second;
                offset = kHalfSeconds + kExtraHalfSeconds;
            } else {
                continue;  // shootout
            }
            RawEvent e{id_string(item.at("matchId")),
                       id_string(item.at("teamId")),
                       id_string(item.at("playerId")),
                       p,
                       offset + item.at("eventSec").get<double>(),
                       item.at("eventId").get<int>(),
                       item.value("subEventId", json(0)).is_number()
                           ? item.value("subEventId", 0)
                           : 0,
                       {},
                       0.0,
                       0.0};
            for (const auto& tag : item.value("tags", json::array())) {
                e.tags.insert(tag.at("id").get<int>());
            }
            const auto& positions = item.value("positions", json::array());
            if (!positions.empty()) {
                e.x = clamp_coordinate(positions.at(0).at("x").get<double>());
                e.y = clamp_coordinate(positions.at(0).at("y").get<double>());
            }
            raw.push_back(std::move(e));
        }
    } catch (const json::exception& err) {
        throw Error(ErrorKind::MalformedInput, fmt::format("bad Wyscout event: {}", err.what()));
    }

    // Teams per match, for crediting own goals to the opponent.
    std::map<std::string, std::set<std::string>> teams;
    for (const auto& e : raw) teams[e.match_id].insert(e.team_id);

    std::vector<Event> events;
    events.reserve(raw.size() * 11 / 10);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const RawEvent& r = raw[i];
        Event base;
        base.match_id = r.match_id;
        base.team_id = r.team_id;
        base.player_id = r.player_id;
        base.period = r.period;
        base.second = r.second;
        base.x = r.x;
        base.y = r.y;

        const bool shot = r.event_id == kEventShot ||
                          (r.event_id == kEventFreeKick &&
                           (r.sub_event_id == kSubEventFreeKickShot ||
                            r.sub_event_id == kSubEventPenalty));
        Event primary = base;
        if (r.event_id == kEventPass) {
            primary.kind = EventKind::Pass;
            primary.success = has(r, kTagAccurate);
            if (primary.success) {
                // Receiver is the next actor when a teammate touches the ball next.
                const bool next_is_teammate =
                    i + 1 < raw.size() && raw[i + 1].match_id == r.match_id &&
                    raw[i + 1].period == r.period && raw[i + 1].team_id == r.team_id &&
                    raw[i + 1].player_id != r.player_id && raw[i + 1].player_id != "0";
                if (next_is_teammate) {
                    primary.recipient_id = raw[i + 1].player_id;
                } else {
                    primary.success = false;
                }
            }
        } else if (shot) {
            primary.kind = EventKind::Shot;
            primary.success = has(r, kTagAccurate) || has(r, kTagGoal);
        } else if (r.event_id == kEventSave) {
            primary.kind = EventKind::Save;
            primary.success = has(r, kTagAccurate) && !has(r, kTagGoal);
        } else if (r.event_id == kEventFoul) {
            primary.kind = EventKind::Foul;
        } else {
            primary.kind = EventKind::Other;
            primary.success = has(r, kTagAccurate);
        }
        events.push_back(primary);

        if (shot && has(r, kTagGoal)) {
            Event goal = base;
            goal.kind = EventKind::Goal;
            goal.success = true;
            events.push_back(goal);
        }
        if (has(r, kTagOwnGoal)) {
            for (const auto& other : teams[r.match_id]) {
                if (other == r.team_id) continue;
                Event goal = base;
                goal.kind = EventKind::Goal;
                goal.success = true;
                goal.team_id = other;
                events.push_back(goal);
            }
        }
        if (has(r, kTagAssist)) {
            Event assist = base;
            assist.kind = EventKind::Assist;
            assist.success = true;
            events.push_back(assist);
        }
        if (has(r, kTagYellow)) {
            Event card = base;
            card.kind = EventKind::YellowCard;
            events.push_back(card);
        }
        if (has(r, kTagRed) || has(r, kTagSecondYellow)) {
            Event card = base;
            card.kind = EventKind::RedCard;
            events.push_back(card);
        }
    }
    return events;
}

ConvertedMatches parse_matches(std::string_view text) {
    ConvertedMatches out;
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return out;
    const json doc = parse_json(text);
    if (!doc.is_array()) throw Error(ErrorKind::MalformedInput, "matches document must be an array");

    std::set<std::string> seen;
    try {
        for (const auto& item : doc) {
            MatchRecord m;
            m.match_id = id_string(item.at("wyId"));
            if (!seen.insert(m.match_id).second) {
                throw Error(ErrorKind::DuplicateMatch,
                            fmt::format("duplicate match_id {}", m.match_id));
            }
            m.competition = competition_from_id(item.at("competitionId").get<long long>());
            m.date = parse_date(item.at("dateutc").get<std::string>().substr(0, 10));

            std::string problem;
            for (const auto& [team_id, data] : item.at("teamsData").items()) {
                const bool home = data.at("side").get<std::string>() == "home";
                (home ? m.home_team_id : m.away_team_id) = team_id;
                (home ? m.home_goals : m.away_goals) = data.at("score").get<int>();

                const auto& formation = data.at("formation");
                std::vector<std::string> lineup;
                for (const auto& player : formation.value("lineup", json::array())) {
                    lineup.push_back(id_string(player.at("playerId")));
                }
                const std::set<std::string> unique(lineup.begin(), lineup.end());
                if (lineup.size() != 11 || unique.size() != 11) {
                    problem = fmt::format("{} side lists {} starters", home ? "home" : "away",
                                          lineup.size());
                } else {
                    std::copy(lineup.begin(), lineup.end(),
                              (home ? m.home_starters : m.away_starters).begin());
                }

                const auto subs = formation.value("substitutions", json());
                if (!subs.is_array()) continue;
                for (const auto& sub : subs) {
                    const double minute = sub.at("minute").get<double>();
                    Event e;
                    e.match_id = m.match_id;
                    e.team_id = team_id;
                    e.player_id = id_string(sub.at("playerOut"));
                    e.kind = EventKind::Substitution;
                    e.success = true;
                    e.period = minute <= 45.0 ? Period::First : Period::Second;
                    e.second = (minute <= 45.0 ? minute : minute - 45.0) * 60.0;
                    e.sub_out_id = e.player_id;
                    e.sub_in_id = id_string(sub.at("playerIn"));
                    out.substitutions.push_back(std::move(e));
                }
            }
            if (m.home_team_id.empty() || m.away_team_id.empty()) {
                throw Error(ErrorKind::MalformedInput,
                            fmt::format("match {} lacks a home or away side", m.match_id));
            }
            if (!problem.empty()) {
                out.loaded.rejected.push_back({m.match_id, problem});
                continue;
            }
            out.loaded.matches.push_back(std::move(m));
        }
    } catch (const json::exception& err) {
        throw Error(ErrorKind::MalformedInput, fmt::format("bad Wyscout match: {}", err.what()));
    }
    return out;
}

}  // namespace passnet::wyscout
