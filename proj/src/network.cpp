#include "passnet/network.hpp"

#include <fmt/format.h>

#include "passnet/error.hpp"

namespace passnet {

namespace {

bool in_segment(Period period, Segment segment) {
    switch (segment) {
        case Segment::Full: return true;
        case Segment::FirstHalf: return period == Period::First;
        case Segment::SecondHalf: return period == Period::Second;
    }
    return false;
}

}  // namespace

std::string_view to_string(Segment segment) {
    switch (segment) {
        case Segment::Full: return "Full";
        case Segment::FirstHalf: return "1H";
        case Segment::SecondHalf: return "2H";
    }
    return "Full";
}

Segment parse_segment(std::string_view text) {
    if (text == "Full") return Segment::Full;
    if (text == "1H") return Segment::FirstHalf;
    if (text == "2H") return Segment::SecondHalf;
    throw Error(ErrorKind::MalformedInput, fmt::format("bad segment '{}'", text));
}

int PassingNetwork::total_passes() const {
    int total = 0;
    for (const auto& row : weights) {
        for (const int w : row) total += w;
    }
    return total;
}

SlotMap build_substitution_map(const std::vector<Event>& events, const MatchRecord& match,
                               std::string_view team_id) {
    const Lineup& starters = match.starters(team_id);
    SlotMap slots;
    for (std::size_t i = 0; i < kSlots; ++i) slots.emplace(starters[i], i);

    for (const auto& e : events) {
        if (e.kind != EventKind::Substitution || e.match_id != match.match_id ||
            e.team_id != team_id) {
            continue;
        }
        const auto out = slots.find(*e.sub_out_id);
        if (out == slots.end()) {
            throw Error(ErrorKind::UnresolvableSubstitution,
                        fmt::format("match {} team {}: {} substituted before appearing",
                                    match.match_id, team_id, *e.sub_out_id));
        }
        slots[*e.sub_in_id] = out->second;
    }
    return slots;
}

PassingNetwork build_passing_network(const std::vector<Event>& events, const MatchRecord& match,
                                     std::string_view team_id, Segment segment) {
    const SlotMap slot_of = build_substitution_map(events, match, team_id);

    PassingNetwork net;
    net.match_id = match.match_id;
    net.team_id = std::string(team_id);
    net.segment = segment;
    net.slots = match.starters(team_id);

    std::array<double, kSlots> sum_x{};
    std::array<double, kSlots> sum_y{};
    std::array<int, kSlots> origins{};

    for (const auto& e : events) {
        if (e.kind != EventKind::Pass || e.match_id != match.match_id || e.team_id != team_id ||
            !in_segment(e.period, segment)) {
            continue;
        }
        const auto from = slot_of.find(e.player_id);
        if (from == slot_of.end()) {
            if (e.success) ++net.unmapped_passes;
            continue;
        }
        sum_x[from->second] += e.x;
        sum_y[from->second] += e.y;
        ++origins[from->second];

        if (!e.success) continue;
        const auto to = slot_of.find(*e.recipient_id);
        if (to == slot_of.end()) {
            ++net.unmapped_passes;
        } else if (to->second == from->second) {
            ++net.dropped_self_passes;
        } else {
            ++net.weights[from->second][to->second];
        }
    }
    for (std::size_t i = 0; i < kSlots; ++i) {
        if (origins[i] > 0) {
            net.positions[i] = Position{sum_x[i] / origins[i], sum_y[i] / origins[i]};
        }
    }
    return net;
}

nlohmann::json to_json(const PassingNetwork& network) {
    nlohmann::json positions = nlohmann::json::array();
    for (const auto& p : network.positions) {
        if (p) {
            positions.push_back({{"x", p->x}, {"y", p->y}});
        } else {
            positions.push_back(nullptr);
        }
    }
    return {{"match_id", network.match_id},
            {"team_id", network.team_id},
            {"segment", std::string(to_string(network.segment))},
            {"slots", network.slots},
            {"weights", network.weights},
            {"positions", positions}};
}

PassingNetwork network_from_json(const nlohmann::json& doc) {
    try {
        PassingNetwork net;
        net.match_id = doc.at("match_id").get<std::string>();
        net.team_id = doc.at("team_id").get<std::string>();
        net.segment = parse_segment(doc.at("segment").get<std::string>());
        net.slots = doc.at("slots").get<Lineup>();
        net.weights = doc.at("weights").get<WeightMatrix>();
        const auto& positions = doc.at("positions");
        if (positions.size() != kSlots) throw Error(ErrorKind::MalformedInput, "need 11 positions");
        for (std::size_t i = 0; i < kSlots; ++i) {
            if (!positions[i].is_null()) {
                net.positions[i] =
                    Position{positions[i].at("x").get<double>(), positions[i].at("y").get<double>()};
            }
        }
        return net;
    } catch (const nlohmann::json::exception& err) {
        throw Error(ErrorKind::MalformedInput, fmt::format("bad network JSON: {}", err.what()));
    }
}

}  // namespace passnet
