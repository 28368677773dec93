#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "passnet/ingest.hpp"

namespace passnet {

inline constexpr std::size_t kSlots = 11;

enum class Segment { Full, FirstHalf, SecondHalf };

std::string_view to_string(Segment segment);
Segment parse_segment(std::string_view text);

struct Position {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Position&) const = default;
};

using WeightMatrix = std::array<std::array<int, kSlots>, kSlots>;

/// Directed pass-count graph over the 11 starter slots of one team.
/// weights[i][j] counts completed passes from slot i to slot j.
struct PassingNetwork {
    std::string match_id;
    std::string team_id;
    Segment segment = Segment::Full;
    Lineup slots;
    WeightMatrix weights{};
    std::array<std::optional<Position>, kSlots> positions;
    /// Completed passes between two players folded into the same slot.
    int dropped_self_passes = 0;
    /// Completed passes whose passer or receiver is in neither the lineup nor
    /// the substitution chain.
    int unmapped_passes = 0;

    int total_passes() const;
    bool operator==(const PassingNetwork&) const = default;
};

/// Player id -> starter slot, following replacement chains.
using SlotMap = std::map<std::string, std::size_t, std::less<>>;

SlotMap build_substitution_map(const std::vector<Event>& events, const MatchRecord& match,
                               std::string_view team_id);

PassingNetwork build_passing_network(const std::vector<Event>& events, const MatchRecord& match,
                                     std::string_view team_id, Segment segment);

nlohmann::json to_json(const PassingNetwork& network);
PassingNetwork network_from_json(const nlohmann::json& doc);

}  // namespace passnet
