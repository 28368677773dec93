#pragma once

#include <string_view>
#include <vector>

#include "passnet/ingest.hpp"

/// Mapping from the public Wyscout v2 JSON exports onto canonical records.
/// The full mapping table lives in docs/wyscout_mapping.md.
namespace passnet::wyscout {

/// Converts a Wyscout events array. Assists, goals and cards carried as tags
/// become separate derived events; penalty-shootout events are dropped.
std::vector<Event> parse_events(std::string_view json);

struct ConvertedMatches {
    LoadedMatches loaded;
    /// Substitutions live in the match metadata, not the event stream.
    std::vector<Event> substitutions;
};

ConvertedMatches parse_matches(std::string_view json);

Competition competition_from_id(long long competition_id);

}  // namespace passnet::wyscout
