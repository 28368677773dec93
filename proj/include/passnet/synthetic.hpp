#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "passnet/ingest.hpp"

namespace passnet {

/// Knobs for the synthetic corpus. Each team has a latent strength that
/// drives its goals, pass volume, pass accuracy and how widely it circulates
/// the ball, so network and statistics features carry outcome signal.
struct SyntheticOptions {
    std::vector<Competition> leagues{kDomesticLeagues.begin(), kDomesticLeagues.end()};
    std::size_t teams_per_league = 8;
    /// Each cycle is a double round robin.
    std::size_t cycles = 2;
    std::uint64_t seed = 1;
    std::chrono::year_month_day start{std::chrono::year{2017}, std::chrono::month{8}, std::chrono::day{5}};
    double base_passes = 320.0;
};

struct SyntheticCorpus {
    std::vector<MatchRecord> matches;
    std::vector<Event> events;
};

SyntheticCorpus generate_corpus(const SyntheticOptions& options);

}  // namespace passnet
