#pragma once

#include <map>
#include <span>
#include <vector>

#include "casmo/motifs.hpp"
#include "casmo/windows.hpp"

namespace casmo {

// True when p4 maps injectively into p5 preserving every p4 edge
// (non-induced containment); with induced_only, the image must induce exactly
// p4. Backed by a precomputed 6x21 relation table.
bool pattern_subgraph_relation(PatternId p4, PatternId p5, bool induced_only = false);

struct TransitionThresholds {
    // Minimum census counts a pattern needs before its instances are matched.
    std::map<PatternId, long long> min_count4;
    std::map<PatternId, long long> min_count5;
    bool induced_only = false;

    long long threshold4(PatternId p) const {
        auto it = min_count4.find(p);
        return it == min_count4.end() ? 0 : it->second;
    }
    long long threshold5(PatternId p) const {
        auto it = min_count5.find(p);
        return it == min_count5.end() ? 0 : it->second;
    }
};

struct TransitionMatrix {
    int prev_network = 0;  // ordinal of the 4-node side
    int curr_network = 0;  // ordinal of the 5-node side
    // Keyed by (4-pattern, 5-pattern); keys exist for every pair that passed
    // the subgraph guard and count thresholds, value = matched instance pairs.
    std::map<std::pair<PatternId, PatternId>, long long> counts;

    long long column_sum(PatternId p5) const;
};

// Matches 4-node instances of the previous network against 5-node instances
// of the current one: a pair counts when all 4 vertices of the smaller
// instance appear in the larger one, the 4-pattern is a subgraph of the
// 5-pattern and both patterns clear their count thresholds. Both censuses
// must carry instances.
TransitionMatrix count_transitions(const MotifCensus& census4_prev,
                                   const MotifCensus& census5_curr,
                                   const TransitionThresholds& thresholds = {});

// One matrix per consecutive network pair (N_{i-1}, N_i) for i from
// steep_network+1 through inhib_network, returned in increasing i. networks
// must be the contiguous ordinal range covering them.
std::vector<TransitionMatrix> transition_series(std::span<const TemporalNetwork> networks,
                                                int steep_network, int inhib_network,
                                                const TransitionThresholds& thresholds = {});

}  // namespace casmo
