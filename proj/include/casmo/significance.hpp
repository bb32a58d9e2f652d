#pragma once

#include <map>
#include <optional>
#include <vector>

#include "casmo/common.hpp"
#include "casmo/motifs.hpp"

namespace casmo {

struct SwitchStats {
    long long requested = 0;
    long long performed = 0;
    long long rejected = 0;
    bool exhausted_budget = false;  // budget ran out before performing all switches
};

// Degree-preserving rewiring: picks two edges (a,b),(c,d) on four distinct
// vertices and replaces them with (a,d),(c,b), rejecting any candidate that
// would duplicate an existing edge. The attempt budget is
// budget_factor * n_successful_switches; if it runs out the graph so far is
// returned and the stats flag it.
DenseGraph edge_switch_randomize(const DenseGraph& g, long long n_successful_switches,
                                 std::uint64_t seed, SwitchStats* stats = nullptr,
                                 long long budget_factor = 100);

struct NullEnsemble {
    int k = 0;
    // Per-member pattern counts, dense over the union of observed patterns.
    std::vector<std::map<PatternId, long long>> member_counts;
    std::vector<SwitchStats> switch_stats;
};

// R randomized copies of g, each censused at size k (counts only). Member i
// draws from a seed derived from (seed, i), so results do not depend on
// scheduling.
NullEnsemble build_ensemble(const DenseGraph& g, int R, int switches_per_edge, int k,
                            std::uint64_t seed);

struct PatternSignificance {
    PatternId pattern;
    long long input_count = 0;
    double mean = 0.0;
    double stddev = 0.0;  // population form
    double z = 0.0;
    double p = 1.0;       // fraction of members with count >= input
    bool significant = false;
    bool degenerate_std = false;  // ensemble spread was zero
};

struct SignificanceReport {
    int k = 0;
    std::vector<PatternSignificance> rows;  // catalog order
};

struct SignificanceThresholds {
    double p_threshold = 0.01;
    double z_threshold = 2.0;
};

// Compares the observed census against the ensemble. dense=true reports every
// catalog pattern, otherwise only patterns observed in input or ensemble.
// When the ensemble spread is zero the z value is 0 for a matching input and
// a +-1e9 sentinel otherwise; the sentinel never triggers the z criterion.
SignificanceReport zscore_report(const MotifCensus& input, const NullEnsemble& ensemble,
                                 const SignificanceThresholds& thresholds = {},
                                 bool dense = true);

}  // namespace casmo
