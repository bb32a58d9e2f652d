#pragma once

#include <optional>
#include <span>
#include <vector>

#include "casmo/core.hpp"
#include "casmo/motifs.hpp"

namespace casmo {

// One participant window: the w-th batch of W users in first-appearance
// order. Spans are measured by when the window's first and last member
// appeared; consecutive spans never overlap.
struct Subsequence {
    int index = 0;                    // ordinal, 1..Q
    std::vector<UserId> node_set;     // exactly W users, first-appearance order
    std::vector<int> event_slice;     // cascade event indices whose target first appears here
    double start_min = 0.0;
    double end_min = 0.0;
};

enum class EdgeTag : std::uint8_t { cascade, historical };

struct TaggedEdge {
    UserId u = 0;  // u < v
    UserId v = 0;
    EdgeTag tag = EdgeTag::cascade;

    friend bool operator==(const TaggedEdge&, const TaggedEdge&) = default;
};

// Union of two consecutive windows plus the edges joining them. index i means
// windows i-1 and i, so valid ordinals run 2..Q and the first network that
// contains window w is N_max(w,2).
struct TemporalNetwork {
    int index = 0;
    std::vector<UserId> nodes;        // sorted
    std::vector<TaggedEdge> edges;    // unique (u<v) pairs, sorted

    // Dense view for the motif engine: vertex i of the DenseGraph is nodes[i].
    DenseGraph to_dense() const;
};

struct WindowingStats {
    std::size_t dropped_tail_participants = 0;  // trailing partial window
    std::size_t dropped_tail_events = 0;        // events touching dropped users
    std::size_t dropped_long_range_events = 0;  // endpoints >= 2 windows apart
};

// Splits the cascade's participants into Q = floor(|participants| / W)
// windows of exactly W users. Throws WindowingError when fewer than 2W
// participants exist.
std::vector<Subsequence> partition_subsequences(const Cascade& cascade, int W,
                                                WindowingStats* stats = nullptr);

// Ordinal of the window containing time t: the earliest window whose span end
// is >= t. Times beyond the last window have no ordinal.
std::optional<int> window_for_time(std::span<const Subsequence> windows, double t);

// In-window edges of one subsequence: reshare edges of its event slice with
// both endpoints in the node set, plus historical edges inside the node set.
// A pair that is both stays a cascade edge.
std::vector<TaggedEdge> build_window_network(const Cascade& cascade, const Subsequence& window,
                                             const DiffusionNetwork& diffusion);

// N_i for ordinal i in [2,Q]: both windows' in-window edges plus cascade and
// historical edges straddling windows i-1 and i.
TemporalNetwork build_temporal_network(const Cascade& cascade,
                                       std::span<const Subsequence> windows, int i,
                                       const DiffusionNetwork& diffusion);

// All Q-1 networks, ordinals 2..Q, with drop counters filled.
std::vector<TemporalNetwork> build_all_networks(const Cascade& cascade,
                                                std::span<const Subsequence> windows,
                                                const DiffusionNetwork& diffusion,
                                                WindowingStats* stats = nullptr);

struct LifecycleIndices {
    int steep_network = 0;  // first network ordinal containing the steep window
    int inhib_network = 0;  // first network ordinal containing the inhibition window
};

// Maps the two lifecycle time points to network ordinals. Throws
// LifecycleError when a time falls beyond the last window or the points are
// out of order.
LifecycleIndices locate_lifecycle_networks(std::span<const Subsequence> windows, double t_steep,
                                           double t_inhib);

}  // namespace casmo
