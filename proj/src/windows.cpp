#include "casmo/windows.hpp"

#include <algorithm>
#include <unordered_map>

namespace casmo {

DenseGraph TemporalNetwork::to_dense() const {
    DenseGraph g(static_cast<int>(nodes.size()));
    std::unordered_map<UserId, int> idx;
    idx.reserve(nodes.size() * 2);
    for (std::size_t i = 0; i < nodes.size(); ++i) idx[nodes[i]] = static_cast<int>(i);
    for (const auto& e : edges) g.add_edge(idx.at(e.u), idx.at(e.v));
    return g;
}

namespace {

// Window ordinal per user (0 = none / dropped tail).
std::unordered_map<UserId, int> window_of_user(std::span<const Subsequence> windows) {
    std::unordered_map<UserId, int> out;
    for (const auto& w : windows)
        for (UserId u : w.node_set) out[u] = w.index;
    return out;
}

// First-appearance time of every participant, in participant order.
std::vector<double> appearance_times(const Cascade& c) {
    std::vector<double> times;
    times.reserve(c.participants.size());
    std::unordered_map<UserId, char> seen;
    seen.reserve(c.participants.size() * 2);
    for (const auto& e : c.events) {
        if (seen.emplace(e.source, 1).second) times.push_back(e.time_min);
        if (seen.emplace(e.target, 1).second) times.push_back(e.time_min);
    }
    return times;
}

void add_pair(std::unordered_map<std::uint64_t, EdgeTag>& acc, UserId u, UserId v, EdgeTag tag) {
    if (u > v) std::swap(u, v);
    std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | v;
    auto [it, inserted] = acc.try_emplace(key, tag);
    if (!inserted && tag == EdgeTag::cascade) it->second = EdgeTag::cascade;
}

std::vector<TaggedEdge> sorted_edges(const std::unordered_map<std::uint64_t, EdgeTag>& acc) {
    std::vector<TaggedEdge> out;
    out.reserve(acc.size());
    for (const auto& [key, tag] : acc)
        out.push_back(TaggedEdge{static_cast<UserId>(key >> 32),
                                 static_cast<UserId>(key & 0xffffffffu), tag});
    std::sort(out.begin(), out.end(), [](const TaggedEdge& a, const TaggedEdge& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    return out;
}

}  // namespace

std::vector<Subsequence> partition_subsequences(const Cascade& cascade, int W,
                                                WindowingStats* stats) {
    if (W < 2) throw WindowingError("window size must be at least 2");
    std::size_t n = cascade.participants.size();
    std::size_t q = n / static_cast<std::size_t>(W);
    if (q < 2)
        throw WindowingError("cascade " + cascade.id + " has " + std::to_string(n) +
                             " participants, needs at least " + std::to_string(2 * W) +
                             " for window size " + std::to_string(W));

    std::vector<double> appear = appearance_times(cascade);
    std::vector<Subsequence> windows(q);
    std::unordered_map<UserId, int> win_of;
    win_of.reserve(n * 2);
    for (std::size_t i = 0; i < q; ++i) {
        auto& w = windows[i];
        w.index = static_cast<int>(i) + 1;
        w.node_set.assign(cascade.participants.begin() + static_cast<long>(i) * W,
                          cascade.participants.begin() + static_cast<long>(i + 1) * W);
        w.start_min = appear[i * static_cast<std::size_t>(W)];
        w.end_min = appear[(i + 1) * static_cast<std::size_t>(W) - 1];
        for (UserId u : w.node_set) win_of[u] = w.index;
    }

    // Assign events by where their target first appeared.
    for (std::size_t ei = 0; ei < cascade.events.size(); ++ei) {
        auto it = win_of.find(cascade.events[ei].target);
        if (it != win_of.end())
            windows[static_cast<std::size_t>(it->second - 1)].event_slice.push_back(
                static_cast<int>(ei));
    }

    if (stats) {
        stats->dropped_tail_participants = n - q * static_cast<std::size_t>(W);
        std::size_t dropped_events = 0;
        for (const auto& e : cascade.events)
            if (!win_of.count(e.source) || !win_of.count(e.target)) ++dropped_events;
        stats->dropped_tail_events = dropped_events;
    }
    return windows;
}

std::optional<int> window_for_time(std::span<const Subsequence> windows, double t) {
    for (const auto& w : windows)
        if (t <= w.end_min) return w.index;
    return std::nullopt;
}

std::vector<TaggedEdge> build_window_network(const Cascade& cascade, const Subsequence& window,
                                             const DiffusionNetwork& diffusion) {
    std::unordered_map<UserId, char> members;
    members.reserve(window.node_set.size() * 2);
    for (UserId u : window.node_set) members.emplace(u, 1);

    std::unordered_map<std::uint64_t, EdgeTag> acc;
    for (int ei : window.event_slice) {
        const auto& e = cascade.events[static_cast<std::size_t>(ei)];
        if (members.count(e.source) && members.count(e.target) && e.source != e.target)
            add_pair(acc, e.source, e.target, EdgeTag::cascade);
    }
    for (UserId u : window.node_set) {
        const auto* nbrs = diffusion.neighbors(u);
        if (!nbrs) continue;
        for (UserId v : *nbrs)
            if (u < v && members.count(v)) add_pair(acc, u, v, EdgeTag::historical);
    }
    return sorted_edges(acc);
}

TemporalNetwork build_temporal_network(const Cascade& cascade,
                                       std::span<const Subsequence> windows, int i,
                                       const DiffusionNetwork& diffusion) {
    int q = static_cast<int>(windows.size());
    if (i < 2 || i > q)
        throw WindowingError("network ordinal " + std::to_string(i) + " out of range [2," +
                             std::to_string(q) + "]");
    const Subsequence& prev = windows[static_cast<std::size_t>(i - 2)];
    const Subsequence& curr = windows[static_cast<std::size_t>(i - 1)];

    std::unordered_map<std::uint64_t, EdgeTag> acc;
    for (const auto& e : build_window_network(cascade, prev, diffusion)) add_pair(acc, e.u, e.v, e.tag);
    for (const auto& e : build_window_network(cascade, curr, diffusion)) add_pair(acc, e.u, e.v, e.tag);

    std::unordered_map<UserId, int> side;  // 1 = prev window, 2 = curr window
    for (UserId u : prev.node_set) side[u] = 1;
    for (UserId u : curr.node_set) side[u] = 2;

    // Cross-window reshare edges.
    for (const auto& e : cascade.events) {
        auto su = side.find(e.source);
        auto sv = side.find(e.target);
        if (su == side.end() || sv == side.end()) continue;
        if (su->second != sv->second) add_pair(acc, e.source, e.target, EdgeTag::cascade);
    }
    // Cross-window historical edges.
    for (UserId u : prev.node_set) {
        const auto* nbrs = diffusion.neighbors(u);
        if (!nbrs) continue;
        for (UserId v : *nbrs) {
            auto sv = side.find(v);
            if (sv != side.end() && sv->second == 2) add_pair(acc, u, v, EdgeTag::historical);
        }
    }

    TemporalNetwork net;
    net.index = i;
    net.nodes.reserve(prev.node_set.size() + curr.node_set.size());
    net.nodes.insert(net.nodes.end(), prev.node_set.begin(), prev.node_set.end());
    net.nodes.insert(net.nodes.end(), curr.node_set.begin(), curr.node_set.end());
    std::sort(net.nodes.begin(), net.nodes.end());
    net.edges = sorted_edges(acc);
    return net;
}

std::vector<TemporalNetwork> build_all_networks(const Cascade& cascade,
                                                std::span<const Subsequence> windows,
                                                const DiffusionNetwork& diffusion,
                                                WindowingStats* stats) {
    std::vector<TemporalNetwork> nets;
    int q = static_cast<int>(windows.size());
    nets.reserve(static_cast<std::size_t>(q - 1));
    for (int i = 2; i <= q; ++i)
        nets.push_back(build_temporal_network(cascade, windows, i, diffusion));

    if (stats) {
        auto win_of = window_of_user(windows);
        std::size_t long_range = 0;
        for (const auto& e : cascade.events) {
            auto a = win_of.find(e.source);
            auto b = win_of.find(e.target);
            if (a == win_of.end() || b == win_of.end()) continue;
            if (std::abs(a->second - b->second) >= 2) ++long_range;
        }
        stats->dropped_long_range_events = long_range;
    }
    return nets;
}

LifecycleIndices locate_lifecycle_networks(std::span<const Subsequence> windows, double t_steep,
                                           double t_inhib) {
    if (windows.size() < 2) throw LifecycleError("need at least 2 windows to locate networks");
    if (t_inhib < t_steep) throw LifecycleError("inhibition time precedes steep time");
    auto ws = window_for_time(windows, t_steep);
    auto wi = window_for_time(windows, t_inhib);
    if (!ws) throw LifecycleError("steep time lies beyond the last window");
    if (!wi) throw LifecycleError("inhibition time lies beyond the last window");
    LifecycleIndices out;
    out.steep_network = std::max(*ws, 2);
    out.inhib_network = std::max(*wi, 2);
    return out;
}

}  // namespace casmo
