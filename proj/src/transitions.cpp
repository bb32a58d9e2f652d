#include "casmo/transitions.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>

namespace casmo {

namespace {

bool contains_mapping(PatternId p4, PatternId p5, bool induced_only) {
    // Decode adjacency of both canonical codes.
    auto decode = [](PatternId p, bool adj[5][5]) {
        int k = p.k;
        int P = k * (k - 1) / 2;
        int rank = 0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j, ++rank) {
                bool bit = (p.code >> (P - 1 - rank)) & 1u;
                adj[i][j] = adj[j][i] = bit;
            }
    };
    bool a4[5][5] = {}, a5[5][5] = {};
    decode(p4, a4);
    decode(p5, a5);

    int map[4] = {0, 1, 2, 3};
    // All injective maps of the 4 vertices into 5: choose the excluded vertex
    // of p5, then permute.
    for (int skip = 0; skip < 5; ++skip) {
        int img[4];
        int t = 0;
        for (int v = 0; v < 5; ++v)
            if (v != skip) img[t++] = v;
        std::sort(map, map + 4);
        do {
            bool ok = true;
            for (int i = 0; i < 4 && ok; ++i)
                for (int j = i + 1; j < 4 && ok; ++j) {
                    bool e4 = a4[i][j];
                    bool e5 = a5[img[map[i]]][img[map[j]]];
                    if (e4 && !e5) ok = false;
                    if (induced_only && e4 != e5) ok = false;
                }
            if (ok) return true;
        } while (std::next_permutation(map, map + 4));
    }
    return false;
}

}  // namespace

bool pattern_subgraph_relation(PatternId p4, PatternId p5, bool induced_only) {
    if (p4.k != 4 || p5.k != 5)
        throw ContractViolation("subgraph relation is defined for a 4-pattern against a 5-pattern");
    static std::once_flag built;
    static bool table[6][21];
    static bool table_induced[6][21];
    std::call_once(built, [] {
        const auto& cat4 = pattern_catalog(4);
        const auto& cat5 = pattern_catalog(5);
        for (std::size_t a = 0; a < cat4.size(); ++a)
            for (std::size_t b = 0; b < cat5.size(); ++b) {
                table[a][b] = contains_mapping(cat4[a], cat5[b], false);
                table_induced[a][b] = contains_mapping(cat4[a], cat5[b], true);
            }
    });
    const auto& cat4 = pattern_catalog(4);
    const auto& cat5 = pattern_catalog(5);
    auto i4 = std::find(cat4.begin(), cat4.end(), p4);
    auto i5 = std::find(cat5.begin(), cat5.end(), p5);
    if (i4 == cat4.end() || i5 == cat5.end())
        throw ContractViolation("pattern id not in catalog");
    std::size_t a = static_cast<std::size_t>(i4 - cat4.begin());
    std::size_t b = static_cast<std::size_t>(i5 - cat5.begin());
    return induced_only ? table_induced[a][b] : table[a][b];
}

long long TransitionMatrix::column_sum(PatternId p5) const {
    long long sum = 0;
    for (const auto& [key, c] : counts)
        if (key.second == p5) sum += c;
    return sum;
}

namespace {

struct QuadKey {
    UserId a, b, c, d;
    bool operator==(const QuadKey&) const = default;
};

struct QuadHash {
    std::size_t operator()(const QuadKey& q) const {
        std::uint64_t h = splitmix64(q.a);
        h = splitmix64(h ^ q.b);
        h = splitmix64(h ^ q.c);
        h = splitmix64(h ^ q.d);
        return static_cast<std::size_t>(h);
    }
};

}  // namespace

TransitionMatrix count_transitions(const MotifCensus& census4_prev,
                                   const MotifCensus& census5_curr,
                                   const TransitionThresholds& thresholds) {
    if (census4_prev.k != 4 || census5_curr.k != 5)
        throw ContractViolation("transitions need a 4-census and a 5-census");
    for (const auto& [pid, e] : census4_prev.patterns)
        if (e.count > 0 && e.instances.empty())
            throw ContractViolation("4-census lacks stored instances");
    for (const auto& [pid, e] : census5_curr.patterns)
        if (e.count > 0 && e.instances.empty())
            throw ContractViolation("5-census lacks stored instances");

    TransitionMatrix matrix;

    // Which pattern pairs survive the guard: the 4-pattern must be a subgraph
    // of the 5-pattern and both must clear their count thresholds. Pairs that
    // fail are skipped entirely; surviving pairs start at zero.
    std::vector<std::pair<PatternId, PatternId>> surviving;
    for (const auto& [p4, e4] : census4_prev.patterns) {
        if (e4.count < thresholds.threshold4(p4)) continue;
        for (const auto& [p5, e5] : census5_curr.patterns) {
            if (e5.count < thresholds.threshold5(p5)) continue;
            if (!pattern_subgraph_relation(p4, p5, thresholds.induced_only)) continue;
            surviving.emplace_back(p4, p5);
            matrix.counts[{p4, p5}] = 0;
        }
    }
    if (surviving.empty()) return matrix;

    // Index every 5-instance by its five 4-vertex subsets.
    std::unordered_map<QuadKey, std::vector<PatternId>, QuadHash> quads;
    for (const auto& [p5, e5] : census5_curr.patterns) {
        if (e5.count < thresholds.threshold5(p5)) continue;
        for (const auto& inst : e5.instances) {
            for (int skip = 0; skip < 5; ++skip) {
                UserId q[4];
                int t = 0;
                for (int i = 0; i < 5; ++i)
                    if (i != skip) q[t++] = inst[static_cast<std::size_t>(i)];
                quads[QuadKey{q[0], q[1], q[2], q[3]}].push_back(p5);
            }
        }
    }

    for (const auto& [p4, e4] : census4_prev.patterns) {
        if (e4.count < thresholds.threshold4(p4)) continue;
        for (const auto& inst : e4.instances) {
            auto it = quads.find(QuadKey{inst[0], inst[1], inst[2], inst[3]});
            if (it == quads.end()) continue;
            for (PatternId p5 : it->second) {
                auto cell = matrix.counts.find({p4, p5});
                if (cell != matrix.counts.end()) ++cell->second;
            }
        }
    }
    return matrix;
}

std::vector<TransitionMatrix> transition_series(std::span<const TemporalNetwork> networks,
                                                int steep_network, int inhib_network,
                                                const TransitionThresholds& thresholds) {
    if (steep_network > inhib_network)
        throw LifecycleError("steep network ordinal exceeds inhibition network ordinal");
    auto find_net = [&](int ordinal) -> const TemporalNetwork* {
        for (const auto& n : networks)
            if (n.index == ordinal) return &n;
        return nullptr;
    };

    // Walk backwards from the inhibition network, then report in order.
    std::vector<TransitionMatrix> series;
    for (int i = inhib_network; i > steep_network; --i) {
        const TemporalNetwork* prev = find_net(i - 1);
        const TemporalNetwork* curr = find_net(i);
        if (!prev || !curr)
            throw ContractViolation("transition series needs networks " + std::to_string(i - 1) +
                                    " and " + std::to_string(i));
        CensusOptions opt;
        opt.store_instances = true;
        MotifCensus c4 = motif_census(prev->to_dense(), 4, opt, prev->nodes);
        MotifCensus c5 = motif_census(curr->to_dense(), 5, opt, curr->nodes);
        TransitionMatrix m = count_transitions(c4, c5, thresholds);
        m.prev_network = i - 1;
        m.curr_network = i;
        series.push_back(std::move(m));
    }
    std::reverse(series.begin(), series.end());
    return series;
}

}  // namespace casmo
