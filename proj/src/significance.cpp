#include "casmo/significance.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace casmo {

namespace {

std::uint64_t edge_key(int u, int v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
}

}  // namespace

DenseGraph edge_switch_randomize(const DenseGraph& g, long long n_successful_switches,
                                 std::uint64_t seed, SwitchStats* stats,
                                 long long budget_factor) {
    if (n_successful_switches < 0) throw ConfigError("switch count must be non-negative");
    auto edges = g.edges();
    std::unordered_set<std::uint64_t> present;
    present.reserve(edges.size() * 2);
    for (auto [u, v] : edges) present.insert(edge_key(u, v));

    SwitchStats st;
    st.requested = n_successful_switches;
    Rng rng(seed);

    if (edges.size() >= 2) {
        std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
        std::uniform_int_distribution<int> flip(0, 1);
        long long budget = budget_factor * std::max<long long>(n_successful_switches, 1);
        long long attempts = 0;
        while (st.performed < n_successful_switches && attempts < budget) {
            ++attempts;
            std::size_t i = pick(rng);
            std::size_t j = pick(rng);
            if (i == j) {
                ++st.rejected;
                continue;
            }
            auto [a, b] = edges[i];
            auto [c, d] = edges[j];
            // Each undirected edge can be rewired in two orientations.
            if (flip(rng)) std::swap(a, b);
            if (flip(rng)) std::swap(c, d);
            // (a,b),(c,d) -> (a,d),(c,b)
            if (a == c || a == d || b == c || b == d) {
                ++st.rejected;
                continue;
            }
            if (present.count(edge_key(a, d)) || present.count(edge_key(c, b))) {
                ++st.rejected;
                continue;
            }
            present.erase(edge_key(a, b));
            present.erase(edge_key(c, d));
            present.insert(edge_key(a, d));
            present.insert(edge_key(c, b));
            edges[i] = {a, d};
            edges[j] = {c, b};
            ++st.performed;
        }
        st.exhausted_budget = st.performed < n_successful_switches;
    } else {
        st.exhausted_budget = n_successful_switches > 0;
    }

    DenseGraph out(g.node_count());
    for (auto [u, v] : edges) out.add_edge(u, v);
    if (stats) *stats = st;
    return out;
}

NullEnsemble build_ensemble(const DenseGraph& g, int R, int switches_per_edge, int k,
                            std::uint64_t seed) {
    if (R < 2) throw ConfigError("ensemble needs at least 2 members");
    if (switches_per_edge < 0) throw ConfigError("switches per edge must be non-negative");
    NullEnsemble ens;
    ens.k = k;
    ens.member_counts.resize(static_cast<std::size_t>(R));
    ens.switch_stats.resize(static_cast<std::size_t>(R));
    long long switches = static_cast<long long>(switches_per_edge) * g.edge_count();
    for (int i = 0; i < R; ++i) {
        DenseGraph randomized = edge_switch_randomize(
            g, switches, derive_seed(seed, static_cast<std::uint64_t>(i)),
            &ens.switch_stats[static_cast<std::size_t>(i)]);
        MotifCensus census = motif_census(randomized, k);
        auto& counts = ens.member_counts[static_cast<std::size_t>(i)];
        for (const auto& [pid, entry] : census.patterns) counts[pid] = entry.count;
    }
    return ens;
}

SignificanceReport zscore_report(const MotifCensus& input, const NullEnsemble& ensemble,
                                 const SignificanceThresholds& thresholds, bool dense) {
    if (ensemble.member_counts.size() < 2)
        throw ContractViolation("z-scores need an ensemble of at least 2 members");
    if (ensemble.k != input.k)
        throw ContractViolation("ensemble and input census disagree on subgraph size");

    std::set<PatternId> keys;
    if (dense) {
        for (PatternId p : pattern_catalog(input.k)) keys.insert(p);
    } else {
        for (const auto& [pid, entry] : input.patterns) keys.insert(pid);
        for (const auto& m : ensemble.member_counts)
            for (const auto& [pid, c] : m) keys.insert(pid);
    }

    SignificanceReport report;
    report.k = input.k;
    double R = static_cast<double>(ensemble.member_counts.size());
    for (PatternId pid : keys) {
        PatternSignificance row;
        row.pattern = pid;
        row.input_count = input.count_of(pid);
        double sum = 0.0, sumsq = 0.0;
        long long ge = 0;
        for (const auto& m : ensemble.member_counts) {
            auto it = m.find(pid);
            double c = it == m.end() ? 0.0 : static_cast<double>(it->second);
            sum += c;
            sumsq += c * c;
            if (c >= static_cast<double>(row.input_count)) ++ge;
        }
        row.mean = sum / R;
        double var = std::max(0.0, sumsq / R - row.mean * row.mean);
        row.stddev = std::sqrt(var);
        row.p = static_cast<double>(ge) / R;
        double num = static_cast<double>(row.input_count) - row.mean;
        bool z_fires = false;
        if (row.stddev > 0.0) {
            row.z = num / row.stddev;
            z_fires = row.z > thresholds.z_threshold;
        } else {
            row.degenerate_std = true;
            row.z = num == 0.0 ? 0.0 : (num > 0.0 ? 1e9 : -1e9);
            // Sentinel z never satisfies the z criterion on its own.
        }
        row.significant = row.p < thresholds.p_threshold || z_fires;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace casmo
