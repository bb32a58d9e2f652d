#include "casmo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "casmo/windows.hpp"

namespace casmo {

namespace {

double logit(double q) { return std::log(q / (1.0 - q)); }

// Arrival times of participants 2..n (participant 1 starts the cascade at the
// first arrival). Returned sorted; absolute placement is arbitrary since
// normalization rebases to 0.
std::vector<double> arrival_times(const SynthCascadeParams& p, Rng& rng, double* midpoint_out) {
    int m = p.n_participants - 1;
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(m));
    const double q_lo = 0.02, q_hi = 0.98;

    auto logistic_segment = [&](int count, double mid, double rate) {
        for (int i = 0; i < count; ++i) {
            double q = q_lo + (q_hi - q_lo) * (count == 1 ? 0.5 : static_cast<double>(i) / (count - 1));
            t.push_back(mid + logit(q) / rate);
        }
    };

    switch (p.shape) {
        case CascadeType::type1: {
            int tail = std::max(0, static_cast<int>(std::lround(m * p.tail_fraction)));
            int core = m - tail;
            if (core < 2) { core = m; tail = 0; }
            logistic_segment(core, p.logistic_midpoint, p.logistic_rate);
            double core_start = t.front(), core_end = t.back();
            double span = std::max(core_end - core_start, 1.0);
            for (int i = 1; i <= tail; ++i)
                t.push_back(core_end + span * p.tail_stretch * i / (tail + 1.0));
            *midpoint_out = p.logistic_midpoint;
            break;
        }
        case CascadeType::type2: {
            // Same burst without the long straggler tail, so the steep phase
            // sits deep inside the lifetime instead of at its very start.
            int tail = std::max(0, static_cast<int>(std::lround(m * 0.03)));
            int core = m - tail;
            if (core < 2) { core = m; tail = 0; }
            logistic_segment(core, p.logistic_midpoint, p.logistic_rate);
            double span = std::max(t.back() - t.front(), 1.0);
            double end = t.back();
            for (int i = 1; i <= tail; ++i) t.push_back(end + 0.4 * span * i / (tail + 1.0));
            *midpoint_out = p.logistic_midpoint;
            break;
        }
        case CascadeType::type3: {
            // Constant arrival rate across twice the nominal midpoint.
            double span = 2.0 * p.logistic_midpoint;
            for (int i = 0; i < m; ++i)
                t.push_back(span * (m == 1 ? 0.5 : static_cast<double>(i) / (m - 1)));
            *midpoint_out = p.logistic_midpoint;
            break;
        }
    }
    std::sort(t.begin(), t.end());

    if (p.jitter > 0.0) {
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        std::vector<double> jittered = t;
        for (std::size_t i = 0; i < t.size(); ++i) {
            double prev = i == 0 ? t[i] : t[i - 1];
            double next = i + 1 == t.size() ? t[i] : t[i + 1];
            jittered[i] += u(rng) * p.jitter * (next - prev);
        }
        std::sort(jittered.begin(), jittered.end());
        t = std::move(jittered);
    }
    return t;
}

std::uint64_t pair_key(UserId u, UserId v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

}  // namespace

SynthCascade synthesize_cascade(const SynthCascadeParams& params, std::uint64_t seed,
                                IdTable& ids, const std::string& id_prefix) {
    if (params.n_participants < 2) throw ConfigError("synthetic cascade needs >= 2 participants");
    if (!(params.logistic_rate > 0.0) || !(params.logistic_midpoint > 0.0))
        throw ConfigError("synthetic growth parameters must be positive");
    if (params.historical_edge_prob < 0.0 || params.historical_edge_prob > 1.0)
        throw ConfigError("historical edge probability must lie in [0,1]");

    Rng rng(seed);
    SynthCascade out;
    double midpoint_abs = 0.0;
    std::vector<double> arrivals = arrival_times(params, rng, &midpoint_abs);

    int n = params.n_participants;
    std::vector<UserId> users(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) users[static_cast<std::size_t>(i)] = ids.intern(id_prefix + std::to_string(i));

    // Preferential attachment via the endpoint-list trick: vertex v appears
    // degree(v)+1 times, so a uniform draw lands on v with the right odds.
    std::vector<int> urn;
    urn.reserve(static_cast<std::size_t>(3 * n));
    urn.push_back(0);
    out.cascade.id = id_prefix;
    for (int j = 1; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> pick(0, urn.size() - 1);
        int parent = urn[pick(rng)];
        urn.push_back(parent);
        urn.push_back(j);
        urn.push_back(j);
        out.cascade.events.push_back(ReshareEvent{users[static_cast<std::size_t>(parent)],
                                                  users[static_cast<std::size_t>(j)],
                                                  arrivals[static_cast<std::size_t>(j - 1)]});
        out.tree_edges.emplace_back(users[static_cast<std::size_t>(parent)],
                                    users[static_cast<std::size_t>(j)]);
    }
    out.true_midpoint_min = midpoint_abs - arrivals.front();
    normalize_cascade(out.cascade);

    // Historical overlay: each non-tree participant pair independently with
    // the configured probability, via geometric skips over the pair sequence.
    std::unordered_set<std::uint64_t> tree_pairs;
    for (auto [u, v] : out.tree_edges) tree_pairs.insert(pair_key(u, v));
    double p = params.historical_edge_prob;
    auto emit_pair = [&](std::uint64_t idx) {
        // Map the linear index to pair (i,j), i<j, row-major.
        std::uint64_t row = 0, row_start = 0;
        while (idx - row_start >= static_cast<std::uint64_t>(n) - 1 - row) {
            row_start += static_cast<std::uint64_t>(n) - 1 - row;
            ++row;
        }
        std::uint64_t col = row + 1 + (idx - row_start);
        UserId a = users[static_cast<std::size_t>(row)];
        UserId b = users[static_cast<std::size_t>(col)];
        if (tree_pairs.count(pair_key(a, b))) return;
        out.overlay_edges.emplace_back(a, b);
    };
    std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    if (p >= 1.0) {
        for (std::uint64_t idx = 0; idx < total; ++idx) emit_pair(idx);
    } else if (p > 0.0) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double log1mp = std::log1p(-p);
        std::uint64_t idx = 0;
        while (true) {
            double u = std::max(u01(rng), 1e-300);
            idx += static_cast<std::uint64_t>(std::floor(std::log(u) / log1mp));
            if (idx >= total) break;
            emit_pair(idx);
            ++idx;
        }
    }
    return out;
}

PatternId default_planted_pattern() {
    // Triangle 0-1-2 with tail 2-3-4.
    DenseGraph g(5);
    g.add_edge(0, 1);
    g.add_edge(0, 2);
    g.add_edge(1, 2);
    g.add_edge(2, 3);
    g.add_edge(3, 4);
    int order[5] = {0, 1, 2, 3, 4};
    return canonical_form(5, induced_code(g, std::span<const int>(order, 5)));
}

namespace {

// Decodes a canonical 5-node pattern into its edge list.
std::vector<std::pair<int, int>> pattern_edges(PatternId p) {
    std::vector<std::pair<int, int>> edges;
    int k = p.k;
    int P = k * (k - 1) / 2;
    int rank = 0;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j, ++rank)
            if ((p.code >> (P - 1 - rank)) & 1u) edges.emplace_back(i, j);
    return edges;
}

struct EdgeSet {
    std::unordered_set<std::uint64_t> keys;
    bool has(UserId u, UserId v) const { return keys.count(pair_key(u, v)) != 0; }
    void add(UserId u, UserId v) { keys.insert(pair_key(u, v)); }
};

}  // namespace

SynthCorpus generate_corpus(const SynthCorpusConfig& cfg, std::uint64_t seed) {
    if (cfg.n_cascades < 1) throw ConfigError("corpus needs at least one cascade");
    SynthCorpus corpus;
    if (cfg.plant)
        corpus.planted_pattern = cfg.plant_pattern_name.empty()
                                     ? default_planted_pattern()
                                     : pattern_from_name(cfg.plant_pattern_name);

    double wsum = cfg.type_weights[0] + cfg.type_weights[1] + cfg.type_weights[2];
    if (!(wsum > 0.0)) throw ConfigError("type weights must not all be zero");
    if (cfg.hawkes.weighting != UserWeighting::uniform)
        throw ConfigError("corpus labels are defined for uniform event weighting");

    int digits = static_cast<int>(std::to_string(cfg.n_cascades).size());
    for (int c = 0; c < cfg.n_cascades; ++c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        std::uniform_real_distribution<double> u01(0.0, 1.0);

        SynthCascadeParams params = cfg.base;
        double roll = u01(rng) * wsum;
        params.shape = roll < cfg.type_weights[0]                        ? CascadeType::type1
                       : roll < cfg.type_weights[0] + cfg.type_weights[1] ? CascadeType::type2
                                                                          : CascadeType::type3;
        params.logistic_midpoint *= 1.0 + cfg.midpoint_spread * (2.0 * u01(rng) - 1.0);
        params.logistic_rate *= 1.0 + cfg.rate_spread * (2.0 * u01(rng) - 1.0);
        if (cfg.participants_spread > 0) {
            std::uniform_int_distribution<int> dn(-cfg.participants_spread, cfg.participants_spread);
            params.n_participants = std::max(2 * cfg.window_size, params.n_participants + dn(rng));
        }

        std::string num = std::to_string(c + 1);
        std::string cid = "c" + std::string(static_cast<std::size_t>(digits) - num.size(), '0') + num;
        SynthCascade sc = synthesize_cascade(params, derive_seed(seed, 0x1000u + static_cast<std::uint64_t>(c)),
                                             corpus.ids, cid + "u");
        sc.cascade.id = cid;

        SynthCascadeRecord rec;
        rec.cascade_id = cid;
        rec.shape = params.shape;
        rec.true_midpoint_min = sc.true_midpoint_min;

        EdgeSet present;
        for (auto [u, v] : sc.tree_edges) present.add(u, v);
        for (auto [u, v] : sc.overlay_edges) present.add(u, v);

        std::vector<std::pair<UserId, UserId>> extra;
        if (sc.cascade.participant_count() >= 2 * static_cast<std::size_t>(cfg.window_size)) {
            auto windows = partition_subsequences(sc.cascade, cfg.window_size);
            LifecycleResult life = detect_lifecycle(sc.cascade, windows, cfg.hawkes, cfg.thresholds);
            rec.t_steep = life.t_steep;
            rec.t_inhib = life.t_inhib;
            rec.steep_window = life.steep_window;
            if (life.networks) rec.inhib_network = life.networks->inhib_network;

            if (cfg.plant && rec.inhib_network && *rec.inhib_network >= 4) {
                std::uniform_int_distribution<int> dz(0, cfg.plant_z_max);
                rec.planted_z = dz(rng);
                int inhib = *rec.inhib_network;
                const auto& feat_win = windows[static_cast<std::size_t>(inhib - 2 - 1)];
                const auto& y_win = windows[static_cast<std::size_t>(inhib - 1)];

                // Disjoint 5-node groups inside the feature window with no
                // existing edges among them.
                std::vector<UserId> pool = feat_win.node_set;
                std::shuffle(pool.begin(), pool.end(), rng);
                auto pat_edges = pattern_edges(corpus.planted_pattern);
                std::vector<UserId> group;
                std::size_t cursor = 0;
                while (rec.injected_instances < rec.planted_z && cursor < pool.size()) {
                    group.clear();
                    for (; cursor < pool.size() && group.size() < 5; ++cursor) {
                        UserId cand = pool[cursor];
                        bool clean = true;
                        for (UserId g : group)
                            if (present.has(g, cand)) { clean = false; break; }
                        if (clean) group.push_back(cand);
                    }
                    if (group.size() < 5) break;
                    for (auto [a, b] : pat_edges) {
                        extra.emplace_back(group[static_cast<std::size_t>(a)],
                                           group[static_cast<std::size_t>(b)]);
                        present.add(group[static_cast<std::size_t>(a)],
                                    group[static_cast<std::size_t>(b)]);
                    }
                    // Lock the whole group so later clutter cannot land inside.
                    for (std::size_t a = 0; a < 5; ++a)
                        for (std::size_t b = a + 1; b < 5; ++b) present.add(group[a], group[b]);
                    ++rec.injected_instances;
                }

                // Filler edges in the inhibition window drive the target
                // |E| linearly in z.
                int want = static_cast<int>(std::lround(cfg.plant_edges_per_unit * rec.planted_z));
                std::uniform_int_distribution<std::size_t> pickw(0, y_win.node_set.size() - 1);
                int guard = 0;
                while (rec.filler_edges < want && guard < 100 * want + 100) {
                    ++guard;
                    UserId a = y_win.node_set[pickw(rng)];
                    UserId b = y_win.node_set[pickw(rng)];
                    if (a == b || present.has(a, b)) continue;
                    extra.emplace_back(a, b);
                    present.add(a, b);
                    ++rec.filler_edges;
                }

                // Clutter decorrelates the other patterns: sparse random
                // pairs across the three windows feeding the feature
                // networks, never inside an injected group (those pairs are
                // already locked).
                if (cfg.plant_clutter_prob > 0.0) {
                    for (int w = inhib - 3; w <= inhib - 1; ++w) {
                        const auto& win = windows[static_cast<std::size_t>(w - 1)];
                        for (std::size_t a = 0; a < win.node_set.size(); ++a)
                            for (std::size_t b = a + 1; b < win.node_set.size(); ++b) {
                                if (u01(rng) >= cfg.plant_clutter_prob) continue;
                                UserId ua = win.node_set[a], ub = win.node_set[b];
                                if (present.has(ua, ub)) continue;
                                extra.emplace_back(ua, ub);
                                present.add(ua, ub);
                            }
                    }
                }
            }
        } else {
            rec.t_steep = 0.0;
        }

        for (auto [u, v] : sc.overlay_edges) corpus.diffusion.add_edge(u, v);
        for (auto [u, v] : extra) corpus.diffusion.add_edge(u, v);
        corpus.cascades.push_back(std::move(sc.cascade));
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

}  // namespace casmo
