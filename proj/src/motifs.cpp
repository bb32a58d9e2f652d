#include "casmo/motifs.hpp"

#include <algorithm>
#include <bit>
#include <mutex>

namespace casmo {

DenseGraph::DenseGraph(int n)
    : n_(n), words_(std::max(1, (n + 63) / 64)), bits_(static_cast<std::size_t>(n) * words_, 0),
      adj_(static_cast<std::size_t>(n)) {
    if (n < 0) throw ContractViolation("graph size must be non-negative");
}

void DenseGraph::add_edge(int u, int v) {
    if (u < 0 || v < 0 || u >= n_ || v >= n_)
        throw ContractViolation("edge endpoint out of range");
    if (u == v) throw ContractViolation("self loop not allowed");
    if (has_edge(u, v)) return;
    bits_[static_cast<std::size_t>(u) * words_ + (v >> 6)] |= 1ULL << (v & 63);
    bits_[static_cast<std::size_t>(v) * words_ + (u >> 6)] |= 1ULL << (u & 63);
    adj_[u].insert(std::lower_bound(adj_[u].begin(), adj_[u].end(), v), v);
    adj_[v].insert(std::lower_bound(adj_[v].begin(), adj_[v].end(), u), u);
    ++edge_count_;
}

std::vector<std::pair<int, int>> DenseGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(edge_count_));
    for (int u = 0; u < n_; ++u)
        for (int v : adj_[u])
            if (u < v) out.emplace_back(u, v);
    return out;
}

namespace {

constexpr int kMaxK = 5;

int pair_count(int k) { return k * (k - 1) / 2; }

// Bit position of pair (i,j), i<j: row-major rank, pair (0,1) most significant.
int pair_bit(int k, int i, int j) {
    int rank = 0;
    for (int a = 0; a < i; ++a) rank += k - 1 - a;
    rank += j - i - 1;
    return pair_count(k) - 1 - rank;
}

struct KTables {
    int k = 0;
    std::vector<std::uint16_t> canon;  // labeled code -> canonical code
    std::vector<std::uint8_t> connected;
};

KTables build_tables(int k) {
    KTables t;
    t.k = k;
    int P = pair_count(k);
    std::size_t domain = std::size_t{1} << P;
    t.canon.assign(domain, 0);
    t.connected.assign(domain, 0);

    int bitpos[kMaxK][kMaxK] = {};
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) bitpos[i][j] = bitpos[j][i] = pair_bit(k, i, j);

    std::array<int, kMaxK> perm{};
    std::vector<std::array<int, kMaxK>> perms;
    for (int i = 0; i < k; ++i) perm[i] = i;
    do {
        perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.begin() + k));

    for (std::size_t code = 0; code < domain; ++code) {
        bool adj[kMaxK][kMaxK] = {};
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                adj[i][j] = adj[j][i] = (code >> bitpos[i][j]) & 1u;

        // Connectivity by label propagation from vertex 0.
        unsigned reached = 1u;
        for (int pass = 0; pass < k; ++pass)
            for (int i = 0; i < k; ++i)
                if (reached & (1u << i))
                    for (int j = 0; j < k; ++j)
                        if (adj[i][j]) reached |= 1u << j;
        if (reached != (1u << k) - 1u) continue;
        t.connected[code] = 1;

        std::uint16_t best = 0xffff;
        for (const auto& p : perms) {
            std::uint16_t c = 0;
            for (int i = 0; i < k; ++i)
                for (int j = i + 1; j < k; ++j)
                    if (adj[p[i]][p[j]]) c |= static_cast<std::uint16_t>(1u << bitpos[i][j]);
            best = std::min(best, c);
        }
        t.canon[code] = best;
    }
    return t;
}

const KTables& tables(int k) {
    if (k < 1 || k > kMaxK) throw ConfigError("subgraph size must be in [1,5]");
    static KTables cache[kMaxK + 1];
    static std::once_flag built[kMaxK + 1];
    std::call_once(built[k], [k] { cache[k] = build_tables(k); });
    return cache[k];
}

}  // namespace

int pattern_edge_count(PatternId p) { return std::popcount(static_cast<unsigned>(p.code)); }

double pattern_density(PatternId p) {
    return static_cast<double>(pattern_edge_count(p)) / pair_count(p.k);
}

const std::vector<PatternId>& pattern_catalog(int k) {
    if (k < 3 || k > kMaxK) throw ConfigError("pattern catalog is defined for k in {3,4,5}");
    static std::vector<PatternId> cache[kMaxK + 1];
    static std::once_flag built[kMaxK + 1];
    std::call_once(built[k], [k] {
        const KTables& t = tables(k);
        std::vector<PatternId> out;
        for (std::size_t code = 0; code < t.canon.size(); ++code)
            if (t.connected[code] && t.canon[code] == code)
                out.push_back(PatternId{static_cast<std::uint8_t>(k),
                                        static_cast<std::uint16_t>(code)});
        std::sort(out.begin(), out.end(), [](PatternId a, PatternId b) {
            int ea = pattern_edge_count(a), eb = pattern_edge_count(b);
            return ea != eb ? ea < eb : a.code < b.code;
        });
        cache[k] = std::move(out);
    });
    return cache[k];
}

std::string pattern_name(PatternId p) {
    const auto& cat = pattern_catalog(p.k);
    auto it = std::find(cat.begin(), cat.end(), p);
    if (it == cat.end()) throw ContractViolation("pattern id not in catalog");
    return "M" + std::to_string(p.k) + "_" + std::to_string(it - cat.begin() + 1);
}

PatternId pattern_from_name(const std::string& name) {
    if (name.size() < 4 || name[0] != 'M')
        throw ParseError("bad pattern name '" + name + "'");
    std::size_t us = name.find('_');
    if (us == std::string::npos) throw ParseError("bad pattern name '" + name + "'");
    int k = std::stoi(name.substr(1, us - 1));
    std::size_t ord = static_cast<std::size_t>(std::stoul(name.substr(us + 1)));
    const auto& cat = pattern_catalog(k);
    if (ord < 1 || ord > cat.size()) throw ParseError("pattern ordinal out of range in '" + name + "'");
    return cat[ord - 1];
}

PatternId canonical_form(int k, std::uint16_t labeled_code) {
    const KTables& t = tables(k);
    if (labeled_code >= t.canon.size())
        throw ContractViolation("labeled code out of range for k");
    if (!t.connected[labeled_code])
        throw ContractViolation("canonical form requires a connected subgraph");
    return PatternId{static_cast<std::uint8_t>(k), t.canon[labeled_code]};
}

bool labeled_code_connected(int k, std::uint16_t labeled_code) {
    const KTables& t = tables(k);
    if (labeled_code >= t.canon.size())
        throw ContractViolation("labeled code out of range for k");
    return t.connected[labeled_code] != 0;
}

std::uint16_t induced_code(const DenseGraph& g, std::span<const int> vertices) {
    int k = static_cast<int>(vertices.size());
    std::uint16_t code = 0;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (g.has_edge(vertices[i], vertices[j]))
                code |= static_cast<std::uint16_t>(1u << pair_bit(k, i, j));
    return code;
}

namespace {

// Shared scaffolding for exhaustive and sampled enumeration. Extension sets
// live in per-depth bitset rows; the exclusive-neighbor rule keeps every
// k-set reachable along exactly one path.
struct EsuWalk {
    const DenseGraph& g;
    int k;
    int words;
    std::vector<std::uint64_t> ext;    // (k+1) rows
    std::vector<std::uint64_t> nbhd;   // (k+1) rows: N(sub) union sub
    std::vector<std::uint64_t> gtroot; // bits strictly greater than current root
    int sub[kMaxK] = {};

    // Sampling state; probs empty means exhaustive.
    std::span<const double> probs;
    Rng rng;
    double weight = 1.0;
    std::uniform_real_distribution<double> u01{0.0, 1.0};

    const std::function<void(std::span<const int>)>* visit_plain = nullptr;
    const std::function<void(std::span<const int>, double)>* visit_weighted = nullptr;

    EsuWalk(const DenseGraph& graph, int kk)
        : g(graph), k(kk), words(graph.words()),
          ext(static_cast<std::size_t>(kk + 1) * graph.words(), 0),
          nbhd(static_cast<std::size_t>(kk + 1) * graph.words(), 0),
          gtroot(graph.words(), 0) {}

    bool take(int depth) {
        if (probs.empty()) return true;
        return u01(rng) < probs[static_cast<std::size_t>(depth)];
    }

    void emit(std::span<const int> set) {
        // Discovery order is not ascending; visitors get the sorted set.
        int buf[kMaxK];
        std::copy(set.begin(), set.end(), buf);
        std::sort(buf, buf + set.size());
        std::span<const int> sorted(buf, set.size());
        if (visit_plain) (*visit_plain)(sorted);
        else (*visit_weighted)(sorted, weight);
    }

    void run() {
        if (!probs.empty()) {
            weight = 1.0;
            for (double p : probs) weight /= p;
        }
        int n = g.node_count();
        std::uint64_t* ext0 = row(ext, 0);
        std::uint64_t* nb0 = row(nbhd, 0);
        for (int v = 0; v < n; ++v) {
            if (g.degree(v) == 0) {
                if (k == 1 && take(0)) {
                    sub[0] = v;
                    emit(std::span<const int>(sub, 1));
                }
                continue;
            }
            if (!take(0)) continue;
            sub[0] = v;
            if (k == 1) {
                emit(std::span<const int>(sub, 1));
                continue;
            }
            std::fill(gtroot.begin(), gtroot.end(), 0);
            for (int w = v + 1; w < n; ++w) gtroot[w >> 6] |= 1ULL << (w & 63);
            const std::uint64_t* rv = g.row(v);
            for (int w = 0; w < words; ++w) {
                ext0[w] = rv[w] & gtroot[w];
                nb0[w] = rv[w];
            }
            nb0[v >> 6] |= 1ULL << (v & 63);
            extend(1);
        }
    }

    std::uint64_t* row(std::vector<std::uint64_t>& buf, int depth) {
        return buf.data() + static_cast<std::size_t>(depth) * words;
    }

    void extend(int depth) {
        std::uint64_t* e = row(ext, depth - 1);
        const std::uint64_t* nb = row(nbhd, depth - 1);

        if (depth == k - 1) {
            // Every remaining extension vertex completes a subgraph.
            for (int w = 0; w < words; ++w) {
                std::uint64_t bits = e[w];
                while (bits) {
                    int u = (w << 6) + std::countr_zero(bits);
                    bits &= bits - 1;
                    if (!take(depth)) continue;
                    sub[depth] = u;
                    emit(std::span<const int>(sub, static_cast<std::size_t>(k)));
                }
            }
            return;
        }

        std::uint64_t* childext = row(ext, depth);
        std::uint64_t* childnb = row(nbhd, depth);
        while (true) {
            int u = -1;
            for (int w = 0; w < words; ++w)
                if (e[w]) {
                    u = (w << 6) + std::countr_zero(e[w]);
                    break;
                }
            if (u < 0) break;
            e[u >> 6] &= ~(1ULL << (u & 63));
            if (!take(depth)) continue;
            sub[depth] = u;
            const std::uint64_t* ru = g.row(u);
            for (int w = 0; w < words; ++w) {
                childext[w] = e[w] | (ru[w] & ~nb[w] & gtroot[w]);
                childnb[w] = nb[w] | ru[w];
            }
            extend(depth + 1);
        }
    }
};

}  // namespace

void enumerate_connected(const DenseGraph& g, int k,
                         const std::function<void(std::span<const int>)>& visit) {
    if (k < 1 || k > kMaxK) throw ConfigError("subgraph size must be in [1,5]");
    EsuWalk walk(g, k);
    walk.visit_plain = &visit;
    walk.run();
}

void sample_connected(const DenseGraph& g, int k, std::span<const double> depth_probs,
                      std::uint64_t seed,
                      const std::function<void(std::span<const int>, double)>& visit) {
    if (k < 1 || k > kMaxK) throw ConfigError("subgraph size must be in [1,5]");
    if (static_cast<int>(depth_probs.size()) != k)
        throw ConfigError("sampled enumeration needs one probability per depth");
    for (double p : depth_probs)
        if (!(p > 0.0 && p <= 1.0))
            throw ConfigError("depth probabilities must lie in (0,1]");
    EsuWalk walk(g, k);
    walk.probs = depth_probs;
    walk.rng.seed(seed);
    walk.visit_weighted = &visit;
    walk.run();
}

MotifCensus motif_census(const DenseGraph& g, int k, const CensusOptions& opt,
                         std::span<const UserId> labels) {
    if (k < 3 || k > kMaxK) throw ConfigError("census size must be in {3,4,5}");
    if (!labels.empty() && static_cast<int>(labels.size()) != g.node_count())
        throw ContractViolation("label array must cover every vertex");
    MotifCensus census;
    census.k = k;
    const KTables& t = tables(k);

    auto record = [&](std::span<const int> set, double w) {
        std::uint16_t code = induced_code(g, set);
        PatternId pid{static_cast<std::uint8_t>(k), t.canon[code]};
        auto& entry = census.patterns[pid];
        entry.count += 1;
        entry.weight += w;
        census.total += 1;
        if (opt.store_instances) {
            std::array<UserId, 5> inst{};
            for (int i = 0; i < k; ++i)
                inst[static_cast<std::size_t>(i)] =
                    labels.empty() ? static_cast<UserId>(set[i]) : labels[static_cast<std::size_t>(set[i])];
            std::sort(inst.begin(), inst.begin() + k);
            entry.instances.push_back(inst);
        }
    };

    if (opt.depth_probs.empty()) {
        enumerate_connected(g, k, [&](std::span<const int> set) { record(set, 1.0); });
    } else {
        sample_connected(g, k, opt.depth_probs, opt.seed,
                         [&](std::span<const int> set, double w) { record(set, w); });
    }
    return census;
}

}  // namespace casmo
