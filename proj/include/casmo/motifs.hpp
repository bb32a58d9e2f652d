#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "casmo/common.hpp"

namespace casmo {

// Undirected simple graph on vertices [0,n) with bitset adjacency rows for
// O(1) membership tests during enumeration.
class DenseGraph {
public:
    explicit DenseGraph(int n);

    void add_edge(int u, int v);
    bool has_edge(int u, int v) const {
        return (bits_[static_cast<std::size_t>(u) * words_ + (v >> 6)] >> (v & 63)) & 1u;
    }
    int node_count() const { return n_; }
    int edge_count() const { return edge_count_; }
    int degree(int v) const { return static_cast<int>(adj_[v].size()); }
    std::span<const int> neighbors(int v) const { return adj_[v]; }
    const std::uint64_t* row(int v) const { return bits_.data() + static_cast<std::size_t>(v) * words_; }
    int words() const { return words_; }
    std::vector<std::pair<int, int>> edges() const;

private:
    int n_;
    int words_;
    int edge_count_ = 0;
    std::vector<std::uint64_t> bits_;
    std::vector<std::vector<int>> adj_;
};

// A connected undirected graph class on k labeled-then-canonicalized nodes.
// code packs the upper-triangular adjacency row-major, pair (0,1) in the most
// significant bit, minimized over all vertex orderings.
struct PatternId {
    std::uint8_t k = 0;
    std::uint16_t code = 0;

    auto operator<=>(const PatternId&) const = default;
};

int pattern_edge_count(PatternId p);
double pattern_density(PatternId p);

// Stable human-readable name: patterns of each size numbered by ascending
// (edge count, canonical code), e.g. M5_1 .. M5_21.
std::string pattern_name(PatternId p);
PatternId pattern_from_name(const std::string& name);

// All connected k-node classes sorted by (edge count, canonical code).
// k in {3,4,5}.
const std::vector<PatternId>& pattern_catalog(int k);

// Canonical class of a labeled k-node adjacency code. Throws
// ContractViolation when the labeled graph is disconnected.
PatternId canonical_form(int k, std::uint16_t labeled_code);

bool labeled_code_connected(int k, std::uint16_t labeled_code);

// Packs the induced adjacency of vertices[0..k) into the labeled code layout.
std::uint16_t induced_code(const DenseGraph& g, std::span<const int> vertices);

// Enumerates every connected induced k-vertex subgraph exactly once and hands
// the sorted vertex set to visit.
void enumerate_connected(const DenseGraph& g, int k,
                         const std::function<void(std::span<const int>)>& visit);

// Randomized variant: at depth d every candidate branch survives with
// probability depth_probs[d], so a given k-set is visited with probability
// equal to the product of all k entries. visit receives the set and its
// inverse inclusion probability (the unbiased estimator weight).
void sample_connected(const DenseGraph& g, int k, std::span<const double> depth_probs,
                      std::uint64_t seed,
                      const std::function<void(std::span<const int>, double)>& visit);

struct MotifCensus {
    int k = 0;
    struct Entry {
        long long count = 0;
        double weight = 0.0;  // estimated count when sampled; equals count otherwise
        std::vector<std::array<UserId, 5>> instances;  // first k slots valid, ascending
    };
    std::map<PatternId, Entry> patterns;
    long long total = 0;

    long long count_of(PatternId p) const {
        auto it = patterns.find(p);
        return it == patterns.end() ? 0 : it->second.count;
    }
};

struct CensusOptions {
    bool store_instances = false;
    // When set, enumeration is replaced by sampling with these probabilities.
    std::vector<double> depth_probs;
    std::uint64_t seed = 0;
};

// Census over dense vertex ids. labels, when given, translates dense ids to
// user ids in stored instances (and must have g.node_count() entries).
MotifCensus motif_census(const DenseGraph& g, int k, const CensusOptions& opt = {},
                         std::span<const UserId> labels = {});

}  // namespace casmo
