#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "casmo/common.hpp"

namespace casmo {

// One reshare record: target picked up the item from source at time_min
// minutes after the cascade started (times are rebased so the first event of
// every cascade sits at 0).
struct ReshareEvent {
    UserId source = 0;
    UserId target = 0;
    double time_min = 0.0;

    friend bool operator==(const ReshareEvent&, const ReshareEvent&) = default;
};

struct Cascade {
    std::string id;
    std::vector<ReshareEvent> events;   // sorted by time, exact duplicates removed
    std::vector<UserId> participants;   // distinct users in first-appearance order

    std::size_t participant_count() const { return participants.size(); }
    double span_minutes() const { return events.empty() ? 0.0 : events.back().time_min; }

    // Position of each user in the first-appearance order, or -1.
    std::vector<std::pair<UserId, int>> appearance_index() const;
};

// Rebases times, sorts, dedupes exact (source,target,time) repeats and fills
// the participant list. Every parsed or synthesized cascade goes through this.
void normalize_cascade(Cascade& c);

// Undirected simple graph over interned user ids; holds the historical
// diffusion edges that get fused into the temporal networks.
class DiffusionNetwork {
public:
    // Returns true when the edge is new. Self loops are dropped and counted.
    bool add_edge(UserId u, UserId v);
    bool has_edge(UserId u, UserId v) const;
    std::size_t degree(UserId u) const;
    const std::vector<UserId>* neighbors(UserId u) const;

    std::size_t edge_count() const { return edge_count_; }
    std::size_t dropped_self_loops() const { return dropped_self_loops_; }

    // Edges as (min,max) pairs sorted lexicographically; used for
    // serialization and cache digests.
    std::vector<std::pair<UserId, UserId>> sorted_edges() const;

private:
    std::unordered_map<UserId, std::vector<UserId>> adj_;
    std::size_t edge_count_ = 0;
    std::size_t dropped_self_loops_ = 0;
};

// Cumulative distinct-participant count sampled at every event time.
struct GrowthCurve {
    std::vector<double> times;        // event times, ascending
    std::vector<std::size_t> sizes;   // distinct participants after each event
};

enum class CascadeType { type1, type2, type3 };

const char* to_string(CascadeType t);

struct ClassifyConfig {
    // Type I requires the steepest growth to land before this fraction of the
    // cascade lifetime.
    double steep_time_fraction_threshold = 0.15;
    int slope_bins = 20;  // interval bins used to locate the steepest segment
};

struct ClassifyResult {
    CascadeType type = CascadeType::type3;
    double steep_time_fraction = 0.0;  // where the steepest bin sits in [0,1]
    double logistic_rms = 0.0;
    double line_rms = 0.0;
    double concave_rms = 0.0;
};

// input format: cascade_id,source,target,time (header optional). Records of a
// cascade may interleave; cascades come back in order of first appearance.
std::vector<Cascade> parse_cascade_log(std::istream& in, IdTable& ids,
                                       const std::string& source_name = "<stream>");

// Canonical form: header line, cascades in given order, events time-sorted
// with rebased times in shortest round-trip notation. parse(serialize(x))
// reproduces x byte-for-byte.
void serialize_cascade_log(std::ostream& out, const std::vector<Cascade>& cascades,
                           const IdTable& ids);

struct DiffusionParseStats {
    std::size_t duplicate_edges = 0;
    std::size_t self_loops = 0;
};

// input format: u,v per line (header optional). Duplicates and self loops are
// tolerated, deduplicated and counted.
DiffusionNetwork parse_diffusion_edges(std::istream& in, IdTable& ids,
                                       DiffusionParseStats* stats = nullptr,
                                       const std::string& source_name = "<stream>");

// Keeps cascades with strictly more than min_participants participants.
std::vector<Cascade> filter_by_size(std::vector<Cascade> cascades, std::size_t min_participants);

GrowthCurve growth_curve(const Cascade& c);

ClassifyResult classify_cascade_type(const GrowthCurve& curve, const ClassifyConfig& cfg = {});

// Builds co-rating cascades from a user,item,time_hours rating log: raters of
// the same item whose rating times differ by at most window_hours get linked
// at the later of the two times. One cascade per item that yields any edge;
// times are carried in minutes like everywhere else.
struct RatingRecord {
    UserId user = 0;
    std::string item;
    double time_hours = 0.0;
};

std::vector<RatingRecord> parse_ratings(std::istream& in, IdTable& ids,
                                        const std::string& source_name = "<stream>");

std::vector<Cascade> build_corating_cascades(const std::vector<RatingRecord>& ratings,
                                             double window_hours);

}  // namespace casmo
