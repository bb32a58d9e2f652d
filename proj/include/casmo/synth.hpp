#pragma once

#include <optional>
#include <string>
#include <vector>

#include "casmo/core.hpp"
#include "casmo/lifecycle.hpp"
#include "casmo/motifs.hpp"

namespace casmo {

// One synthetic reshare cascade: a preferential-attachment tree whose arrival
// times follow the requested growth shape, plus an overlay of historical
// edges between participants.
struct SynthCascadeParams {
    int n_participants = 200;
    double logistic_midpoint = 300.0;  // minutes into the core growth phase
    double logistic_rate = 0.02;       // steepness, per minute
    double historical_edge_prob = 0.05;
    CascadeType shape = CascadeType::type1;
    // Stragglers arriving long after the core phase; they give type-1 curves
    // their long saturated tail.
    double tail_fraction = 0.05;
    double tail_stretch = 8.0;
    double jitter = 0.2;  // relative wobble of inter-arrival gaps
};

struct SynthCascade {
    Cascade cascade;
    std::vector<std::pair<UserId, UserId>> overlay_edges;
    std::vector<std::pair<UserId, UserId>> tree_edges;
    double true_midpoint_min = 0.0;  // steepest-growth time in rebased minutes
};

// Deterministic for a given (params, seed). ids receives the generated user
// names; id_prefix keeps different cascades disjoint.
SynthCascade synthesize_cascade(const SynthCascadeParams& params, std::uint64_t seed,
                                IdTable& ids, const std::string& id_prefix = "u");

struct SynthCorpusConfig {
    int n_cascades = 30;
    SynthCascadeParams base;
    // Per-cascade relative variation of midpoint/rate and absolute spread of
    // the participant count.
    double midpoint_spread = 0.25;
    double rate_spread = 0.25;
    int participants_spread = 0;
    // Shape mix as weights for type1/type2/type3.
    double type_weights[3] = {1.0, 0.0, 0.0};

    int window_size = 40;
    HawkesConfig hawkes;
    InhibitionThresholds thresholds{240.0, 1.2};

    // Planted regression signal: a latent level z per cascade drives both the
    // number of disjoint copies of plant_pattern injected into the window two
    // before the inhibition window and the number of filler edges added to
    // the inhibition window itself.
    bool plant = false;
    std::string plant_pattern_name;  // empty selects the triangle-with-tail default
    int plant_z_max = 7;
    double plant_edges_per_unit = 3.0;
    double plant_clutter_prob = 0.01;
};

struct SynthCascadeRecord {
    std::string cascade_id;
    CascadeType shape = CascadeType::type1;
    double true_midpoint_min = 0.0;
    double t_steep = 0.0;
    std::optional<double> t_inhib;
    int steep_window = 0;
    std::optional<int> inhib_network;
    int planted_z = 0;
    int injected_instances = 0;
    int filler_edges = 0;
};

struct SynthCorpus {
    IdTable ids;
    std::vector<Cascade> cascades;
    DiffusionNetwork diffusion;
    std::vector<SynthCascadeRecord> records;
    PatternId planted_pattern{};  // meaningful when config.plant
};

// The pattern injected by default: a triangle with a two-edge tail.
PatternId default_planted_pattern();

SynthCorpus generate_corpus(const SynthCorpusConfig& cfg, std::uint64_t seed);

}  // namespace casmo
