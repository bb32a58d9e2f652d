#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "casmo/core.hpp"
#include "casmo/lifecycle.hpp"
#include "casmo/prediction.hpp"
#include "casmo/significance.hpp"
#include "casmo/synth.hpp"
#include "casmo/transitions.hpp"

namespace casmo {

// Everything a run can be told, with the defaults the reports assume. The
// whole struct is echoed into every manifest so a bundle documents itself.
struct RunConfig {
    // inputs and outputs
    std::string cascades_path;
    std::string edges_path;
    std::string ratings_path;          // alternative to cascades_path
    double corating_window_hours = 24.0;
    std::string labels_path;           // calibrate: cascade_id,t_inhib
    std::string cache_dir;             // defaults to <out>/cache
    std::string out_dir = "out";

    // run behavior
    std::uint64_t seed = 0;
    int threads = 0;                   // 0 picks the hardware count
    double failure_tolerance = 0.05;   // fraction of hard per-cascade failures
    std::vector<int> cascade_types = {1, 2, 3};

    // windowing and filtering
    int window_size = 40;
    std::size_t min_participants = 300;

    // lifecycle detection
    HawkesConfig hawkes;
    InhibitionThresholds thresholds{240.0, 1.2};

    // censuses and significance
    std::vector<int> census_ks = {3, 4, 5};
    int last_networks = 20;            // how far back from the anchors to look
    bool ensemble_enabled = true;
    int ensemble_size = 100;
    int switches_per_edge = 10;
    SignificanceThresholds significance;

    // transitions
    bool transitions_enabled = true;
    TransitionThresholds transitions;

    // prediction
    std::vector<int> interval_starts = {1, 3, 5, 7, 9};
    std::vector<double> eta_grid = {0.01, 0.02, 0.03, 0.04};
    Penalty penalty = Penalty::l1;
    int folds = 10;
    int poly_order = 1;

    // synthetic corpus generation
    SynthCorpusConfig synth;
};

// Flat key-value file with [section] headers; keys come back as
// "section.key". Full-line # comments only, last duplicate wins.
std::map<std::string, std::string> load_config_file(const std::string& path);

// Applies parsed keys onto the config. Unknown keys and unparseable values
// throw ConfigError naming the key.
void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv);

// The ingested corpus as analyze consumes it: interned ids, normalized
// cascades with their classified types, and the fused historical edges.
struct CorpusCache {
    IdTable ids;
    std::vector<Cascade> cascades;
    std::vector<CascadeType> types;
    DiffusionNetwork diffusion;
};

void save_cache(const CorpusCache& cache, const std::string& dir);
CorpusCache load_cache(const std::string& dir);

struct IngestResult {
    std::size_t parsed = 0;
    std::size_t kept = 0;
    std::string cache_dir;
    std::string digest;  // over the cache bytes, stable across reruns
};

IngestResult cmd_ingest(const RunConfig& cfg);

struct SynthResult {
    std::size_t n_cascades = 0;
    std::size_t n_labeled = 0;  // cascades whose inhibition the generator located
    std::string out_dir;
};

SynthResult cmd_synth(const RunConfig& cfg);

struct AnalyzeResult {
    std::size_t total = 0;
    std::size_t analyzed = 0;
    std::size_t skipped_windowing = 0;
    std::size_t skipped_no_inhibition = 0;
    std::size_t skipped_type = 0;
    std::size_t failed = 0;

    bool within_tolerance(double tolerance) const {
        return total == 0 || static_cast<double>(failed) <= tolerance * static_cast<double>(total);
    }
};

AnalyzeResult cmd_analyze(const RunConfig& cfg);

CalibrationResult cmd_calibrate(const RunConfig& cfg);

struct PredictResult {
    std::size_t models = 0;
    std::size_t rows = 0;
    // Per interval start, the cyclic patterns whose individual models scored
    // the lowest MAE; these feed the loop combination model.
    std::map<int, std::vector<std::string>> loop_patterns;
    // (st, model, feature_set) -> MAE, mirrors mae_table.csv.
    std::map<std::tuple<int, std::string, std::string>, double> mae;
};

PredictResult cmd_predict(const RunConfig& cfg);

// Recomputes the aggregate files of an analyze bundle from its per-cascade
// CSVs; byte-identical output doubles as a cross-check of the round trip.
void cmd_report(const RunConfig& cfg);

}  // namespace casmo
