#pragma once

#include <optional>
#include <span>
#include <vector>

#include "casmo/core.hpp"
#include "casmo/windows.hpp"

namespace casmo {

enum class UserWeighting { uniform, degree_weighted };

struct HawkesConfig {
    double mu = 0.0;      // background rate, >= 0
    double alpha = 1.0;   // excitation gain, >= 0
    double beta = 1.0;    // decay rate, > 0 (per minute)
    UserWeighting weighting = UserWeighting::uniform;
};

// Self-exciting intensity evaluated at every event time, in event order:
// lambda(t_j) = mu + alpha * sum_{t_i < t_j} w_i * beta * exp(-beta (t_j - t_i)).
// Uniform weights are 1; degree weights are 1 + ln(1 + degree of the event's
// source in the diffusion network), which then must be supplied. Runs in
// O(n) via the exponential recursion.
std::vector<double> hawkes_intensity(const Cascade& cascade, const HawkesConfig& cfg,
                                     const DiffusionNetwork* diffusion = nullptr);

// Per-window sums of event intensities, aligned with window ordinals
// (values[i] belongs to windows[i]). Events before the first window span go
// to the first window, events after the last to the last.
struct IntervalIntensityCurve {
    std::vector<double> values;
};

IntervalIntensityCurve interval_intensity_curve(std::span<const double> intensities,
                                                const Cascade& cascade,
                                                std::span<const Subsequence> windows);

struct Extrema {
    std::vector<std::size_t> maxima;  // 0-based positions, plateaus keep the leftmost
    std::vector<std::size_t> minima;
};

// Strict interior local extrema; runs of equal values count once at their
// leftmost position and must be flanked on both sides to qualify. Throws on
// curves shorter than 3.
Extrema find_extrema(std::span<const double> curve);

struct SteepDetection {
    std::size_t position = 0;  // 0-based curve position
    bool used_fallback = false;
};

// Position of the largest interior local maximum (earliest on ties). Without
// any interior maximum the interior argmax is used and flagged; curves
// shorter than 3 fall back to the plain argmax.
SteepDetection detect_steep(std::span<const double> curve);

struct InhibitionThresholds {
    double dtg_minutes = 240.0;  // minimum time since the steep point
    double growth_ratio = 1.2;   // minimum S_t / S_steep
};

// Earliest event time t with t - t_steep >= dtg and S_t / S_steep >= ratio,
// where S is the distinct-participant count and S_steep is measured at the
// last event at or before t_steep. Empty when no event qualifies.
std::optional<double> detect_inhibition(const Cascade& cascade, double t_steep,
                                        const InhibitionThresholds& thresholds);

struct CalibrationConfig {
    std::vector<double> dtg_grid;    // default 60..1440 step 60
    std::vector<double> ratio_grid;  // default 1.05..2.0 step 0.05
    int window_size = 40;            // to convert detected times to window ordinals
    HawkesConfig hawkes;             // used to locate t_steep per cascade

    CalibrationConfig();
};

struct CalibrationResult {
    InhibitionThresholds best;
    double mean_window_error = 0.0;
    std::size_t evaluated = 0;  // labeled cascades actually scored
};

// Grid search minimizing the mean absolute window-index error between
// detected and labeled inhibition times. Labels pair each cascade with its
// true inhibition time. A label whose detection comes back empty scores the
// full window count as error. Ties prefer smaller dtg, then smaller ratio.
CalibrationResult calibrate_thresholds(
    std::span<const std::pair<const Cascade*, double>> labeled,
    const CalibrationConfig& cfg = {});

// Full per-cascade lifecycle pass used by the pipeline and calibration:
// intensities -> interval curve -> steep window -> steep event -> inhibition.
struct LifecycleResult {
    IntervalIntensityCurve curve;
    int steep_window = 0;            // window ordinal
    bool steep_fallback = false;
    double t_steep = 0.0;            // time of the strongest event in the steep window
    std::optional<double> t_inhib;
    std::optional<LifecycleIndices> networks;  // set when t_inhib exists
};

LifecycleResult detect_lifecycle(const Cascade& cascade, std::span<const Subsequence> windows,
                                 const HawkesConfig& hawkes,
                                 const InhibitionThresholds& thresholds,
                                 const DiffusionNetwork* diffusion = nullptr);

}  // namespace casmo
