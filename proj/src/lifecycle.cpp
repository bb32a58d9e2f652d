#include "casmo/lifecycle.hpp"

#include <algorithm>
#include <cmath>

namespace casmo {

std::vector<double> hawkes_intensity(const Cascade& cascade, const HawkesConfig& cfg,
                                     const DiffusionNetwork* diffusion) {
    if (!(cfg.beta > 0.0)) throw ConfigError("hawkes beta must be positive");
    if (cfg.mu < 0.0 || cfg.alpha < 0.0) throw ConfigError("hawkes mu and alpha must be non-negative");
    if (cfg.weighting == UserWeighting::degree_weighted && !diffusion)
        throw ConfigError("degree weighting needs the diffusion network");

    const auto& ev = cascade.events;
    std::vector<double> out(ev.size(), cfg.mu);
    // decayed = sum over strictly earlier events of w_i * exp(-beta (t_now - t_i)),
    // carried forward with one exponential per time step. Events sharing a
    // timestamp see the same accumulator and join it together afterwards.
    double decayed = 0.0;
    double pending = 0.0;  // weights of events at the current timestamp
    std::size_t i = 0;
    while (i < ev.size()) {
        if (i > 0) {
            double dt = ev[i].time_min - ev[i - 1].time_min;
            decayed = (decayed + pending) * std::exp(-cfg.beta * dt);
            pending = 0.0;
        }
        std::size_t j = i;
        while (j < ev.size() && ev[j].time_min == ev[i].time_min) {
            out[j] = cfg.mu + cfg.alpha * cfg.beta * decayed;
            double w = 1.0;
            if (cfg.weighting == UserWeighting::degree_weighted)
                w = 1.0 + std::log(1.0 + static_cast<double>(diffusion->degree(ev[j].source)));
            pending += w;
            ++j;
        }
        i = j;
    }
    return out;
}

IntervalIntensityCurve interval_intensity_curve(std::span<const double> intensities,
                                                const Cascade& cascade,
                                                std::span<const Subsequence> windows) {
    if (intensities.size() != cascade.events.size())
        throw ContractViolation("one intensity per event required");
    if (windows.empty()) throw LifecycleError("no windows to aggregate over");
    IntervalIntensityCurve curve;
    curve.values.assign(windows.size(), 0.0);
    for (std::size_t i = 0; i < intensities.size(); ++i) {
        double t = cascade.events[i].time_min;
        auto w = window_for_time(windows, t);
        std::size_t idx = w ? static_cast<std::size_t>(*w - 1) : windows.size() - 1;
        curve.values[idx] += intensities[i];
    }
    return curve;
}

Extrema find_extrema(std::span<const double> curve) {
    if (curve.size() < 3) throw LifecycleError("extrema need a curve of at least 3 points");
    Extrema out;
    std::size_t i = 0;
    while (i < curve.size()) {
        std::size_t j = i;
        while (j + 1 < curve.size() && curve[j + 1] == curve[i]) ++j;
        // Run [i,j] of equal values; interior iff flanked on both sides.
        if (i > 0 && j + 1 < curve.size()) {
            if (curve[i - 1] < curve[i] && curve[j + 1] < curve[i]) out.maxima.push_back(i);
            if (curve[i - 1] > curve[i] && curve[j + 1] > curve[i]) out.minima.push_back(i);
        }
        i = j + 1;
    }
    return out;
}

SteepDetection detect_steep(std::span<const double> curve) {
    if (curve.empty()) throw LifecycleError("cannot detect the steep point of an empty curve");
    SteepDetection det;
    if (curve.size() < 3) {
        det.position = static_cast<std::size_t>(
            std::max_element(curve.begin(), curve.end()) - curve.begin());
        det.used_fallback = true;
        return det;
    }
    Extrema ex = find_extrema(curve);
    if (!ex.maxima.empty()) {
        std::size_t best = ex.maxima.front();
        for (std::size_t pos : ex.maxima)
            if (curve[pos] > curve[best]) best = pos;
        det.position = best;
        return det;
    }
    // No interior local maximum (monotone or flat curve): take the interior
    // argmax, earliest on ties.
    std::size_t best = 1;
    for (std::size_t pos = 2; pos + 1 < curve.size(); ++pos)
        if (curve[pos] > curve[best]) best = pos;
    det.position = best;
    det.used_fallback = true;
    return det;
}

std::optional<double> detect_inhibition(const Cascade& cascade, double t_steep,
                                        const InhibitionThresholds& thresholds) {
    if (!(thresholds.dtg_minutes >= 0.0) || !(thresholds.growth_ratio > 0.0))
        throw ConfigError("inhibition thresholds must be non-negative / positive");
    GrowthCurve g = growth_curve(cascade);
    if (g.times.empty()) return std::nullopt;

    // Size at the steep point: last event at or before t_steep.
    auto it = std::upper_bound(g.times.begin(), g.times.end(), t_steep);
    if (it == g.times.begin()) return std::nullopt;
    double s_steep = static_cast<double>(g.sizes[static_cast<std::size_t>(it - g.times.begin()) - 1]);
    if (!(s_steep > 0.0)) return std::nullopt;

    for (std::size_t i = 0; i < g.times.size(); ++i) {
        double t = g.times[i];
        if (t < t_steep) continue;
        if (t - t_steep >= thresholds.dtg_minutes &&
            static_cast<double>(g.sizes[i]) / s_steep >= thresholds.growth_ratio)
            return t;
    }
    return std::nullopt;
}

CalibrationConfig::CalibrationConfig() {
    for (int m = 60; m <= 1440; m += 60) dtg_grid.push_back(static_cast<double>(m));
    for (int g = 105; g <= 200; g += 5) ratio_grid.push_back(g / 100.0);
}

LifecycleResult detect_lifecycle(const Cascade& cascade, std::span<const Subsequence> windows,
                                 const HawkesConfig& hawkes,
                                 const InhibitionThresholds& thresholds,
                                 const DiffusionNetwork* diffusion) {
    LifecycleResult res;
    std::vector<double> intensities = hawkes_intensity(cascade, hawkes, diffusion);
    res.curve = interval_intensity_curve(intensities, cascade, windows);
    SteepDetection det = detect_steep(res.curve.values);
    res.steep_window = static_cast<int>(det.position) + 1;
    res.steep_fallback = det.used_fallback;

    // The steep time is the strongest event inside the steep window (earliest
    // on ties), using the same event-to-window assignment as the curve.
    double best = -1.0;
    double t_steep = windows[det.position].start_min;
    for (std::size_t i = 0; i < intensities.size(); ++i) {
        double t = cascade.events[i].time_min;
        auto w = window_for_time(windows, t);
        std::size_t idx = w ? static_cast<std::size_t>(*w - 1) : windows.size() - 1;
        if (idx != det.position) continue;
        if (intensities[i] > best) {
            best = intensities[i];
            t_steep = t;
        }
    }
    res.t_steep = t_steep;
    res.t_inhib = detect_inhibition(cascade, t_steep, thresholds);
    if (res.t_inhib) {
        double t_inhib = *res.t_inhib;
        // Clamp to the last window end so a tail event beyond the retained
        // windows still maps to a network.
        double last_end = windows.back().end_min;
        res.networks = locate_lifecycle_networks(windows, std::min(t_steep, last_end),
                                                 std::min(t_inhib, last_end));
    }
    return res;
}

CalibrationResult calibrate_thresholds(
    std::span<const std::pair<const Cascade*, double>> labeled,
    const CalibrationConfig& cfg) {
    if (labeled.empty()) throw ConfigError("calibration needs labeled cascades");
    if (cfg.dtg_grid.empty() || cfg.ratio_grid.empty())
        throw ConfigError("calibration grids must be non-empty");

    // Precompute per-cascade context: windows and the steep time.
    struct Ctx {
        const Cascade* cascade;
        std::vector<Subsequence> windows;
        double t_steep;
        int label_window;
    };
    std::vector<Ctx> ctxs;
    for (const auto& [cascade, t_true] : labeled) {
        Ctx ctx;
        ctx.cascade = cascade;
        ctx.windows = partition_subsequences(*cascade, cfg.window_size);
        LifecycleResult life = detect_lifecycle(*cascade, ctx.windows, cfg.hawkes,
                                                InhibitionThresholds{0.0, 1.0});
        ctx.t_steep = life.t_steep;
        auto w = window_for_time(ctx.windows, t_true);
        ctx.label_window = w ? *w : static_cast<int>(ctx.windows.size());
        ctxs.push_back(std::move(ctx));
    }

    CalibrationResult result;
    double best_err = std::numeric_limits<double>::infinity();
    for (double dtg : cfg.dtg_grid)
        for (double ratio : cfg.ratio_grid) {
            InhibitionThresholds cand{dtg, ratio};
            double err = 0.0;
            for (const auto& ctx : ctxs) {
                auto t = detect_inhibition(*ctx.cascade, ctx.t_steep, cand);
                int q = static_cast<int>(ctx.windows.size());
                if (!t) {
                    err += q;  // a miss scores the full window count
                    continue;
                }
                auto w = window_for_time(ctx.windows, *t);
                int detected = w ? *w : q;
                err += std::abs(detected - ctx.label_window);
            }
            err /= static_cast<double>(ctxs.size());
            // Strict improvement wins; grid order makes ties keep the
            // smallest dtg, then the smallest ratio.
            if (err < best_err) {
                best_err = err;
                result.best = cand;
            }
        }
    result.mean_window_error = best_err;
    result.evaluated = ctxs.size();
    return result;
}

}  // namespace casmo
