#include "casmo/core.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include "casmo/csv.hpp"

namespace casmo {

std::vector<std::pair<UserId, int>> Cascade::appearance_index() const {
    std::vector<std::pair<UserId, int>> out;
    out.reserve(participants.size());
    for (std::size_t i = 0; i < participants.size(); ++i)
        out.emplace_back(participants[i], static_cast<int>(i));
    std::sort(out.begin(), out.end());
    return out;
}

void normalize_cascade(Cascade& c) {
    if (c.events.empty()) {
        c.participants.clear();
        return;
    }
    double t0 = std::numeric_limits<double>::infinity();
    for (const auto& e : c.events) t0 = std::min(t0, e.time_min);
    for (auto& e : c.events) e.time_min -= t0;
    std::stable_sort(c.events.begin(), c.events.end(),
                     [](const ReshareEvent& a, const ReshareEvent& b) { return a.time_min < b.time_min; });
    c.events.erase(std::unique(c.events.begin(), c.events.end()), c.events.end());
    for (const auto& e : c.events)
        if (!(e.time_min >= 0.0))
            throw DataError("cascade " + c.id + ": negative or non-finite event time after rebasing");

    c.participants.clear();
    std::unordered_map<UserId, char> seen;
    seen.reserve(c.events.size() * 2);
    auto note = [&](UserId u) {
        if (seen.emplace(u, 1).second) c.participants.push_back(u);
    };
    for (const auto& e : c.events) {
        note(e.source);
        note(e.target);
    }
}

bool DiffusionNetwork::add_edge(UserId u, UserId v) {
    if (u == v) {
        ++dropped_self_loops_;
        return false;
    }
    auto& nu = adj_[u];
    auto it = std::lower_bound(nu.begin(), nu.end(), v);
    if (it != nu.end() && *it == v) return false;
    nu.insert(it, v);
    auto& nv = adj_[v];
    nv.insert(std::lower_bound(nv.begin(), nv.end(), u), u);
    ++edge_count_;
    return true;
}

bool DiffusionNetwork::has_edge(UserId u, UserId v) const {
    auto it = adj_.find(u);
    if (it == adj_.end()) return false;
    return std::binary_search(it->second.begin(), it->second.end(), v);
}

std::size_t DiffusionNetwork::degree(UserId u) const {
    auto it = adj_.find(u);
    return it == adj_.end() ? 0 : it->second.size();
}

const std::vector<UserId>* DiffusionNetwork::neighbors(UserId u) const {
    auto it = adj_.find(u);
    return it == adj_.end() ? nullptr : &it->second;
}

std::vector<std::pair<UserId, UserId>> DiffusionNetwork::sorted_edges() const {
    std::vector<std::pair<UserId, UserId>> out;
    out.reserve(edge_count_);
    for (const auto& [u, nbrs] : adj_)
        for (UserId v : nbrs)
            if (u < v) out.emplace_back(u, v);
    std::sort(out.begin(), out.end());
    return out;
}

const char* to_string(CascadeType t) {
    switch (t) {
        case CascadeType::type1: return "type1";
        case CascadeType::type2: return "type2";
        case CascadeType::type3: return "type3";
    }
    return "?";
}

std::vector<Cascade> parse_cascade_log(std::istream& in, IdTable& ids,
                                       const std::string& source_name) {
    CsvReader reader(in, source_name);
    std::vector<Cascade> cascades;
    std::unordered_map<std::string, std::size_t> by_id;
    std::vector<std::string> f;
    bool first = true;
    while (reader.next(f)) {
        if (f.size() != 4) reader.fail("expected 4 fields cascade_id,source,target,time");
        if (first) {
            first = false;
            if (f[3] == "time" || f[0] == "cascade_id") continue;  // header row
        }
        double t = reader.parse_double(f[3], "time");
        if (!std::isfinite(t)) reader.fail("non-finite time");
        if (f[1] == f[2]) reader.fail("self-reshare (source == target) in cascade " + f[0]);
        auto [it, inserted] = by_id.try_emplace(f[0], cascades.size());
        if (inserted) cascades.push_back(Cascade{f[0], {}, {}});
        cascades[it->second].events.push_back(
            ReshareEvent{ids.intern(f[1]), ids.intern(f[2]), t});
    }
    for (auto& c : cascades) normalize_cascade(c);
    return cascades;
}

void serialize_cascade_log(std::ostream& out, const std::vector<Cascade>& cascades,
                           const IdTable& ids) {
    out << "cascade_id,source,target,time\n";
    for (const auto& c : cascades)
        for (const auto& e : c.events)
            out << c.id << ',' << ids.name(e.source) << ',' << ids.name(e.target) << ','
                << format_double(e.time_min) << '\n';
}

DiffusionNetwork parse_diffusion_edges(std::istream& in, IdTable& ids,
                                       DiffusionParseStats* stats,
                                       const std::string& source_name) {
    CsvReader reader(in, source_name);
    DiffusionNetwork net;
    DiffusionParseStats local;
    std::vector<std::string> f;
    bool first = true;
    while (reader.next(f)) {
        if (f.size() != 2) reader.fail("expected 2 fields u,v");
        if (first) {
            first = false;
            if (f[0] == "u" || f[0] == "source") continue;  // header row
        }
        UserId u = ids.intern(f[0]);
        UserId v = ids.intern(f[1]);
        if (u == v) {
            ++local.self_loops;
            continue;
        }
        if (!net.add_edge(u, v)) ++local.duplicate_edges;
    }
    if (stats) *stats = local;
    return net;
}

std::vector<Cascade> filter_by_size(std::vector<Cascade> cascades, std::size_t min_participants) {
    std::erase_if(cascades,
                  [&](const Cascade& c) { return c.participant_count() <= min_participants; });
    return cascades;
}

GrowthCurve growth_curve(const Cascade& c) {
    GrowthCurve g;
    g.times.reserve(c.events.size());
    g.sizes.reserve(c.events.size());
    std::unordered_map<UserId, char> seen;
    std::size_t n = 0;
    for (const auto& e : c.events) {
        if (seen.emplace(e.source, 1).second) ++n;
        if (seen.emplace(e.target, 1).second) ++n;
        g.times.push_back(e.time_min);
        g.sizes.push_back(n);
    }
    return g;
}

namespace {

// Step-function value of the growth curve at time t (size after the last
// event with time <= t), on the rescaled [0,1] axes.
struct ScaledCurve {
    std::vector<double> x, y;
};

double rms(const ScaledCurve& c, double (*model)(double, double, double), double p1, double p2) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        double d = model(c.x[i], p1, p2) - c.y[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(c.x.size()));
}

double logistic_model(double x, double r, double m) { return 1.0 / (1.0 + std::exp(-r * (x - m))); }
double line_model(double x, double a, double b) { return a + b * x; }
double concave_model(double x, double gamma, double) { return std::pow(x, gamma); }

}  // namespace

ClassifyResult classify_cascade_type(const GrowthCurve& curve, const ClassifyConfig& cfg) {
    if (curve.times.size() < 3)
        throw DataError("cascade type needs a growth curve with at least 3 points");
    double T = curve.times.back();
    double S = static_cast<double>(curve.sizes.back());
    if (!(T > 0.0) || !(S > 0.0))
        throw DataError("cascade type needs a growth curve with positive span");

    ScaledCurve sc;
    sc.x.reserve(curve.times.size());
    sc.y.reserve(curve.times.size());
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        sc.x.push_back(curve.times[i] / T);
        sc.y.push_back(static_cast<double>(curve.sizes[i]) / S);
    }

    // Steepest segment over equal-width interval bins of the step curve.
    int bins = std::max(2, cfg.slope_bins);
    auto value_at = [&](double x) {
        auto it = std::upper_bound(sc.x.begin(), sc.x.end(), x);
        if (it == sc.x.begin()) return 0.0;
        return sc.y[static_cast<std::size_t>(it - sc.x.begin()) - 1];
    };
    int steep_bin = 0;
    double steep_slope = -1.0;
    for (int b = 0; b < bins; ++b) {
        double lo = static_cast<double>(b) / bins;
        double hi = static_cast<double>(b + 1) / bins;
        double slope = value_at(hi) - value_at(lo);
        if (slope > steep_slope) {
            steep_slope = slope;
            steep_bin = b;
        }
    }
    double steep_fraction = (steep_bin + 0.5) / bins;

    ClassifyResult res;
    res.steep_time_fraction = steep_fraction;

    // Logistic fit: coarse grid over rate and midpoint.
    res.logistic_rms = std::numeric_limits<double>::infinity();
    for (double r : {2.0, 3.0, 4.5, 7.0, 10.0, 15.0, 22.0, 33.0, 50.0, 75.0, 110.0, 170.0, 256.0})
        for (int mi = 1; mi <= 49; ++mi) {
            double m = mi / 50.0;
            res.logistic_rms = std::min(res.logistic_rms, rms(sc, logistic_model, r, m));
        }

    // Least-squares straight line.
    {
        double n = static_cast<double>(sc.x.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < sc.x.size(); ++i) {
            sx += sc.x[i];
            sy += sc.y[i];
            sxx += sc.x[i] * sc.x[i];
            sxy += sc.x[i] * sc.y[i];
        }
        double denom = n * sxx - sx * sx;
        double b = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
        double a = (sy - b * sx) / n;
        res.line_rms = rms(sc, line_model, a, b);
    }

    // Concave increasing power curve.
    res.concave_rms = std::numeric_limits<double>::infinity();
    for (int gi = 1; gi <= 19; ++gi)
        res.concave_rms = std::min(res.concave_rms, rms(sc, concave_model, gi / 20.0, 0.0));

    if (res.line_rms < res.logistic_rms || res.concave_rms < res.logistic_rms)
        res.type = CascadeType::type3;
    else if (steep_fraction < cfg.steep_time_fraction_threshold)
        res.type = CascadeType::type1;
    else
        res.type = CascadeType::type2;
    return res;
}

std::vector<RatingRecord> parse_ratings(std::istream& in, IdTable& ids,
                                        const std::string& source_name) {
    CsvReader reader(in, source_name);
    std::vector<RatingRecord> out;
    std::vector<std::string> f;
    bool first = true;
    while (reader.next(f)) {
        if (f.size() != 3) reader.fail("expected 3 fields user,item,time_hours");
        if (first) {
            first = false;
            if (f[0] == "user" || f[2] == "time" || f[2] == "time_hours") continue;  // header
        }
        double t = reader.parse_double(f[2], "time_hours");
        if (!std::isfinite(t)) reader.fail("non-finite rating time");
        out.push_back(RatingRecord{ids.intern(f[0]), f[1], t});
    }
    return out;
}

std::vector<Cascade> build_corating_cascades(const std::vector<RatingRecord>& ratings,
                                             double window_hours) {
    if (!(window_hours > 0.0)) throw ConfigError("co-rating window must be positive");
    // Group per item, keeping item order of first appearance.
    std::vector<std::string> item_order;
    std::unordered_map<std::string, std::vector<std::pair<double, UserId>>> per_item;
    for (const auto& r : ratings) {
        auto [it, inserted] = per_item.try_emplace(r.item);
        if (inserted) item_order.push_back(r.item);
        it->second.emplace_back(r.time_hours, r.user);
    }

    std::vector<Cascade> out;
    for (const auto& item : item_order) {
        auto& raters = per_item[item];
        std::sort(raters.begin(), raters.end());
        // Keep the earliest rating per user.
        std::unordered_map<UserId, char> kept;
        std::vector<std::pair<double, UserId>> uniq;
        uniq.reserve(raters.size());
        for (const auto& r : raters)
            if (kept.emplace(r.second, 1).second) uniq.push_back(r);

        Cascade c;
        c.id = item;
        for (std::size_t j = 1; j < uniq.size(); ++j) {
            for (std::size_t i = j; i-- > 0;) {
                if (uniq[j].first - uniq[i].first > window_hours) break;
                c.events.push_back(
                    ReshareEvent{uniq[i].second, uniq[j].second, uniq[j].first * 60.0});
            }
        }
        if (c.events.empty()) continue;
        normalize_cascade(c);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace casmo
