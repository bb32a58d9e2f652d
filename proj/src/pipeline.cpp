#include "casmo/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "casmo/csv.hpp"

namespace casmo {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::ofstream open_output(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
}

std::ifstream open_input(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ParseError("cannot open " + p.string());
    return in;
}

std::string read_file_bytes(const fs::path& p) {
    std::ifstream in = open_input(p);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char out[17];
    for (int i = 15; i >= 0; --i) {
        out[i] = "0123456789abcdef"[h & 0xf];
        h >>= 4;
    }
    out[16] = '\0';
    return out;
}

// ---------------------------------------------------------------- config

std::string trimmed(std::string_view s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& v) {
    throw ConfigError("config key '" + key + "': bad value '" + v + "'");
}

double to_dbl(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) bad_value(key, v);
        return d;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        bad_value(key, v);
    }
}

long long to_ll(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long long n = std::stoll(v, &used);
        if (used != v.size()) bad_value(key, v);
        return n;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        bad_value(key, v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    bad_value(key, v);
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& v, F parse_one) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(parse_one(key, trimmed(part)));
    if (out.empty()) bad_value(key, v);
    return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    return to_list<int>(key, v, [](const std::string& k, const std::string& p) {
        return static_cast<int>(to_ll(k, p));
    });
}

std::vector<double> to_dbl_list(const std::string& key, const std::string& v) {
    return to_list<double>(key, v, to_dbl);
}

UserWeighting to_weighting(const std::string& key, const std::string& v) {
    if (v == "uniform") return UserWeighting::uniform;
    if (v == "degree" || v == "degree_weighted") return UserWeighting::degree_weighted;
    bad_value(key, v);
}

Penalty to_penalty(const std::string& key, const std::string& v) {
    if (v == "l1" || v == "L1") return Penalty::l1;
    if (v == "l2" || v == "L2") return Penalty::l2;
    bad_value(key, v);
}

CascadeType to_shape(const std::string& key, const std::string& v) {
    if (v == "type1" || v == "1") return CascadeType::type1;
    if (v == "type2" || v == "2") return CascadeType::type2;
    if (v == "type3" || v == "3") return CascadeType::type3;
    bad_value(key, v);
}

PatternId to_pattern(const std::string& key, const std::string& v) {
    try {
        return pattern_from_name(v);
    } catch (...) {
        bad_value(key, v);
    }
}

const char* weighting_name(UserWeighting w) {
    return w == UserWeighting::uniform ? "uniform" : "degree";
}

const char* penalty_name(Penalty p) { return p == Penalty::l1 ? "l1" : "l2"; }

void validate_config(const RunConfig& cfg) {
    auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (cfg.window_size < 1) fail("window size must be positive");
    if (cfg.last_networks < 1) fail("census.last_networks must be positive");
    if (cfg.census_ks.empty()) fail("census.ks must not be empty");
    for (int k : cfg.census_ks)
        if (k < 3 || k > 5) fail("census.ks entries must be 3, 4 or 5");
    for (int t : cfg.cascade_types)
        if (t < 1 || t > 3) fail("run.cascade_types entries must be 1, 2 or 3");
    if (cfg.cascade_types.empty()) fail("run.cascade_types must not be empty");
    if (cfg.failure_tolerance < 0.0 || cfg.failure_tolerance > 1.0)
        fail("run.failure_tolerance must lie in [0,1]");
    if (cfg.threads < 0) fail("run.threads must be non-negative");
    if (cfg.ensemble_enabled && cfg.ensemble_size < 2) fail("ensemble.size needs at least 2");
    if (cfg.switches_per_edge < 0) fail("ensemble.switches_per_edge must be non-negative");
    if (cfg.folds < 2) fail("prediction.folds needs at least 2");
    if (cfg.poly_order != 1 && cfg.poly_order != 2) fail("prediction.poly_order must be 1 or 2");
    if (cfg.eta_grid.empty()) fail("prediction.eta_grid must not be empty");
    for (double e : cfg.eta_grid)
        if (e < 0.0) fail("prediction.eta_grid entries must be non-negative");
    if (cfg.interval_starts.empty()) fail("prediction.interval_starts must not be empty");
    for (int st : cfg.interval_starts)
        if (st < 1) fail("prediction.interval_starts entries must be positive");
    if (cfg.corating_window_hours <= 0.0) fail("io.corating_window_hours must be positive");
}

// Fills in the derived defaults a command relies on.
RunConfig effective(const RunConfig& cfg) {
    RunConfig out = cfg;
    if (out.cache_dir.empty()) out.cache_dir = out.out_dir + "/cache";
    validate_config(out);
    return out;
}

}  // namespace

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in = open_input(path);
    std::map<std::string, std::string> kv;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trimmed(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineno) + ": unterminated section");
            section = trimmed(t.substr(1, t.size() - 2));
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trimmed(t.substr(0, eq));
        std::string value = trimmed(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, v] : kv) {
        if (key == "io.cascades") cfg.cascades_path = v;
        else if (key == "io.edges") cfg.edges_path = v;
        else if (key == "io.ratings") cfg.ratings_path = v;
        else if (key == "io.labels") cfg.labels_path = v;
        else if (key == "io.cache") cfg.cache_dir = v;
        else if (key == "io.out") cfg.out_dir = v;
        else if (key == "io.corating_window_hours") cfg.corating_window_hours = to_dbl(key, v);
        else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(to_ll(key, v));
        else if (key == "run.threads") cfg.threads = static_cast<int>(to_ll(key, v));
        else if (key == "run.failure_tolerance") cfg.failure_tolerance = to_dbl(key, v);
        else if (key == "run.cascade_types") cfg.cascade_types = to_int_list(key, v);
        else if (key == "windows.size") cfg.window_size = static_cast<int>(to_ll(key, v));
        else if (key == "windows.min_participants")
            cfg.min_participants = static_cast<std::size_t>(to_ll(key, v));
        else if (key == "hawkes.mu") cfg.hawkes.mu = to_dbl(key, v);
        else if (key == "hawkes.alpha") cfg.hawkes.alpha = to_dbl(key, v);
        else if (key == "hawkes.beta") cfg.hawkes.beta = to_dbl(key, v);
        else if (key == "hawkes.weighting") cfg.hawkes.weighting = to_weighting(key, v);
        else if (key == "lifecycle.dtg_minutes") cfg.thresholds.dtg_minutes = to_dbl(key, v);
        else if (key == "lifecycle.growth_ratio") cfg.thresholds.growth_ratio = to_dbl(key, v);
        else if (key == "census.ks") cfg.census_ks = to_int_list(key, v);
        else if (key == "census.last_networks") cfg.last_networks = static_cast<int>(to_ll(key, v));
        else if (key == "ensemble.enabled") cfg.ensemble_enabled = to_bool(key, v);
        else if (key == "ensemble.size") cfg.ensemble_size = static_cast<int>(to_ll(key, v));
        else if (key == "ensemble.switches_per_edge")
            cfg.switches_per_edge = static_cast<int>(to_ll(key, v));
        else if (key == "ensemble.p_threshold") cfg.significance.p_threshold = to_dbl(key, v);
        else if (key == "ensemble.z_threshold") cfg.significance.z_threshold = to_dbl(key, v);
        else if (key == "transitions.enabled") cfg.transitions_enabled = to_bool(key, v);
        else if (key == "transitions.induced_only") cfg.transitions.induced_only = to_bool(key, v);
        else if (key.starts_with("transitions.min4."))
            cfg.transitions.min_count4[to_pattern(key, key.substr(17))] = to_ll(key, v);
        else if (key.starts_with("transitions.min5."))
            cfg.transitions.min_count5[to_pattern(key, key.substr(17))] = to_ll(key, v);
        else if (key == "prediction.interval_starts") cfg.interval_starts = to_int_list(key, v);
        else if (key == "prediction.eta_grid") cfg.eta_grid = to_dbl_list(key, v);
        else if (key == "prediction.penalty") cfg.penalty = to_penalty(key, v);
        else if (key == "prediction.folds") cfg.folds = static_cast<int>(to_ll(key, v));
        else if (key == "prediction.poly_order") cfg.poly_order = static_cast<int>(to_ll(key, v));
        else if (key == "synth.n_cascades") cfg.synth.n_cascades = static_cast<int>(to_ll(key, v));
        else if (key == "synth.participants")
            cfg.synth.base.n_participants = static_cast<int>(to_ll(key, v));
        else if (key == "synth.midpoint") cfg.synth.base.logistic_midpoint = to_dbl(key, v);
        else if (key == "synth.rate") cfg.synth.base.logistic_rate = to_dbl(key, v);
        else if (key == "synth.edge_prob") cfg.synth.base.historical_edge_prob = to_dbl(key, v);
        else if (key == "synth.shape") cfg.synth.base.shape = to_shape(key, v);
        else if (key == "synth.tail_fraction") cfg.synth.base.tail_fraction = to_dbl(key, v);
        else if (key == "synth.tail_stretch") cfg.synth.base.tail_stretch = to_dbl(key, v);
        else if (key == "synth.jitter") cfg.synth.base.jitter = to_dbl(key, v);
        else if (key == "synth.midpoint_spread") cfg.synth.midpoint_spread = to_dbl(key, v);
        else if (key == "synth.rate_spread") cfg.synth.rate_spread = to_dbl(key, v);
        else if (key == "synth.participants_spread")
            cfg.synth.participants_spread = static_cast<int>(to_ll(key, v));
        else if (key == "synth.type_weights") {
            auto w = to_dbl_list(key, v);
            if (w.size() != 3) bad_value(key, v);
            std::copy(w.begin(), w.end(), cfg.synth.type_weights);
        } else if (key == "synth.plant") cfg.synth.plant = to_bool(key, v);
        else if (key == "synth.plant_pattern") cfg.synth.plant_pattern_name = v;
        else if (key == "synth.plant_z_max") cfg.synth.plant_z_max = static_cast<int>(to_ll(key, v));
        else if (key == "synth.plant_edges_per_unit") cfg.synth.plant_edges_per_unit = to_dbl(key, v);
        else if (key == "synth.plant_clutter_prob") cfg.synth.plant_clutter_prob = to_dbl(key, v);
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

// ---------------------------------------------------------------- manifest

namespace {

json config_to_json(const RunConfig& cfg) {
    json min4 = json::object(), min5 = json::object();
    for (const auto& [p, n] : cfg.transitions.min_count4) min4[pattern_name(p)] = n;
    for (const auto& [p, n] : cfg.transitions.min_count5) min5[pattern_name(p)] = n;
    return json{
        {"io",
         {{"cascades", cfg.cascades_path},
          {"edges", cfg.edges_path},
          {"ratings", cfg.ratings_path},
          {"labels", cfg.labels_path},
          {"cache", cfg.cache_dir},
          {"out", cfg.out_dir},
          {"corating_window_hours", cfg.corating_window_hours}}},
        {"run",
         {{"seed", cfg.seed},
          {"threads", cfg.threads},
          {"failure_tolerance", cfg.failure_tolerance},
          {"cascade_types", cfg.cascade_types}}},
        {"windows", {{"size", cfg.window_size}, {"min_participants", cfg.min_participants}}},
        {"hawkes",
         {{"mu", cfg.hawkes.mu},
          {"alpha", cfg.hawkes.alpha},
          {"beta", cfg.hawkes.beta},
          {"weighting", weighting_name(cfg.hawkes.weighting)}}},
        {"lifecycle",
         {{"dtg_minutes", cfg.thresholds.dtg_minutes},
          {"growth_ratio", cfg.thresholds.growth_ratio}}},
        {"census", {{"ks", cfg.census_ks}, {"last_networks", cfg.last_networks}}},
        {"ensemble",
         {{"enabled", cfg.ensemble_enabled},
          {"size", cfg.ensemble_size},
          {"switches_per_edge", cfg.switches_per_edge},
          {"p_threshold", cfg.significance.p_threshold},
          {"z_threshold", cfg.significance.z_threshold}}},
        {"transitions",
         {{"enabled", cfg.transitions_enabled},
          {"induced_only", cfg.transitions.induced_only},
          {"min4", min4},
          {"min5", min5}}},
        {"prediction",
         {{"interval_starts", cfg.interval_starts},
          {"eta_grid", cfg.eta_grid},
          {"penalty", penalty_name(cfg.penalty)},
          {"folds", cfg.folds},
          {"poly_order", cfg.poly_order}}},
        {"synth",
         {{"n_cascades", cfg.synth.n_cascades},
          {"participants", cfg.synth.base.n_participants},
          {"midpoint", cfg.synth.base.logistic_midpoint},
          {"rate", cfg.synth.base.logistic_rate},
          {"edge_prob", cfg.synth.base.historical_edge_prob},
          {"shape", to_string(cfg.synth.base.shape)},
          {"tail_fraction", cfg.synth.base.tail_fraction},
          {"tail_stretch", cfg.synth.base.tail_stretch},
          {"jitter", cfg.synth.base.jitter},
          {"midpoint_spread", cfg.synth.midpoint_spread},
          {"rate_spread", cfg.synth.rate_spread},
          {"participants_spread", cfg.synth.participants_spread},
          {"type_weights",
           {cfg.synth.type_weights[0], cfg.synth.type_weights[1], cfg.synth.type_weights[2]}},
          {"plant", cfg.synth.plant},
          {"plant_pattern", cfg.synth.plant_pattern_name},
          {"plant_z_max", cfg.synth.plant_z_max},
          {"plant_edges_per_unit", cfg.synth.plant_edges_per_unit},
          {"plant_clutter_prob", cfg.synth.plant_clutter_prob}}}};
}

void write_manifest(const fs::path& dir, const std::string& file, const std::string& command,
                    const RunConfig& cfg, json extra) {
    extra["tool"] = "casmo 1.0.0";
    extra["command"] = command;
    extra["config"] = config_to_json(cfg);
    std::ofstream out = open_output(dir / file);
    out << extra.dump(2) << '\n';
}

// -------------------------------------------------------------- cache io

constexpr char kCacheMagic[] = "casmo cache 1\n";
constexpr std::size_t kCacheMagicLen = sizeof(kCacheMagic) - 1;

void put_u64(std::ostream& o, std::uint64_t v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u32(std::ostream& o, std::uint32_t v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& o, double v) { o.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_str(std::ostream& o, const std::string& s) {
    put_u32(o, static_cast<std::uint32_t>(s.size()));
    o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

struct CacheIn {
    std::ifstream in;
    std::string path;

    void need(void* dst, std::size_t n) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw DataError(path + ": truncated cache");
    }
    std::uint64_t u64() { std::uint64_t v; need(&v, sizeof v); return v; }
    std::uint32_t u32() { std::uint32_t v; need(&v, sizeof v); return v; }
    double f64() { double v; need(&v, sizeof v); return v; }
    std::string str() {
        std::uint32_t n = u32();
        std::string s(n, '\0');
        if (n) need(s.data(), n);
        return s;
    }
};

}  // namespace

void save_cache(const CorpusCache& cache, const std::string& dir) {
    fs::create_directories(dir);
    fs::path file = fs::path(dir) / "corpus.bin";
    std::ofstream out = open_output(file);
    out.write(kCacheMagic, static_cast<std::streamsize>(kCacheMagicLen));
    put_u64(out, cache.ids.size());
    for (UserId u = 0; u < cache.ids.size(); ++u) put_str(out, cache.ids.name(u));
    put_u64(out, cache.cascades.size());
    for (std::size_t i = 0; i < cache.cascades.size(); ++i) {
        const Cascade& c = cache.cascades[i];
        put_str(out, c.id);
        put_u32(out, static_cast<std::uint32_t>(cache.types[i]));
        put_u64(out, c.events.size());
        for (const auto& e : c.events) {
            put_u32(out, e.source);
            put_u32(out, e.target);
            put_f64(out, e.time_min);
        }
    }
    auto edges = cache.diffusion.sorted_edges();
    put_u64(out, edges.size());
    for (auto [u, v] : edges) {
        put_u32(out, u);
        put_u32(out, v);
    }
    if (!out) throw ConfigError("cannot write " + file.string());
}

CorpusCache load_cache(const std::string& dir) {
    fs::path file = fs::path(dir) / "corpus.bin";
    CacheIn r{open_input(file), file.string()};
    char magic[kCacheMagicLen];
    r.need(magic, kCacheMagicLen);
    if (std::string_view(magic, kCacheMagicLen) != kCacheMagic)
        throw DataError(file.string() + ": not a corpus cache");
    CorpusCache cache;
    std::uint64_t n_names = r.u64();
    for (std::uint64_t i = 0; i < n_names; ++i) cache.ids.intern(r.str());
    std::uint64_t n_casc = r.u64();
    cache.cascades.reserve(n_casc);
    cache.types.reserve(n_casc);
    for (std::uint64_t i = 0; i < n_casc; ++i) {
        Cascade c;
        c.id = r.str();
        std::uint32_t t = r.u32();
        if (t > 2) throw DataError(file.string() + ": bad cascade type");
        std::uint64_t n_ev = r.u64();
        c.events.reserve(n_ev);
        for (std::uint64_t j = 0; j < n_ev; ++j) {
            ReshareEvent e;
            e.source = r.u32();
            e.target = r.u32();
            e.time_min = r.f64();
            c.events.push_back(e);
        }
        normalize_cascade(c);
        cache.cascades.push_back(std::move(c));
        cache.types.push_back(static_cast<CascadeType>(t));
    }
    std::uint64_t n_edges = r.u64();
    for (std::uint64_t i = 0; i < n_edges; ++i) {
        UserId u = r.u32();
        UserId v = r.u32();
        cache.diffusion.add_edge(u, v);
    }
    return cache;
}

// ---------------------------------------------------------------- ingest

IngestResult cmd_ingest(const RunConfig& raw) {
    RunConfig cfg = effective(raw);
    auto t0 = Clock::now();

    CorpusCache cache;
    DiffusionParseStats estats;
    std::vector<Cascade> cascades;
    if (!cfg.ratings_path.empty()) {
        std::ifstream in = open_input(cfg.ratings_path);
        auto ratings = parse_ratings(in, cache.ids, cfg.ratings_path);
        cascades = build_corating_cascades(ratings, cfg.corating_window_hours);
    } else if (!cfg.cascades_path.empty()) {
        std::ifstream in = open_input(cfg.cascades_path);
        cascades = parse_cascade_log(in, cache.ids, cfg.cascades_path);
    } else {
        throw ConfigError("ingest needs io.cascades or io.ratings");
    }
    if (!cfg.edges_path.empty()) {
        std::ifstream in = open_input(cfg.edges_path);
        cache.diffusion = parse_diffusion_edges(in, cache.ids, &estats, cfg.edges_path);
    }

    IngestResult res;
    res.parsed = cascades.size();
    cache.cascades = filter_by_size(std::move(cascades), cfg.min_participants);
    res.kept = cache.cascades.size();

    std::vector<ClassifyResult> classes;
    classes.reserve(cache.cascades.size());
    for (const Cascade& c : cache.cascades) {
        classes.push_back(classify_cascade_type(growth_curve(c)));
        cache.types.push_back(classes.back().type);
    }

    save_cache(cache, cfg.cache_dir);
    res.cache_dir = cfg.cache_dir;
    res.digest = fnv1a_hex(read_file_bytes(fs::path(cfg.cache_dir) / "corpus.bin"));

    {
        std::ofstream out = open_output(fs::path(cfg.cache_dir) / "classified.csv");
        out << "cascade_id,participants,events,span_minutes,type,steep_time_fraction,"
               "logistic_rms,line_rms,concave_rms\n";
        for (std::size_t i = 0; i < cache.cascades.size(); ++i) {
            const Cascade& c = cache.cascades[i];
            const ClassifyResult& cl = classes[i];
            out << c.id << ',' << c.participant_count() << ',' << c.events.size() << ','
                << format_double(c.span_minutes()) << ',' << to_string(cl.type) << ','
                << format_double(cl.steep_time_fraction) << ',' << format_double(cl.logistic_rms)
                << ',' << format_double(cl.line_rms) << ',' << format_double(cl.concave_rms)
                << '\n';
        }
    }

    write_manifest(cfg.cache_dir, "cache_manifest.json", "ingest", cfg,
                   json{{"counts",
                         {{"parsed", res.parsed},
                          {"kept", res.kept},
                          {"diffusion_edges", cache.diffusion.edge_count()},
                          {"duplicate_edges", estats.duplicate_edges},
                          {"self_loops", estats.self_loops}}},
                        {"digest", res.digest},
                        {"timings_ms", {{"total", ms_since(t0)}}}});
    return res;
}

// ----------------------------------------------------------------- synth

SynthResult cmd_synth(const RunConfig& raw) {
    RunConfig cfg = effective(raw);
    auto t0 = Clock::now();

    // The generator labels its output with the same detection settings the
    // analysis will run, so the labels mean what the run measures.
    SynthCorpusConfig sc = cfg.synth;
    sc.window_size = cfg.window_size;
    sc.hawkes = cfg.hawkes;
    sc.thresholds = cfg.thresholds;
    SynthCorpus corpus = generate_corpus(sc, cfg.seed);

    fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    {
        std::ofstream out = open_output(out_dir / "cascades.csv");
        serialize_cascade_log(out, corpus.cascades, corpus.ids);
    }
    {
        std::ofstream out = open_output(out_dir / "edges.csv");
        out << "u,v\n";
        for (auto [u, v] : corpus.diffusion.sorted_edges())
            out << corpus.ids.name(u) << ',' << corpus.ids.name(v) << '\n';
    }

    SynthResult res;
    res.n_cascades = corpus.cascades.size();
    res.out_dir = cfg.out_dir;
    {
        std::ofstream out = open_output(out_dir / "labels.csv");
        out << "cascade_id,t_inhib\n";
        for (const auto& rec : corpus.records)
            if (rec.t_inhib) {
                out << rec.cascade_id << ',' << format_double(*rec.t_inhib) << '\n';
                ++res.n_labeled;
            }
    }
    {
        json records = json::array();
        for (const auto& rec : corpus.records) {
            json r{{"cascade_id", rec.cascade_id},
                   {"shape", to_string(rec.shape)},
                   {"true_midpoint_min", rec.true_midpoint_min},
                   {"t_steep", rec.t_steep},
                   {"steep_window", rec.steep_window},
                   {"planted_z", rec.planted_z},
                   {"injected_instances", rec.injected_instances},
                   {"filler_edges", rec.filler_edges}};
            r["t_inhib"] = rec.t_inhib ? json(*rec.t_inhib) : json();
            r["inhib_network"] = rec.inhib_network ? json(*rec.inhib_network) : json();
            records.push_back(std::move(r));
        }
        json truth{{"records", std::move(records)}};
        truth["planted_pattern"] =
            sc.plant ? json(pattern_name(corpus.planted_pattern)) : json();
        std::ofstream out = open_output(out_dir / "ground_truth.json");
        out << truth.dump(2) << '\n';
    }

    write_manifest(out_dir, "synth_manifest.json", "synth", cfg,
                   json{{"counts",
                         {{"cascades", res.n_cascades},
                          {"labeled", res.n_labeled},
                          {"diffusion_edges", corpus.diffusion.edge_count()}}},
                        {"timings_ms", {{"total", ms_since(t0)}}}});
    return res;
}

// --------------------------------------------------------------- analyze

namespace {

struct LifecycleRow {
    std::string cascade;
    CascadeType type = CascadeType::type1;
    std::size_t participants = 0;
    std::size_t events = 0;
    int q = 0;
    int steep_window = 0;
    bool steep_fallback = false;
    double t_steep = 0.0;
    int inhib_window = 0;
    double t_inhib = 0.0;
    int steep_network = 0;
    int inhib_network = 0;
};

struct NetworkRow {
    std::string cascade;
    int index = 0;
    int nodes = 0;
    int edges = 0;
    int cascade_edges = 0;
    int historical_edges = 0;
};

struct CensusRow {
    std::string cascade;
    int network = 0;
    int k = 0;
    std::string pattern;
    long long count = 0;
};

struct SignifRow {
    std::string cascade;
    int network = 0;
    int k = 0;
    std::string pattern;
    long long input_count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double z = 0.0;
    double p = 1.0;
    bool significant = false;
};

struct TransRow {
    std::string cascade;
    int pair_index = 0;
    std::string pattern4;
    std::string pattern5;
    long long count = 0;
};

constexpr std::array<const char*, 5> kMeasures = {"degree", "degree_entropy", "clustering",
                                                  "pagerank", "betweenness"};

struct CentralityRow {
    std::string cascade;
    int network = 0;
    std::array<double, 5> m{};
};

struct CascadeOutcome {
    enum class Status { analyzed, skipped_windowing, skipped_no_inhibition, failed };
    Status status = Status::failed;
    std::string id;
    std::string detail;

    LifecycleRow life;
    std::vector<NetworkRow> networks;
    std::vector<CensusRow> censuses;
    std::vector<SignifRow> significance;
    std::vector<TransRow> transitions;
    std::vector<CentralityRow> centralities;
    WindowingStats drops;

    double ms_lifecycle = 0.0;
    double ms_census = 0.0;
    double ms_significance = 0.0;
    double ms_transitions = 0.0;
    double ms_centrality = 0.0;
};

CascadeOutcome analyze_one(const Cascade& c, CascadeType type, const DiffusionNetwork& diffusion,
                           const RunConfig& cfg, std::uint64_t seed) {
    CascadeOutcome out;
    out.id = c.id;

    auto t0 = Clock::now();
    std::vector<Subsequence> windows;
    try {
        windows = partition_subsequences(c, cfg.window_size, &out.drops);
    } catch (const WindowingError&) {
        out.status = CascadeOutcome::Status::skipped_windowing;
        return out;
    }
    LifecycleResult life = detect_lifecycle(c, windows, cfg.hawkes, cfg.thresholds, &diffusion);
    if (!life.t_inhib) {
        out.status = CascadeOutcome::Status::skipped_no_inhibition;
        return out;
    }
    auto nets = build_all_networks(c, windows, diffusion, &out.drops);
    out.ms_lifecycle = ms_since(t0);

    int steep_net = life.networks->steep_network;
    int inhib_net = life.networks->inhib_network;
    double last_end = windows.back().end_min;

    out.life.cascade = c.id;
    out.life.type = type;
    out.life.participants = c.participant_count();
    out.life.events = c.events.size();
    out.life.q = static_cast<int>(windows.size());
    out.life.steep_window = life.steep_window;
    out.life.steep_fallback = life.steep_fallback;
    out.life.t_steep = life.t_steep;
    out.life.t_inhib = *life.t_inhib;
    out.life.inhib_window = *window_for_time(windows, std::min(*life.t_inhib, last_end));
    out.life.steep_network = steep_net;
    out.life.inhib_network = inhib_net;

    for (const auto& n : nets) {
        NetworkRow row;
        row.cascade = c.id;
        row.index = n.index;
        row.nodes = static_cast<int>(n.nodes.size());
        row.edges = static_cast<int>(n.edges.size());
        for (const auto& e : n.edges)
            e.tag == EdgeTag::cascade ? ++row.cascade_edges : ++row.historical_edges;
        out.networks.push_back(std::move(row));
    }

    int lo_inhib = std::max(2, inhib_net - (cfg.last_networks - 1));
    int lo_steep = std::max(2, steep_net - (cfg.last_networks - 1));
    std::set<int> census_set;
    for (int i = lo_inhib; i <= inhib_net; ++i) census_set.insert(i);
    for (int i = lo_steep; i <= steep_net; ++i) census_set.insert(i);
    int trans_lo = std::max(steep_net, lo_inhib);
    bool do_trans = cfg.transitions_enabled && trans_lo < inhib_net;

    std::map<int, MotifCensus> census4, census5;
    for (int i : census_set) {
        const TemporalNetwork& net = nets[static_cast<std::size_t>(i - 2)];
        DenseGraph g = net.to_dense();

        std::vector<int> ks = cfg.census_ks;
        if (do_trans && i >= trans_lo && i <= inhib_net - 1) ks.push_back(4);
        if (do_trans && i >= trans_lo + 1) ks.push_back(5);
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

        for (int k : ks) {
            bool store4 = do_trans && k == 4 && i >= trans_lo && i <= inhib_net - 1;
            bool store5 = do_trans && k == 5 && i >= trans_lo + 1;
            bool reported =
                std::find(cfg.census_ks.begin(), cfg.census_ks.end(), k) != cfg.census_ks.end();

            auto tc = Clock::now();
            CensusOptions opt;
            opt.store_instances = store4 || store5;
            MotifCensus cen = motif_census(g, k, opt, net.nodes);
            out.ms_census += ms_since(tc);

            if (reported)
                for (PatternId p : pattern_catalog(k))
                    out.censuses.push_back({c.id, i, k, pattern_name(p), cen.count_of(p)});

            if (cfg.ensemble_enabled && reported && i >= lo_inhib) {
                auto ts = Clock::now();
                NullEnsemble ens =
                    build_ensemble(g, cfg.ensemble_size, cfg.switches_per_edge, k,
                                   derive_seed(seed, 0x5EEDULL + static_cast<std::uint64_t>(i) * 16 +
                                                         static_cast<std::uint64_t>(k)));
                SignificanceReport rep = zscore_report(cen, ens, cfg.significance, true);
                for (const auto& row : rep.rows)
                    out.significance.push_back({c.id, i, k, pattern_name(row.pattern),
                                                row.input_count, row.mean, row.stddev, row.z,
                                                row.p, row.significant});
                out.ms_significance += ms_since(ts);
            }

            if (store4) census4.emplace(i, std::move(cen));
            else if (store5) census5.emplace(i, std::move(cen));
        }

        if (i >= lo_inhib) {
            auto tm = Clock::now();
            CentralityFeatures f = centrality_features(g);
            out.centralities.push_back({c.id, i,
                                        {f.degree_top_mean, f.degree_entropy,
                                         f.clustering_top_mean, f.pagerank_top_mean,
                                         f.betweenness_top_mean}});
            out.ms_centrality += ms_since(tm);
        }
    }

    if (do_trans) {
        auto tt = Clock::now();
        for (int i = trans_lo + 1; i <= inhib_net; ++i) {
            TransitionMatrix tm = count_transitions(census4.at(i - 1), census5.at(i),
                                                    cfg.transitions);
            for (const auto& [pair, count] : tm.counts)
                out.transitions.push_back(
                    {c.id, i, pattern_name(pair.first), pattern_name(pair.second), count});
            census4.erase(i - 1);
            census5.erase(i);
        }
        out.ms_transitions = ms_since(tt);
    }

    out.status = CascadeOutcome::Status::analyzed;
    return out;
}

double quantile_sorted(const std::vector<double>& v, double q) {
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

std::string agg_key(const std::string& id, int net, int k, const std::string& pattern) {
    return id + '\x1f' + std::to_string(net) + '\x1f' + std::to_string(k) + '\x1f' + pattern;
}

struct AnchorRow {
    std::string id;
    int steep_network = 0;
    int inhib_network = 0;
};

// Shared by analyze (from freshly computed rows) and report (from re-parsed
// CSVs); byte-identical output from both paths is a deliberate cross-check.
void write_aggregates(const fs::path& dir, const std::vector<AnchorRow>& anchors,
                      const std::vector<CensusRow>& censuses,
                      const std::vector<SignifRow>& significance,
                      const std::vector<CentralityRow>& centralities,
                      const std::vector<TransRow>& transitions, int last_networks) {
    std::unordered_map<std::string, double> census_idx;
    std::set<int> census_ks;
    for (const auto& r : censuses) {
        census_idx[agg_key(r.cascade, r.network, r.k, r.pattern)] =
            static_cast<double>(r.count);
        census_ks.insert(r.k);
    }
    std::unordered_map<std::string, double> z_idx;
    std::set<int> z_ks;
    for (const auto& r : significance) {
        z_idx[agg_key(r.cascade, r.network, r.k, r.pattern)] = r.z;
        z_ks.insert(r.k);
    }
    std::unordered_map<std::string, std::array<double, 5>> cent_idx;
    for (const auto& r : centralities)
        cent_idx[r.cascade + '\x1f' + std::to_string(r.network)] = r.m;
    std::unordered_map<std::string, long long> trans_idx;
    for (const auto& r : transitions)
        trans_idx[agg_key(r.cascade, r.pair_index, 0, r.pattern4 + '|' + r.pattern5)] = r.count;

    auto emit_quartiles = [](std::ostream& o, std::vector<double>& vals) {
        std::sort(vals.begin(), vals.end());
        o << vals.size() << ',' << format_double(quantile_sorted(vals, 0.25)) << ','
          << format_double(quantile_sorted(vals, 0.5)) << ','
          << format_double(quantile_sorted(vals, 0.75)) << '\n';
    };
    auto anchor_net = [](const AnchorRow& a, bool inhib) {
        return inhib ? a.inhib_network : a.steep_network;
    };

    {
        std::ofstream out = open_output(dir / "aggregate_counts.csv");
        out << "anchor,offset,k,pattern,n,q1,median,q3\n";
        for (bool inhib : {true, false})
            for (int offset = 0; offset < last_networks; ++offset)
                for (int k : census_ks)
                    for (PatternId p : pattern_catalog(k)) {
                        std::string name = pattern_name(p);
                        std::vector<double> vals;
                        for (const auto& a : anchors) {
                            int net = anchor_net(a, inhib) - offset;
                            if (net < 2) continue;
                            auto it = census_idx.find(agg_key(a.id, net, k, name));
                            if (it != census_idx.end()) vals.push_back(it->second);
                        }
                        if (vals.empty()) continue;
                        out << (inhib ? "inhib" : "steep") << ',' << offset << ',' << k << ','
                            << name << ',';
                        emit_quartiles(out, vals);
                    }
    }
    {
        std::ofstream out = open_output(dir / "aggregate_significance.csv");
        out << "anchor,offset,k,pattern,n,q1,median,q3\n";
        for (int offset = 0; offset < last_networks; ++offset)
            for (int k : z_ks)
                for (PatternId p : pattern_catalog(k)) {
                    std::string name = pattern_name(p);
                    std::vector<double> vals;
                    for (const auto& a : anchors) {
                        int net = a.inhib_network - offset;
                        if (net < 2) continue;
                        auto it = z_idx.find(agg_key(a.id, net, k, name));
                        if (it != z_idx.end()) vals.push_back(it->second);
                    }
                    if (vals.empty()) continue;
                    out << "inhib," << offset << ',' << k << ',' << name << ',';
                    emit_quartiles(out, vals);
                }
    }
    {
        std::ofstream out = open_output(dir / "aggregate_centralities.csv");
        out << "anchor,offset,measure,n,q1,median,q3\n";
        for (int offset = 0; offset < last_networks; ++offset)
            for (std::size_t m = 0; m < kMeasures.size(); ++m) {
                std::vector<double> vals;
                for (const auto& a : anchors) {
                    int net = a.inhib_network - offset;
                    if (net < 2) continue;
                    auto it = cent_idx.find(a.id + '\x1f' + std::to_string(net));
                    if (it != cent_idx.end()) vals.push_back(it->second[m]);
                }
                if (vals.empty()) continue;
                out << "inhib," << offset << ',' << kMeasures[m] << ',';
                emit_quartiles(out, vals);
            }
    }
    {
        std::ofstream out = open_output(dir / "aggregate_transitions.csv");
        out << "anchor,offset,pattern4,pattern5,n,total\n";
        for (int offset = 0; offset < last_networks; ++offset)
            for (PatternId p4 : pattern_catalog(4))
                for (PatternId p5 : pattern_catalog(5)) {
                    std::string pk = pattern_name(p4) + '|' + pattern_name(p5);
                    long long n = 0, total = 0;
                    for (const auto& a : anchors) {
                        int pair = a.inhib_network - offset;
                        if (pair < 3) continue;
                        auto it = trans_idx.find(agg_key(a.id, pair, 0, pk));
                        if (it == trans_idx.end()) continue;
                        ++n;
                        total += it->second;
                    }
                    if (n == 0) continue;
                    out << "inhib," << offset << ',' << pattern_name(p4) << ','
                        << pattern_name(p5) << ',' << n << ',' << total << '\n';
                }
    }
}

}  // namespace

AnalyzeResult cmd_analyze(const RunConfig& raw) {
    RunConfig cfg = effective(raw);
    auto t0 = Clock::now();
    CorpusCache cache = load_cache(cfg.cache_dir);
    fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);

    AnalyzeResult res;
    res.total = cache.cascades.size();

    std::vector<std::size_t> kept;
    std::vector<std::string> type_skipped;
    for (std::size_t i = 0; i < cache.cascades.size(); ++i) {
        int t = static_cast<int>(cache.types[i]) + 1;
        if (std::find(cfg.cascade_types.begin(), cfg.cascade_types.end(), t) !=
            cfg.cascade_types.end())
            kept.push_back(i);
        else
            type_skipped.push_back(cache.cascades[i].id);
    }
    res.skipped_type = type_skipped.size();

    std::vector<CascadeOutcome> outcomes(kept.size());
    if (!kept.empty()) {
        unsigned hw = std::thread::hardware_concurrency();
        int n_threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(hw ? hw : 1);
        n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(kept.size())));
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next.fetch_add(1)) < kept.size();) {
                std::size_t idx = kept[i];
                try {
                    outcomes[i] = analyze_one(cache.cascades[idx], cache.types[idx],
                                              cache.diffusion, cfg, derive_seed(cfg.seed, i));
                } catch (const std::exception& e) {
                    outcomes[i] = CascadeOutcome{};
                    outcomes[i].id = cache.cascades[idx].id;
                    outcomes[i].detail = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // stitch per-cascade results back in corpus order
    std::vector<AnchorRow> anchors;
    std::vector<CensusRow> all_census;
    std::vector<SignifRow> all_signif;
    std::vector<CentralityRow> all_cent;
    std::vector<TransRow> all_trans;
    json skips = json::array(), failures = json::array();
    WindowingStats drops_total;
    double ms_life = 0, ms_census = 0, ms_signif = 0, ms_trans = 0, ms_cent = 0;

    std::ofstream life_out = open_output(out_dir / "lifecycle.csv");
    life_out << "cascade_id,type,participants,events,windows,steep_window,steep_fallback,"
                "t_steep,inhib_window,t_inhib,steep_network,inhib_network\n";
    std::ofstream net_out = open_output(out_dir / "networks.csv");
    net_out << "cascade_id,network_index,nodes,edges,cascade_edges,historical_edges\n";
    std::ofstream cen_out = open_output(out_dir / "censuses.csv");
    cen_out << "cascade_id,network_index,k,pattern,count\n";
    std::ofstream sig_out = open_output(out_dir / "significance.csv");
    sig_out << "cascade_id,network_index,k,pattern,input_count,mean,std,z,p,significant\n";
    std::ofstream trans_out = open_output(out_dir / "transitions.csv");
    trans_out << "cascade_id,pair_index,pattern4,pattern5,count\n";
    std::ofstream cent_out = open_output(out_dir / "centralities.csv");
    cent_out << "cascade_id,network_index";
    for (const char* m : kMeasures) cent_out << ',' << m;
    cent_out << '\n';

    for (const auto& o : outcomes) {
        ms_life += o.ms_lifecycle;
        ms_census += o.ms_census;
        ms_signif += o.ms_significance;
        ms_trans += o.ms_transitions;
        ms_cent += o.ms_centrality;
        drops_total.dropped_tail_participants += o.drops.dropped_tail_participants;
        drops_total.dropped_tail_events += o.drops.dropped_tail_events;
        drops_total.dropped_long_range_events += o.drops.dropped_long_range_events;
        switch (o.status) {
            case CascadeOutcome::Status::skipped_windowing:
                ++res.skipped_windowing;
                skips.push_back({{"cascade", o.id}, {"reason", "windowing"}});
                continue;
            case CascadeOutcome::Status::skipped_no_inhibition:
                ++res.skipped_no_inhibition;
                skips.push_back({{"cascade", o.id}, {"reason", "no_inhibition"}});
                continue;
            case CascadeOutcome::Status::failed:
                ++res.failed;
                failures.push_back({{"cascade", o.id}, {"error", o.detail}});
                continue;
            case CascadeOutcome::Status::analyzed:
                break;
        }
        ++res.analyzed;

        const LifecycleRow& l = o.life;
        life_out << l.cascade << ',' << to_string(l.type) << ',' << l.participants << ','
                 << l.events << ',' << l.q << ',' << l.steep_window << ','
                 << (l.steep_fallback ? 1 : 0) << ',' << format_double(l.t_steep) << ','
                 << l.inhib_window << ',' << format_double(l.t_inhib) << ',' << l.steep_network
                 << ',' << l.inhib_network << '\n';
        anchors.push_back({l.cascade, l.steep_network, l.inhib_network});

        for (const auto& r : o.networks)
            net_out << r.cascade << ',' << r.index << ',' << r.nodes << ',' << r.edges << ','
                    << r.cascade_edges << ',' << r.historical_edges << '\n';
        for (const auto& r : o.censuses)
            cen_out << r.cascade << ',' << r.network << ',' << r.k << ',' << r.pattern << ','
                    << r.count << '\n';
        for (const auto& r : o.significance)
            sig_out << r.cascade << ',' << r.network << ',' << r.k << ',' << r.pattern << ','
                    << r.input_count << ',' << format_double(r.mean) << ','
                    << format_double(r.stddev) << ',' << format_double(r.z) << ','
                    << format_double(r.p) << ',' << (r.significant ? 1 : 0) << '\n';
        for (const auto& r : o.transitions)
            trans_out << r.cascade << ',' << r.pair_index << ',' << r.pattern4 << ','
                      << r.pattern5 << ',' << r.count << '\n';
        for (const auto& r : o.centralities) {
            cent_out << r.cascade << ',' << r.network;
            for (double v : r.m) cent_out << ',' << format_double(v);
            cent_out << '\n';
        }

        all_census.insert(all_census.end(), o.censuses.begin(), o.censuses.end());
        all_signif.insert(all_signif.end(), o.significance.begin(), o.significance.end());
        all_cent.insert(all_cent.end(), o.centralities.begin(), o.centralities.end());
        all_trans.insert(all_trans.end(), o.transitions.begin(), o.transitions.end());
    }

    for (const auto& id : type_skipped) skips.push_back({{"cascade", id}, {"reason", "type"}});

    write_aggregates(out_dir, anchors, all_census, all_signif, all_cent, all_trans,
                     cfg.last_networks);

    write_manifest(
        out_dir, "analyze_manifest.json", "analyze", cfg,
        json{{"counts",
              {{"total", res.total},
               {"analyzed", res.analyzed},
               {"skipped_windowing", res.skipped_windowing},
               {"skipped_no_inhibition", res.skipped_no_inhibition},
               {"skipped_type", res.skipped_type},
               {"failed", res.failed}}},
             {"warnings",
              {{"dropped_tail_participants", drops_total.dropped_tail_participants},
               {"dropped_tail_events", drops_total.dropped_tail_events},
               {"dropped_long_range_events", drops_total.dropped_long_range_events}}},
             {"skips", skips},
             {"failures", failures},
             {"timings_ms",
              {{"total", ms_since(t0)},
               {"lifecycle", ms_life},
               {"census", ms_census},
               {"significance", ms_signif},
               {"transitions", ms_trans},
               {"centralities", ms_cent}}}});
    return res;
}

// ---------------------------------------------------------------- report

namespace {

// Strict readers for the bundle CSVs this tool itself wrote.
void expect_header(CsvReader& reader, std::vector<std::string>& f,
                   std::initializer_list<const char*> names) {
    if (!reader.next(f)) reader.fail("missing header");
    if (f.size() != names.size()) reader.fail("unexpected column count");
    std::size_t i = 0;
    for (const char* n : names)
        if (f[i++] != n) reader.fail(std::string("expected column '") + n + "'");
}

std::vector<AnchorRow> read_lifecycle(const fs::path& path) {
    std::ifstream in = open_input(path);
    CsvReader reader(in, path.string());
    std::vector<std::string> f;
    expect_header(reader, f,
                  {"cascade_id", "type", "participants", "events", "windows", "steep_window",
                   "steep_fallback", "t_steep", "inhib_window", "t_inhib", "steep_network",
                   "inhib_network"});
    std::vector<AnchorRow> rows;
    while (reader.next(f)) {
        if (f.size() != 12) reader.fail("expected 12 fields");
        rows.push_back({f[0], static_cast<int>(reader.parse_long(f[10], "steep_network")),
                        static_cast<int>(reader.parse_long(f[11], "inhib_network"))});
    }
    return rows;
}

std::vector<CensusRow> read_censuses(const fs::path& path) {
    std::ifstream in = open_input(path);
    CsvReader reader(in, path.string());
    std::vector<std::string> f;
    expect_header(reader, f, {"cascade_id", "network_index", "k", "pattern", "count"});
    std::vector<CensusRow> rows;
    while (reader.next(f)) {
        if (f.size() != 5) reader.fail("expected 5 fields");
        rows.push_back({f[0], static_cast<int>(reader.parse_long(f[1], "network_index")),
                        static_cast<int>(reader.parse_long(f[2], "k")), f[3],
                        reader.parse_long(f[4], "count")});
    }
    return rows;
}

std::vector<SignifRow> read_significance(const fs::path& path) {
    std::ifstream in = open_input(path);
    CsvReader reader(in, path.string());
    std::vector<std::string> f;
    expect_header(reader, f, {"cascade_id", "network_index", "k", "pattern", "input_count",
                              "mean", "std", "z", "p", "significant"});
    std::vector<SignifRow> rows;
    while (reader.next(f)) {
        if (f.size() != 10) reader.fail("expected 10 fields");
        SignifRow r;
        r.cascade = f[0];
        r.network = static_cast<int>(reader.parse_long(f[1], "network_index"));
        r.k = static_cast<int>(reader.parse_long(f[2], "k"));
        r.pattern = f[3];
        r.input_count = reader.parse_long(f[4], "input_count");
        r.mean = reader.parse_double(f[5], "mean");
        r.stddev = reader.parse_double(f[6], "std");
        r.z = reader.parse_double(f[7], "z");
        r.p = reader.parse_double(f[8], "p");
        r.significant = reader.parse_long(f[9], "significant") != 0;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<CentralityRow> read_centralities(const fs::path& path) {
    std::ifstream in = open_input(path);
    CsvReader reader(in, path.string());
    std::vector<std::string> f;
    expect_header(reader, f, {"cascade_id", "network_index", "degree", "degree_entropy",
                              "clustering", "pagerank", "betweenness"});
    std::vector<CentralityRow> rows;
    while (reader.next(f)) {
        if (f.size() != 7) reader.fail("expected 7 fields");
        CentralityRow r;
        r.cascade = f[0];
        r.network = static_cast<int>(reader.parse_long(f[1], "network_index"));
        for (std::size_t m = 0; m < 5; ++m)
            r.m[m] = reader.parse_double(f[2 + m], kMeasures[m]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<TransRow> read_transitions(const fs::path& path) {
    std::ifstream in = open_input(path);
    CsvReader reader(in, path.string());
    std::vector<std::string> f;
    expect_header(reader, f, {"cascade_id", "pair_index", "pattern4", "pattern5", "count"});
    std::vector<TransRow> rows;
    while (reader.next(f)) {
        if (f.size() != 5) reader.fail("expected 5 fields");
        rows.push_back({f[0], static_cast<int>(reader.parse_long(f[1], "pair_index")), f[2],
                        f[3], reader.parse_long(f[4], "count")});
    }
    return rows;
}

std::vector<NetworkRow> read_networks(const fs::path& path) {
    std::ifstream in = open_input(path);
    CsvReader reader(in, path.string());
    std::vector<std::string> f;
    expect_header(reader, f, {"cascade_id", "network_index", "nodes", "edges", "cascade_edges",
                              "historical_edges"});
    std::vector<NetworkRow> rows;
    while (reader.next(f)) {
        if (f.size() != 6) reader.fail("expected 6 fields");
        rows.push_back({f[0], static_cast<int>(reader.parse_long(f[1], "network_index")),
                        static_cast<int>(reader.parse_long(f[2], "nodes")),
                        static_cast<int>(reader.parse_long(f[3], "edges")),
                        static_cast<int>(reader.parse_long(f[4], "cascade_edges")),
                        static_cast<int>(reader.parse_long(f[5], "historical_edges"))});
    }
    return rows;
}

}  // namespace

void cmd_report(const RunConfig& raw) {
    RunConfig cfg = effective(raw);
    auto t0 = Clock::now();
    fs::path dir(cfg.out_dir);
    auto anchors = read_lifecycle(dir / "lifecycle.csv");
    auto censuses = read_censuses(dir / "censuses.csv");
    auto significance = read_significance(dir / "significance.csv");
    auto centralities = read_centralities(dir / "centralities.csv");
    auto transitions = read_transitions(dir / "transitions.csv");
    write_aggregates(dir, anchors, censuses, significance, centralities, transitions,
                     cfg.last_networks);
    write_manifest(dir, "report_manifest.json", "report", cfg,
                   json{{"counts",
                         {{"cascades", anchors.size()},
                          {"census_rows", censuses.size()},
                          {"significance_rows", significance.size()},
                          {"centrality_rows", centralities.size()},
                          {"transition_rows", transitions.size()}}},
                        {"timings_ms", {{"total", ms_since(t0)}}}});
}

// ------------------------------------------------------------- calibrate

CalibrationResult cmd_calibrate(const RunConfig& raw) {
    RunConfig cfg = effective(raw);
    auto t0 = Clock::now();
    if (cfg.labels_path.empty()) throw ConfigError("calibrate needs io.labels");
    CorpusCache cache = load_cache(cfg.cache_dir);

    std::ifstream in = open_input(cfg.labels_path);
    CsvReader reader(in, cfg.labels_path);
    std::vector<std::string> f;
    std::map<std::string, double> labels;
    bool first = true;
    while (reader.next(f)) {
        if (f.size() != 2) reader.fail("expected 2 fields cascade_id,t_inhib");
        if (first) {
            first = false;
            if (f[0] == "cascade_id") continue;
        }
        labels[f[0]] = reader.parse_double(f[1], "t_inhib");
    }

    std::vector<std::pair<const Cascade*, double>> labeled;
    for (const Cascade& c : cache.cascades) {
        auto it = labels.find(c.id);
        if (it != labels.end()) labeled.emplace_back(&c, it->second);
    }
    std::size_t unmatched = labels.size() - labeled.size();

    CalibrationConfig cal;
    cal.window_size = cfg.window_size;
    cal.hawkes = cfg.hawkes;
    CalibrationResult res = calibrate_thresholds(labeled, cal);

    fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    {
        std::ofstream out = open_output(out_dir / "thresholds.json");
        out << json{{"dtg_minutes", res.best.dtg_minutes},
                    {"growth_ratio", res.best.growth_ratio},
                    {"mean_window_error", res.mean_window_error},
                    {"evaluated", res.evaluated}}
                   .dump(2)
            << '\n';
    }
    write_manifest(out_dir, "calibrate_manifest.json", "calibrate", cfg,
                   json{{"counts",
                         {{"labels", labels.size()},
                          {"matched", labeled.size()},
                          {"unmatched", unmatched},
                          {"evaluated", res.evaluated}}},
                        {"timings_ms", {{"total", ms_since(t0)}}}});
    return res;
}

// --------------------------------------------------------------- predict

namespace {

struct Bundle {
    std::vector<AnchorRow> anchors;
    std::unordered_map<std::string, double> target;        // id -> |E| at the inhib network
    std::unordered_map<std::string, double> mc5;           // id|net|pattern -> count
    std::unordered_map<std::string, double> mtsum;         // id|pair|pattern5 -> column sum
    std::unordered_map<std::string, std::array<double, 5>> cent;  // id|net
};

std::string key2(const std::string& id, int net) { return id + '\x1f' + std::to_string(net); }

std::string key3(const std::string& id, int net, const std::string& pattern) {
    return id + '\x1f' + std::to_string(net) + '\x1f' + pattern;
}

Bundle load_bundle(const fs::path& dir) {
    Bundle b;
    b.anchors = read_lifecycle(dir / "lifecycle.csv");

    std::unordered_map<std::string, int> inhib_of;
    for (const auto& a : b.anchors) inhib_of[a.id] = a.inhib_network;
    bool any_k5 = false;
    for (const auto& r : read_networks(dir / "networks.csv")) {
        auto it = inhib_of.find(r.cascade);
        if (it != inhib_of.end() && r.index == it->second)
            b.target[r.cascade] = static_cast<double>(r.edges);
    }
    for (const auto& r : read_censuses(dir / "censuses.csv")) {
        if (r.k != 5) continue;
        any_k5 = true;
        b.mc5[key3(r.cascade, r.network, r.pattern)] = static_cast<double>(r.count);
    }
    if (!b.anchors.empty() && !any_k5)
        throw DataError((dir / "censuses.csv").string() + ": no 5-node census rows");
    for (const auto& r : read_transitions(dir / "transitions.csv"))
        b.mtsum[key3(r.cascade, r.pair_index, r.pattern5)] += static_cast<double>(r.count);
    for (const auto& r : read_centralities(dir / "centralities.csv"))
        b.cent[key2(r.cascade, r.network)] = r.m;
    return b;
}

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

enum class FeatureSet { mc, mt, all };

const char* feature_set_name(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::mc: return "mc";
        case FeatureSet::mt: return "mt";
        case FeatureSet::all: return "all";
    }
    return "?";
}

// MC and MT values of one pattern on the interval pair [inhib-st, inhib-st-1].
// MT for network i sums the transition column into the pattern over the pair
// (i-1, i); pairs outside the computed [max(steep, inhib-last+1)+1, inhib]
// range are missing, not zero.
void push_pattern_features(std::vector<double>& row, const Bundle& b, const AnchorRow& a,
                           const std::string& pattern, int st, FeatureSet fs,
                           int last_networks) {
    int nets[2] = {a.inhib_network - st, a.inhib_network - st - 1};
    int trans_lo = std::max(a.steep_network, std::max(2, a.inhib_network - (last_networks - 1)));
    auto mc_at = [&](int net) {
        if (net < 2) return kMissing;
        auto it = b.mc5.find(key3(a.id, net, pattern));
        return it == b.mc5.end() ? kMissing : it->second;
    };
    auto mt_at = [&](int net) {
        if (net < trans_lo + 1 || net > a.inhib_network) return kMissing;
        auto it = b.mtsum.find(key3(a.id, net, pattern));
        return it == b.mtsum.end() ? 0.0 : it->second;
    };
    for (int net : nets) {
        if (fs != FeatureSet::mt) row.push_back(mc_at(net));
        if (fs != FeatureSet::mc) row.push_back(mt_at(net));
    }
}

FeatureMatrix build_motif_matrix(const Bundle& b, const std::vector<std::string>& patterns,
                                 int st, FeatureSet fs, int last_networks) {
    FeatureMatrix m;
    for (const std::string& p : patterns)
        for (const char* net : {"a", "b"}) {
            if (fs != FeatureSet::mt) m.columns.push_back(p + ".mc." + net);
            if (fs != FeatureSet::mc) m.columns.push_back(p + ".mt." + net);
        }
    for (const auto& a : b.anchors) {
        std::vector<double> row;
        row.reserve(m.columns.size());
        for (const std::string& p : patterns)
            push_pattern_features(row, b, a, p, st, fs, last_networks);
        m.rows.push_back(std::move(row));
        m.row_ids.push_back(a.id);
        m.targets.push_back(b.target.at(a.id));
    }
    return m;
}

FeatureMatrix build_centrality_matrix(const Bundle& b, const std::vector<std::size_t>& measures,
                                      int st) {
    FeatureMatrix m;
    for (std::size_t mi : measures)
        for (const char* net : {"a", "b"})
            m.columns.push_back(std::string(kMeasures[mi]) + '.' + net);
    for (const auto& a : b.anchors) {
        std::vector<double> row;
        int nets[2] = {a.inhib_network - st, a.inhib_network - st - 1};
        for (std::size_t mi : measures)
            for (int net : nets) {
                auto it = net < 2 ? b.cent.end() : b.cent.find(key2(a.id, net));
                row.push_back(it == b.cent.end() ? kMissing : it->second[mi]);
            }
        m.rows.push_back(std::move(row));
        m.row_ids.push_back(a.id);
        m.targets.push_back(b.target.at(a.id));
    }
    return m;
}

}  // namespace

PredictResult cmd_predict(const RunConfig& raw) {
    RunConfig cfg = effective(raw);
    if (!cfg.transitions_enabled)
        throw ConfigError("prediction needs the transition features; enable transitions");
    auto t0 = Clock::now();
    fs::path dir(cfg.out_dir);
    Bundle bundle = load_bundle(dir);

    PredictResult res;
    res.rows = bundle.anchors.size();

    CrossValidationConfig cv;
    cv.folds = cfg.folds;
    cv.eta_grid = cfg.eta_grid;
    cv.penalty = cfg.penalty;
    cv.poly_order = cfg.poly_order;
    cv.seed = derive_seed(cfg.seed, 0xCF01DULL);

    const auto& cat5 = pattern_catalog(5);
    std::vector<std::string> acyclic, cyclic;
    for (PatternId p : cat5)
        (pattern_edge_count(p) == 4 ? acyclic : cyclic).push_back(pattern_name(p));

    std::ofstream table = open_output(dir / "mae_table.csv");
    table << "st,model,feature_set,n_features,mae,mean_train_r2\n";
    json by_st = json::object();

    constexpr FeatureSet kSets[] = {FeatureSet::mc, FeatureSet::mt, FeatureSet::all};
    for (int st : cfg.interval_starts) {
        json models = json::array();
        auto run_model = [&](const std::string& name, const char* fs_name,
                             const FeatureMatrix& m) {
            EvaluationReport rep = cross_validate(m, cv);
            table << st << ',' << name << ',' << fs_name << ',' << m.columns.size() << ','
                  << format_double(rep.mae) << ',' << format_double(rep.mean_train_r2) << '\n';
            json folds = json::array();
            for (const auto& fr : rep.folds)
                folds.push_back({{"mae", fr.mae},
                                 {"train_r2", fr.train_r2},
                                 {"eta", fr.eta},
                                 {"test_rows", fr.test_rows}});
            models.push_back({{"model", name},
                              {"feature_set", fs_name},
                              {"n_features", m.columns.size()},
                              {"mae", rep.mae},
                              {"mean_train_r2", rep.mean_train_r2},
                              {"imputed_cells", rep.imputed_cells},
                              {"folds", std::move(folds)}});
            res.mae[{st, name, fs_name}] = rep.mae;
            ++res.models;
        };

        for (PatternId p : cat5) {
            std::string name = pattern_name(p);
            for (FeatureSet fs : kSets)
                run_model(name, feature_set_name(fs),
                          build_motif_matrix(bundle, {name}, st, fs, cfg.last_networks));
        }

        // the three cyclic patterns whose individual models predict best
        std::vector<std::string> loop3(cyclic);
        std::stable_sort(loop3.begin(), loop3.end(),
                         [&](const std::string& a, const std::string& b) {
                             return res.mae.at({st, a, "all"}) < res.mae.at({st, b, "all"});
                         });
        loop3.resize(std::min<std::size_t>(3, loop3.size()));
        res.loop_patterns[st] = loop3;

        for (FeatureSet fs : kSets) {
            run_model("combo_acyclic", feature_set_name(fs),
                      build_motif_matrix(bundle, acyclic, st, fs, cfg.last_networks));
            run_model("combo_loop", feature_set_name(fs),
                      build_motif_matrix(bundle, loop3, st, fs, cfg.last_networks));
        }

        for (std::size_t mi = 0; mi < kMeasures.size(); ++mi)
            run_model(std::string("cent_") + kMeasures[mi], "centrality",
                      build_centrality_matrix(bundle, {mi}, st));
        run_model("combo_centrality", "centrality",
                  build_centrality_matrix(bundle, {0, 1, 2, 3, 4}, st));

        json entry{{"models", std::move(models)}, {"loop_patterns", loop3}};
        by_st[std::to_string(st)] = std::move(entry);
    }

    {
        std::ofstream out = open_output(dir / "prediction_report.json");
        out << json{{"folds", cfg.folds},
                    {"eta_grid", cfg.eta_grid},
                    {"penalty", penalty_name(cfg.penalty)},
                    {"poly_order", cfg.poly_order},
                    {"rows", res.rows},
                    {"by_st", std::move(by_st)}}
                   .dump(2)
            << '\n';
    }

    write_manifest(dir, "predict_manifest.json", "predict", cfg,
                   json{{"counts", {{"models", res.models}, {"rows", res.rows}}},
                        {"timings_ms", {{"total", ms_since(t0)}}}});
    return res;
}

}  // namespace casmo
