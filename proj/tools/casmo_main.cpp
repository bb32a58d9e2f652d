#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "casmo/pipeline.hpp"

namespace {

struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
};

// Every flag writes into the same key space as the config file, so one
// parser validates both. Flags win over the file.
constexpr FlagSpec kFlags[] = {
    {"--cascades", "io.cascades", "reshare log csv: cascade_id,source,target,time"},
    {"--edges", "io.edges", "historical diffusion edges csv: u,v"},
    {"--ratings", "io.ratings", "ratings csv: user,item,time_hours (alternative input)"},
    {"--labels", "io.labels", "calibration labels csv: cascade_id,t_inhib"},
    {"--cache", "io.cache", "corpus cache directory (default <out>/cache)"},
    {"--out", "io.out", "output directory"},
    {"--corating-hours", "io.corating_window_hours", "co-rating window in hours"},
    {"--seed", "run.seed", "master seed"},
    {"--threads", "run.threads", "worker threads, 0 = hardware count"},
    {"--tolerance", "run.failure_tolerance", "acceptable per-cascade failure fraction"},
    {"--types", "run.cascade_types", "cascade types to analyze, e.g. 1,2"},
    {"--window", "windows.size", "participants per window"},
    {"--min-participants", "windows.min_participants", "drop smaller cascades at ingest"},
    {"--mu", "hawkes.mu", "background intensity"},
    {"--alpha", "hawkes.alpha", "excitation gain"},
    {"--beta", "hawkes.beta", "excitation decay per minute"},
    {"--weighting", "hawkes.weighting", "event weighting: uniform or degree"},
    {"--dtg", "lifecycle.dtg_minutes", "minimum time past the steep point"},
    {"--growth-ratio", "lifecycle.growth_ratio", "minimum size ratio against the steep point"},
    {"--ks", "census.ks", "census sizes, e.g. 3,4,5"},
    {"--last", "census.last_networks", "how many networks back from each anchor"},
    {"--ensemble-size", "ensemble.size", "null model replicas per network"},
    {"--switches", "ensemble.switches_per_edge", "edge switch attempts per edge"},
    {"--starts", "prediction.interval_starts", "interval starts, e.g. 1,3,5,7,9"},
    {"--eta-grid", "prediction.eta_grid", "regularization grid"},
    {"--penalty", "prediction.penalty", "l1 or l2"},
    {"--folds", "prediction.folds", "cross-validation folds"},
    {"--poly", "prediction.poly_order", "1 linear, 2 quadratic expansion"},
    {"--n-cascades", "synth.n_cascades", "synthetic corpus size"},
    {"--participants", "synth.participants", "participants per synthetic cascade"},
    {"--plant-pattern", "synth.plant_pattern", "pattern to plant, e.g. M5_14"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reshare cascade lifecycle and motif pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key = value file applied before flags");

    std::map<std::string, std::string> overrides;
    for (const FlagSpec& f : kFlags)
        app.add_option_function<std::string>(
            f.flag, [&overrides, key = f.key](const std::string& v) { overrides[key] = v; },
            f.help);
    app.add_flag_callback(
        "--no-ensemble", [&overrides] { overrides["ensemble.enabled"] = "false"; },
        "skip the null model comparison");
    app.add_flag_callback(
        "--no-transitions", [&overrides] { overrides["transitions.enabled"] = "false"; },
        "skip the 4-to-5 node transition pass");
    app.add_flag_callback("--plant", [&overrides] { overrides["synth.plant"] = "true"; },
                          "plant a known pattern into the synthetic corpus");

    CLI::App* c_ingest = app.add_subcommand("ingest", "parse, filter, classify and cache");
    CLI::App* c_synth = app.add_subcommand("synth", "generate a labeled synthetic corpus");
    CLI::App* c_analyze =
        app.add_subcommand("analyze", "lifecycle, censuses, significance and transitions");
    CLI::App* c_calibrate =
        app.add_subcommand("calibrate", "grid-search inhibition thresholds against labels");
    CLI::App* c_predict = app.add_subcommand("predict", "cross-validated edge count models");
    CLI::App* c_report = app.add_subcommand("report", "rebuild aggregates from bundle csvs");
    for (CLI::App* sub : {c_ingest, c_synth, c_analyze, c_calibrate, c_predict, c_report})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        casmo::RunConfig cfg;
        if (!config_path.empty()) casmo::apply_config(cfg, casmo::load_config_file(config_path));
        casmo::apply_config(cfg, overrides);

        if (c_ingest->parsed()) {
            auto r = casmo::cmd_ingest(cfg);
            std::cout << "ingest: kept " << r.kept << " of " << r.parsed << " cascades, cache "
                      << r.cache_dir << ", digest " << r.digest << '\n';
        } else if (c_synth->parsed()) {
            auto r = casmo::cmd_synth(cfg);
            std::cout << "synth: " << r.n_cascades << " cascades, " << r.n_labeled
                      << " labeled, wrote " << r.out_dir << '\n';
        } else if (c_analyze->parsed()) {
            auto r = casmo::cmd_analyze(cfg);
            std::cout << "analyze: " << r.analyzed << " of " << r.total << " cascades ("
                      << r.skipped_windowing << " too small, " << r.skipped_no_inhibition
                      << " without inhibition, " << r.skipped_type << " filtered, " << r.failed
                      << " failed)\n";
            if (!r.within_tolerance(cfg.failure_tolerance)) {
                std::cerr << "analyze: failure fraction exceeds tolerance\n";
                return 1;
            }
        } else if (c_calibrate->parsed()) {
            auto r = casmo::cmd_calibrate(cfg);
            std::cout << "calibrate: dtg " << casmo::format_double(r.best.dtg_minutes)
                      << " min, ratio " << casmo::format_double(r.best.growth_ratio)
                      << ", mean window error " << casmo::format_double(r.mean_window_error)
                      << " over " << r.evaluated << " cascades\n";
        } else if (c_predict->parsed()) {
            auto r = casmo::cmd_predict(cfg);
            std::cout << "predict: " << r.models << " models over " << r.rows << " cascades\n";
        } else if (c_report->parsed()) {
            casmo::cmd_report(cfg);
            std::cout << "report: aggregates rebuilt in " << cfg.out_dir << '\n';
        }
    } catch (const casmo::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const casmo::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const casmo::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
