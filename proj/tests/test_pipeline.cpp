#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "casmo/pipeline.hpp"

using namespace casmo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("casmo_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  fs::path operator/(const std::string& leaf) const { return path / leaf; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::vector<std::string>> rows_of(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ',')) f.push_back(part);
    rows.push_back(std::move(f));
  }
  return rows;
}

// small end-to-end fixture: synthetic corpus -> cache -> analyzed bundle
RunConfig bundle_config(const TempDir& dir) {
  RunConfig cfg;
  cfg.out_dir = (dir / "run").string();
  cfg.cache_dir = (dir / "run" / "cache").string();
  cfg.seed = 11;
  cfg.window_size = 10;
  cfg.min_participants = 50;
  cfg.last_networks = 5;
  cfg.ensemble_enabled = false;
  cfg.folds = 4;
  cfg.interval_starts = {1};
  cfg.synth.n_cascades = 8;
  cfg.synth.base.n_participants = 120;
  return cfg;
}

AnalyzeResult make_bundle(RunConfig& cfg, const TempDir& dir) {
  cfg.cascades_path = (dir / "corpus" / "cascades.csv").string();
  cfg.edges_path = (dir / "corpus" / "edges.csv").string();
  cfg.labels_path = (dir / "corpus" / "labels.csv").string();
  RunConfig synth_cfg = cfg;
  synth_cfg.out_dir = (dir / "corpus").string();
  cmd_synth(synth_cfg);
  cmd_ingest(cfg);
  return cmd_analyze(cfg);
}

}  // namespace

TEST_CASE("config files parse sections, comments and duplicates") {
  TempDir dir("cfgfile");
  spit(dir / "a.ini",
       "# full-line comment\n"
       "top = 1\n"
       "[run]\n"
       "seed = 5\n"
       "seed = 9\n"
       "\n"
       "[windows]\n"
       "  size = 12  \n");
  auto kv = load_config_file((dir / "a.ini").string());
  CHECK(kv.at("top") == "1");
  CHECK(kv.at("run.seed") == "9");  // last duplicate wins
  CHECK(kv.at("windows.size") == "12");
  CHECK(kv.size() == 3);

  spit(dir / "b.ini", "[run\nseed = 1\n");
  CHECK_THROWS_AS(load_config_file((dir / "b.ini").string()), ConfigError);
  spit(dir / "c.ini", "just a stray line\n");
  CHECK_THROWS_AS(load_config_file((dir / "c.ini").string()), ConfigError);
  CHECK_THROWS_AS(load_config_file((dir / "missing.ini").string()), ParseError);
}

TEST_CASE("config keys land in the right fields and junk is rejected") {
  RunConfig cfg;
  apply_config(cfg, {{"io.out", "elsewhere"},
                     {"run.seed", "99"},
                     {"run.cascade_types", "1,3"},
                     {"windows.size", "25"},
                     {"hawkes.beta", "0.25"},
                     {"hawkes.weighting", "degree"},
                     {"lifecycle.dtg_minutes", "120"},
                     {"census.ks", "3,4"},
                     {"ensemble.enabled", "false"},
                     {"transitions.min4.M4_2", "3"},
                     {"prediction.penalty", "l2"},
                     {"synth.shape", "type2"}});
  CHECK(cfg.out_dir == "elsewhere");
  CHECK(cfg.seed == 99);
  CHECK(cfg.cascade_types == std::vector<int>{1, 3});
  CHECK(cfg.window_size == 25);
  CHECK(cfg.hawkes.beta == 0.25);
  CHECK(cfg.hawkes.weighting == UserWeighting::degree_weighted);
  CHECK(cfg.thresholds.dtg_minutes == 120);
  CHECK(cfg.census_ks == std::vector<int>{3, 4});
  CHECK(!cfg.ensemble_enabled);
  CHECK(cfg.transitions.min_count4.at(pattern_from_name("M4_2")) == 3);
  CHECK(cfg.penalty == Penalty::l2);
  CHECK(cfg.synth.base.shape == CascadeType::type2);

  CHECK_THROWS_AS(apply_config(cfg, {{"run.bogus", "1"}}), ConfigError);
  CHECK_THROWS_AS(apply_config(cfg, {{"run.seed", "not_a_number"}}), ConfigError);
  CHECK_THROWS_AS(apply_config(cfg, {{"hawkes.weighting", "inverse"}}), ConfigError);
  CHECK_THROWS_AS(apply_config(cfg, {{"transitions.min4.M9_1", "1"}}), ConfigError);
  CHECK_THROWS_AS(apply_config(cfg, {{"synth.type_weights", "1,2"}}), ConfigError);
}

TEST_CASE("the corpus cache round-trips and rejects damage") {
  TempDir dir("cache");
  CorpusCache cache;
  UserId a = cache.ids.intern("alice");
  UserId b = cache.ids.intern("bob");
  UserId c = cache.ids.intern("carol");
  Cascade casc;
  casc.id = "c1";
  casc.events = {{a, b, 0.0}, {b, c, 3.5}};
  normalize_cascade(casc);
  cache.cascades.push_back(casc);
  cache.types.push_back(CascadeType::type2);
  cache.diffusion.add_edge(a, c);

  save_cache(cache, dir.str());
  CorpusCache back = load_cache(dir.str());
  REQUIRE(back.cascades.size() == 1);
  CHECK(back.ids.name(0) == "alice");
  CHECK(back.ids.size() == 3);
  CHECK(back.cascades[0].id == "c1");
  CHECK(back.cascades[0].events == casc.events);
  CHECK(back.types[0] == CascadeType::type2);
  CHECK(back.diffusion.has_edge(a, c));
  CHECK(back.diffusion.edge_count() == 1);

  std::string bytes = slurp(dir / "corpus.bin");
  spit(dir / "corpus.bin", bytes.substr(0, bytes.size() - 4));
  CHECK_THROWS_AS(load_cache(dir.str()), DataError);
  spit(dir / "corpus.bin", "not a cache at all" + bytes);
  CHECK_THROWS_AS(load_cache(dir.str()), DataError);
  fs::remove(dir / "corpus.bin");
  CHECK_THROWS_AS(load_cache(dir.str()), ParseError);
}

TEST_CASE("synthesis, ingest and analysis produce a consistent bundle") {
  TempDir dir("bundle");
  RunConfig cfg = bundle_config(dir);
  AnalyzeResult res = make_bundle(cfg, dir);

  for (const char* f : {"cascades.csv", "edges.csv", "labels.csv", "ground_truth.json",
                        "synth_manifest.json"})
    CHECK(fs::exists(dir / "corpus" / f));

  // same bytes in, same digest out
  IngestResult i1 = cmd_ingest(cfg);
  IngestResult i2 = cmd_ingest(cfg);
  CHECK(i1.kept == 8);
  CHECK(i1.digest.size() == 16);
  CHECK(i1.digest == i2.digest);

  CHECK(res.total == 8);
  CHECK(res.analyzed + res.skipped_windowing + res.skipped_no_inhibition + res.skipped_type +
            res.failed ==
        res.total);
  CHECK(res.failed == 0);
  REQUIRE(res.analyzed > 0);

  fs::path run = dir / "run";
  auto life = rows_of(run / "lifecycle.csv");
  CHECK(life.size() == res.analyzed);
  std::size_t networks_expected = 0;
  for (const auto& r : life) {
    REQUIRE(r.size() == 12);
    networks_expected += std::stoul(r[4]) - 1;  // ordinals 2..Q
    CHECK(std::stoi(r[10]) <= std::stoi(r[11]));
  }
  CHECK(rows_of(run / "networks.csv").size() == networks_expected);

  // dense census rows: full catalog per covered (cascade, network, k)
  auto census = rows_of(run / "censuses.csv");
  std::set<std::pair<std::string, std::string>> covered;
  std::size_t per_group = pattern_catalog(3).size() + pattern_catalog(4).size() +
                          pattern_catalog(5).size();
  for (const auto& r : census) covered.insert({r[0], r[1]});
  CHECK(census.size() == covered.size() * per_group);

  CHECK(fs::exists(run / "analyze_manifest.json"));
  CHECK(slurp(run / "analyze_manifest.json").find("\"command\": \"analyze\"") !=
        std::string::npos);
}

TEST_CASE("reruns and rebuilt aggregates are byte-identical") {
  TempDir dir("determinism");
  RunConfig cfg = bundle_config(dir);
  cfg.ensemble_enabled = true;  // cover the null model path
  cfg.ensemble_size = 5;
  AnalyzeResult res = make_bundle(cfg, dir);
  REQUIRE(res.analyzed > 0);

  const char* files[] = {"lifecycle.csv",    "networks.csv",
                         "censuses.csv",     "significance.csv",
                         "transitions.csv",  "centralities.csv",
                         "aggregate_counts.csv", "aggregate_significance.csv",
                         "aggregate_centralities.csv", "aggregate_transitions.csv"};

  std::map<std::string, std::string> first;
  for (const char* f : files) first[f] = slurp(dir / "run" / f);
  CHECK(rows_of(dir / "run" / "significance.csv").size() > 0);

  RunConfig second = cfg;
  second.out_dir = (dir / "run_b").string();
  second.threads = 1;  // thread count must not leak into results
  cmd_analyze(second);
  for (const char* f : files) CHECK(slurp(dir / "run_b" / f) == first[f]);

  cmd_report(cfg);  // recompute aggregates from the per-cascade csvs
  for (const char* f : files) CHECK(slurp(dir / "run" / f) == first[f]);
}

TEST_CASE("calibration recovers thresholds that reproduce the labels") {
  TempDir dir("calibrate");
  RunConfig cfg = bundle_config(dir);
  make_bundle(cfg, dir);

  CalibrationResult res = cmd_calibrate(cfg);
  CHECK(res.evaluated > 0);
  CHECK(res.mean_window_error == 0.0);  // labels came from an on-grid setting
  CHECK(std::fmod(res.best.dtg_minutes, 60.0) == 0.0);
  CHECK(fs::exists(dir / "run" / "thresholds.json"));

  RunConfig no_labels = cfg;
  no_labels.labels_path.clear();
  CHECK_THROWS_AS(cmd_calibrate(no_labels), ConfigError);
}

TEST_CASE("prediction sweeps the model grid deterministically") {
  TempDir dir("predict");
  RunConfig cfg = bundle_config(dir);
  AnalyzeResult res = make_bundle(cfg, dir);
  REQUIRE(res.analyzed >= 8);  // every cascade must survive for a stable grid

  PredictResult pred = cmd_predict(cfg);
  // per interval start: 21 patterns x 3 sets, 2 combos x 3 sets, 5 + 1 centrality
  CHECK(pred.models == 21 * 3 + 6 + 6);
  CHECK(pred.rows == res.analyzed);
  auto table = rows_of(dir / "run" / "mae_table.csv");
  CHECK(table.size() == pred.models);
  for (const auto& r : table) {
    REQUIRE(r.size() == 6);
    double mae = std::stod(r[4]);
    CHECK(mae >= 0.0);
    CHECK(std::isfinite(mae));
  }
  REQUIRE(pred.loop_patterns.at(1).size() == 3);
  for (const auto& name : pred.loop_patterns.at(1))
    CHECK(pattern_edge_count(pattern_from_name(name)) > 4);  // cyclic 5-node patterns

  std::string first = slurp(dir / "run" / "mae_table.csv");
  cmd_predict(cfg);
  CHECK(slurp(dir / "run" / "mae_table.csv") == first);

  RunConfig no_trans = cfg;
  no_trans.transitions_enabled = false;
  CHECK_THROWS_AS(cmd_predict(no_trans), ConfigError);
}
