#include <doctest.h>

#include <cmath>
#include <random>

#include "casmo/lifecycle.hpp"
#include "casmo/synth.hpp"
#include "oracles.hpp"

using namespace casmo;

namespace {

Cascade cascade_at(std::initializer_list<double> times) {
  Cascade c;
  c.id = "t";
  UserId next = 1;
  for (double t : times) {
    c.events.push_back(ReshareEvent{0, next++, t});
  }
  normalize_cascade(c);
  return c;
}

}  // namespace

TEST_CASE("intensity recursion matches the closed form on two events") {
  Cascade c = cascade_at({0.0, std::log(2.0)});
  HawkesConfig cfg;  // mu 0, alpha 1, beta 1
  auto lam = hawkes_intensity(c, cfg);
  REQUIRE(lam.size() == 2);
  CHECK(lam[0] == 0.0);
  CHECK(lam[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("recursion agrees with the quadratic sum") {
  Rng rng(13);
  std::uniform_real_distribution<double> gap(0.0, 30.0);
  Cascade c;
  c.id = "r";
  double t = 0.0;
  for (int i = 0; i < 400; ++i) {
    t += gap(rng);
    if (i % 17 == 5) t = c.events.empty() ? t : c.events.back().time_min;  // exact tie
    c.events.push_back(ReshareEvent{static_cast<UserId>(i % 7), static_cast<UserId>(100 + i), t});
  }
  normalize_cascade(c);

  HawkesConfig cfg;
  cfg.mu = 0.3;
  cfg.alpha = 0.8;
  cfg.beta = 0.05;
  auto fast = hawkes_intensity(c, cfg);
  auto slow = oracle::hawkes_quadratic(c, cfg, nullptr);
  REQUIRE(fast.size() == slow.size());
  for (std::size_t i = 0; i < fast.size(); ++i)
    CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
}

TEST_CASE("tied events do not excite each other") {
  Cascade c = cascade_at({0.0, 0.0, 0.0});
  HawkesConfig cfg;
  cfg.mu = 2.0;
  auto lam = hawkes_intensity(c, cfg);
  for (double v : lam) CHECK(v == 2.0);
}

TEST_CASE("degree weighting multiplies each source's kick") {
  Cascade c;
  c.id = "d";
  c.events.push_back(ReshareEvent{7, 8, 0.0});
  c.events.push_back(ReshareEvent{8, 9, 1.0});
  normalize_cascade(c);
  DiffusionNetwork diff;
  diff.add_edge(7, 1);
  diff.add_edge(7, 2);
  diff.add_edge(7, 3);  // degree(7) = 3
  HawkesConfig cfg;
  cfg.weighting = UserWeighting::degree_weighted;
  auto lam = hawkes_intensity(c, cfg, &diff);
  double w = 1.0 + std::log(4.0);
  CHECK(lam[1] == doctest::Approx(w * std::exp(-1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(hawkes_intensity(c, cfg, nullptr), ConfigError);

  auto slow = oracle::hawkes_quadratic(c, cfg, &diff);
  CHECK(lam[1] == doctest::Approx(slow[1]).epsilon(1e-14));
}

TEST_CASE("intensity depends only on gaps, not absolute time") {
  Cascade a, b;
  a.id = b.id = "shift";
  for (double t : {0.0, 3.0, 4.5, 10.0}) a.events.push_back(ReshareEvent{0, 1, t});
  for (double t : {100.0, 103.0, 104.5, 110.0}) b.events.push_back(ReshareEvent{0, 1, t});
  HawkesConfig cfg;
  cfg.mu = 0.1;
  auto la = hawkes_intensity(a, cfg);
  auto lb = hawkes_intensity(b, cfg);
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i] == doctest::Approx(lb[i]).epsilon(1e-14));
}

TEST_CASE("interval curve sums intensities per window span") {
  // chain: user i appears at time i-1, windows of 4 span [0,2],[3,6],[7,10]
  Cascade c;
  c.id = "chain";
  for (int i = 1; i < 12; ++i)
    c.events.push_back(
        ReshareEvent{static_cast<UserId>(i - 1), static_cast<UserId>(i), static_cast<double>(i)});
  normalize_cascade(c);
  auto ws = partition_subsequences(c, 4);
  std::vector<double> ones(c.events.size(), 1.0);
  auto curve = interval_intensity_curve(ones, c, ws);
  REQUIRE(curve.values.size() == 3);
  CHECK(curve.values[0] == 3.0);  // times 0,1,2
  CHECK(curve.values[1] == 4.0);  // times 3..6
  CHECK(curve.values[2] == 4.0);  // times 7..10
}

TEST_CASE("events outside all spans clamp to the edge windows") {
  Cascade c;
  c.id = "clamp";
  for (int i = 1; i < 9; ++i)
    c.events.push_back(
        ReshareEvent{static_cast<UserId>(i - 1), static_cast<UserId>(i), static_cast<double>(i)});
  // a late reshare between existing users, far past the last appearance
  c.events.push_back(ReshareEvent{0, 1, 500.0});
  normalize_cascade(c);
  auto ws = partition_subsequences(c, 4);
  std::vector<double> ones(c.events.size(), 1.0);
  auto curve = interval_intensity_curve(ones, c, ws);
  REQUIRE(curve.values.size() == 2);
  CHECK(curve.values[0] + curve.values[1] == static_cast<double>(c.events.size()));
  // 4 in-span events, the event of the dropped tail user at time 7 and the
  // late straggler both clamp into the last window
  CHECK(curve.values[1] == 6.0);
}

TEST_CASE("extrema detection honors plateaus and interior flanking") {
  auto ex1 = find_extrema(std::vector<double>{1, 3, 2});
  CHECK(ex1.maxima == std::vector<std::size_t>{1});
  CHECK(ex1.minima.empty());

  auto ex2 = find_extrema(std::vector<double>{1, 3, 3, 2});
  CHECK(ex2.maxima == std::vector<std::size_t>{1});  // leftmost of the plateau

  auto ex3 = find_extrema(std::vector<double>{3, 1, 2});
  CHECK(ex3.minima == std::vector<std::size_t>{1});
  CHECK(ex3.maxima.empty());

  auto ex4 = find_extrema(std::vector<double>{1, 2, 3, 4});
  CHECK(ex4.maxima.empty());
  CHECK(ex4.minima.empty());

  auto ex5 = find_extrema(std::vector<double>{0, 2, 1, 3, 0, 1, 0});
  CHECK(ex5.maxima == std::vector<std::size_t>{1, 3, 5});
  CHECK(ex5.minima == std::vector<std::size_t>{2, 4});

  // plateau touching the boundary is not interior
  auto ex6 = find_extrema(std::vector<double>{2, 2, 1});
  CHECK(ex6.maxima.empty());

  CHECK_THROWS_AS(find_extrema(std::vector<double>{1, 2}), LifecycleError);
}

TEST_CASE("steep detection picks the tallest interior maximum") {
  auto d1 = detect_steep(std::vector<double>{0, 5, 1, 9, 2});
  CHECK(d1.position == 3);
  CHECK(!d1.used_fallback);

  auto d2 = detect_steep(std::vector<double>{0, 5, 1, 5, 0});
  CHECK(d2.position == 1);  // earliest tie

  auto d3 = detect_steep(std::vector<double>{1, 2, 3, 4});
  CHECK(d3.position == 2);  // interior argmax
  CHECK(d3.used_fallback);

  auto d4 = detect_steep(std::vector<double>{4, 7});
  CHECK(d4.position == 1);
  CHECK(d4.used_fallback);
}

TEST_CASE("inhibition is the earliest qualifying regrowth event") {
  // sizes grow 2,3,4,5,6,7 at times 0,10,100,300,400,500
  Cascade c = cascade_at({0, 10, 100, 300, 400, 500});
  double t_steep = 10.0;  // size there = 3
  // need t - 10 >= 240 and size ratio >= 1.2: first at t=300 (size 5)
  auto t = detect_inhibition(c, t_steep, InhibitionThresholds{240.0, 1.2});
  REQUIRE(t.has_value());
  CHECK(*t == 300.0);
  // matching linear-scan oracle
  auto o = oracle::inhibition_scan(c, t_steep, 240.0, 1.2);
  REQUIRE(o.has_value());
  CHECK(*o == *t);

  // an impossible ratio yields nothing
  CHECK(!detect_inhibition(c, t_steep, InhibitionThresholds{240.0, 10.0}));
  // zero thresholds fire at the steep event itself
  auto z = detect_inhibition(c, t_steep, InhibitionThresholds{0.0, 1.0});
  REQUIRE(z.has_value());
  CHECK(*z == 10.0);
}

TEST_CASE("inhibition agrees with the scan oracle on random cascades") {
  Rng rng(29);
  std::uniform_real_distribution<double> gap(0.0, 80.0);
  std::uniform_int_distribution<int> usr(0, 25);
  for (int trial = 0; trial < 40; ++trial) {
    Cascade c;
    c.id = "rand";
    double t = 0.0;
    for (int i = 0; i < 120; ++i) {
      t += gap(rng);
      int a = usr(rng), b = usr(rng);
      if (a == b) b = (b + 1) % 26;
      c.events.push_back(ReshareEvent{static_cast<UserId>(a), static_cast<UserId>(b), t});
    }
    normalize_cascade(c);
    double t_steep = c.events[static_cast<std::size_t>(trial % 40)].time_min;
    for (double dtg : {0.0, 120.0, 600.0})
      for (double ratio : {1.05, 1.5, 3.0}) {
        auto mine = detect_inhibition(c, t_steep, InhibitionThresholds{dtg, ratio});
        auto ref = oracle::inhibition_scan(c, t_steep, dtg, ratio);
        CHECK(mine.has_value() == ref.has_value());
        if (mine && ref) CHECK(*mine == *ref);
      }
  }
}

TEST_CASE("lifecycle pass finds the planted steep window on synthetic bursts") {
  IdTable ids;
  int hits = 0;
  const int total = 12;
  for (int i = 0; i < total; ++i) {
    SynthCascadeParams p;
    p.n_participants = 120;
    p.logistic_midpoint = 200.0;
    p.logistic_rate = 0.05;
    p.historical_edge_prob = 0.0;
    auto sc = synthesize_cascade(p, derive_seed(777, static_cast<std::uint64_t>(i)), ids,
                                 "lc" + std::to_string(i) + "_");
    auto ws = partition_subsequences(sc.cascade, 10);
    // decay fast enough that the intensity tracks the arrival rate within a
    // window; slower decay smears the peak a couple of windows to the right
    HawkesConfig h;
    h.beta = 0.5;
    auto res = detect_lifecycle(sc.cascade, ws, h, InhibitionThresholds{240.0, 1.2});
    auto want = window_for_time(ws, sc.true_midpoint_min);
    REQUIRE(want.has_value());
    if (std::abs(res.steep_window - *want) <= 1) ++hits;
    if (res.t_inhib) {
      REQUIRE(res.networks.has_value());
      CHECK(res.networks->steep_network <= res.networks->inhib_network);
      CHECK(res.networks->steep_network >= 2);
    }
  }
  CHECK(hits >= total - 1);
}

TEST_CASE("calibration recovers the thresholds that made the labels") {
  IdTable ids;
  std::vector<Cascade> kept;
  InhibitionThresholds truth{240.0, 1.3};
  HawkesConfig h;
  h.beta = 0.05;
  for (int i = 0; i < 10; ++i) {
    SynthCascadeParams p;
    p.n_participants = 120;
    p.logistic_midpoint = 150.0;
    p.logistic_rate = 0.04;
    p.historical_edge_prob = 0.0;
    auto sc = synthesize_cascade(p, derive_seed(555, static_cast<std::uint64_t>(i)), ids,
                                 "cal" + std::to_string(i) + "_");
    kept.push_back(std::move(sc.cascade));
  }
  std::vector<std::pair<const Cascade*, double>> labeled;
  for (const auto& c : kept) {
    auto ws = partition_subsequences(c, 10);
    auto res = detect_lifecycle(c, ws, h, truth);
    if (res.t_inhib) labeled.emplace_back(&c, *res.t_inhib);
  }
  REQUIRE(labeled.size() >= 5);
  CalibrationConfig cfg;
  cfg.window_size = 10;
  cfg.hawkes = h;
  auto result = calibrate_thresholds(labeled, cfg);
  CHECK(result.evaluated == labeled.size());
  // the generating cell must be recovered exactly: it scores zero error and
  // ties break toward smaller dtg then ratio
  CHECK(result.mean_window_error == 0.0);
  CHECK(result.best.dtg_minutes <= truth.dtg_minutes);
  // and the recovered pair reproduces every label
  for (auto [c, label] : labeled) {
    auto ws = partition_subsequences(*c, 10);
    auto res = detect_lifecycle(*c, ws, h, result.best);
    REQUIRE(res.t_inhib.has_value());
    auto got = window_for_time(ws, std::min(*res.t_inhib, ws.back().end_min));
    auto want = window_for_time(ws, std::min(label, ws.back().end_min));
    CHECK(got == want);
  }
}

TEST_CASE("configuration errors are rejected") {
  Cascade c = cascade_at({0.0, 1.0});
  HawkesConfig bad;
  bad.beta = 0.0;
  CHECK_THROWS_AS(hawkes_intensity(c, bad), ConfigError);
  bad.beta = 1.0;
  bad.mu = -1.0;
  CHECK_THROWS_AS(hawkes_intensity(c, bad), ConfigError);
  CHECK_THROWS_AS(detect_inhibition(c, 0.0, InhibitionThresholds{-1.0, 1.2}), ConfigError);
  CHECK_THROWS_AS(detect_inhibition(c, 0.0, InhibitionThresholds{0.0, 0.0}), ConfigError);
}
