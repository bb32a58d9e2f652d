#include <doctest.h>

#include <cmath>
#include <sstream>

#include "casmo/core.hpp"

using namespace casmo;

namespace {

std::vector<Cascade> parse(const std::string& text, IdTable& ids) {
  std::istringstream in(text);
  return parse_cascade_log(in, ids, "mem");
}

}  // namespace

TEST_CASE("cascade log parsing groups, rebases and sorts") {
  IdTable ids;
  auto cs = parse(
      "cascade_id,source,target,time\n"
      "c1,alice,bob,10\n"
      "c2,x,y,100\n"
      "c1,bob,carol,15\n"
      "c1,alice,dave,12\n",
      ids);
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].id == "c1");
  CHECK(cs[1].id == "c2");
  REQUIRE(cs[0].events.size() == 3);
  // rebased: 10,12,15 -> 0,2,5
  CHECK(cs[0].events[0].time_min == 0.0);
  CHECK(cs[0].events[1].time_min == 2.0);
  CHECK(cs[0].events[2].time_min == 5.0);
  CHECK(ids.name(cs[0].events[1].target) == "dave");
  // participants in first-appearance order
  REQUIRE(cs[0].participants.size() == 4);
  CHECK(ids.name(cs[0].participants[0]) == "alice");
  CHECK(ids.name(cs[0].participants[1]) == "bob");
  CHECK(ids.name(cs[0].participants[2]) == "dave");
  CHECK(ids.name(cs[0].participants[3]) == "carol");
  CHECK(cs[1].events.size() == 1);
  CHECK(cs[1].events[0].time_min == 0.0);
}

TEST_CASE("parser is strict about malformed rows") {
  IdTable ids;
  CHECK_THROWS_AS(parse("c1,a,a,5\n", ids), ParseError);        // self reshare
  CHECK_THROWS_AS(parse("c1,a,b\n", ids), ParseError);          // missing field
  CHECK_THROWS_AS(parse("c1,a,b,notatime\n", ids), ParseError);
  CHECK_THROWS_AS(parse("c1,a,b,nan\n", ids), ParseError);
}

TEST_CASE("exact duplicate events collapse, near duplicates stay") {
  IdTable ids;
  auto cs = parse(
      "c,a,b,5\n"
      "c,a,b,5\n"
      "c,a,b,6\n",
      ids);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].events.size() == 2);
}

TEST_CASE("serialize then parse round-trips byte for byte") {
  IdTable ids;
  auto cs = parse(
      "c1,a,b,3.25\n"
      "c1,b,c,17\n"
      "c2,p,q,0.1\n"
      "c2,q,r,1000000.5\n",
      ids);
  std::ostringstream first;
  serialize_cascade_log(first, cs, ids);
  IdTable ids2;
  std::istringstream back(first.str());
  auto cs2 = parse_cascade_log(back, ids2, "rt");
  std::ostringstream second;
  serialize_cascade_log(second, cs2, ids2);
  CHECK(first.str() == second.str());
  REQUIRE(cs2.size() == cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    CHECK(cs2[i].id == cs[i].id);
    REQUIRE(cs2[i].events.size() == cs[i].events.size());
    for (std::size_t j = 0; j < cs[i].events.size(); ++j)
      CHECK(cs2[i].events[j].time_min == cs[i].events[j].time_min);
  }
}

TEST_CASE("size filter keeps strictly larger cascades only") {
  IdTable ids;
  std::vector<Cascade> cs(3);
  for (int n : {299, 300, 301}) {
    Cascade c;
    c.id = "c" + std::to_string(n);
    for (int i = 0; i < n; ++i) c.participants.push_back(static_cast<UserId>(i));
    cs[static_cast<std::size_t>(n - 299)] = std::move(c);
  }
  auto kept = filter_by_size(std::move(cs), 300);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == "c301");
}

TEST_CASE("growth curve counts distinct participants") {
  IdTable ids;
  auto cs = parse(
      "c,a,b,0\n"
      "c,a,c,5\n"
      "c,b,c,9\n",  // c already present, size stays 3
      ids);
  auto g = growth_curve(cs[0]);
  REQUIRE(g.sizes.size() == 3);
  CHECK(g.sizes[0] == 2);
  CHECK(g.sizes[1] == 3);
  CHECK(g.sizes[2] == 3);
  CHECK(g.times[2] == 9.0);
}

TEST_CASE("diffusion edge parsing dedupes and drops self loops") {
  IdTable ids;
  std::istringstream in(
      "source,target\n"
      "a,b\n"
      "b,a\n"
      "a,a\n"
      "b,c\n");
  DiffusionParseStats stats;
  auto net = parse_diffusion_edges(in, ids, &stats, "mem");
  CHECK(net.edge_count() == 2);
  CHECK(stats.duplicate_edges == 1);
  CHECK(stats.self_loops == 1);
  CHECK(net.has_edge(ids.intern("a"), ids.intern("b")));
  CHECK(net.has_edge(ids.intern("b"), ids.intern("a")));
  CHECK(!net.has_edge(ids.intern("a"), ids.intern("c")));
  CHECK(net.degree(ids.intern("b")) == 2);
  CHECK(net.degree(ids.intern("zzz")) == 0);
}

namespace {

// Hand-built curve: n points with the given cumulative shape over [0,1].
GrowthCurve shaped_curve(int n, double (*f)(double)) {
  GrowthCurve g;
  for (int i = 0; i < n; ++i) {
    double x = static_cast<double>(i) / (n - 1);
    g.times.push_back(x * 1000.0);
    g.sizes.push_back(static_cast<std::size_t>(1 + std::llround(f(x) * 400.0)));
  }
  return g;
}

}  // namespace

TEST_CASE("classifier separates the three growth shapes") {
  // early-burst logistic: midpoint well before 15% of the lifetime
  auto early = shaped_curve(400, +[](double x) { return 1.0 / (1.0 + std::exp(-80.0 * (x - 0.06))); });
  auto r1 = classify_cascade_type(early);
  CHECK(r1.type == CascadeType::type1);
  CHECK(r1.steep_time_fraction < 0.15);

  // late-midpoint logistic
  auto late = shaped_curve(400, +[](double x) { return 1.0 / (1.0 + std::exp(-20.0 * (x - 0.5))); });
  auto r2 = classify_cascade_type(late);
  CHECK(r2.type == CascadeType::type2);
  CHECK(r2.steep_time_fraction >= 0.15);

  // straight line: no saturation, logistic fits worse than the line
  auto lin = shaped_curve(400, +[](double x) { return x; });
  auto r3 = classify_cascade_type(lin);
  CHECK(r3.type == CascadeType::type3);
  CHECK(r3.line_rms < r3.logistic_rms);

  // concave sqrt-like growth is also type 3
  auto conc = shaped_curve(400, +[](double x) { return std::sqrt(x); });
  CHECK(classify_cascade_type(conc).type == CascadeType::type3);
}

TEST_CASE("co-rating cascades link raters within the window") {
  IdTable ids;
  std::istringstream in(
      "user,item,time\n"
      "a,m1,0\n"
      "b,m1,12\n"
      "c,m1,48\n"
      "d,m2,5\n");
  auto ratings = parse_ratings(in, ids, "mem");
  auto cs = build_corating_cascades(ratings, 24.0);
  // m1: a-b within 24h, c too far from both; m2 yields nothing
  REQUIRE(cs.size() == 1);
  REQUIRE(cs[0].events.size() == 1);
  CHECK(ids.name(cs[0].events[0].source) == "a");
  CHECK(ids.name(cs[0].events[0].target) == "b");
  CHECK(cs[0].events[0].time_min == 0.0);  // rebased; raw would be 12h * 60
}

TEST_CASE("co-rating links all pairs inside a tight cluster") {
  IdTable ids;
  std::istringstream in(
      "a,m,0\n"
      "b,m,0.2\n"
      "c,m,0.5\n"
      "d,m,0.9\n");
  auto ratings = parse_ratings(in, ids, "mem");
  auto cs = build_corating_cascades(ratings, 1.0);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].events.size() == 6);  // all 4-choose-2 pairs within one hour
  // each edge carries the later rating time, rebased to minutes
  for (const auto& e : cs[0].events) CHECK(e.time_min >= 0.0);
  CHECK(cs[0].events.back().time_min == doctest::Approx((0.9 - 0.2) * 60.0));
}

TEST_CASE("rebasing keeps relative spacing") {
  IdTable ids;
  auto cs = parse(
      "c,a,b,1000\n"
      "c,b,c,1007\n",
      ids);
  CHECK(cs[0].span_minutes() == 7.0);
}
