#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "grid_oracle.hpp"
#include "pidrl/baseline.hpp"

using namespace pidrl;

namespace {

Fleet small_fleet(int n_train, int n_test, std::uint64_t seed) {
  FleetSpec spec;
  spec.n_train = n_train;
  spec.n_test = n_test;
  spec.seed = seed;
  return sample_fleet(spec);
}

SearchSetup short_setup() {
  SearchSetup s;
  s.duration_ms = 60.0;
  return s;
}

std::set<std::tuple<double, double, double, double>> as_set(const std::vector<SwitchEvent>& ev) {
  std::set<std::tuple<double, double, double, double>> out;
  for (const SwitchEvent& e : ev) out.insert({e.source.x, e.source.y, e.dest.x, e.dest.y});
  return out;
}

}  // namespace

TEST(ZnGains, ClassicRule) {
  const AxisGains g = zn_gains({2.0, 0.015});
  EXPECT_DOUBLE_EQ(g.p, 1.2);
  EXPECT_DOUBLE_EQ(g.i, 1.2 * 2.0 / 0.015);
  EXPECT_DOUBLE_EQ(g.d, 0.075 * 2.0 * 0.015);
}

TEST(OscillationGrowth, SmallGainDecaysLargeGainGrows) {
  const AxisParams axis;
  const ZnOptions opt;
  EXPECT_LT(oscillation_growth(axis, 0.05, opt), 1.0);
  EXPECT_GT(oscillation_growth(axis, 10.0, opt), 1.0);
}

TEST(ZnSeed, BisectionAgreesWithLinearSweep) {
  const ActuatorParams a;
  const ZnOptions opt;
  const ZnSeed seed = zn_seed(a, 25.0, opt);
  ASSERT_TRUE(seed.tunable);
  const double ku = seed.x_ultimate.ku;
  // First P on a 1e-3 lattice where the oscillation stops decaying.
  double crossing = -1.0;
  for (double p = 0.001; p < 2.0 * ku; p += 1e-3) {
    if (oscillation_growth(a.x_axis, p, opt) >= 1.0) {
      crossing = p;
      break;
    }
  }
  ASSERT_GT(crossing, 0.0);
  EXPECT_NEAR(ku, crossing, 1e-3 + 2 * opt.rel_tolerance * ku);
  double period = 0.0;
  EXPECT_NEAR(oscillation_growth(a.x_axis, ku, opt, &period), 1.0, opt.sustain_tolerance);
  EXPECT_NEAR(period, seed.x_ultimate.tu, 1e-12);
  EXPECT_EQ(seed.x, zn_gains(seed.x_ultimate));
}

TEST(ZnSeed, IdenticalActuatorsIdenticalSeeds) {
  ActuatorParams a, b;
  b.id = 7;
  const ZnSeed sa = zn_seed(a, 25.0), sb = zn_seed(b, 25.0);
  EXPECT_EQ(sa.x, sb.x);
  EXPECT_EQ(sa.y, sb.y);
  // The nominal axes are equal, so both axes get the same seed.
  EXPECT_EQ(sa.x, sa.y);
}

TEST(ZnSeed, DoublingGainHalvesUltimateGain) {
  ActuatorParams a;
  a.x_axis.gain = 0.7;
  ActuatorParams b = a;
  b.x_axis.gain = 1.4;
  const ZnSeed sa = zn_seed(a, 25.0), sb = zn_seed(b, 25.0);
  ASSERT_TRUE(sa.tunable && sb.tunable);
  EXPECT_NEAR(sb.x_ultimate.ku / sa.x_ultimate.ku, 0.5, 0.01);
  EXPECT_NEAR(sb.x_ultimate.tu / sa.x_ultimate.tu, 1.0, 0.02);
}

TEST(ZnSeed, UnreachableUltimateGainIsNotTunable) {
  ActuatorParams a;
  a.x_axis.gain = 0.001;  // needs P far above output_limit / step
  EXPECT_FALSE(zn_seed(a, 25.0).tunable);
}

TEST(ExtremeEvents, CountAndMembership) {
  const Plane plane;
  const auto ev = extreme_events(plane);
  ASSERT_EQ(ev.size(), 16u);
  std::set<std::pair<double, double>> grid;
  for (int k = 0; k < plane.n_positions(); ++k) grid.insert({plane.position(k).x, plane.position(k).y});
  for (std::size_t k = 0; k < ev.size(); ++k) {
    EXPECT_EQ(ev[k].event_id, static_cast<int>(k));
    EXPECT_TRUE(grid.count({ev[k].source.x, ev[k].source.y}));
    EXPECT_TRUE(grid.count({ev[k].dest.x, ev[k].dest.y}));
    EXPECT_NE(ev[k].source, ev[k].dest);
  }
  EXPECT_EQ(as_set(ev).size(), 16u);
}

TEST(ExtremeEvents, RotationInvariantOnSquarePlane) {
  const Plane plane{5, 5, 10.0};
  const auto ev = extreme_events(plane);
  std::vector<SwitchEvent> rotated;
  for (const SwitchEvent& e : ev)
    rotated.push_back({e.event_id, {-e.source.y, e.source.x}, {-e.dest.y, e.dest.x}});
  EXPECT_EQ(as_set(rotated), as_set(ev));
}

TEST(ExtremeEvents, DiagonalsAreLongestMoves) {
  const Plane plane;
  double longest = 0.0;
  for (int a = 0; a < plane.n_positions(); ++a) {
    for (int b = 0; b < plane.n_positions(); ++b) {
      const Point2 p = plane.position(a), q = plane.position(b);
      longest = std::max(longest, std::hypot(p.x - q.x, p.y - q.y));
    }
  }
  const auto ev = extreme_events(plane);
  for (int k = 8; k < 12; ++k) {
    const SwitchEvent& e = ev[static_cast<std::size_t>(k)];
    EXPECT_DOUBLE_EQ(std::hypot(e.dest.x - e.source.x, e.dest.y - e.source.y), longest);
  }
  // Centre moves reach the farthest point from the centre cell.
  const Point2 c = ev.front().source;
  double farthest = 0.0;
  for (int a = 0; a < plane.n_positions(); ++a) {
    const Point2 p = plane.position(a);
    farthest = std::max(farthest, std::hypot(p.x - c.x, p.y - c.y));
  }
  double best_corner = 0.0;
  for (int k = 0; k < 4; ++k) {
    const SwitchEvent& e = ev[static_cast<std::size_t>(k)];
    best_corner = std::max(best_corner, std::hypot(e.dest.x - c.x, e.dest.y - c.y));
  }
  EXPECT_DOUBLE_EQ(best_corner, farthest);
}

TEST(ExtremeEvents, RejectsTinyPlane) {
  EXPECT_THROW(extreme_events(Plane{2, 5, 1.0}), InvalidArgument);
}

TEST(GridPoints, LogSpacedAroundCentre) {
  GridSpec g;
  g.points_i = 3;
  g.points_d = 1;
  const ActionBounds b;
  const auto pts = grid_points(g, b);
  // 6.06 and 8 both clamp to 6, leaving 10 distinct P values.
  ASSERT_EQ(pts.size(), 10u * 3 * 1);
  EXPECT_DOUBLE_EQ(pts.front().p, 0.5);
  EXPECT_DOUBLE_EQ(pts.back().p, 6.0);  // 8 clamped to the bound
  EXPECT_DOUBLE_EQ(pts[0].i, 125.0);
  EXPECT_DOUBLE_EQ(pts[1].i, 500.0);
  EXPECT_DOUBLE_EQ(pts[2].i, 1500.0);  // 2000 clamped
  EXPECT_DOUBLE_EQ(pts[0].d, 0.006);
  for (const AxisGains& p : pts) {
    EXPECT_EQ(std::round(p.p * 1e6) / 1e6, p.p);
    EXPECT_GE(p.p, b.p.lo);
    EXPECT_LE(p.p, b.p.hi);
  }
  // Clamping merges the top values instead of repeating them.
  std::set<double> ps;
  for (const AxisGains& p : pts) ps.insert(p.p);
  EXPECT_EQ(ps.size() * 3, pts.size());
}

TEST(GridPoints, SinglePointIsCentre) {
  GridSpec g;
  g.points_p = g.points_i = g.points_d = 1;
  g.centre = {1.2345678, 321.1234567, 0.0041234567};
  const auto pts = grid_points(g, ActionBounds{});
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0], (AxisGains{1.234568, 321.123457, 0.004123}));
}

TEST(GridSearch, SinglePointGrid) {
  const Fleet f = small_fleet(2, 1, 3);
  const AxisGains g{1.5, 300.0, 0.005};
  const SearchResult r = grid_search(f.train, f.test, {g}, short_setup());
  EXPECT_EQ(r.best, g);
  ASSERT_EQ(r.log.size(), 1u);
  const GridEntry direct = evaluate_point(g, f.train, f.test, short_setup());
  EXPECT_EQ(r.log[0].train_mean_st_ms, direct.train_mean_st_ms);
  EXPECT_EQ(r.viable, direct.viable);
}

TEST(GridSearch, MatchesExhaustiveOracle) {
  const Fleet f = small_fleet(3, 2, 4);
  GridSpec g;
  g.centre = {1.0, 200.0, 0.005};
  g.points_p = g.points_i = g.points_d = 3;
  const auto pts = grid_points(g, ActionBounds{});
  ASSERT_EQ(pts.size(), 27u);
  SearchSetup setup = short_setup();
  setup.workers = 3;
  const SearchResult r = grid_search(f.train, f.test, pts, setup);
  std::vector<oracle::PointScore> scores;
  for (const AxisGains& p : pts) scores.push_back(oracle::score_point(p, f.train, f.test, setup));
  ASSERT_EQ(r.log.size(), pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    EXPECT_EQ(r.log[k].gains, pts[k]);
    EXPECT_NEAR(r.log[k].train_mean_st_ms, scores[k].train_mean, 1e-9);
    EXPECT_NEAR(r.log[k].test_mean_st_ms, scores[k].test_mean, 1e-9);
    EXPECT_EQ(r.log[k].viable, scores[k].viable) << k;
    EXPECT_EQ(r.log[k].os_ok, scores[k].os_ok) << k;
    EXPECT_EQ(r.log[k].settled, scores[k].settled) << k;
    EXPECT_EQ(r.log[k].consistent, scores[k].consistent) << k;
  }
  const std::size_t best = oracle::exhaustive_best(scores);
  EXPECT_EQ(r.best, pts[best]);
  EXPECT_EQ(r.viable, scores[best].viable);
}

TEST(GridSearch, InvariantToOrderAndWorkers) {
  const Fleet f = small_fleet(2, 2, 5);
  GridSpec g;
  g.points_p = g.points_i = g.points_d = 3;
  auto pts = grid_points(g, ActionBounds{});
  SearchSetup setup = short_setup();
  const SearchResult base = grid_search(f.train, f.test, pts, setup);
  std::mt19937_64 rng(6);
  std::shuffle(pts.begin(), pts.end(), rng);
  setup.workers = 8;
  const SearchResult shuffled = grid_search(f.train, f.test, pts, setup);
  EXPECT_EQ(base.best, shuffled.best);
  EXPECT_EQ(base.viable, shuffled.viable);
}

TEST(GridSearch, AddingDominatedPointsKeepsWinner) {
  const Fleet f = small_fleet(2, 1, 7);
  GridSpec g;
  g.points_p = g.points_i = 3;
  g.points_d = 2;
  auto pts = grid_points(g, ActionBounds{});
  const SearchSetup setup = short_setup();
  const SearchResult base = grid_search(f.train, f.test, pts, setup);
  const GridEntry winner = evaluate_point(base.best, f.train, f.test, setup);
  std::size_t added = 0;
  for (const AxisGains& g : {AxisGains{0.01, 1.0, 0.0001}, AxisGains{0.3, 50.0, 0.001},
                             AxisGains{4.0, 1000.0, 0.012}, AxisGains{5.9, 1400.0, 0.0149}}) {
    if (!better_entry(winner, evaluate_point(g, f.train, f.test, setup))) continue;
    pts.push_back(g);
    ++added;
  }
  ASSERT_GT(added, 0u);
  const SearchResult more = grid_search(f.train, f.test, pts, setup);
  EXPECT_EQ(more.best, base.best);
  EXPECT_EQ(more.log.size(), base.log.size() + added);
}

TEST(GridSearch, BestIsAGridPointInsideBounds) {
  const Fleet f = small_fleet(2, 1, 8);
  GridSpec g;
  g.points_p = g.points_i = g.points_d = 2;
  const ActionBounds b;
  const auto pts = grid_points(g, b);
  const SearchResult r = grid_search(f.train, f.test, pts, short_setup());
  EXPECT_NE(std::find(pts.begin(), pts.end(), r.best), pts.end());
  EXPECT_GE(r.best.p, b.p.lo);
  EXPECT_LE(r.best.p, b.p.hi);
  EXPECT_LE(r.best.i, b.i.hi);
  EXPECT_LE(r.best.d, b.d.hi);
}

TEST(GridSearch, RejectsEmptyInputs) {
  const Fleet f = small_fleet(1, 1, 9);
  EXPECT_THROW(grid_search(f.train, f.test, {}, short_setup()), InvalidArgument);
  EXPECT_THROW(grid_search({}, f.test, {AxisGains{1, 1, 1}}, short_setup()), InvalidArgument);
}
