#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>
#include <vector>

#include "bdlab/deposition.hpp"
#include "bdlab/random.hpp"
#include "bdlab/stats.hpp"

using namespace bdlab;
using namespace bdlab::bd;

namespace {

// Oracle: replay every epoch of every non-halo site in the box, in (time,
// site) order, with a literal transcription of the jump rule.
HeightField replay(HeightField f, const ClockField& clocks, double horizon) {
  const Box& box = f.box();
  std::vector<std::pair<double, std::size_t>> evs;
  if (horizon > f.time())
    for (std::size_t i = 0; i < box.size(); ++i) {
      if (box.is_halo(i)) continue;
      for (double t : clocks.events(box.site(i), f.time(), horizon)) evs.push_back({t, i});
    }
  std::sort(evs.begin(), evs.end());
  for (auto [t, i] : evs) {
    Site u = box.site(i);
    ExtHeight best = f.at(u);
    best = best.is_finite() ? ExtHeight(best.value() + 1) : best;
    for (int a = 0; a < box.dim(); ++a)
      for (int s : {-1, 1}) {
        Site w = u;
        w[a] += s;
        if (box.contains(w)) best = std::max(best, f.at(w));
      }
    if (!best.is_neg_inf()) f.set(u, best);
  }
  f.set_time(horizon);
  return f;
}

bool same_heights(const HeightField& a, const HeightField& b) {
  return std::equal(a.heights().begin(), a.heights().end(), b.heights().begin(), b.heights().end());
}

}  // namespace

TEST_CASE("deposit_jump rule table") {
  Box box(1, 3, 1);
  HeightField f(box);
  SUBCASE("finite site with -inf neighbours") {
    f.set(Site{0}, ExtHeight(0));
    CHECK(deposit_jump(f, Site{0}).at(Site{0}) == ExtHeight(1));
  }
  SUBCASE("-inf site sticks to its neighbour") {
    f.set(Site{1}, ExtHeight(5));
    CHECK(deposit_jump(f, Site{0}).at(Site{0}) == ExtHeight(5));
  }
  SUBCASE("lost particle") {
    HeightField g = deposit_jump(f, Site{0});
    CHECK(g == f);
  }
  SUBCASE("neighbour wins over own increment") {
    f.set(Site{0}, ExtHeight(3));
    f.set(Site{-1}, ExtHeight(7));
    f.set(Site{1}, ExtHeight(2));
    HeightField g = deposit_jump(f, Site{0});
    CHECK(g.at(Site{0}) == ExtHeight(7));
    CHECK(g.at(Site{-1}) == ExtHeight(7));
    CHECK(g.at(Site{1}) == ExtHeight(2));
  }
  SUBCASE("+inf propagates") {
    f.set(Site{1}, kPosInf);
    f.set(Site{0}, ExtHeight(2));
    CHECK(deposit_jump(f, Site{0}).at(Site{0}) == kPosInf);
  }
  SUBCASE("outside the box") { CHECK_THROWS_AS(deposit_jump(f, Site{4}), std::out_of_range); }
  SUBCASE("box edge treats missing neighbours as -inf") {
    f.set(Site{3}, ExtHeight(1));
    CHECK(deposit_jump(f, Site{3}).at(Site{3}) == ExtHeight(2));
  }
}

TEST_CASE("simulator agrees with full replay") {
  for (std::uint64_t s = 0; s < 40; ++s) {
    ClockField clocks(derive_seed(11, "test/replay", {s}));
    for (int d : {1, 2}) {
      Box box(d, d == 1 ? 9 : 4, d == 1 ? 4 : 2);
      HeightField init(box);
      // A few random finite heights, sometimes a +inf, sometimes on the halo.
      std::uint64_t h = mix64(s * 7 + static_cast<std::uint64_t>(d));
      for (int k = 0; k < 4; ++k) {
        h = mix64(h);
        std::size_t i = h % box.size();
        std::int64_t v = static_cast<std::int64_t>((h >> 20) % 7) - 3;
        init.set(i, (h >> 40) % 13 == 0 ? kPosInf : ExtHeight(v));
      }
      for (double horizon : {0.0, 0.7, 3.0, 6.0}) {
        auto got = run(init, clocks, horizon);
        auto want = replay(init, clocks, horizon);
        CHECK(same_heights(got.field, want));
        CHECK(got.field.time() == horizon);
      }
    }
  }
}

TEST_CASE("run basics") {
  ClockField clocks(5);
  Box box(1, 6, 2);
  HeightField init(box);
  init.set(Site{0}, ExtHeight(0));
  SUBCASE("horizon equal to the start time is a no-op") {
    auto r = run(init, clocks, 0.0);
    CHECK(r.field == init);
    CHECK(r.events == 0);
  }
  SUBCASE("single origin epoch") {
    // Find a horizon before any epoch of the neighbours and after one of
    // the origin.
    double first_origin = clocks.events(Site{0}, 0, 100).front();
    double first_nb = std::min(clocks.events(Site{-1}, 0, 100).front(), clocks.events(Site{1}, 0, 100).front());
    auto origin_evs = clocks.events(Site{0}, 0, 100);
    if (first_origin < first_nb && (origin_evs.size() < 2 || origin_evs[1] > first_nb)) {
      auto r = run(init, clocks, std::nextafter(first_nb, 0.0));
      CHECK(r.field.at(Site{0}) == ExtHeight(1));
      for (int x = -6; x <= 6; ++x)
        if (x != 0) CHECK(r.field.at(Site{x}) == kNegInf);
    }
  }
  SUBCASE("flow property") {
    for (double t1 : {0.5, 1.7, 2.9}) {
      auto a = run(run(init, clocks, t1).field, clocks, 4.0);
      auto b = run(init, clocks, 4.0);
      CHECK(a.field == b.field);
    }
  }
  SUBCASE("backwards horizon rejected") {
    HeightField later = init;
    later.set_time(2.0);
    CHECK_THROWS_AS(run(later, clocks, 1.0), std::invalid_argument);
  }
}

TEST_CASE("a single epoch at the origin with a hand-built clock") {
  // Search seeds for a realisation with exactly one origin epoch in (0,1]
  // and no neighbour epoch there.
  int found = 0;
  for (std::uint64_t s = 0; s < 200 && found < 3; ++s) {
    ClockField c(s);
    if (c.events(Site{0}, 0, 1).size() != 1) continue;
    if (!c.events(Site{1}, 0, 1).empty() || !c.events(Site{-1}, 0, 1).empty()) continue;
    ++found;
    auto r = run_seed(SeedSpec{Site{0}, 0}, c, 1.0);
    CHECK(r.field.at(Site{0}) == ExtHeight(1));
    std::size_t finite = 0;
    for (auto h : r.field.heights()) finite += !h.is_neg_inf();
    CHECK(finite == 1);
  }
  CHECK(found == 3);
}

TEST_CASE("seed runs") {
  SUBCASE("horizon zero") {
    auto r = run_seed(SeedSpec{Site{0, 0}, 4}, ClockField(1), 0.0);
    CHECK(r.field.at(Site{0, 0}) == ExtHeight(4));
    std::size_t finite = 0;
    for (auto h : r.field.heights()) finite += !h.is_neg_inf();
    CHECK(finite == 1);
  }
  SUBCASE("d=1 cluster is an interval containing the seed") {
    for (std::uint64_t s = 0; s < 30; ++s) {
      auto r = run_seed(SeedSpec{Site{2}, 0}, ClockField(s + 100), 6.0);
      CHECK(!r.breached);
      const Box& box = r.field.box();
      int lo = 1 << 30, hi = -(1 << 30), count = 0;
      for (std::size_t i = 0; i < box.size(); ++i)
        if (!r.field.at(i).is_neg_inf()) {
          lo = std::min(lo, box.coord(i, 0));
          hi = std::max(hi, box.coord(i, 0));
          ++count;
          // Joined sites sit at height >= 0.
          CHECK(r.field.at(i) >= ExtHeight(0));
        }
      CHECK(count == hi - lo + 1);
      CHECK(lo <= 2);
      CHECK(hi >= 2);
    }
  }
  SUBCASE("heights never decrease along a trajectory") {
    Box box(2, 8, 3);
    Simulator sim(seed_field(SeedSpec{Site{0, 0}, 0}, box), ClockField(77));
    HeightField prev = sim.field();
    while (auto ev = sim.step(2.0)) {
      CHECK(ev->after >= ev->before);
      CHECK(sim.field().dominates(prev));
      prev = sim.field();
    }
  }
}

TEST_CASE("passage times") {
  ClockField clocks(314);
  SeedSpec spec{Site{0}, 0};
  CHECK(*passage_time(spec, clocks, Site{0}, 0) == 0.0);
  CHECK(default_passage_cap(spec, Cell{Site{3}, 2}) == doctest::Approx(40.0));
  SUBCASE("matches the replayed trajectory") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      ClockField c(derive_seed(3, "test/passage", {s}));
      for (auto [x, h] : {std::pair{2, 1}, std::pair{-1, 3}, std::pair{0, 2}}) {
        auto t = passage_time(spec, c, Site{x}, h);
        REQUIRE(t.has_value());
        Box box = Box::for_horizon(1, 3, *t + 1);
        HeightField before = replay(seed_field(spec, box), c, std::nextafter(*t, 0.0));
        HeightField at = replay(seed_field(spec, box), c, *t);
        CHECK(before.at(Site{x}) < ExtHeight(h));
        CHECK(at.at(Site{x}) >= ExtHeight(h));
      }
    }
  }
  SUBCASE("nondecreasing in the threshold") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      ClockField c(s);
      std::vector<Cell> cells;
      for (int h = 0; h <= 6; ++h) cells.push_back({Site{2}, h});
      auto ts = passage_times(spec, c, cells, 60.0);
      for (std::size_t k = 1; k < ts.size(); ++k) CHECK(*ts[k] >= *ts[k - 1]);
    }
  }
  SUBCASE("timeout") {
    auto t = passage_time(spec, clocks, Site{5}, 50, 1.0);
    CHECK(!t.has_value());
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(passage_time(spec, clocks, Site{1}, -1, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(passage_time(spec, clocks, Site{1}, 1, std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
  }
  SUBCASE("mean bounded by |u| + h") {
    const int reps = 200;
    for (auto [x, h] : {std::pair{3, 2}, std::pair{0, 5}, std::pair{6, 0}}) {
      std::vector<double> v;
      for (int r = 0; r < reps; ++r)
        v.push_back(*passage_time(spec, ClockField(derive_seed(9, "test/mean", {std::uint64_t(r)})),
                                  Site{x}, h));
      auto sm = stats::summarize(v);
      CHECK(sm.mean <= std::abs(x) + h + 3 * sm.std_error);
    }
  }
}

TEST_CASE("synchronous variant") {
  Box box(1, 6, 3);
  HeightField init = seed_field(SeedSpec{Site{0}, 0}, box);
  SUBCASE("zero steps") { CHECK(run_synchronous(init, {0.5, 0}, 1) == init); }
  SUBCASE("one step with the seed selected") {
    int hits = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      if (!sync_selected(s, Site{0}, 1, 0.5)) continue;
      ++hits;
      CHECK(run_synchronous(init, {0.5, 1}, s).at(Site{0}) == ExtHeight(1));
    }
    CHECK(hits > 0);
  }
  SUBCASE("per-site update counts") {
    const int steps = 400;
    const double p = 0.3;
    int count = 0;
    for (int r = 1; r <= steps; ++r) count += sync_selected(17, Site{2}, r, p);
    CHECK(std::abs(count - p * steps) <= 3 * std::sqrt(p * (1 - p) * steps));
  }
  SUBCASE("simultaneous update reads the snapshot") {
    // Oracle: literal two-buffer update on a flat field.
    HeightField flat(box, ExtHeight(0));
    int rounds = 0;
    HeightField got = run_synchronous(flat, {0.5, 5}, 21, [&](const HeightField&) { ++rounds; });
    CHECK(rounds == 5);
    HeightField cur = flat;
    for (int r = 1; r <= 5; ++r) {
      HeightField next = cur;
      for (int x = -5; x <= 5; ++x)
        if (sync_selected(21, Site{x}, r, 0.5)) next.set(Site{x}, jump_height(cur, box.index(Site{x})));
      cur = next;
    }
    CHECK(same_heights(got, cur));
  }
  SUBCASE("invalid p") { CHECK_THROWS_AS(run_synchronous(init, {1.0, 1}, 0), std::invalid_argument); }
}

TEST_CASE("snapshot csv") {
  Box box(1, 3, 1);
  HeightField f = seed_field(SeedSpec{Site{-1}, 2}, box);
  f.set(Site{2}, kPosInf);
  std::ostringstream a, b;
  write_snapshot_header(a, 1);
  write_snapshot_rows(a, f);
  CHECK(a.str() == "x0,height,time\n-1,2,0\n2,+inf,0\n");
  write_snapshot_rows(b, f, true);
  const std::string all = b.str();
  CHECK(std::count(all.begin(), all.end(), '\n') == 7);
}
