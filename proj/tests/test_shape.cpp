#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "bdlab/deposition.hpp"
#include "bdlab/grid.hpp"
#include "bdlab/random.hpp"
#include "bdlab/shape.hpp"

using namespace bdlab;
using namespace bdlab::shape;

namespace {

GTable parabola(double step = 0.05) {
  int half = static_cast<int>(std::lround(1.0 / step));
  return synthetic_gtable(RegularGrid::symmetric(1, half, step), [](const std::vector<double>& x) {
    return 1 - x[0] * x[0];
  });
}

// Exact Legendre transform of 1 - x^2 on [-1, 1].
double parabola_f(double u) { return std::abs(u) <= 2 ? u * u / 4 + 1 : std::abs(u); }

}  // namespace

TEST_CASE("regular grid indexing and interpolation") {
  RegularGrid g({-1.0, 0.0}, 0.5, {5, 3});
  CHECK(g.size() == 15);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto p = g.point(i);
    g.set_value(i, 2 * p[0] - 3 * p[1] + 1);
    auto k = g.multi_index(i);
    CHECK(g.flat_index(k) == i);
    CHECK(*g.node_at(p) == i);
  }
  // Multilinear interpolation reproduces affine functions.
  for (double x : {-1.0, -0.3, 0.0, 0.77, 1.0})
    for (double y : {0.0, 0.2, 0.5, 0.99, 1.0}) {
      std::vector<double> p{x, y};
      REQUIRE(g.interpolate(p));
      CHECK(*g.interpolate(p) == doctest::Approx(2 * x - 3 * y + 1).epsilon(1e-12));
    }
  std::vector<double> out{1.01, 0.5};
  CHECK_FALSE(g.interpolate(out));
  std::vector<double> off{0.25, 0.25};
  CHECK_FALSE(g.node_at(off));

  // A missing corner only matters when it has weight.
  g.set_value(*g.node_at(std::vector<double>{1.0, 1.0}), std::numeric_limits<double>::quiet_NaN());
  CHECK_FALSE(g.interpolate(std::vector<double>{0.75, 0.75}));
  CHECK(g.interpolate(std::vector<double>{0.5, 0.75}));

  auto s = RegularGrid::symmetric(1, 20, 0.05);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.point(i)[0] == -s.point(s.size() - 1 - i)[0]);
  CHECK(s.upper(0) == doctest::Approx(1.0));
}

TEST_CASE("legendre transform of a synthetic parabola") {
  GTable g = parabola();
  FTable f = legendre_f(g);
  const RegularGrid& v = f.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double u = v.point(i)[0];
    if (std::abs(u) <= 2) CHECK(std::abs(v.value(i) - parabola_f(u)) <= 0.02);
    CHECK(v.value(i) <= parabola_f(u) + 1e-12);  // sup over fewer points
  }
  CHECK(f.evenness_defect() == 0.0);
  CHECK(f.convexity_defect() <= 1e-12);

  // Default u step 0.25: nodes 0, +-0.25, +-0.5 within radius 0.5.
  auto near = f.profile_near_zero(0.5);
  REQUIRE(near.size() == 5);
  for (auto [r, df] : near) CHECK(df == doctest::Approx(parabola_f(r) - parabola_f(0)).epsilon(0.02));

  auto rep = asymptote_check_d1(f, 1.0, 0.0, 1e-12);
  CHECK(rep.slope == doctest::Approx(1.0));
  CHECK(rep.excess_nonincreasing);
  CHECK(rep.lower_bound_ok);
  CHECK(rep.passed());

  std::ostringstream os;
  f.write_csv(os);
  CHECK(os.str().rfind("u0,f\n", 0) == 0);
}

TEST_CASE("legendre transform in two dimensions") {
  // g(x) = 1 - |x|^2 gives f(u) = |u|^2 / 4 + 1 for |u| <= 2.
  auto grid = RegularGrid::symmetric(2, 10, 0.1);
  GTable g = synthetic_gtable(grid, [](const std::vector<double>& x) { return 1 - x[0] * x[0] - x[1] * x[1]; });
  FTable f = legendre_f(g, RegularGrid::symmetric(2, 4, 0.25));
  for (std::size_t i = 0; i < f.values().size(); ++i) {
    auto u = f.values().point(i);
    CHECK(std::abs(f.values().value(i) - ((u[0] * u[0] + u[1] * u[1]) / 4 + 1)) <= 0.02);
  }
  CHECK(f.evenness_defect() == 0.0);
  CHECK(f.convexity_defect() <= 1e-12);
}

TEST_CASE("symmetrization, concave majorant and validation") {
  auto grid = RegularGrid::symmetric(1, 4, 0.25);
  GTable g = synthetic_gtable(grid, [](const std::vector<double>& x) { return 1.2 - x[0] * x[0] + 0.1 * x[0]; });
  GTable s = g.symmetrized();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double x = grid.point(i)[0];
    CHECK(s.values().value(i) == doctest::Approx(1.2 - x * x).epsilon(1e-12));
    CHECK(s.values().value(i) == s.values().value(grid.size() - 1 - i));
  }

  auto g2 = synthetic_gtable(RegularGrid::symmetric(2, 3, 0.25),
                             [](const std::vector<double>& x) { return 2 + x[0] - 0.5 * x[1] + x[0] * x[1]; });
  auto s2 = g2.symmetrized();
  for (std::size_t i = 0; i < s2.values().size(); ++i) {
    auto p = s2.values().point(i);
    // Orbit mean of the linear parts vanishes; x0 x1 averages to 0 as well.
    CHECK(s2.values().value(i) == doctest::Approx(2.0));
    std::vector<double> q{p[1], -p[0]};
    CHECK(s2.values().value(i) == s2.values().value(*s2.values().node_at(q)));
  }

  // A dip at the origin is removed by the majorant; concave data is kept.
  GTable dip = synthetic_gtable(grid, [](const std::vector<double>& x) {
    return std::abs(x[0]) < 1e-12 ? 0.5 : 1 - x[0] * x[0];
  });
  GTable m = dip.concave_majorant();
  std::vector<double> zero{0.0};
  CHECK(*m.at(zero) == doctest::Approx(1 - 0.0625));
  GTable kept = parabola(0.25).concave_majorant();
  GTable orig = parabola(0.25);
  for (std::size_t i = 0; i < kept.values().size(); ++i)
    CHECK(kept.values().value(i) == doctest::Approx(orig.values().value(i)));

  CHECK_NOTHROW(g.validate());
  GTable neg = synthetic_gtable(grid, [](const std::vector<double>& x) { return x[0]; });
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
  GTable inf = synthetic_gtable(grid, [](const std::vector<double>&) { return std::numeric_limits<double>::infinity(); });
  CHECK_THROWS_AS(inf.validate(), std::invalid_argument);
  GTable empty = synthetic_gtable(grid, [](const std::vector<double>&) { return std::nan(""); });
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("GTable CSV round trip") {
  auto grid = RegularGrid::symmetric(2, 3, 0.1);
  GTable g = synthetic_gtable(grid, [](const std::vector<double>& x) {
    return std::abs(x[0]) > 0.25 ? std::nan("") : 1.5 - x[0] * x[0] - 0.7 * x[1] * x[1];
  });
  auto path = std::filesystem::temp_directory_path() / "bdlab_gtable_roundtrip.csv";
  {
    std::ofstream out(path);
    g.write_csv(out);
  }
  GTable r = GTable::read_csv(path.string());
  REQUIRE(r.dim() == 2);
  std::size_t seen = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto p = grid.point(i);
    auto a = g.at(p);
    auto b = r.at(p);
    if (!a) continue;
    ++seen;
    REQUIRE(b);
    CHECK(*b == *a);
  }
  CHECK(seen == 5 * 7);
  std::filesystem::remove(path);
}

TEST_CASE("gamma samples are passage times on shared clocks") {
  ShapeOptions opt;
  opt.seed = 77;
  const int n = 8;
  Site target{3};
  auto curves = gamma_curves(target, 12, n, 0, 6, opt);
  REQUIRE(curves.size() == 6);
  for (int r = 0; r < 6; ++r) {
    ClockField clocks(derive_seed(77, "shape/gamma", {static_cast<std::uint64_t>(r)}));
    bd::SeedSpec spec{Site::origin(1), 0};
    for (std::int64_t h = 0; h <= 12; h += 3) {
      auto t = bd::passage_time(spec, clocks, target, h);
      REQUIRE(t);
      CHECK(curves[r][h] == doctest::Approx(*t / n).epsilon(1e-15));
    }
    for (std::size_t h = 1; h < curves[r].size(); ++h) CHECK(curves[r][h] >= curves[r][h - 1]);
  }
  std::vector<double> zero{0.0};
  auto e0 = estimate_gamma(zero, 0.0, n, 10, opt);
  CHECK(e0.mean == 0.0);
  CHECK(e0.valid);

  // Timeouts beyond 1% invalidate an estimate.
  std::vector<double> samples(50, 1.0);
  samples[3] = std::numeric_limits<double>::infinity();
  CHECK(summarize_gamma(zero, 1.0, n, samples).valid == false);
  samples.resize(100, 1.0);
  CHECK(summarize_gamma(zero, 1.0, n, samples).valid);
}

TEST_CASE("subadditivity of mean passage times") {
  Site u{4}, v{-2};
  auto rep = check_subadditive(u, 6, v, 5, 1, 60, 9);
  CHECK(rep.holds);
  CHECK(rep.joint.count == 60);
}

TEST_CASE("solving gamma(x, g) = 1") {
  MemoryCache cache;
  std::uint64_t runs = 0;
  SolveOptions opt;
  opt.shape.seed = 5;
  opt.shape.cache = &cache;
  opt.shape.runs = &runs;
  std::vector<double> zero{0.0};
  GRoot r = solve_g(zero, 16, 20, 0.02, opt);
  CHECK(r.g > 1.4);
  CHECK(r.g < 2.2);
  CHECK(r.ci_low < r.g);
  CHECK(r.ci_high > r.g);
  CHECK(r.bracket_low < r.bracket_high);
  CHECK(runs >= 20);
  CHECK(runs == static_cast<std::uint64_t>(r.replicas));

  // Every probe of a repeat is served by the cache.
  runs = 0;
  GRoot again = solve_g(zero, 16, 20, 0.02, opt);
  CHECK(runs == 0);
  CHECK(again.g == r.g);
  CHECK(again.std_error == r.std_error);

  SolveOptions low = opt;
  low.b_max = 0.5;
  CHECK_THROWS_AS(solve_g(zero, 16, 20, 0.02, low), NotBracketed);
  std::vector<double> far{2.0};
  CHECK_THROWS_AS(solve_g(far, 16, 20, 0.02, opt), std::invalid_argument);

  // g decreases away from the origin.
  std::vector<double> half{0.5};
  GRoot rh = solve_g(half, 16, 20, 0.02, opt);
  CHECK(rh.g < r.g);
}

TEST_CASE("estimated table is symmetric and usable") {
  SolveOptions opt;
  opt.shape.seed = 3;
  auto grid = RegularGrid::symmetric(1, 2, 0.25);
  GTable g = estimate_gtable(grid, fpp::B0Table::interval(), 0.9, 8, 12, 0.05, opt);
  CHECK_NOTHROW(g.validate());
  GTable s = g.symmetrized();
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(s.values().value(i) == s.values().value(grid.size() - 1 - i));
  FTable f = legendre_f(s);
  CHECK(f.evenness_defect() == 0.0);
  CHECK(f.convexity_defect() <= 1e-12);
}
