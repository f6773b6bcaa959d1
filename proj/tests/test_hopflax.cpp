#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "bdlab/csv.hpp"
#include "bdlab/hopflax.hpp"

using namespace bdlab;
using namespace bdlab::hopflax;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

shape::GTable parabola_table(double extent = 0.95, double step = 0.05) {
  int half = static_cast<int>(std::lround(extent / step));
  return shape::synthetic_gtable(RegularGrid::symmetric(1, half, step),
                                 [](const std::vector<double>& x) { return 2 - 1.2 * x[0] * x[0]; });
}

// Oracle: direct sup over a fine grid of y in x - t (1 - delta) B0.
double brute_sup(double x, double t, const ProfileSpec& psi0, const shape::GTable& g, int steps = 200000) {
  double best = -kInf;
  for (int k = 0; k <= steps; ++k) {
    double z = -0.95 + 1.9 * k / steps;
    std::vector<double> zv{z}, y{x - t * z};
    auto gz = g.at(zv);
    if (!gz) continue;
    best = std::max(best, psi0(y) + t * *gz);
  }
  return best;
}

double psi_at(double x, double t, const ProfileSpec& p, const shape::GTable& g, const EvalOptions& opt = {}) {
  std::vector<double> xv{x};
  return eval_psi(xv, t, p, g, fpp::B0Table::interval(), opt).value;
}

}  // namespace

TEST_CASE("profiles evaluate as specified") {
  std::vector<double> y{0.3}, o{0.0};
  CHECK(ProfileSpec::flat(1.5)(y) == 1.5);
  CHECK(ProfileSpec::seed({0.0})(o) == 0.0);
  CHECK(ProfileSpec::seed({0.0})(y) == -kInf);
  CHECK(ProfileSpec::wedge(2.0)(y) == doctest::Approx(-0.6));
  std::vector<double> y2{0.3, -0.2};
  CHECK(ProfileSpec::wedge(1.0, 2)(y2) == doctest::Approx(-0.5));
  CHECK(ProfileSpec::spike(Site{4}, 3.0)(y) == 0.0);
  CHECK(ProfileSpec::wedge(1.0).atoms().size() == 1);
  CHECK(ProfileSpec::flat(0.0).atoms().empty());
  CHECK_THROWS_AS(ProfileSpec::wedge(-1.0), std::invalid_argument);
}

TEST_CASE("profile config round trip") {
  for (const auto& p : {ProfileSpec::flat(0.25), ProfileSpec::seed({0.5}), ProfileSpec::wedge(0.75),
                        ProfileSpec::spike(Site{-3}, 1.5), ProfileSpec::seed({0.5, -1.0})}) {
    ProfileSpec q = ProfileSpec::parse(p.to_params());
    CHECK(q.kind == p.kind);
    CHECK(q.dim() == p.dim());
    CHECK(q.to_params() == p.to_params());
  }
  CHECK_THROWS_AS(ProfileSpec::parse({{"kind", "bogus"}}), std::invalid_argument);
  CHECK_THROWS_AS(ProfileSpec::parse({{"level", "1"}}), std::invalid_argument);
  CHECK_THROWS_AS(ProfileSpec::parse({{"kind", "spike"}, {"site", "0.5"}}), std::invalid_argument);

  auto path = std::filesystem::temp_directory_path() / "bdlab_profile_table.csv";
  {
    std::ofstream out(path);
    out << "x0,value\n";
    for (int k = -4; k <= 4; ++k) out << k * 0.25 << ',' << -std::abs(k * 0.25) << '\n';
  }
  ProfileSpec t = ProfileSpec::parse({{"kind", "table"}, {"file", path.string()}});
  std::vector<double> a{0.375}, outside{1.5};
  CHECK(t(a) == doctest::Approx(-0.375));
  CHECK(t(outside) == -kInf);
  CHECK(t.to_params().at("file") == path.string());
  std::filesystem::remove(path);
}

TEST_CASE("seed profile reproduces t g(x/t)") {
  auto g = parabola_table();
  auto seed = ProfileSpec::seed({0.0});
  for (double t : {0.5, 1.0, 2.0})
    for (double x : {0.0, 0.1, -0.37, 0.8}) {
      std::vector<double> z{x / t};
      auto gz = g.at(z);
      if (!gz || std::abs(x / t) > 0.95) {
        CHECK(psi_at(x, t, seed, g) == -kInf);
        continue;
      }
      CHECK(psi_at(x, t, seed, g) == doctest::Approx(t * *gz).epsilon(1e-14));
    }
  // Far away no candidate can reach the seed.
  CHECK(psi_at(3.0, 1.0, seed, g) == -kInf);
}

TEST_CASE("flat, spike and t = 0") {
  auto g = parabola_table();
  // Brute-force maximum over the table nodes.
  double gmax = -kInf;
  for (std::size_t i = 0; i < g.values().size(); ++i) gmax = std::max(gmax, g.values().value(i));
  for (double t : {0.3, 1.0, 4.0}) {
    CHECK(psi_at(0.2, t, ProfileSpec::flat(0.0), g) == doctest::Approx(t * gmax).epsilon(1e-14));
    std::vector<double> zero{0.0};
    CHECK(psi_at(-0.4, t, ProfileSpec::spike(Site{0}, 2.0), g) == doctest::Approx(t * *g.at(zero)).epsilon(1e-14));
  }
  CHECK(psi_at(0.7, 0.0, ProfileSpec::wedge(1.0), g) == doctest::Approx(-0.7));
  CHECK(psi_at(0.7, 0.0, ProfileSpec::seed({0.0}), g) == -kInf);
  CHECK(psi_at(0.1, 1.0, ProfileSpec::flat(kInf), g) == kInf);
  CHECK_THROWS_AS(psi_at(0.1, -1.0, ProfileSpec::flat(0.0), g), std::invalid_argument);
}

TEST_CASE("wedge sup agrees with a fine brute-force search") {
  auto g = parabola_table();
  for (double slope : {0.3, 1.0, 2.5})
    for (double x : {0.0, 0.33, -0.71})
      for (double t : {0.5, 1.5}) {
        auto w = ProfileSpec::wedge(slope);
        double v = psi_at(x, t, w, g);
        double b = brute_sup(x, t, w, g);
        CHECK(v >= b - 1e-12);
        CHECK(v - b <= 1e-4);
      }
}

TEST_CASE("coverage diagnostic counts skipped candidates") {
  auto g = parabola_table(0.5);
  std::vector<double> x{0.2};
  auto v = eval_psi(x, 1.0, ProfileSpec::flat(0.0), g, fpp::B0Table::interval());
  CHECK(v.skipped == 0);  // the candidate grid stays inside the table
  // A table wider than (1 - delta) B0 loses the outer nodes.
  auto wide = parabola_table(1.0);
  auto w = eval_psi(x, 1.0, ProfileSpec::flat(0.0), wide, fpp::B0Table::interval());
  CHECK(w.skipped > 0);
  CHECK(w.candidates > 0);
}

TEST_CASE("monotonicity, translation and vertical shift") {
  auto g = parabola_table();
  auto grid = RegularGrid::symmetric(1, 40, 0.05);
  RegularGrid lo = grid, hi = grid, shifted = grid, lifted = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double y = grid.point(i)[0];
    double base = -std::abs(y - 0.3) + 0.2 * std::cos(5 * y);
    lo.set_value(i, base);
    hi.set_value(i, base + 0.1 * (1 + std::sin(3 * y)));
    lifted.set_value(i, base + 0.75);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto p = grid.point(i);
    p[0] -= 0.25;  // five grid steps
    auto src = grid.node_at(p);
    shifted.set_value(i, src ? lo.value(*src) : std::nan(""));
  }
  auto plo = ProfileSpec::table(lo), phi = ProfileSpec::table(hi);
  auto psh = ProfileSpec::table(shifted), plift = ProfileSpec::table(lifted);
  for (double x : {-0.5, -0.1, 0.0, 0.35, 0.6})
    for (double t : {0.2, 0.7}) {
      double a = psi_at(x, t, plo, g);
      CHECK(psi_at(x, t, phi, g) >= a);
      CHECK(psi_at(x, t, plift, g) == doctest::Approx(a + 0.75).epsilon(1e-13));
      CHECK(psi_at(x + 0.25, t, psh, g) == doctest::Approx(a).epsilon(1e-12));
    }
  CHECK(psi_at(0.1, 1.0, ProfileSpec::flat(2.0), g) == doctest::Approx(psi_at(0.1, 1.0, ProfileSpec::flat(0.0), g) + 2));
}

TEST_CASE("growth in time") {
  auto g = parabola_table();
  for (const auto& p : {ProfileSpec::wedge(1.0), ProfileSpec::flat(0.0), ProfileSpec::seed({0.0})})
    for (double x : {0.0, 0.2, -0.4}) {
      double prev = psi_at(x, 0.5, p, g);
      for (double t : {0.75, 1.0, 1.5, 2.0}) {
        double v = psi_at(x, t, p, g);
        CHECK(v >= prev - 1e-12);
        prev = v;
      }
    }
}

TEST_CASE("semigroup residual") {
  auto g = parabola_table();
  auto b0 = fpp::B0Table::interval();
  std::vector<double> x{0.137};
  CHECK(semigroup_residual(x, 0.4, 1.0, ProfileSpec::flat(0.0), g, b0) <= 1e-14);
  CHECK(semigroup_residual(x, 0.5, 1.0, ProfileSpec::seed({0.0}), g, b0) <= 0.05);
  CHECK(semigroup_residual(x, 0.999, 1.0, ProfileSpec::wedge(1.0), g, b0) <= 1e-12);
  CHECK_THROWS_AS(semigroup_residual(x, 1.0, 1.0, ProfileSpec::flat(0.0), g, b0), std::invalid_argument);

  std::vector<std::vector<double>> xs{{0.0}, {0.137}, {-0.291}, {0.413}};
  for (const auto& p : {ProfileSpec::seed({0.0}), ProfileSpec::flat(0.0), ProfileSpec::wedge(1.0)}) {
    auto st = semigroup_refinement(p, g, b0, xs, 0.5, 1.0);
    CHECK(st.residuals.size() == 3);
    CHECK(st.ratios.size() == 2);
    CHECK(st.passed);
  }

  // A nonconcave table breaks the semigroup identity at every resolution,
  // so the study must notice.
  auto bumpy = shape::synthetic_gtable(RegularGrid::symmetric(1, 19, 0.05), [](const std::vector<double>& z) {
    return 2 - 1.2 * z[0] * z[0] + 0.3 * std::abs(std::sin(20 * z[0]));
  });
  auto st = semigroup_refinement(ProfileSpec::seed({0.0}), bumpy, b0, xs, 0.5, 1.0);
  CHECK_FALSE(st.passed);
}

TEST_CASE("moduli of continuity") {
  auto g = parabola_table();
  auto b0 = fpp::B0Table::interval();
  std::vector<ModulusSample> samples;
  for (double x : {-0.5, 0.0, 0.3})
    for (double dx : {0.05, 0.4})
      for (double s : {0.0, 0.5, 1.0}) samples.push_back({{x}, {x + dx}, s, 1.0});
  for (const auto& p : {ProfileSpec::wedge(1.0), ProfileSpec::flat(0.0), ProfileSpec::wedge(3.0)}) {
    auto rep = modulus_check(p, g, b0, samples);
    CHECK(rep.checked == samples.size());
    CHECK(rep.passed());
    CHECK(rep.worst_time_margin >= -1e-9);
  }
  // Wedge of slope 1: the spatial bound is tight at the scale of the slack.
  auto rep = modulus_check(ProfileSpec::wedge(1.0), g, b0, {{{0.6}, {0.8}, 0.0, 0.5}});
  CHECK(rep.worst_space_margin == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(modulus_check(ProfileSpec::seed({0.0}), g, b0, samples), std::invalid_argument);
}

TEST_CASE("psi field export and GTable interchange") {
  auto g = parabola_table();
  auto path = std::filesystem::temp_directory_path() / "bdlab_hopflax_gtable.csv";
  {
    std::ofstream out(path);
    g.write_csv(out);
  }
  auto loaded = shape::GTable::read_csv(path.string());
  std::filesystem::remove(path);

  auto xs = RegularGrid::symmetric(1, 4, 0.25);
  auto wedge = ProfileSpec::wedge(1.0);
  PsiField f = eval_psi_field(xs, {0.0, 0.5, 1.0}, wedge, loaded, fpp::B0Table::interval());
  REQUIRE(f.values.size() == 3);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(f.values[0][i] == wedge(xs.point(i)));
    CHECK(f.values[2][i] == psi_at(xs.point(i)[0], 1.0, wedge, g));
  }
  std::ostringstream os;
  f.write_csv(os);
  auto lines = split(os.str(), '\n');
  CHECK(lines.front() == "x0,t,psi");
  CHECK(lines.size() == 1 + 3 * xs.size() + 1);  // trailing newline
}
