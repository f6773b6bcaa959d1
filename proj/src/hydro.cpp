#include "bdlab/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bdlab/csv.hpp"
#include "bdlab/parallel.hpp"
#include "bdlab/random.hpp"

namespace bdlab::hydro {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// floor(n v) robust to the round-off in n * (u / n).
ExtHeight scaled_floor(double v, int n) {
  if (v == -kInf) return kNegInf;
  if (v == kInf) return kPosInf;
  double s = n * v;
  return ExtHeight(static_cast<ExtHeight::rep>(std::floor(s + 1e-9 * std::max(1.0, std::abs(s)))));
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

int observation_radius(const std::vector<Site>& sites) {
  int r = 0;
  for (const auto& u : sites)
    for (int a = 0; a < u.dim(); ++a) r = std::max(r, std::abs(u[a]));
  return r;
}

double scaled(const bd::HeightField& f, const Site& u, int n) { return f.at(u).as_double() / n; }

double abs_error(double mean, double pred) {
  if (mean == pred) return 0.0;
  return std::abs(mean - pred);
}

}  // namespace

bd::HeightField discretize_profile(const hopflax::ProfileSpec& psi0, int n, const Box& box) {
  if (n < 1) throw std::invalid_argument("discretize_profile needs n >= 1");
  if (psi0.dim() != box.dim()) throw std::invalid_argument("profile and box dimensions differ");
  using Kind = hopflax::ProfileSpec::Kind;
  bd::HeightField f(box, kNegInf, 0.0);
  if (psi0.kind == Kind::seed) {
    Site p = lattice_point(psi0.point, n);
    if (!box.contains(p)) throw std::invalid_argument("seed point lies outside the box");
    f.set(p, ExtHeight(0));
    return f;
  }
  std::vector<double> y(static_cast<std::size_t>(box.dim()));
  for (std::size_t i = 0; i < box.size(); ++i) {
    for (int a = 0; a < box.dim(); ++a) y[static_cast<std::size_t>(a)] = static_cast<double>(box.coord(i, a)) / n;
    f.set(i, scaled_floor(psi0(y), n));
  }
  if (psi0.kind == Kind::spike) {
    if (!box.contains(psi0.spike_site)) throw std::invalid_argument("spike site lies outside the box");
    f.set(psi0.spike_site, scaled_floor(psi0.spike_height, n));
  }
  return f;
}

ConvergenceReport run_scenario(const Scenario& sc, const shape::GTable& g, const fpp::B0Table& b0,
                               const HydroOptions& opt) {
  if (!(sc.t > 0)) throw std::invalid_argument("scenario time must be positive");
  if (sc.scales.empty() || sc.xs.empty()) throw std::invalid_argument("scenario needs scales and points");
  for (std::size_t k = 1; k < sc.scales.size(); ++k)
    if (sc.scales[k] <= sc.scales[k - 1]) throw std::invalid_argument("scales must be strictly increasing");
  if (sc.replicas < 2) throw std::invalid_argument("scenario needs at least 2 replicas");
  g.validate();

  ConvergenceReport rep;
  rep.name = sc.name;
  rep.profile = sc.psi0.to_params();
  rep.t = sc.t;
  rep.scales = sc.scales;
  rep.replicas = sc.replicas;
  rep.seed = sc.seed;
  rep.tol = opt.tol;
  rep.g_n = g.n();
  rep.g_replicas = g.replicas();
  rep.g_seed = g.seed();

  std::vector<double> predictions;
  for (const auto& x : sc.xs) predictions.push_back(hopflax::eval_psi(x, sc.t, sc.psi0, g, b0, opt.eval).value);

  // samples[n index][x index][replica]
  std::vector<std::vector<std::vector<double>>> samples(sc.scales.size());
  for (std::size_t ni = 0; ni < sc.scales.size(); ++ni) {
    const int n = sc.scales[ni];
    std::vector<Site> obs;
    for (const auto& x : sc.xs) obs.push_back(lattice_point(x, n));
    const double horizon = n * sc.t;
    Box box = Box::for_horizon(sc.psi0.dim(), observation_radius(obs), horizon);
    const bd::HeightField initial = discretize_profile(sc.psi0, n, box);
    std::vector<std::vector<double>> by_rep(static_cast<std::size_t>(sc.replicas));
    parallel_for(by_rep.size(), opt.workers, [&](std::size_t r) {
      ClockField clocks(derive_seed(sc.seed, "hydro/run", {static_cast<std::uint64_t>(n), r}));
      auto res = bd::run(initial, clocks, horizon);
      if (res.breached) throw std::runtime_error("light-cone breach in scenario " + sc.name);
      for (const auto& u : obs) by_rep[r].push_back(scaled(res.field, u, n));
    });
    samples[ni].assign(sc.xs.size(), {});
    for (const auto& row : by_rep)
      for (std::size_t xi = 0; xi < row.size(); ++xi) samples[ni][xi].push_back(row[xi]);
  }

  rep.passed = true;
  for (std::size_t xi = 0; xi < sc.xs.size(); ++xi) {
    std::vector<PointRecord> series;
    for (std::size_t ni = 0; ni < sc.scales.size(); ++ni) {
      auto s = stats::summarize(samples[ni][xi]);
      PointRecord pr{sc.xs[xi], sc.scales[ni], sc.replicas, s.mean, s.std_error, predictions[xi], 0.0};
      pr.error = abs_error(pr.mean, pr.prediction);
      series.push_back(pr);
      rep.records.push_back(pr);
    }
    PointVerdict v;
    v.x = sc.xs[xi];
    v.final_error = series.back().error;
    v.below_tol = v.final_error <= opt.tol;
    v.final_le_first = series.back().error <= series.front().error;
    v.trend_ok = true;
    for (std::size_t k = 1; k < series.size(); ++k) {
      double slack = opt.ci_z * stats::combined({series[k].std_error, series[k - 1].std_error});
      if (series[k].error > series[k - 1].error + slack) v.trend_ok = false;
    }
    rep.passed = rep.passed && v.passed();
    rep.verdicts.push_back(v);
  }
  return rep;
}

ScheduleStudy schedule_study(const Scenario& sc, const shape::GTable& g, const fpp::B0Table& b0, int schedules,
                             const HydroOptions& opt) {
  if (schedules < 1) throw std::invalid_argument("schedule study needs at least one schedule");
  ScheduleStudy st;
  int pass = 0, mono = 0;
  for (int s = 0; s < schedules; ++s) {
    Scenario run = sc;
    run.seed = derive_seed(sc.seed, "hydro/schedule", {static_cast<std::uint64_t>(s)});
    auto rep = run_scenario(run, g, b0, opt);
    pass += rep.passed ? 1 : 0;
    bool m = std::all_of(rep.verdicts.begin(), rep.verdicts.end(), [](const PointVerdict& v) { return v.final_le_first; });
    mono += m ? 1 : 0;
    st.reports.push_back(std::move(rep));
  }
  st.pass_fraction = static_cast<double>(pass) / schedules;
  st.monotone_fraction = static_cast<double>(mono) / schedules;
  return st;
}

SpikeReport spike_scenario(const std::vector<int>& scales, double t, const shape::GTable& g,
                           const fpp::B0Table& b0, int replicas, std::uint64_t seed, const HydroOptions& opt) {
  if (g.dim() != 1) throw std::invalid_argument("spike scenario is for d = 1");
  if (scales.empty() || replicas < 2 || !(t > 0)) throw std::invalid_argument("bad spike scenario");
  g.validate();
  SpikeReport rep;
  rep.t = t;
  rep.tol = opt.tol;
  std::vector<double> zero{0.0};
  auto g0 = g.at(zero);
  if (!g0) throw std::invalid_argument("GTable does not cover the origin");
  rep.g0 = *g0;
  rep.far_x = t * b0.max_radius() + 1.5;

  const auto spike = hopflax::ProfileSpec::spike(Site{1}, 1.0);
  const auto flat = hopflax::ProfileSpec::flat(0.0, 1);
  rep.dominance_ok = true;
  for (int n : scales) {
    const Site origin{0};
    const Site far{static_cast<int>(std::floor(n * rep.far_x))};
    const double horizon = n * t;
    Box box = Box::for_horizon(1, far[0], horizon);
    const auto init_spike = discretize_profile(spike, n, box);
    const auto init_flat = discretize_profile(flat, n, box);
    std::vector<double> s0(static_cast<std::size_t>(replicas)), f0(s0.size()), sf(s0.size());
    std::vector<std::uint8_t> dom(s0.size(), 1);
    parallel_for(s0.size(), opt.workers, [&](std::size_t r) {
      ClockField clocks(derive_seed(seed, "hydro/spike", {static_cast<std::uint64_t>(n), r}));
      auto a = bd::run(init_spike, clocks, horizon);
      auto b = bd::run(init_flat, clocks, horizon);
      if (a.breached || b.breached) throw std::runtime_error("light-cone breach in spike scenario");
      s0[r] = scaled(a.field, origin, n);
      f0[r] = scaled(b.field, origin, n);
      sf[r] = scaled(a.field, far, n);
      dom[r] = a.field.dominates(b.field) ? 1 : 0;
    });
    SpikeScale sc;
    sc.n = n;
    sc.spike = stats::summarize(s0);
    sc.flat = stats::summarize(f0);
    sc.far = stats::summarize(sf);
    sc.dominates = std::all_of(dom.begin(), dom.end(), [](std::uint8_t d) { return d != 0; });
    rep.dominance_ok = rep.dominance_ok && sc.dominates;
    rep.scales.push_back(sc);
  }
  const auto& last = rep.scales.back();
  rep.lower_bound_ok = last.spike.mean >= 1 + t * rep.g0 - opt.tol;
  rep.excess_ok = last.spike.mean - t * rep.g0 >= 0.7;
  return rep;
}

bd::CouplingReport supremum_decomposition(const hopflax::ProfileSpec& psi0, int n, double t, std::uint64_t seed) {
  if (n > 8) throw std::invalid_argument("supremum decomposition is a small-scale check (n <= 8)");
  const double horizon = n * t;
  Box box = Box::for_horizon(psi0.dim(), n, horizon);
  auto init = discretize_profile(psi0, n, box);
  std::size_t finite = 0;
  for (std::size_t i = 0; i < box.size(); ++i) finite += init.at(i).is_finite() ? 1 : 0;
  if (finite == 0 || finite > 5) throw std::invalid_argument("supremum decomposition needs 1 to 5 finite sites");
  return bd::couple_supremum(init, ClockField(derive_seed(seed, "hydro/supremum", {static_cast<std::uint64_t>(n)})),
                             horizon);
}

void ConvergenceReport::write_csv(std::ostream& out) const {
  const std::size_t d = records.empty() ? 0 : records.front().x.size();
  out << "scenario,";
  for (std::size_t a = 0; a < d; ++a) out << 'x' << a << ',';
  out << "n,replicas,mean,stderr,prediction,error\n";
  for (const auto& r : records) {
    out << name << ',';
    for (double c : r.x) out << format_double(c) << ',';
    out << r.n << ',' << r.replicas << ',' << format_double(r.mean) << ',' << format_double(r.std_error) << ','
        << format_double(r.prediction) << ',' << format_double(r.error) << '\n';
  }
}

nlohmann::json ConvergenceReport::to_json() const {
  nlohmann::json j;
  j["scenario"] = name;
  j["profile"] = profile;
  j["t"] = t;
  j["scales"] = scales;
  j["replicas"] = replicas;
  j["seed"] = seed;
  j["tol"] = tol;
  j["gtable"] = {{"n", g_n}, {"replicas", g_replicas}, {"seed", g_seed}};
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& r : records)
    recs.push_back({{"x", r.x},
                    {"n", r.n},
                    {"replicas", r.replicas},
                    {"mean", number(r.mean)},
                    {"stderr", number(r.std_error)},
                    {"prediction", number(r.prediction)},
                    {"error", number(r.error)}});
  auto& ver = j["verdicts"] = nlohmann::json::array();
  for (const auto& v : verdicts)
    ver.push_back({{"x", v.x},
                   {"final_error", number(v.final_error)},
                   {"below_tol", v.below_tol},
                   {"trend_ok", v.trend_ok},
                   {"final_le_first", v.final_le_first},
                   {"passed", v.passed()}});
  j["passed"] = passed;
  return j;
}

nlohmann::json SpikeReport::to_json() const {
  nlohmann::json j;
  j["t"] = t;
  j["g0"] = g0;
  j["far_x"] = far_x;
  j["tol"] = tol;
  auto& sc = j["scales"] = nlohmann::json::array();
  auto summary = [](const stats::Summary& s) {
    return nlohmann::json{{"mean", number(s.mean)}, {"stderr", number(s.std_error)}, {"count", s.count}};
  };
  for (const auto& s : scales)
    sc.push_back({{"n", s.n}, {"spike", summary(s.spike)}, {"flat", summary(s.flat)}, {"far", summary(s.far)},
                  {"dominates", s.dominates}});
  j["lower_bound_ok"] = lower_bound_ok;
  j["excess_ok"] = excess_ok;
  j["dominance_ok"] = dominance_ok;
  j["passed"] = passed();
  return j;
}

}  // namespace bdlab::hydro
