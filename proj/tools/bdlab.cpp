// bdlab: simulate | estimate | verify front end.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bdlab/acceptance.hpp"
#include "bdlab/cache.hpp"
#include "bdlab/config.hpp"
#include "bdlab/csv.hpp"
#include "bdlab/deposition.hpp"
#include "bdlab/fpp.hpp"
#include "bdlab/hopflax.hpp"
#include "bdlab/hydro.hpp"
#include "bdlab/random.hpp"
#include "bdlab/shape.hpp"

namespace fs = std::filesystem;
using namespace bdlab;

namespace {

struct Context {
  Config config;
  RunConfig run;
  fs::path out;
};

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

Context load(const Overrides& o) {
  Context c;
  if (!o.config_path.empty()) c.config = Config::read(o.config_path);
  if (o.seed) c.config.set("", "seed", std::to_string(*o.seed));
  if (o.workers) c.config.set("", "workers", std::to_string(*o.workers));
  if (o.out) c.config.set("", "out", *o.out);
  c.run = RunConfig::from(c.config);
  c.out = c.run.out;
  fs::create_directories(c.out);
  // The effective configuration, so every output can be regenerated.
  std::ofstream(c.out / "run.cfg") << c.config.to_text();
  return c;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

Site site_or_origin(const Config& c, const std::string& sec, const std::string& key, int dim) {
  auto v = c.get_ints(sec, key, std::vector<int>(static_cast<std::size_t>(dim), 0));
  if (static_cast<int>(v.size()) != dim) throw ConfigError(sec + "." + key + " needs " + std::to_string(dim) + " coordinates");
  return Site(v);
}

hopflax::ProfileSpec profile_from(const Context& c) {
  const auto& sec = c.config.section("profile");
  if (sec.empty()) throw ConfigError("missing [profile] section");
  hopflax::Params p(sec.begin(), sec.end());
  if (!p.count("dim")) p["dim"] = std::to_string(c.run.dim);
  return hopflax::ProfileSpec::parse(p);
}

fpp::B0Table b0_from(const Context& c, const std::string& sec) {
  std::string path = c.config.get(sec, "b0", "");
  if (path.empty()) {
    if (c.run.dim != 1) throw ConfigError(sec + ".b0 is required when dim > 1");
    return fpp::B0Table::interval();
  }
  if (!fs::exists(path)) throw std::runtime_error("missing B0 table file: " + path);
  return fpp::B0Table::read_csv(path);
}

shape::GTable gtable_from(const Context& c, const std::string& sec) {
  std::string path = c.config.get(sec, "gtable", (c.out / "gtable.csv").string());
  if (!fs::exists(path)) throw std::runtime_error("missing GTable file: " + path);
  auto g = shape::GTable::read_csv(path);
  try {
    g.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error("invalid GTable " + path + ": " + e.what());
  }
  return g;
}

// ---- simulate ------------------------------------------------------------

int cmd_simulate(const Context& c) {
  const auto& cfg = c.config;
  const std::string mode = cfg.get("simulate", "mode", "seed");
  const int d = c.run.dim;
  const fs::path file = c.out / cfg.get("simulate", "file", "trajectory.csv");
  auto out = open_out(file);
  bd::write_snapshot_header(out, d);

  if (mode == "synchronous") {
    bd::SyncConfig sc;
    sc.p = cfg.get_double("simulate", "p", 0.5);
    sc.steps = static_cast<int>(cfg.get_int("simulate", "steps", 10));
    if (sc.p <= 0 || sc.p > 1) throw ConfigError("simulate.p must be in (0, 1]");
    if (sc.steps < 1) throw ConfigError("simulate.steps must be >= 1");
    // Influence spreads one site per round, so this margin keeps the
    // observation region exact.
    Box box(d, c.run.radius + sc.steps + 2, c.run.radius);
    bd::SeedSpec spec{site_or_origin(cfg, "simulate", "site", d), cfg.get_int("simulate", "height", 0)};
    auto init = bd::seed_field(spec, box);
    bd::run_synchronous(init, sc, derive_seed(c.run.seed, "cli/synchronous"),
                        [&](const bd::HeightField& f) { bd::write_snapshot_rows(out, f); });
    std::cout << "wrote " << sc.steps << " snapshots to " << file.string() << '\n';
    return 0;
  }

  double horizon = cfg.get_double("simulate", "horizon", 1.0);
  if (horizon < 0) throw ConfigError("simulate.horizon must be >= 0");
  auto times = cfg.get_doubles("simulate", "times", {horizon});
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < 0 || times[k] > horizon || (k && times[k] <= times[k - 1]))
      throw ConfigError("simulate.times must increase within [0, horizon]");
  }

  bd::HeightField init;
  if (mode == "seed") {
    Box box = Box::for_horizon(d, c.run.radius, horizon);
    init = bd::seed_field({site_or_origin(cfg, "simulate", "site", d), cfg.get_int("simulate", "height", 0)}, box);
  } else if (mode == "profile") {
    int n = static_cast<int>(cfg.get_int("simulate", "n", c.run.scales.back()));
    auto psi0 = profile_from(c);
    // horizon and times are lattice times here.
    init = hydro::discretize_profile(psi0, n, Box::for_horizon(d, c.run.radius, horizon));
  } else {
    throw ConfigError("simulate.mode must be seed, profile or synchronous, not '" + mode + "'");
  }

  bd::Simulator sim(init, ClockField(derive_seed(c.run.seed, "cli/simulate")));
  for (double t : times) {
    sim.advance_to(t);
    if (sim.breached()) throw std::runtime_error("light-cone breach before t = " + std::to_string(t));
    bd::write_snapshot_rows(out, sim.field());
  }
  std::cout << "wrote " << times.size() << " snapshots to " << file.string() << " (" << sim.events_processed()
            << " events)\n";
  return 0;
}

// ---- estimate ------------------------------------------------------------

int cmd_estimate(const Context& c) {
  const auto& cfg = c.config;
  const std::string what = cfg.get("estimate", "what", "mu");
  const int d = c.run.dim;

  if (what == "mu") {
    std::vector<double> e1(static_cast<std::size_t>(d), 0.0);
    e1[0] = 1.0;
    auto x = cfg.get_doubles("estimate", "x", e1);
    if (static_cast<int>(x.size()) != d) throw ConfigError("estimate.x needs " + std::to_string(d) + " coordinates");
    int n = static_cast<int>(cfg.get_int("estimate", "n", 200));
    fpp::MuOptions mo;
    mo.seed = derive_seed(c.run.seed, "cli/mu");
    auto mu = fpp::estimate_mu(x, n, c.run.replicas, mo);
    auto out = open_out(c.out / "mu.csv");
    for (int a = 0; a < d; ++a) out << 'x' << a << ',';
    out << "estimate,stderr,n,replicas,seed\n";
    for (double v : x) out << format_double(v) << ',';
    out << format_double(mu.mean) << ',' << format_double(mu.std_error) << ',' << n << ',' << c.run.replicas << ','
        << mo.seed << '\n';
    std::cout << "mu = " << mu.mean << " +- " << mu.std_error << '\n';
    return 0;
  }

  if (what == "b0") {
    int n = static_cast<int>(cfg.get_int("estimate", "n", 100));
    int count = static_cast<int>(cfg.get_int("estimate", "directions", 16));
    fpp::MuOptions mo;
    mo.seed = derive_seed(c.run.seed, "cli/b0");
    auto b0 = fpp::estimate_B0(fpp::default_directions(d, count), n, c.run.replicas, mo);
    auto out = open_out(c.out / "b0.csv");
    b0.write_csv(out);
    std::cout << "B0 radii in [" << b0.min_radius() << ", " << b0.max_radius() << "]\n";
    return 0;
  }

  if (what == "gtable") {
    int n = static_cast<int>(cfg.get_int("estimate", "n", c.run.scales.back()));
    int half = static_cast<int>(cfg.get_int("estimate", "half", 2));
    double step = cfg.get_double("estimate", "step", 0.25);
    auto b0 = b0_from(c, "estimate");
    FileCache cache((c.out / "cache.csv").string());
    std::uint64_t runs = 0;
    shape::SolveOptions so;
    so.shape.seed = derive_seed(c.run.seed, "cli/gtable");
    so.shape.cache = &cache;
    so.shape.runs = &runs;
    so.b_max = cfg.get_double("estimate", "b_max", so.b_max);
    auto g = shape::estimate_gtable(RegularGrid::symmetric(d, half, step), b0,
                                    cfg.get_double("estimate", "mu_cap", 0.7), n, c.run.replicas,
                                    cfg.get_double("estimate", "tol", 0.01), so);
    auto out = open_out(c.out / "gtable.csv");
    g.write_csv(out);
    std::cout << "new simulations: " << runs << " (cache holds " << cache.size() << " samples)\n";
    return 0;
  }

  if (what == "ftable") {
    auto g = gtable_from(c, "estimate");
    auto f = shape::legendre_f(g);
    auto out = open_out(c.out / "ftable.csv");
    f.write_csv(out);
    std::cout << "convexity defect " << f.convexity_defect() << "\nf(u) - f(0) near 0:";
    for (auto [r, df] : f.profile_near_zero(cfg.get_double("estimate", "near_zero", 1.0))) std::cout << ' ' << r << ':' << df;
    std::cout << '\n';
    return 0;
  }

  throw ConfigError("estimate.what must be mu, b0, gtable or ftable, not '" + what + "'");
}

// ---- verify --------------------------------------------------------------

int cmd_verify(const Context& c) {
  const auto& cfg = c.config;
  const std::string suite = cfg.get("verify", "suite", "coupling");

  if (suite == "coupling" || suite == "acceptance") {
    acceptance::Options ao;
    ao.seed = c.run.seed;
    ao.workers = c.run.workers;
    ao.out_dir = c.out.string();
    acceptance::Suite s(ao);
    std::vector<acceptance::CriterionResult> results;
    auto report = [](const acceptance::CriterionResult& r) { std::cout << r.line() << '\n' << std::flush; };
    if (suite == "coupling") {
      for (int id : {1, 2}) {
        results.push_back(s.run(id));
        report(results.back());
      }
    } else {
      results = s.run_all(report);
    }
    auto summary = acceptance::summary_json(results);
    open_out(c.out / (suite + ".json")) << summary.dump(2) << '\n';
    return summary["passed"].get<bool>() ? 0 : 1;
  }

  if (suite == "hydro") {
    // Table problems surface before any simulation starts.
    auto g = gtable_from(c, "verify");
    auto b0 = b0_from(c, "verify");
    hydro::Scenario sc;
    sc.name = cfg.get("verify", "name", "scenario");
    sc.psi0 = profile_from(c);
    sc.t = cfg.get_double("verify", "t", 1.0);
    for (double x : cfg.get_doubles("verify", "xs", {0.0})) sc.xs.push_back(std::vector<double>(1, x));
    if (c.run.dim != 1) throw ConfigError("verify.suite = hydro supports dim = 1 only");
    sc.scales = c.run.scales;
    sc.replicas = c.run.replicas;
    sc.seed = c.run.seed;
    hydro::HydroOptions ho;
    ho.tol = cfg.get_double("verify", "tol", ho.tol);
    ho.workers = c.run.workers;
    int schedules = static_cast<int>(cfg.get_int("verify", "schedules", 1));
    if (schedules < 1) throw ConfigError("verify.schedules must be >= 1");

    nlohmann::json summary;
    bool ok;
    if (schedules == 1) {
      auto r = hydro::run_scenario(sc, g, b0, ho);
      auto csv = open_out(c.out / ("hydro_" + sc.name + ".csv"));
      r.write_csv(csv);
      summary = r.to_json();
      ok = r.passed;
    } else {
      auto st = hydro::schedule_study(sc, g, b0, schedules, ho);
      auto csv = open_out(c.out / ("hydro_" + sc.name + ".csv"));
      summary["reports"] = nlohmann::json::array();
      for (std::size_t k = 0; k < st.reports.size(); ++k) {
        st.reports[k].write_csv(csv);
        summary["reports"].push_back(st.reports[k].to_json());
      }
      summary["pass_fraction"] = st.pass_fraction;
      summary["monotone_fraction"] = st.monotone_fraction;
      ok = st.passed();
    }
    summary["passed"] = ok;
    open_out(c.out / ("hydro_" + sc.name + ".json")) << summary.dump(2) << '\n';
    std::cout << "hydro " << sc.name << (ok ? " PASS" : " FAIL") << '\n';
    return ok ? 0 : 1;
  }

  throw ConfigError("verify.suite must be coupling, acceptance or hydro, not '" + suite + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ballistic deposition simulation and shape estimation"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "config file (key = value with [sections])")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "global seed, overrides the config");
    sub->add_option("--workers", o.workers, "replica worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
  };
  auto* sim = app.add_subcommand("simulate", "write trajectory snapshots");
  auto* est = app.add_subcommand("estimate", "estimate mu, B0, g or f tables");
  auto* ver = app.add_subcommand("verify", "run coupling, acceptance or hydro checks");
  for (auto* s : {sim, est, ver}) add_common(s);
  CLI11_PARSE(app, argc, argv);

  try {
    Context c = load(o);
    if (sim->parsed()) return cmd_simulate(c);
    if (est->parsed()) return cmd_estimate(c);
    return cmd_verify(c);
  } catch (const std::exception& e) {
    std::cerr << "bdlab: " << e.what() << '\n';
    return 2;
  }
}
