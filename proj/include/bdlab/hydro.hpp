#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bdlab/coupling.hpp"
#include "bdlab/deposition.hpp"
#include "bdlab/fpp.hpp"
#include "bdlab/hopflax.hpp"
#include "bdlab/shape.hpp"

namespace bdlab::hydro {

// sigma_u = floor(n psi0(u/n)) with infinities passed through. A seed profile
// at p goes to the site [n p], the rounding used for observation points. A
// spike adds floor(n height) at its site on top of the flat zero profile.
bd::HeightField discretize_profile(const hopflax::ProfileSpec& psi0, int n, const Box& box);

struct Scenario {
  std::string name;
  hopflax::ProfileSpec psi0;
  double t = 1.0;
  std::vector<std::vector<double>> xs;
  std::vector<int> scales;
  int replicas = 30;
  std::uint64_t seed = 1;  // the schedule: replica r at scale n uses
                           // derive_seed(seed, "hydro/run", {n, r})
};

struct HydroOptions {
  double tol = 0.15;
  double ci_z = 1.96;  // width of the trend slack in combined stderr
  int workers = 1;
  hopflax::EvalOptions eval;
};

struct PointRecord {
  std::vector<double> x;
  int n = 1;
  int replicas = 0;
  double mean = 0.0, std_error = 0.0;
  double prediction = 0.0;
  double error = 0.0;
};

struct PointVerdict {
  std::vector<double> x;
  double final_error = 0.0;
  bool below_tol = false;       // error at the largest n <= tol
  bool trend_ok = false;        // nonincreasing up to the CI slack
  bool final_le_first = false;  // error(largest n) <= error(smallest n)
  bool passed() const { return below_tol && trend_ok; }
};

struct ConvergenceReport {
  std::string name;
  hopflax::Params profile;
  double t = 0.0;
  std::vector<int> scales;
  int replicas = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int g_n = 0, g_replicas = 0;
  std::uint64_t g_seed = 0;
  std::vector<PointRecord> records;  // x-major, then increasing n
  std::vector<PointVerdict> verdicts;
  bool passed = false;

  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;
};

// Simulates every scale on fresh clocks and compares n^-1 sigma_[nx](nt) with
// eval_psi. Throws std::runtime_error on a light-cone breach.
ConvergenceReport run_scenario(const Scenario& sc, const shape::GTable& g, const fpp::B0Table& b0,
                               const HydroOptions& opt = {});

struct ScheduleStudy {
  std::vector<ConvergenceReport> reports;
  double pass_fraction = 0.0;       // schedules whose every point passes
  double monotone_fraction = 0.0;   // schedules with error(n_max) <= error(n_min) everywhere
  bool passed(double required = 0.9) const { return pass_fraction >= required; }
};

// Repeats a scenario on `schedules` disjoint seed schedules, seed s being
// derive_seed(sc.seed, "hydro/schedule", {s}).
ScheduleStudy schedule_study(const Scenario& sc, const shape::GTable& g, const fpp::B0Table& b0, int schedules,
                             const HydroOptions& opt = {});

struct SpikeScale {
  int n = 1;
  stats::Summary spike, flat, far;  // scaled heights at 0 and far from the spike
  bool dominates = true;            // spike field >= flat field on shared clocks
};

struct SpikeReport {
  double t = 1.0;
  double g0 = 0.0;        // g(0) from the table
  double far_x = 0.0;
  double tol = 0.0;
  std::vector<SpikeScale> scales;
  bool lower_bound_ok = false;  // spike mean >= 1 + t g(0) - tol at the largest n
  bool excess_ok = false;       // spike mean - t g(0) >= 0.7 at the largest n
  bool dominance_ok = false;
  bool passed() const { return lower_bound_ok && excess_ok && dominance_ok; }

  nlohmann::json to_json() const;
};

// d = 1: sigma(0) = n at u = 1 and 0 elsewhere against the flat profile on
// the same clocks.
SpikeReport spike_scenario(const std::vector<int>& scales, double t, const shape::GTable& g,
                           const fpp::B0Table& b0, int replicas, std::uint64_t seed, const HydroOptions& opt = {});

// Discretizes psi0 at scale n (at most 5 finite sites) and checks the
// supremum decomposition on shared clocks up to time n t.
bd::CouplingReport supremum_decomposition(const hopflax::ProfileSpec& psi0, int n, double t, std::uint64_t seed);

}  // namespace bdlab::hydro
