#pragma once

#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bdlab/fpp.hpp"
#include "bdlab/grid.hpp"
#include "bdlab/lattice.hpp"
#include "bdlab/shape.hpp"

namespace bdlab::hopflax {

using Params = std::map<std::string, std::string>;

// Macroscopic initial profile psi0 with values in [-inf, +inf].
struct ProfileSpec {
  enum class Kind { flat, seed, wedge, spike, table };

  Kind kind = Kind::flat;
  double level = 0.0;              // flat: psi0 = level
  std::vector<double> point;       // seed: 0 at point, -inf elsewhere
  double slope = 1.0;              // wedge: -slope |y|_1
  Site spike_site;                 // spike: macroscopically flat 0; the
  double spike_height = 1.0;       //   harness adds n * height at the site
  std::shared_ptr<const RegularGrid> grid;  // table: interpolated, -inf outside
  std::string source;              // table: file the grid came from

  static ProfileSpec flat(double c, int dim = 1);
  static ProfileSpec seed(std::vector<double> p);
  static ProfileSpec wedge(double slope, int dim = 1);
  static ProfileSpec spike(Site site, double height);
  static ProfileSpec table(RegularGrid g, std::string source = {});

  int dim() const { return dim_; }
  double operator()(std::span<const double> y) const;
  // Points where the sup may concentrate (seed point, wedge apex).
  std::vector<std::vector<double>> atoms() const;
  // True when psi0 is finite everywhere and uniformly continuous.
  bool uniformly_continuous() const;

  // key=value form: kind=flat level=0 | kind=seed point=0 | kind=wedge slope=1
  // | kind=spike site=1 height=1 | kind=table file=path. Coordinates are
  // comma separated. Table files are CSV with columns x0..,value.
  static ProfileSpec parse(const Params& p);
  Params to_params() const;

  int dim_ = 1;
};

struct EvalOptions {
  int divisor = 4;         // candidate step = GTable step / divisor
  int refine_levels = 2;   // local refinements around the running argmax
  double delta_edge = 0.05;
};

struct PsiValue {
  double value = 0.0;
  std::size_t candidates = 0;  // evaluated candidates
  std::size_t skipped = 0;     // outside the table hull or near the B0 edge
};

// psi(x,t) = sup over z of psi0(x - t z) + t g(z), z on a candidate grid inside
// (1 - delta_edge) B0 plus profile atoms, with two levels of local refinement.
PsiValue eval_psi(std::span<const double> x, double t, const ProfileSpec& psi0, const shape::GTable& g,
                  const fpp::B0Table& b0, const EvalOptions& opt = {});

// Generic sup: sup over z of phi(x - tau z) + tau g(z).
PsiValue hopf_lax_sup(std::span<const double> x, double tau, const std::function<double(std::span<const double>)>& phi,
                      const std::vector<std::vector<double>>& atoms, const shape::GTable& g, const fpp::B0Table& b0,
                      const EvalOptions& opt);

// |psi(x,t) - sup_y {psi(y,s) + (t-s) g((x-y)/(t-s))}|.
double semigroup_residual(std::span<const double> x, double s, double t, const ProfileSpec& psi0,
                          const shape::GTable& g, const fpp::B0Table& b0, const EvalOptions& opt = {});

struct RefinementStudy {
  std::vector<int> divisors;
  std::vector<double> residuals;  // max over the sample points
  std::vector<double> ratios;     // residual[k+1] / residual[k]
  double converged_below = 1e-12;
  bool passed = false;            // every ratio <= 0.7 or already converged
};

RefinementStudy semigroup_refinement(const ProfileSpec& psi0, const shape::GTable& g, const fpp::B0Table& b0,
                                     const std::vector<std::vector<double>>& xs, double s, double t,
                                     std::vector<int> divisors = {4, 8, 16});

struct ModulusSample {
  std::vector<double> x1, x2;
  double s = 0.0, t = 0.0;
};

struct ModulusReport {
  std::size_t checked = 0;
  std::size_t time_violations = 0;
  std::size_t space_violations = 0;
  double worst_time_margin = 0.0;   // smallest (bound - value) seen
  double worst_space_margin = 0.0;
  bool passed() const { return time_violations == 0 && space_violations == 0; }
};

// Checks 0 <= psi(x,t) - psi(x,s) <= osc(psi(.,s); b0 (t-s)) + (t-s) max g at
// x1, and |psi(x1,t) - psi(x2,t)| <= osc(psi0; |x1 - x2|), with empirical
// moduli on fine sample grids and `tol` for discretization.
ModulusReport modulus_check(const ProfileSpec& psi0, const shape::GTable& g, const fpp::B0Table& b0,
                            const std::vector<ModulusSample>& samples, double tol = 1e-6,
                            const EvalOptions& opt = {});

// psi on a grid of x for several times; rows "x0..,t,psi".
struct PsiField {
  RegularGrid xs;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [time][x node]
  std::size_t skipped = 0;

  void write_csv(std::ostream& out) const;
};

PsiField eval_psi_field(const RegularGrid& xs, const std::vector<double>& times, const ProfileSpec& psi0,
                        const shape::GTable& g, const fpp::B0Table& b0, const EvalOptions& opt = {});

}  // namespace bdlab::hopflax
