#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "bdlab/deposition.hpp"
#include "bdlab/fpp.hpp"
#include "bdlab/grid.hpp"
#include "bdlab/stats.hpp"

namespace bdlab::shape {

// Key of one cached passage sample.
struct SampleKey {
  std::string module;
  std::string site;
  std::int64_t height = 0;
  int n = 1;
  int sample = 0;
  std::uint64_t seed = 0;

  friend auto operator<=>(const SampleKey&, const SampleKey&) = default;
};

// Store for passage samples. A cache must return exactly what was stored, so
// it can only save time.
class SampleCache {
 public:
  virtual ~SampleCache() = default;
  virtual std::optional<double> find(const SampleKey& key) const = 0;
  virtual void put(const SampleKey& key, double value) = 0;
};

// In-memory cache, mostly for tests.
class MemoryCache : public SampleCache {
 public:
  std::optional<double> find(const SampleKey& key) const override;
  void put(const SampleKey& key, double value) override { data_[key] = value; }
  std::size_t size() const { return data_.size(); }

 private:
  std::map<SampleKey, double> data_;
};

struct ShapeOptions {
  std::uint64_t seed = 1;
  SampleCache* cache = nullptr;
  // Counts deposition runs actually performed (cache misses).
  std::uint64_t* runs = nullptr;
};

// R(target, H) for H = 0..max_height from one seed run per replica, scaled by
// 1/n. Replica r uses the clock seed derive_seed(seed, "shape/gamma", {r}) for
// every target and height, so estimates share clocks across probes and
// gamma is monotone in the height for fixed replicas. +inf marks a timeout.
std::vector<std::vector<double>> gamma_curves(const Site& target, std::int64_t max_height, int n,
                                              int replica_begin, int replica_end, const ShapeOptions& opt);

struct GammaEstimate {
  std::vector<double> x;
  double b = 0.0;
  int n = 1;
  int replicas = 0;
  double mean = 0.0;
  double std_error = 0.0;
  int timeouts = 0;
  // False when more than 1% of the replicas timed out.
  bool valid = true;
};

// Monte Carlo estimate of gamma(x, b) as R([nx], [nb]) / n.
GammaEstimate estimate_gamma(std::span<const double> x, double b, int n, int replicas,
                             const ShapeOptions& opt = {});

GammaEstimate summarize_gamma(std::span<const double> x, double b, int n, std::span<const double> samples);

// Mean passage times R(u,h) (lattice units) for many cells from one run per
// replica. `stream` separates independent batches.
std::vector<stats::Summary> passage_means(const std::vector<bd::Cell>& cells, int replicas, std::uint64_t seed,
                                          std::string_view stream);

struct SubadditiveReport {
  stats::Summary joint, first, second;  // R(u+v,h+k), R(u,h), R(v,k) over n
  double slack = 0.0;                  // 3 combined stderr
  bool holds = true;
};

// Checks mean R(u+v,h+k) <= mean R(u,h) + mean R(v,k) + 3 combined stderr,
// with the three terms from independent replica batches.
SubadditiveReport check_subadditive(const Site& u, std::int64_t h, const Site& v, std::int64_t k, int n,
                                    int replicas, std::uint64_t seed);

// Root b of gamma(x, b) = 1 was not bracketed by [0, b_max].
struct NotBracketed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveOptions {
  ShapeOptions shape;
  double b_max = 3.0;
  int max_replica_factor = 8;
};

struct GRoot {
  std::vector<double> x;
  double g = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // 3 sigma
  int n = 1;
  int replicas = 0;                    // replicas used at the end
  int probes = 0;
  std::int64_t bracket_low = 0, bracket_high = 0;  // heights [nb]
};

// Solves gamma(x, g) = 1 by bisection over heights H = [nb] in [0, n b_max]
// with replicas doubled while a probe's 3 sigma interval straddles 1. The
// root is refined by a least-squares line through gamma near the bracket.
// Throws std::invalid_argument when gamma(x,0) is not clearly below 1 and
// NotBracketed when gamma(x, b_max) is not clearly above 1.
GRoot solve_g(std::span<const double> x, int n, int replicas, double tol, const SolveOptions& opt = {});

// Gridded estimate of g with standard errors.
class GTable {
 public:
  GTable() = default;
  GTable(RegularGrid values, RegularGrid errors, int n, int replicas, std::uint64_t seed);

  int dim() const { return values_.dim(); }
  const RegularGrid& values() const { return values_; }
  const RegularGrid& errors() const { return errors_; }
  int n() const { return n_; }
  int replicas() const { return replicas_; }
  std::uint64_t seed() const { return seed_; }

  std::optional<double> at(std::span<const double> x) const { return values_.interpolate(x); }
  double max_value() const;
  // Largest |x_i| over nodes that carry a value.
  double extent() const;

  // Throws std::invalid_argument on negative or nonfinite entries.
  void validate() const;

  // Averages over coordinate permutations and reflections. Requires a grid
  // symmetric about the origin with equal axes.
  GTable symmetrized() const;
  // Least concave majorant through the nodes (d = 1).
  GTable concave_majorant() const;

  void write_csv(std::ostream& out) const;
  static GTable read_csv(const std::string& path);

 private:
  RegularGrid values_, errors_;
  int n_ = 1;
  int replicas_ = 0;
  std::uint64_t seed_ = 0;
};

// Builds a GTable by solve_g on every node x of `grid` whose B0 gauge is below
// mu_cap. Other nodes stay empty.
GTable estimate_gtable(const RegularGrid& grid, const fpp::B0Table& b0, double mu_cap, int n, int replicas,
                       double tol, const SolveOptions& opt = {});

// Synthetic table from a closed form, used for oracles.
template <class F>
GTable synthetic_gtable(RegularGrid grid, F g) {
  RegularGrid err = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.set_value(i, g(grid.point(i)));
    err.set_value(i, 0.0);
  }
  return GTable(grid, err, 0, 0, 0);
}

class FTable {
 public:
  FTable() = default;
  explicit FTable(RegularGrid values) : values_(std::move(values)) {}

  const RegularGrid& values() const { return values_; }
  std::optional<double> at(std::span<const double> u) const { return values_.interpolate(u); }

  // Max |f(u) - f(-u)| over the grid (needs a grid symmetric about 0).
  double evenness_defect() const;
  // Most negative second difference along any axis (0 if none negative).
  double convexity_defect() const;
  // (|u|_inf, f(u) - f(0)) for grid nodes with |u|_inf <= radius, in grid
  // order. Describes how flat f is at its minimum; nothing is asserted.
  std::vector<std::pair<double, double>> profile_near_zero(double radius) const;

  void write_csv(std::ostream& out) const;

 private:
  RegularGrid values_;
};

// f(u) = max over table nodes x of u.x + g(x), on every node u of `u_grid`.
FTable legendre_f(const GTable& g, RegularGrid u_grid);
// Default u grid: [-10, 10]^d with step 0.25.
FTable legendre_f(const GTable& g);

struct AsymptoteReport {
  std::vector<std::pair<double, double>> excess;  // (u, f(u) - |u|) for u >= 0
  double slope = 0.0;                             // (f(8) - f(4)) / 4
  bool slope_ok = false;                          // slope in [0.9, 1.1]
  bool excess_nonincreasing = false;
  bool lower_bound_ok = false;                    // f(u) >= |u| r for all grid u
  double convexity_defect = 0.0;
  bool convex_ok = false;
  double boundary_g = 0.0;                        // g at the table edge
  bool passed() const { return slope_ok && excess_nonincreasing && lower_bound_ok && convex_ok; }
};

// d = 1 diagnostics of the linear asymptotics of f. `radius` is the lower
// bound used for f(u) >= |u| radius; `table_edge_g` the g value at the edge.
AsymptoteReport asymptote_check_d1(const FTable& f, double radius, double table_edge_g, double tol = 1e-9);

}  // namespace bdlab::shape
