#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdlab/lattice.hpp"

namespace bdlab::fpp {

// The requested box cannot certify the passage time (an escape route through
// the box edge might be shorter).
struct BoxTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exp(1) site weights, a pure function of (seed, site).
class WeightField {
 public:
  WeightField(Box box, std::uint64_t seed);
  // Explicit weights in box index order; all must be positive.
  WeightField(Box box, std::vector<double> weights);

  const Box& box() const { return box_; }
  double at(std::size_t i) const { return w_[i]; }
  double at(const Site& u) const { return w_[box_.index(u)]; }

 private:
  Box box_;
  std::vector<double> w_;
};

double site_weight(std::uint64_t seed, const Site& u);

struct PassageTable {
  Box box;
  Site origin;
  std::vector<double> times;  // box index order

  double at(const Site& u) const { return times[box.index(u)]; }
};

// T(origin, u) for every u in the box: the cheapest nearest-neighbour path,
// each entered site costing its weight and the start site free.
PassageTable passage_times(const WeightField& w, const Site& origin);

// {u : T(0,u) <= t}, in lexicographic order.
std::vector<Site> cluster_at(const PassageTable& table, double t);

// Passage time from the origin to `target` certified exact for the infinite
// lattice. Searches the given box; throws BoxTooSmall when a box-edge site is
// settled strictly before the target.
double certified_passage(const WeightField& w, const Site& target);

struct MuEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
  int replicas = 0;
};

struct MuOptions {
  std::uint64_t seed = 1;
  // Fixed box radius; when absent the box is sized and enlarged on demand.
  std::optional<int> radius;
};

// Mean and standard error of T(0,[nx])/n over independent weight fields.
MuEstimate estimate_mu(std::span<const double> x, int n, int replicas, const MuOptions& opt = {});

// Raw samples T(0,[nx]) / n, one per replica.
std::vector<double> mu_samples(std::span<const double> x, int n, int replicas, const MuOptions& opt = {});

struct RadialEntry {
  std::vector<double> direction;  // unit vector
  double radius = 0.0;            // 1 / mu(direction)
  double std_error = 0.0;
};

// Radial description of the limit cluster B0.
class B0Table {
 public:
  B0Table() = default;
  explicit B0Table(std::vector<RadialEntry> entries);

  int dim() const;
  const std::vector<RadialEntry>& entries() const { return entries_; }

  // Radius along an arbitrary nonzero direction: the sign-matched entry in
  // d=1, angular interpolation in d=2, nearest entry by cosine otherwise.
  double radius(std::span<const double> direction) const;
  // mu(z) = |z| / r(z / |z|); 0 at the origin.
  double gauge(std::span<const double> z) const;
  double max_radius() const;
  double min_radius() const;

  // Boundary points r(theta) theta, and (d=2) their convex hull in
  // counterclockwise order.
  std::vector<std::vector<double>> boundary_points() const;
  std::vector<std::vector<double>> convex_hull() const;

  void write_csv(std::ostream& out) const;
  static B0Table read_csv(const std::string& path);

  // Exact B0 = [-1, 1] for d = 1.
  static B0Table interval();

 private:
  std::vector<RadialEntry> entries_;
};

B0Table estimate_B0(const std::vector<std::vector<double>>& directions, int n, int replicas,
                    const MuOptions& opt = {});

// Unit directions at angles 2 pi k / count in d=2, or {-1, +1} in d=1.
std::vector<std::vector<double>> default_directions(int dim, int count = 16);

// Exp(1) weights on cells (u, h), 0 <= h <= max_height. Layer 0 coincides
// with the site weights of the same seed.
class CellWeightField {
 public:
  CellWeightField(Box box, int max_height, std::uint64_t seed);
  CellWeightField(Box box, int max_height, std::vector<double> weights);  // layer-major

  const Box& box() const { return box_; }
  int max_height() const { return max_height_; }
  double at(std::size_t i, int h) const { return w_[static_cast<std::size_t>(h) * box_.size() + i]; }

 private:
  Box box_;
  int max_height_;
  std::vector<double> w_;
};

double cell_weight(std::uint64_t seed, const Site& u, int h);

// M(u,h): cheapest path from (0,0) to (u,h) with steps +-e_p inside a layer or
// one layer up, entered-cell costs, start cell free. With `certify`, throws
// BoxTooSmall when the box cannot certify the value for the whole lattice;
// without it, returns the distance within the box.
double directed_passage(const CellWeightField& cw, const Site& target, int h, bool certify = true);

// Same with a box sized automatically and enlarged until certified.
double directed_passage(std::uint64_t seed, const Site& target, int h);

struct SiteMatch {
  Site site;
  double ks_statistic = 0.0;
  double p_value = 1.0;
  double mean_bd = 0.0, se_bd = 0.0;
  double mean_fpp = 0.0, se_fpp = 0.0;
  bool means_agree = true;
};

struct MatchReport {
  std::vector<SiteMatch> sites;
  double alpha = 0.01;
  double threshold = 0.01;  // alpha / number of tested sites
  bool passed = true;
};

// Compares R(u,0) from deposition seed runs with T(0,u) from independent
// weight fields, per site, by two-sample KS with Bonferroni correction.
// Throws std::invalid_argument for fewer than 100 replicas.
MatchReport match_bd_fpp(const std::vector<Site>& sites, int replicas, std::uint64_t seed,
                         double alpha = 0.01);

// Fraction of replicas whose cluster at time n t misses part of n (t - eps) B0.
double cluster_miss_fraction(const B0Table& b0, int dim, int n, double t, double eps, int replicas,
                             std::uint64_t seed);

}  // namespace bdlab::fpp
