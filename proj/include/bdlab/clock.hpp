#pragma once

#include <cstdint>
#include <vector>

#include "bdlab/lattice.hpp"

namespace bdlab {

// Independent Poisson event streams, one per site, on the whole time line.
//
// Absolute epochs on (0, inf) are cumulative sums of Exp(rate) gaps drawn from
// the forward stream of the site; epochs on (-inf, 0] come from a separate
// backward stream. A field with origin_shift s reports an absolute epoch r at
// relative time r - s, so shifting reads the same realization from time s on.
class ClockField {
 public:
  explicit ClockField(std::uint64_t seed, double rate = 1.0, double origin_shift = 0.0);

  std::uint64_t seed() const { return seed_; }
  double rate() const { return rate_; }
  double origin_shift() const { return shift_; }

  // Relative epochs of site u in (t0, t1], increasing. Requires t0 < t1.
  std::vector<double> events(const Site& u, double t0, double t1) const;

  ClockField shifted(double s) const { return ClockField(seed_, rate_, shift_ + s); }

  // k-th gap (k >= 0) of the forward or backward stream of a site.
  double gap(std::uint64_t site_key, bool forward, std::uint64_t k) const;

 private:
  std::uint64_t seed_;
  double rate_;
  double shift_;
};

inline ClockField shift_clocks(const ClockField& field, double s) { return field.shifted(s); }

// Walks the relative epochs of one site in increasing order, starting with the
// first epoch strictly after `after`.
class ClockCursor {
 public:
  ClockCursor() = default;
  ClockCursor(const ClockField& field, std::uint64_t site_key, double after);

  double time() const { return time_; }
  void advance();

 private:
  void load_backward(double after);
  double next_abs();

  ClockField field_{0};
  std::uint64_t key_ = 0;
  std::uint64_t fwd_index_ = 0;
  double fwd_abs_ = 0.0;
  std::vector<double> backward_;  // absolute epochs after the start, decreasing
  double time_ = 0.0;
};

// Rate function of Exp(1) large deviations: x - 1 - log x. Throws for x <= 0.
double cramer_kappa(double x);

}  // namespace bdlab
