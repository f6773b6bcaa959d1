#include "bdlab/clock.hpp"

#include <cmath>
#include <stdexcept>

#include "bdlab/random.hpp"

namespace bdlab {

ClockField::ClockField(std::uint64_t seed, double rate, double origin_shift)
    : seed_(seed), rate_(rate), shift_(origin_shift) {
  if (!(rate > 0) || !std::isfinite(rate)) throw std::invalid_argument("clock rate must be positive");
  if (!std::isfinite(origin_shift)) throw std::invalid_argument("origin shift must be finite");
}

double ClockField::gap(std::uint64_t key, bool forward, std::uint64_t k) const {
  std::uint64_t h = combine(combine(mix64(seed_), key), forward ? 0x1f0dULL : 0xb4c7ULL);
  return exp_from_bits(combine(h, k), rate_);
}

std::vector<double> ClockField::events(const Site& u, double t0, double t1) const {
  if (!(t0 < t1) || !std::isfinite(t0) || !std::isfinite(t1))
    throw std::invalid_argument("clock window must satisfy t0 < t1, both finite");
  std::vector<double> out;
  for (ClockCursor c(*this, site_key(u), t0); c.time() <= t1; c.advance()) out.push_back(c.time());
  return out;
}

ClockCursor::ClockCursor(const ClockField& field, std::uint64_t key, double after)
    : field_(field), key_(key) {
  double abs_after = after + field_.origin_shift();
  if (abs_after < 0) load_backward(after);
  double t = next_abs() - field_.origin_shift();
  while (!(t > after)) t = next_abs() - field_.origin_shift();
  time_ = t;
}

void ClockCursor::load_backward(double after) {
  double b = 0.0;
  for (std::uint64_t k = 0;; ++k) {
    b -= field_.gap(key_, false, k);
    if (!(b - field_.origin_shift() > after)) break;
    backward_.push_back(b);
  }
}

double ClockCursor::next_abs() {
  if (!backward_.empty()) {
    double b = backward_.back();
    backward_.pop_back();
    return b;
  }
  fwd_abs_ += field_.gap(key_, true, fwd_index_++);
  return fwd_abs_;
}

void ClockCursor::advance() { time_ = next_abs() - field_.origin_shift(); }

double cramer_kappa(double x) {
  if (!(x > 0)) throw std::invalid_argument("cramer_kappa requires x > 0");
  return x - 1.0 - std::log(x);
}

}  // namespace bdlab
