#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdlab/clock.hpp"
#include "bdlab/deposition.hpp"

namespace bdlab::bd {

struct Violation {
  double time;
  Site site;
  ExtHeight expected;  // lower process, or the supremum of the seed family
  ExtHeight actual;
};

struct CouplingReport {
  std::uint64_t check_times = 0;  // number of instants compared
  std::uint64_t comparisons = 0;  // site comparisons over all instants
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

// Runs both fields on the same clocks and checks hi >= lo at time 0 and after
// every epoch either process acts on. Throws std::invalid_argument unless
// init_hi >= init_lo on a common box.
CouplingReport couple_monotone(const HeightField& init_hi, const HeightField& init_lo,
                               const ClockField& clocks, double horizon);

// Runs sigma and the shifted seed processes sigma_v(0) + Z^v, one per finite
// initial site v, on shared clocks, and checks sigma_u = max_v of the family
// at every site after every epoch. Requires at least one finite site.
CouplingReport couple_supremum(const HeightField& initial, const ClockField& clocks, double horizon);

std::string describe(const Violation& v);

}  // namespace bdlab::bd
