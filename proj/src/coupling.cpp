#include "bdlab/coupling.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>

#include "bdlab/csv.hpp"

namespace bdlab::bd {

namespace {

// Earliest pending epoch over a family of simulators.
std::optional<double> next_time(const std::vector<Simulator>& sims) {
  std::optional<double> best;
  for (const auto& s : sims)
    if (auto t = s.next_event_time(); t && (!best || *t < *best)) best = t;
  return best;
}

// Steps the family through every epoch up to horizon, calling check(t) at
// time 0 and after each distinct epoch.
template <class Check>
void lockstep(std::vector<Simulator>& sims, double horizon, Check check) {
  check(sims.front().time());
  while (auto t = next_time(sims)) {
    if (*t > horizon) break;
    for (auto& s : sims) s.advance_to(*t);
    check(*t);
  }
}

}  // namespace

CouplingReport couple_monotone(const HeightField& init_hi, const HeightField& init_lo,
                               const ClockField& clocks, double horizon) {
  if (!(init_hi.box() == init_lo.box())) throw std::invalid_argument("coupled fields need a common box");
  if (!init_hi.dominates(init_lo)) throw std::invalid_argument("monotone coupling needs init_hi >= init_lo");
  if (init_hi.time() != init_lo.time()) throw std::invalid_argument("coupled fields need a common start time");
  std::vector<Simulator> sims;
  sims.emplace_back(init_hi, clocks);
  sims.emplace_back(init_lo, clocks);
  CouplingReport rep;
  const Box& box = init_hi.box();
  lockstep(sims, horizon, [&](double t) {
    ++rep.check_times;
    const auto& hi = sims[0].field();
    const auto& lo = sims[1].field();
    for (std::size_t i = 0; i < box.size(); ++i) {
      ++rep.comparisons;
      if (hi.at(i) < lo.at(i)) rep.violations.push_back({t, box.site(i), lo.at(i), hi.at(i)});
    }
  });
  return rep;
}

CouplingReport couple_supremum(const HeightField& initial, const ClockField& clocks, double horizon) {
  const Box& box = initial.box();
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i < box.size(); ++i)
    if (!initial.at(i).is_neg_inf()) sources.push_back(i);
  if (sources.empty()) throw std::invalid_argument("supremum coupling needs a finite initial site");

  std::vector<Simulator> sims;
  sims.emplace_back(initial, clocks);
  for (std::size_t v : sources) {
    HeightField z(box, kNegInf, initial.time());
    z.set(v, ExtHeight(0));
    sims.emplace_back(z, clocks);
  }
  CouplingReport rep;
  lockstep(sims, horizon, [&](double t) {
    ++rep.check_times;
    for (std::size_t i = 0; i < box.size(); ++i) {
      ExtHeight sup = kNegInf;
      for (std::size_t k = 0; k < sources.size(); ++k)
        sup = ext_max(sup, ext_add(initial.at(sources[k]), sims[k + 1].field().at(i)));
      ++rep.comparisons;
      ExtHeight got = sims[0].field().at(i);
      if (got != sup) rep.violations.push_back({t, box.site(i), sup, got});
    }
  });
  return rep;
}

std::string describe(const Violation& v) {
  return "t=" + format_double(v.time) + " site " + to_string(v.site) + ": expected " +
         to_string(v.expected) + ", got " + to_string(v.actual);
}

}  // namespace bdlab::bd
