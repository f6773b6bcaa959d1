#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <vector>

#include "bdlab/clock.hpp"
#include "bdlab/ext_height.hpp"
#include "bdlab/lattice.hpp"

namespace bdlab::bd {

// Height configuration over a finite box at a given time.
//
// Besides the heights the field carries a taint mask: a site is tainted when
// its height may differ from the infinite-lattice process because some chain
// of jumps links it to the frozen halo. Halo sites start tainted. Untainted
// sites are exact.
class HeightField {
 public:
  HeightField() = default;
  explicit HeightField(Box box, ExtHeight fill = kNegInf, double time = 0.0);

  const Box& box() const { return box_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  ExtHeight at(const Site& u) const { return heights_[box_.index(u)]; }
  ExtHeight at(std::size_t i) const { return heights_[i]; }
  void set(const Site& u, ExtHeight h) { heights_[box_.index(u)] = h; }
  void set(std::size_t i, ExtHeight h) { heights_[i] = h; }

  std::span<const ExtHeight> heights() const { return heights_; }
  std::span<ExtHeight> heights() { return heights_; }

  bool tainted(std::size_t i) const { return tainted_[i] != 0; }
  void taint(std::size_t i) { tainted_[i] = 1; }

  // True when any observation-region site is tainted.
  bool breached() const;

  // Pointwise a >= b over the box.
  bool dominates(const HeightField& other) const;

  friend bool operator==(const HeightField& a, const HeightField& b) {
    return a.box_ == b.box_ && a.time_ == b.time_ && a.heights_ == b.heights_ &&
           a.tainted_ == b.tainted_;
  }

 private:
  Box box_;
  std::vector<ExtHeight> heights_;
  std::vector<std::uint8_t> tainted_;
  double time_ = 0.0;
};

// max(sigma_u + 1, max over nearest neighbours of sigma_{u+z}); -inf means the
// particle is lost and nothing changes.
ExtHeight jump_height(const HeightField& field, std::size_t index);

// Applies one deposition at u and returns the new field. Neighbours outside the
// box count as -inf. Throws std::out_of_range for u outside the box.
HeightField deposit_jump(const HeightField& field, const Site& u);

struct Event {
  double time;
  std::size_t site;
  ExtHeight before;
  ExtHeight after;
};

// Event-driven engine. Per-site clock streams are merged lazily through a
// priority queue keyed by (time, site index). A site only carries a live
// cursor once a jump there could change something: it is finite, a neighbour
// is finite, or a neighbour is tainted. Skipped epochs are provably no-ops,
// so results equal the full replay of every epoch in the box.
class Simulator {
 public:
  Simulator(HeightField initial, const ClockField& clocks);

  const HeightField& field() const { return field_; }
  double time() const { return field_.time(); }
  bool breached() const { return field_.breached(); }
  std::uint64_t events_processed() const { return events_; }

  std::optional<double> next_event_time() const;

  // Processes the next epoch if it is <= horizon. Returns it, or nullopt.
  std::optional<Event> step(double horizon);

  // Processes every epoch in (time(), t] and sets the clock to t.
  void advance_to(double t);

 private:
  struct Pending {
    double time;
    std::size_t site;
    bool operator>(const Pending& o) const {
      return time != o.time ? time > o.time : site > o.site;
    }
  };

  bool could_change(std::size_t i) const;
  void activate(std::size_t i, double after, std::size_t after_site);
  void wake_neighbourhood(std::size_t i, double t);

  HeightField field_;
  ClockField clocks_;
  std::vector<std::uint8_t> active_;
  std::vector<ClockCursor> cursors_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  std::uint64_t events_ = 0;
};

struct RunResult {
  HeightField field;
  bool breached = false;
  std::uint64_t events = 0;
};

// Applies every epoch in (initial.time(), horizon] in global time order.
// Requires horizon >= initial.time(). Light-cone breaches are reported in the
// result, never thrown.
RunResult run(const HeightField& initial, const ClockField& clocks, double horizon);

struct SeedSpec {
  Site site;
  std::int64_t height = 0;
};

HeightField seed_field(const SeedSpec& spec, const Box& box);

// Seed run on a box sized by the safety rule for `horizon`.
RunResult run_seed(const SeedSpec& spec, const ClockField& clocks, double horizon);
RunResult run_seed(const SeedSpec& spec, const ClockField& clocks, double horizon, const Box& box);

struct Cell {
  Site site;
  std::int64_t height = 0;
};

// 4 (|u - v| + h) + 20 with v the seed site.
double default_passage_cap(const SeedSpec& spec, const Cell& target);

// First time the seed process is at or above each target cell; nullopt marks
// TIMEOUT (not reached by cap). One run serves every target. Targets already
// met at time 0 report 0. Throws std::runtime_error on a light-cone breach.
std::vector<std::optional<double>> passage_times(const SeedSpec& spec, const ClockField& clocks,
                                                 std::span<const Cell> targets, double cap);

std::optional<double> passage_time(const SeedSpec& spec, const ClockField& clocks,
                                   const Site& target, std::int64_t h, double cap);
std::optional<double> passage_time(const SeedSpec& spec, const ClockField& clocks,
                                   const Site& target, std::int64_t h);

struct SyncConfig {
  double p = 0.5;
  int steps = 0;
};

// Whether site u attempts a jump in round `round` (1-based).
bool sync_selected(std::uint64_t seed, const Site& u, std::int64_t round, double p);

// Discrete-time variant: in each round every non-halo site independently jumps
// with probability p, all reading the pre-round snapshot. The observer, when
// given, sees the field after every round.
HeightField run_synchronous(const HeightField& initial, const SyncConfig& cfg, std::uint64_t seed,
                            const std::function<void(const HeightField&)>& observer = {});

// Rows "x0,..,x{d-1},height,time". -inf sites are skipped unless requested.
void write_snapshot_header(std::ostream& out, int dim);
void write_snapshot_rows(std::ostream& out, const HeightField& field, bool include_neg_inf = false);

}  // namespace bdlab::bd
