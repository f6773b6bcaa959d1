#include "bdlab/deposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "bdlab/csv.hpp"
#include "bdlab/random.hpp"

namespace bdlab::bd {

HeightField::HeightField(Box box, ExtHeight fill, double time)
    : box_(std::move(box)), heights_(box_.size(), fill), tainted_(box_.size(), 0), time_(time) {
  for (std::size_t i = 0; i < box_.size(); ++i)
    if (box_.is_halo(i)) tainted_[i] = 1;
}

bool HeightField::breached() const {
  for (std::size_t i = 0; i < heights_.size(); ++i)
    if (tainted_[i] && box_.in_observation(i)) return true;
  return false;
}

bool HeightField::dominates(const HeightField& other) const {
  if (!(box_ == other.box_)) throw std::invalid_argument("fields live on different boxes");
  for (std::size_t i = 0; i < heights_.size(); ++i)
    if (heights_[i] < other.heights_[i]) return false;
  return true;
}

ExtHeight jump_height(const HeightField& field, std::size_t index) {
  ExtHeight h = field.at(index).successor();
  std::vector<std::size_t> nbr;
  field.box().neighbors(index, nbr);
  for (std::size_t j : nbr) h = ext_max(h, field.at(j));
  return h;
}

HeightField deposit_jump(const HeightField& field, const Site& u) {
  std::size_t i = field.box().index(u);
  HeightField out = field;
  ExtHeight h = jump_height(field, i);
  if (!h.is_neg_inf()) out.set(i, h);
  return out;
}

Simulator::Simulator(HeightField initial, const ClockField& clocks)
    : field_(std::move(initial)),
      clocks_(clocks),
      active_(field_.box().size(), 0),
      cursors_(field_.box().size()) {
  const double t0 = field_.time();
  for (std::size_t i = 0; i < field_.box().size(); ++i)
    if (could_change(i)) activate(i, t0, std::numeric_limits<std::size_t>::max());
}

bool Simulator::could_change(std::size_t i) const {
  const Box& box = field_.box();
  if (box.is_halo(i)) return false;
  if (!field_.at(i).is_neg_inf()) return true;
  for (int a = 0; a < box.dim(); ++a) {
    std::size_t s = box.stride(a);
    for (std::size_t j : {i - s, i + s})
      if (!field_.at(j).is_neg_inf() || field_.tainted(j)) return true;
  }
  return false;
}

// Starts the stream of site i with its first epoch after (after, after_site)
// in the (time, site) order.
void Simulator::activate(std::size_t i, double after, std::size_t after_site) {
  active_[i] = 1;
  double below = std::nextafter(after, -std::numeric_limits<double>::infinity());
  ClockCursor c(clocks_, site_key(field_.box().site(i)), below);
  while (c.time() == after && i <= after_site) c.advance();
  cursors_[i] = std::move(c);
  queue_.push({cursors_[i].time(), i});
}

void Simulator::wake_neighbourhood(std::size_t i, double t) {
  const Box& box = field_.box();
  for (int a = 0; a < box.dim(); ++a) {
    std::size_t s = box.stride(a);
    for (std::size_t j : {i - s, i + s})
      if (!active_[j] && could_change(j)) activate(j, t, i);
  }
}

std::optional<double> Simulator::next_event_time() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().time;
}

std::optional<Event> Simulator::step(double horizon) {
  if (queue_.empty() || queue_.top().time > horizon) return std::nullopt;
  const Pending top = queue_.top();
  queue_.pop();
  const std::size_t i = top.site;
  const Box& box = field_.box();

  ExtHeight before = field_.at(i);
  ExtHeight h = before.successor();
  bool taint = false;
  for (int a = 0; a < box.dim(); ++a) {
    std::size_t s = box.stride(a);
    for (std::size_t j : {i - s, i + s}) {
      h = ext_max(h, field_.at(j));
      taint = taint || field_.tainted(j);
    }
  }
  bool newly_tainted = taint && !field_.tainted(i);
  if (newly_tainted) field_.taint(i);
  ExtHeight after = h.is_neg_inf() ? before : h;
  field_.set(i, after);
  field_.set_time(top.time);
  ++events_;

  cursors_[i].advance();
  queue_.push({cursors_[i].time(), i});

  if (newly_tainted || (before.is_neg_inf() && !after.is_neg_inf())) wake_neighbourhood(i, top.time);
  return Event{top.time, i, before, after};
}

void Simulator::advance_to(double t) {
  if (t < field_.time()) throw std::invalid_argument("cannot advance backwards in time");
  while (step(t)) {
  }
  field_.set_time(t);
}

RunResult run(const HeightField& initial, const ClockField& clocks, double horizon) {
  if (!(horizon >= initial.time()))
    throw std::invalid_argument("run: horizon precedes the initial time");
  Simulator sim(initial, clocks);
  sim.advance_to(horizon);
  return {sim.field(), sim.breached(), sim.events_processed()};
}

HeightField seed_field(const SeedSpec& spec, const Box& box) {
  HeightField f(box);
  f.set(spec.site, ExtHeight(spec.height));
  return f;
}

RunResult run_seed(const SeedSpec& spec, const ClockField& clocks, double horizon) {
  return run_seed(spec, clocks, horizon,
                  Box::for_horizon(spec.site.dim(), spec.site.linf_norm(), horizon));
}

RunResult run_seed(const SeedSpec& spec, const ClockField& clocks, double horizon, const Box& box) {
  return run(seed_field(spec, box), clocks, horizon);
}

double default_passage_cap(const SeedSpec& spec, const Cell& target) {
  double rise = static_cast<double>(std::max<std::int64_t>(0, target.height - spec.height));
  return 4.0 * (static_cast<double>((target.site - spec.site).l1_norm()) + rise) + 20.0;
}

std::vector<std::optional<double>> passage_times(const SeedSpec& spec, const ClockField& clocks,
                                                 std::span<const Cell> targets, double cap) {
  if (!(cap >= 0) || !std::isfinite(cap)) throw std::invalid_argument("passage cap must be finite");
  int obs = spec.site.linf_norm();
  for (const Cell& c : targets) {
    if (c.height < 0) throw std::invalid_argument("passage threshold must be >= 0");
    obs = std::max(obs, c.site.linf_norm());
  }
  Simulator sim(seed_field(spec, Box::for_horizon(spec.site.dim(), obs, cap)), clocks);
  const Box& box = sim.field().box();

  std::vector<std::optional<double>> out(targets.size());
  // site index -> (threshold, target slot), sorted by threshold
  std::map<std::size_t, std::vector<std::pair<std::int64_t, std::size_t>>> pending;
  std::size_t remaining = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    std::size_t i = box.index(targets[k].site);
    if (sim.field().at(i) >= ExtHeight(targets[k].height)) {
      out[k] = 0.0;
    } else {
      pending[i].push_back({targets[k].height, k});
      ++remaining;
    }
  }
  for (auto& [i, list] : pending) std::sort(list.begin(), list.end());

  while (remaining > 0) {
    auto ev = sim.step(cap);
    if (!ev) break;
    if (ev->after == ev->before) continue;
    auto it = pending.find(ev->site);
    if (it == pending.end()) continue;
    auto& list = it->second;
    std::size_t met = 0;
    while (met < list.size() && ev->after >= ExtHeight(list[met].first)) {
      if (sim.field().tainted(ev->site))
        throw std::runtime_error("light-cone breach before a passage time was reached");
      out[list[met].second] = ev->time;
      ++met;
    }
    list.erase(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(met));
    remaining -= met;
    if (list.empty()) pending.erase(it);
  }
  return out;
}

std::optional<double> passage_time(const SeedSpec& spec, const ClockField& clocks,
                                   const Site& target, std::int64_t h, double cap) {
  Cell c{target, h};
  return passage_times(spec, clocks, std::span<const Cell>(&c, 1), cap).front();
}

std::optional<double> passage_time(const SeedSpec& spec, const ClockField& clocks,
                                   const Site& target, std::int64_t h) {
  return passage_time(spec, clocks, target, h, default_passage_cap(spec, Cell{target, h}));
}

namespace {

double sync_uniform(std::uint64_t seed, std::uint64_t key, std::int64_t round) {
  return unit_open(combine(combine(mix64(seed ^ 0x5e1ec7ULL), key), static_cast<std::uint64_t>(round)));
}

}  // namespace

bool sync_selected(std::uint64_t seed, const Site& u, std::int64_t round, double p) {
  return sync_uniform(seed, site_key(u), round) < p;
}

HeightField run_synchronous(const HeightField& initial, const SyncConfig& cfg, std::uint64_t seed,
                            const std::function<void(const HeightField&)>& observer) {
  if (!(cfg.p > 0 && cfg.p < 1)) throw std::invalid_argument("synchronous p must lie in (0,1)");
  if (cfg.steps < 0) throw std::invalid_argument("synchronous steps must be >= 0");
  HeightField field = initial;
  const Box& box = field.box();
  std::vector<std::uint64_t> keys(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) keys[i] = site_key(box.site(i));

  std::int64_t first_round = static_cast<std::int64_t>(std::llround(initial.time())) + 1;
  for (int r = 0; r < cfg.steps; ++r) {
    const std::int64_t round = first_round + r;
    const HeightField snapshot = field;
    for (std::size_t i = 0; i < box.size(); ++i) {
      if (box.is_halo(i)) continue;
      if (!(sync_uniform(seed, keys[i], round) < cfg.p)) continue;
      ExtHeight h = snapshot.at(i).successor();
      bool taint = false;
      for (int a = 0; a < box.dim(); ++a) {
        std::size_t s = box.stride(a);
        for (std::size_t j : {i - s, i + s}) {
          h = ext_max(h, snapshot.at(j));
          taint = taint || snapshot.tainted(j);
        }
      }
      if (taint) field.taint(i);
      if (!h.is_neg_inf()) field.set(i, h);
    }
    field.set_time(static_cast<double>(round));
    if (observer) observer(field);
  }
  return field;
}

void write_snapshot_header(std::ostream& out, int dim) {
  for (int i = 0; i < dim; ++i) out << 'x' << i << ',';
  out << "height,time\n";
}

void write_snapshot_rows(std::ostream& out, const HeightField& field, bool include_neg_inf) {
  const Box& box = field.box();
  const std::string t = format_double(field.time());
  for (std::size_t i = 0; i < box.size(); ++i) {
    ExtHeight h = field.at(i);
    if (h.is_neg_inf() && !include_neg_inf) continue;
    for (int a = 0; a < box.dim(); ++a) out << box.coord(i, a) << ',';
    out << to_string(h) << ',' << t << '\n';
  }
}

}  // namespace bdlab::bd
