#include "bdlab/fpp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>

#include "bdlab/csv.hpp"
#include "bdlab/deposition.hpp"
#include "bdlab/random.hpp"
#include "bdlab/stats.hpp"

namespace bdlab::fpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Entry = std::pair<double, std::size_t>;
using MinQueue = std::priority_queue<Entry, std::vector<Entry>, std::greater<>>;

// Dijkstra with entry costs. Settles sites in nondecreasing distance; `stop`
// sees each settled site and may end the search early.
std::vector<double> dijkstra(const Box& box, const std::function<double(std::size_t)>& cost,
                             std::vector<double> dist, const std::function<bool(std::size_t, double)>& stop) {
  MinQueue q;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] < kInf) q.push({dist[i], i});
  std::vector<std::uint8_t> done(dist.size(), 0);
  std::vector<std::size_t> nb;
  while (!q.empty()) {
    auto [d, i] = q.top();
    q.pop();
    if (done[i] || d > dist[i]) continue;
    done[i] = 1;
    if (stop && stop(i, d)) break;
    box.neighbors(i, nb);
    for (std::size_t j : nb) {
      double nd = d + cost(j);
      if (nd < dist[j]) {
        dist[j] = nd;
        q.push({nd, j});
      }
    }
  }
  return dist;
}

double norm2(std::span<const double> z) {
  double s = 0;
  for (double v : z) s += v * v;
  return std::sqrt(s);
}

Box auto_box(int dim, int reach) { return Box(dim, reach + reach / 2 + 5, reach); }

Box enlarge(const Box& b) {
  return Box(b.dim(), b.radius() + b.radius() / 2 + 5, b.observation_radius());
}

// Certified T(0, target) for weights drawn from `seed`, growing the box until
// the value is exact.
double auto_passage(std::uint64_t seed, const Site& target) {
  Box box = auto_box(target.dim(), target.linf_norm());
  for (;;) {
    try {
      return certified_passage(WeightField(box, seed), target);
    } catch (const BoxTooSmall&) {
      box = enlarge(box);
    }
  }
}

}  // namespace

double site_weight(std::uint64_t seed, const Site& u) {
  return exp_from_bits(combine(mix64(seed ^ 0x51735173ULL), site_key(u)), 1.0);
}

double cell_weight(std::uint64_t seed, const Site& u, int h) {
  if (h == 0) return site_weight(seed, u);
  return exp_from_bits(combine(combine(mix64(seed ^ 0xce11ULL), site_key(u)), static_cast<std::uint64_t>(h)), 1.0);
}

WeightField::WeightField(Box box, std::uint64_t seed) : box_(std::move(box)), w_(box_.size()) {
  for (std::size_t i = 0; i < box_.size(); ++i) w_[i] = site_weight(seed, box_.site(i));
}

WeightField::WeightField(Box box, std::vector<double> weights) : box_(std::move(box)), w_(std::move(weights)) {
  if (w_.size() != box_.size()) throw std::invalid_argument("weight count does not match the box");
  for (double v : w_)
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("site weights must be positive and finite");
}

PassageTable passage_times(const WeightField& w, const Site& origin) {
  const Box& box = w.box();
  std::vector<double> dist(box.size(), kInf);
  dist[box.index(origin)] = 0.0;
  auto cost = [&](std::size_t j) { return w.at(j); };
  return PassageTable{box, origin, dijkstra(box, cost, std::move(dist), {})};
}

std::vector<Site> cluster_at(const PassageTable& table, double t) {
  if (!(t >= 0)) throw std::invalid_argument("cluster time must be >= 0");
  std::vector<Site> out;
  for (std::size_t i = 0; i < table.times.size(); ++i)
    if (table.times[i] <= t) out.push_back(table.box.site(i));
  return out;
}

double certified_passage(const WeightField& w, const Site& target) {
  const Box& box = w.box();
  const std::size_t goal = box.index(target);
  std::vector<double> dist(box.size(), kInf);
  dist[box.index(Site::origin(box.dim()))] = 0.0;
  bool breach = false;
  auto stop = [&](std::size_t i, double) {
    if (i == goal) return true;
    if (box.is_halo(i)) {
      breach = true;
      return true;
    }
    return false;
  };
  auto cost = [&](std::size_t j) { return w.at(j); };
  auto out = dijkstra(box, cost, std::move(dist), stop);
  // A halo site settled at exactly the target's distance is harmless, but
  // ties between continuous weights do not occur in practice.
  if (breach) throw BoxTooSmall("passage box radius " + std::to_string(box.radius()) + " too small");
  return out[goal];
}

std::vector<double> mu_samples(std::span<const double> x, int n, int replicas, const MuOptions& opt) {
  if (n < 1) throw std::invalid_argument("estimate_mu needs n >= 1");
  if (replicas < 2) throw std::invalid_argument("estimate_mu needs at least 2 replicas");
  Site target = lattice_point(x, n);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(replicas));
  for (int r = 0; r < replicas; ++r) {
    std::uint64_t s = derive_seed(opt.seed, "fpp/mu", {static_cast<std::uint64_t>(r)});
    double t;
    if (target.is_origin()) {
      t = 0.0;
    } else if (opt.radius) {
      if (*opt.radius <= target.linf_norm()) throw BoxTooSmall("target outside the requested box");
      t = certified_passage(WeightField(Box(target.dim(), *opt.radius, target.linf_norm()), s), target);
    } else {
      t = auto_passage(s, target);
    }
    out.push_back(t / n);
  }
  return out;
}

MuEstimate estimate_mu(std::span<const double> x, int n, int replicas, const MuOptions& opt) {
  auto v = mu_samples(x, n, replicas, opt);
  auto s = stats::summarize(v);
  return {s.mean, s.std_error, n, replicas};
}

B0Table::B0Table(std::vector<RadialEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("empty B0 table");
  const std::size_t d = entries_.front().direction.size();
  for (auto& e : entries_) {
    if (e.direction.size() != d) throw std::invalid_argument("mixed dimensions in B0 table");
    double len = norm2(e.direction);
    if (!(len > 0)) throw std::invalid_argument("zero direction in B0 table");
    for (double& c : e.direction) c /= len;
    if (!(e.radius > 0) || !std::isfinite(e.radius)) throw std::invalid_argument("B0 radii must be positive");
  }
  if (d == 2)
    std::sort(entries_.begin(), entries_.end(), [](const RadialEntry& a, const RadialEntry& b) {
      return std::atan2(a.direction[1], a.direction[0]) < std::atan2(b.direction[1], b.direction[0]);
    });
}

int B0Table::dim() const { return entries_.empty() ? 0 : static_cast<int>(entries_.front().direction.size()); }

double B0Table::radius(std::span<const double> dir) const {
  if (static_cast<int>(dir.size()) != dim()) throw std::invalid_argument("direction dimension mismatch");
  if (!(norm2(dir) > 0)) throw std::invalid_argument("zero direction");
  if (dim() == 1) {
    const RadialEntry* best = nullptr;
    for (const auto& e : entries_)
      if ((e.direction[0] > 0) == (dir[0] > 0)) best = &e;
    if (!best) throw std::invalid_argument("B0 table lacks a direction of this sign");
    return best->radius;
  }
  if (dim() == 2 && entries_.size() >= 2) {
    const double a = std::atan2(dir[1], dir[0]);
    const std::size_t m = entries_.size();
    auto angle = [&](std::size_t k) { return std::atan2(entries_[k].direction[1], entries_[k].direction[0]); };
    // Bracketing pair on the circle.
    std::size_t hi = 0;
    while (hi < m && angle(hi) < a) ++hi;
    std::size_t lo = (hi + m - 1) % m;
    hi %= m;
    double a_lo = angle(lo), a_hi = angle(hi);
    double span_ = a_hi - a_lo;
    double off = a - a_lo;
    if (span_ <= 0) span_ += 2 * std::numbers::pi;
    if (off < 0) off += 2 * std::numbers::pi;
    if (span_ == 0) return entries_[lo].radius;
    double w = off / span_;
    return (1 - w) * entries_[lo].radius + w * entries_[hi].radius;
  }
  double len = norm2(dir);
  const RadialEntry* best = nullptr;
  double best_cos = -2;
  for (const auto& e : entries_) {
    double c = 0;
    for (std::size_t i = 0; i < dir.size(); ++i) c += e.direction[i] * dir[i];
    c /= len;
    if (c > best_cos) {
      best_cos = c;
      best = &e;
    }
  }
  return best->radius;
}

double B0Table::gauge(std::span<const double> z) const {
  double len = norm2(z);
  if (len == 0) return 0.0;
  return len / radius(z);
}

double B0Table::max_radius() const {
  double m = 0;
  for (const auto& e : entries_) m = std::max(m, e.radius);
  return m;
}

double B0Table::min_radius() const {
  double m = kInf;
  for (const auto& e : entries_) m = std::min(m, e.radius);
  return m;
}

std::vector<std::vector<double>> B0Table::boundary_points() const {
  std::vector<std::vector<double>> pts;
  for (const auto& e : entries_) {
    std::vector<double> p = e.direction;
    for (double& c : p) c *= e.radius;
    pts.push_back(std::move(p));
  }
  return pts;
}

std::vector<std::vector<double>> B0Table::convex_hull() const {
  auto pts = boundary_points();
  if (dim() != 2) return pts;
  std::sort(pts.begin(), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const std::vector<double>& o, const std::vector<double>& a, const std::vector<double>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::vector<double>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

void B0Table::write_csv(std::ostream& out) const {
  for (int i = 0; i < dim(); ++i) out << "theta" << i << ',';
  out << "radius,stderr\n";
  for (const auto& e : entries_) {
    for (double c : e.direction) out << format_double(c) << ',';
    out << format_double(e.radius) << ',' << format_double(e.std_error) << '\n';
  }
}

B0Table B0Table::read_csv(const std::string& path) {
  CsvTable t = bdlab::read_csv(path);
  std::size_t rc = t.column("radius"), sc = t.column("stderr");
  std::vector<RadialEntry> es;
  for (const auto& row : t.rows) {
    RadialEntry e;
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c].rfind("theta", 0) == 0) e.direction.push_back(parse_double(row.at(c)));
    e.radius = parse_double(row.at(rc));
    e.std_error = parse_double(row.at(sc));
    es.push_back(std::move(e));
  }
  return B0Table(std::move(es));
}

B0Table B0Table::interval() { return B0Table({{{-1.0}, 1.0, 0.0}, {{1.0}, 1.0, 0.0}}); }

B0Table estimate_B0(const std::vector<std::vector<double>>& directions, int n, int replicas, const MuOptions& opt) {
  std::vector<RadialEntry> es;
  for (std::size_t k = 0; k < directions.size(); ++k) {
    std::vector<double> dir = directions[k];
    double len = norm2(dir);
    if (!(len > 0)) throw std::invalid_argument("zero direction");
    for (double& c : dir) c /= len;
    MuOptions o = opt;
    o.seed = derive_seed(opt.seed, "fpp/b0", {k});
    auto mu = estimate_mu(dir, n, replicas, o);
    es.push_back({dir, 1.0 / mu.mean, mu.std_error / (mu.mean * mu.mean)});
  }
  return B0Table(std::move(es));
}

std::vector<std::vector<double>> default_directions(int dim, int count) {
  if (dim == 1) return {{-1.0}, {1.0}};
  if (dim != 2) throw std::invalid_argument("default directions exist for d = 1 and d = 2 only");
  std::vector<std::vector<double>> out;
  for (int k = 0; k < count; ++k) {
    double a = 2 * std::numbers::pi * k / count;
    out.push_back({std::cos(a), std::sin(a)});
  }
  return out;
}

CellWeightField::CellWeightField(Box box, int max_height, std::uint64_t seed)
    : box_(std::move(box)), max_height_(max_height) {
  if (max_height < 0) throw std::invalid_argument("max height must be >= 0");
  w_.resize(box_.size() * static_cast<std::size_t>(max_height + 1));
  for (int h = 0; h <= max_height; ++h)
    for (std::size_t i = 0; i < box_.size(); ++i)
      w_[static_cast<std::size_t>(h) * box_.size() + i] = cell_weight(seed, box_.site(i), h);
}

CellWeightField::CellWeightField(Box box, int max_height, std::vector<double> weights)
    : box_(std::move(box)), max_height_(max_height), w_(std::move(weights)) {
  if (max_height < 0) throw std::invalid_argument("max height must be >= 0");
  if (w_.size() != box_.size() * static_cast<std::size_t>(max_height + 1))
    throw std::invalid_argument("cell weight count does not match the box");
  for (double v : w_)
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("cell weights must be positive and finite");
}

double directed_passage(const CellWeightField& cw, const Site& target, int h, bool certify) {
  if (h < 0) throw std::invalid_argument("directed passage needs h >= 0");
  if (h > cw.max_height()) throw std::invalid_argument("target layer above the weight field");
  const Box& box = cw.box();
  const std::size_t goal = box.index(target);
  std::vector<double> dist(box.size(), kInf);
  dist[box.index(Site::origin(box.dim()))] = 0.0;
  double halo_min = kInf;
  for (int k = 0; k <= h; ++k) {
    if (k > 0)
      for (std::size_t i = 0; i < box.size(); ++i) dist[i] += cw.at(i, k);
    auto cost = [&](std::size_t j) { return cw.at(j, k); };
    dist = dijkstra(box, cost, std::move(dist), {});
    for (std::size_t i = 0; i < box.size(); ++i)
      if (box.is_halo(i)) halo_min = std::min(halo_min, dist[i]);
  }
  if (certify && halo_min < dist[goal])
    throw BoxTooSmall("directed passage box radius " + std::to_string(box.radius()) + " too small");
  return dist[goal];
}

double directed_passage(std::uint64_t seed, const Site& target, int h) {
  int reach = target.linf_norm() + h;
  Box box = auto_box(target.dim(), std::max(reach, target.linf_norm()));
  for (;;) {
    try {
      return directed_passage(CellWeightField(box, h, seed), target, h);
    } catch (const BoxTooSmall&) {
      box = enlarge(box);
    }
  }
}

MatchReport match_bd_fpp(const std::vector<Site>& sites, int replicas, std::uint64_t seed, double alpha) {
  if (replicas < 100) throw std::invalid_argument("match_bd_fpp needs at least 100 replicas per side");
  if (sites.empty()) throw std::invalid_argument("match_bd_fpp needs at least one site");
  const int d = sites.front().dim();
  bd::SeedSpec spec{Site::origin(d), 0};
  std::vector<bd::Cell> cells;
  double cap = 0;
  for (const Site& u : sites) {
    cells.push_back({u, 0});
    cap = std::max(cap, bd::default_passage_cap(spec, cells.back()));
  }
  std::vector<std::vector<double>> bd_s(sites.size()), fpp_s(sites.size());
  for (int r = 0; r < replicas; ++r) {
    ClockField clocks(derive_seed(seed, "fpp/match/bd", {static_cast<std::uint64_t>(r)}));
    auto ts = bd::passage_times(spec, clocks, cells, cap);
    std::uint64_t ws = derive_seed(seed, "fpp/match/fpp", {static_cast<std::uint64_t>(r)});
    for (std::size_t k = 0; k < sites.size(); ++k) {
      if (!ts[k]) throw std::runtime_error("deposition passage time exceeded its cap");
      bd_s[k].push_back(*ts[k]);
      fpp_s[k].push_back(sites[k].is_origin() ? 0.0 : auto_passage(ws, sites[k]));
    }
  }
  MatchReport rep;
  rep.alpha = alpha;
  std::size_t tested = 0;
  for (const Site& u : sites) tested += !u.is_origin();
  rep.threshold = alpha / static_cast<double>(std::max<std::size_t>(1, tested));
  for (std::size_t k = 0; k < sites.size(); ++k) {
    SiteMatch m;
    m.site = sites[k];
    auto a = stats::summarize(bd_s[k]);
    auto b = stats::summarize(fpp_s[k]);
    m.mean_bd = a.mean;
    m.se_bd = a.std_error;
    m.mean_fpp = b.mean;
    m.se_fpp = b.std_error;
    m.means_agree = std::abs(a.mean - b.mean) <= 3 * stats::combined({a.std_error, b.std_error});
    if (!sites[k].is_origin()) {
      auto ks = stats::ks_two_sample(bd_s[k], fpp_s[k]);
      m.ks_statistic = ks.statistic;
      m.p_value = ks.p_value;
    }
    rep.passed = rep.passed && m.means_agree && m.p_value >= rep.threshold;
    rep.sites.push_back(m);
  }
  return rep;
}

double cluster_miss_fraction(const B0Table& b0, int dim, int n, double t, double eps, int replicas,
                             std::uint64_t seed) {
  if (!(t > eps) || !(eps > 0)) throw std::invalid_argument("cluster check needs t > eps > 0");
  const double inner = n * (t - eps);
  const double limit = n * t;
  const int reach = static_cast<int>(std::ceil(inner * b0.max_radius())) + 1;
  int misses = 0;
  for (int r = 0; r < replicas; ++r) {
    std::uint64_t s = derive_seed(seed, "fpp/cluster", {static_cast<std::uint64_t>(r)});
    Box box = auto_box(dim, reach);
    for (;;) {
      PassageTable tab = passage_times(WeightField(box, s), Site::origin(dim));
      bool miss = false;
      double halo_min = kInf;
      for (std::size_t i = 0; i < box.size(); ++i) {
        if (box.is_halo(i)) halo_min = std::min(halo_min, tab.times[i]);
        Site u = box.site(i);
        std::vector<double> z(u.coords().begin(), u.coords().end());
        if (b0.gauge(z) <= inner && tab.times[i] > limit) miss = true;
      }
      // A miss in the box is a miss on the lattice only if no route through
      // the box edge could arrive by n t.
      if (miss && halo_min <= limit) {
        box = enlarge(box);
        continue;
      }
      misses += miss;
      break;
    }
  }
  return static_cast<double>(misses) / replicas;
}

}  // namespace bdlab::fpp
