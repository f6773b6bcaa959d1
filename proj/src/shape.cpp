#include "bdlab/shape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bdlab/csv.hpp"
#include "bdlab/random.hpp"

namespace bdlab::shape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t scaled_height(double b, int n) {
  std::vector<double> v{b};
  return lattice_point(v, n)[0];
}

std::vector<double> column(const std::vector<std::vector<double>>& curves, std::size_t h) {
  std::vector<double> out;
  out.reserve(curves.size());
  for (const auto& c : curves) out.push_back(c[h]);
  return out;
}

}  // namespace

std::optional<double> MemoryCache::find(const SampleKey& key) const {
  auto it = data_.find(key);
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::vector<double>> gamma_curves(const Site& target, std::int64_t max_height, int n,
                                              int replica_begin, int replica_end, const ShapeOptions& opt) {
  if (max_height < 0) throw std::invalid_argument("gamma heights must be >= 0");
  if (n < 1) throw std::invalid_argument("gamma scale n must be >= 1");
  const bd::SeedSpec spec{Site::origin(target.dim()), 0};
  std::vector<bd::Cell> cells;
  for (std::int64_t h = 0; h <= max_height; ++h) cells.push_back({target, h});
  const double cap = bd::default_passage_cap(spec, cells.back());
  const std::string site = to_string(target);

  std::vector<std::vector<double>> out;
  for (int r = replica_begin; r < replica_end; ++r) {
    const std::uint64_t s = derive_seed(opt.seed, "shape/gamma", {static_cast<std::uint64_t>(r)});
    std::vector<double> curve(cells.size(), kNaN);
    bool complete = opt.cache != nullptr;
    if (opt.cache)
      for (std::size_t k = 0; k < cells.size() && complete; ++k) {
        auto v = opt.cache->find({"gamma", site, cells[k].height, n, r, s});
        if (v) curve[k] = *v;
        else complete = false;
      }
    if (!complete) {
      auto ts = bd::passage_times(spec, ClockField(s), cells, cap);
      if (opt.runs) ++*opt.runs;
      for (std::size_t k = 0; k < cells.size(); ++k) {
        curve[k] = ts[k] ? *ts[k] : kInf;
        if (opt.cache) opt.cache->put({"gamma", site, cells[k].height, n, r, s}, curve[k]);
      }
    }
    for (double& v : curve) v /= n;
    out.push_back(std::move(curve));
  }
  return out;
}

GammaEstimate summarize_gamma(std::span<const double> x, double b, int n, std::span<const double> samples) {
  GammaEstimate e;
  e.x.assign(x.begin(), x.end());
  e.b = b;
  e.n = n;
  e.replicas = static_cast<int>(samples.size());
  std::vector<double> finite;
  for (double v : samples) {
    if (std::isfinite(v)) finite.push_back(v);
    else ++e.timeouts;
  }
  if (!finite.empty()) {
    auto s = stats::summarize(finite);
    e.mean = s.mean;
    e.std_error = s.std_error;
  }
  e.valid = e.timeouts * 100 <= e.replicas && !finite.empty();
  return e;
}

GammaEstimate estimate_gamma(std::span<const double> x, double b, int n, int replicas, const ShapeOptions& opt) {
  if (!(b >= 0)) throw std::invalid_argument("gamma needs b >= 0");
  if (replicas < 2) throw std::invalid_argument("gamma needs at least 2 replicas");
  Site target = lattice_point(x, n);
  std::int64_t h = scaled_height(b, n);
  auto curves = gamma_curves(target, h, n, 0, replicas, opt);
  return summarize_gamma(x, b, n, column(curves, static_cast<std::size_t>(h)));
}

std::vector<stats::Summary> passage_means(const std::vector<bd::Cell>& cells, int replicas, std::uint64_t seed,
                                          std::string_view stream) {
  if (cells.empty()) return {};
  const bd::SeedSpec spec{Site::origin(cells.front().site.dim()), 0};
  double cap = 0;
  for (const auto& c : cells) cap = std::max(cap, bd::default_passage_cap(spec, c));
  std::vector<std::vector<double>> samples(cells.size());
  for (int r = 0; r < replicas; ++r) {
    auto ts = bd::passage_times(spec, ClockField(derive_seed(seed, stream, {static_cast<std::uint64_t>(r)})), cells, cap);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (!ts[k]) throw std::runtime_error("passage time exceeded its cap");
      samples[k].push_back(*ts[k]);
    }
  }
  std::vector<stats::Summary> out;
  for (const auto& s : samples) out.push_back(stats::summarize(s));
  return out;
}

SubadditiveReport check_subadditive(const Site& u, std::int64_t h, const Site& v, std::int64_t k, int n,
                                    int replicas, std::uint64_t seed) {
  auto scale = [n](stats::Summary s) {
    s.mean /= n;
    s.stddev /= n;
    s.std_error /= n;
    return s;
  };
  SubadditiveReport rep;
  rep.joint = scale(passage_means({{u + v, h + k}}, replicas, seed, "shape/subadd/joint")[0]);
  rep.first = scale(passage_means({{u, h}}, replicas, seed, "shape/subadd/first")[0]);
  rep.second = scale(passage_means({{v, k}}, replicas, seed, "shape/subadd/second")[0]);
  rep.slack = 3 * stats::combined({rep.joint.std_error, rep.first.std_error, rep.second.std_error});
  rep.holds = rep.joint.mean <= rep.first.mean + rep.second.mean + rep.slack;
  return rep;
}

GRoot solve_g(std::span<const double> x, int n, int replicas, double tol, const SolveOptions& opt) {
  if (replicas < 2) throw std::invalid_argument("solve_g needs at least 2 replicas");
  if (!(opt.b_max > 0)) throw std::invalid_argument("solve_g needs b_max > 0");
  const Site target = lattice_point(x, n);
  const std::int64_t hmax = static_cast<std::int64_t>(std::ceil(n * opt.b_max));
  const int max_replicas = replicas * std::max(1, opt.max_replica_factor);

  GRoot root;
  root.x.assign(x.begin(), x.end());
  root.n = n;
  auto curves = gamma_curves(target, hmax, n, 0, replicas, opt.shape);
  auto at = [&](std::int64_t h) {
    return summarize_gamma(x, static_cast<double>(h) / n, n, column(curves, static_cast<std::size_t>(h)));
  };
  auto grow = [&] {
    auto more = gamma_curves(target, hmax, n, static_cast<int>(curves.size()), static_cast<int>(2 * curves.size()),
                             opt.shape);
    curves.insert(curves.end(), more.begin(), more.end());
  };

  GammaEstimate g0 = at(0);
  if (!(g0.mean + 3 * g0.std_error < 1)) throw std::invalid_argument("solve_g: x is not inside the estimated B0");
  GammaEstimate gtop = at(hmax);
  if (!gtop.valid) throw std::runtime_error("solve_g: too many timeouts at b_max");
  if (!(gtop.mean - 3 * gtop.std_error > 1))
    throw NotBracketed("gamma(x, b_max) does not exceed 1; increase b_max above " + format_double(opt.b_max));

  std::int64_t lo = 0, hi = hmax;
  while (hi - lo > 1 && static_cast<double>(hi - lo) / n > tol) {
    std::int64_t mid = lo + (hi - lo) / 2;
    GammaEstimate e = at(mid);
    ++root.probes;
    while (std::abs(e.mean - 1) <= 3 * e.std_error && static_cast<int>(curves.size()) * 2 <= max_replicas) {
      grow();
      e = at(mid);
    }
    if (!e.valid) throw std::runtime_error("solve_g: too many timeouts");
    (e.mean < 1 ? lo : hi) = mid;
  }
  root.bracket_low = lo;
  root.bracket_high = hi;
  root.replicas = static_cast<int>(curves.size());

  // Least-squares line through gamma on a stencil around the bracket.
  const std::int64_t a = std::max<std::int64_t>(0, lo - 2), b = std::min(hmax, hi + 2);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, se = 0;
  int m = 0;
  for (std::int64_t h = a; h <= b; ++h) {
    GammaEstimate e = at(h);
    double bx = static_cast<double>(h) / n;
    sx += bx;
    sy += e.mean;
    sxx += bx * bx;
    sxy += bx * e.mean;
    se += e.std_error;
    ++m;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / m;
  if (!(slope > 0)) throw std::runtime_error("solve_g: gamma is flat near the root");
  root.g = (1 - icpt) / slope;
  root.std_error = (se / m) / slope;
  root.ci_low = root.g - 3 * root.std_error;
  root.ci_high = root.g + 3 * root.std_error;
  return root;
}

GTable::GTable(RegularGrid values, RegularGrid errors, int n, int replicas, std::uint64_t seed)
    : values_(std::move(values)), errors_(std::move(errors)), n_(n), replicas_(replicas), seed_(seed) {
  if (values_.shape() != errors_.shape()) throw std::invalid_argument("GTable value and error grids differ");
}

double GTable::max_value() const {
  double m = -kInf;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_.has_value(i)) m = std::max(m, values_.value(i));
  return m;
}

double GTable::extent() const {
  double m = 0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_.has_value(i))
      for (double c : values_.point(i)) m = std::max(m, std::abs(c));
  return m;
}

void GTable::validate() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!values_.has_value(i)) continue;
    ++count;
    double v = values_.value(i);
    if (!std::isfinite(v) || v < 0)
      throw std::invalid_argument("GTable entry at " + format_double(values_.point(i)[0]) + " is " + format_double(v) +
                                  "; entries must be finite and nonnegative");
  }
  if (count == 0) throw std::invalid_argument("GTable has no entries");
}

GTable GTable::symmetrized() const {
  const int d = dim();
  const auto& shape = values_.shape();
  for (int i = 0; i < d; ++i) {
    if (shape[static_cast<std::size_t>(i)] != shape[0] || shape[0] % 2 == 0)
      throw std::invalid_argument("symmetrization needs equal odd-length axes");
    double centre = values_.lower(i) + values_.step() * (shape[0] / 2);
    if (std::abs(centre) > 1e-9 * values_.step()) throw std::invalid_argument("symmetrization needs a centred grid");
  }
  const int half = shape[0] / 2;
  std::vector<int> perm(static_cast<std::size_t>(d));
  RegularGrid v = values_, e = errors_;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    auto k = values_.multi_index(i);
    // Summing the sorted orbit values makes mirrored nodes bitwise equal.
    std::vector<double> orbit_v, orbit_e;
    for (int p = 0; p < d; ++p) perm[static_cast<std::size_t>(p)] = p;
    do {
      for (unsigned signs = 0; signs < (1u << d); ++signs) {
        std::vector<int> q(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a) {
          int off = k[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])] - half;
          q[static_cast<std::size_t>(a)] = half + (((signs >> a) & 1) ? -off : off);
        }
        std::size_t j = values_.flat_index(q);
        if (values_.has_value(j)) {
          orbit_v.push_back(values_.value(j));
          orbit_e.push_back(errors_.value(j));
        }
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::sort(orbit_v.begin(), orbit_v.end());
    std::sort(orbit_e.begin(), orbit_e.end());
    double sum = 0, esum = 0;
    for (double a : orbit_v) sum += a;
    for (double a : orbit_e) esum += a;
    const double count = static_cast<double>(orbit_v.size());
    v.set_value(i, orbit_v.empty() ? kNaN : sum / count);
    e.set_value(i, orbit_v.empty() ? kNaN : esum / count);
  }
  return GTable(v, e, n_, replicas_, seed_);
}

GTable GTable::concave_majorant() const {
  if (dim() != 1) throw std::invalid_argument("concave majorant is implemented for d = 1");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_.has_value(i)) pts.push_back({values_.point(i)[0], values_.value(i)});
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      // Drop b when it lies on or below the chord from a to p.
      if ((b.second - a.second) * (p.first - a.first) <= (p.second - a.second) * (b.first - a.first)) hull.pop_back();
      else break;
    }
    hull.push_back(p);
  }
  RegularGrid v = values_;
  std::size_t seg = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!values_.has_value(i)) continue;
    double x = values_.point(i)[0];
    while (seg + 1 < hull.size() && hull[seg + 1].first < x) ++seg;
    if (seg + 1 >= hull.size() || x <= hull[seg].first) {
      v.set_value(i, hull[std::min(seg, hull.size() - 1)].second);
      continue;
    }
    const auto& a = hull[seg];
    const auto& b = hull[seg + 1];
    double w = (x - a.first) / (b.first - a.first);
    v.set_value(i, (1 - w) * a.second + w * b.second);
  }
  return GTable(v, errors_, n_, replicas_, seed_);
}

void GTable::write_csv(std::ostream& out) const {
  for (int i = 0; i < dim(); ++i) out << 'x' << i << ',';
  out << "estimate,stderr,n,replicas,seed\n";
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!values_.has_value(i)) continue;
    for (double c : values_.point(i)) out << format_double(c) << ',';
    out << format_double(values_.value(i)) << ',' << format_double(errors_.value(i)) << ',' << n_ << ','
        << replicas_ << ',' << seed_ << '\n';
  }
}

GTable GTable::read_csv(const std::string& path) {
  CsvTable t = bdlab::read_csv(path);
  std::vector<std::size_t> xc;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c].size() > 1 && t.header[c][0] == 'x') xc.push_back(c);
  if (xc.empty()) throw std::runtime_error(path + ": no coordinate columns");
  if (t.rows.empty()) throw std::runtime_error(path + ": empty GTable");
  const std::size_t ec = t.column("estimate"), sc = t.column("stderr");
  const std::size_t nc = t.column("n"), rc = t.column("replicas"), kc = t.column("seed");
  const std::size_t d = xc.size();

  std::vector<std::vector<double>> pts;
  std::vector<double> est, err;
  for (const auto& row : t.rows) {
    std::vector<double> p;
    for (std::size_t a = 0; a < d; ++a) p.push_back(parse_double(row.at(xc[a])));
    pts.push_back(std::move(p));
    est.push_back(parse_double(row.at(ec)));
    err.push_back(parse_double(row.at(sc)));
  }
  RegularGrid v, e;
  try {
    v = RegularGrid::from_points(pts, est);
    e = RegularGrid::from_points(pts, err);
  } catch (const std::runtime_error& ex) {
    throw std::runtime_error(path + ": " + ex.what());
  }
  const auto& first = t.rows.front();
  return GTable(v, e, std::stoi(first.at(nc)), std::stoi(first.at(rc)), std::stoull(first.at(kc)));
}

GTable estimate_gtable(const RegularGrid& grid, const fpp::B0Table& b0, double mu_cap, int n, int replicas,
                       double tol, const SolveOptions& opt) {
  RegularGrid v = grid, e = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    v.set_value(i, kNaN);
    e.set_value(i, kNaN);
    auto x = grid.point(i);
    if (!(b0.gauge(x) < mu_cap)) continue;
    GRoot r = solve_g(x, n, replicas, tol, opt);
    v.set_value(i, r.g);
    e.set_value(i, r.std_error);
  }
  return GTable(v, e, n, replicas, opt.shape.seed);
}

FTable legendre_f(const GTable& g, RegularGrid u_grid) {
  const RegularGrid& gv = g.values();
  if (u_grid.dim() != gv.dim()) throw std::invalid_argument("u grid dimension differs from the GTable");
  std::vector<std::pair<std::vector<double>, double>> nodes;
  for (std::size_t i = 0; i < gv.size(); ++i)
    if (gv.has_value(i)) nodes.push_back({gv.point(i), gv.value(i)});
  if (nodes.empty()) throw std::invalid_argument("legendre_f needs a nonempty GTable");
  for (std::size_t j = 0; j < u_grid.size(); ++j) {
    auto u = u_grid.point(j);
    double best = -kInf;
    for (const auto& [x, gx] : nodes) {
      double s = gx;
      for (std::size_t a = 0; a < u.size(); ++a) s += u[a] * x[a];
      best = std::max(best, s);
    }
    u_grid.set_value(j, best);
  }
  return FTable(std::move(u_grid));
}

FTable legendre_f(const GTable& g) { return legendre_f(g, RegularGrid::symmetric(g.dim(), 40, 0.25)); }

double FTable::evenness_defect() const {
  double worst = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    auto u = values_.point(i);
    for (double& c : u) c = -c;
    auto j = values_.node_at(u);
    if (!j) throw std::invalid_argument("evenness needs a grid symmetric about 0");
    worst = std::max(worst, std::abs(values_.value(i) - values_.value(*j)));
  }
  return worst;
}

std::vector<std::pair<double, double>> FTable::profile_near_zero(double radius) const {
  auto zero = values_.node_at(std::vector<double>(static_cast<std::size_t>(values_.dim()), 0.0));
  if (!zero) throw std::invalid_argument("profile_near_zero needs the origin on the grid");
  const double f0 = values_.value(*zero);
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    double r = 0;
    for (double c : values_.point(i)) r = std::max(r, std::abs(c));
    if (r <= radius + 1e-12) out.emplace_back(r, values_.value(i) - f0);
  }
  return out;
}

double FTable::convexity_defect() const {
  double worst = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    auto k = values_.multi_index(i);
    for (int a = 0; a < values_.dim(); ++a) {
      auto ai = static_cast<std::size_t>(a);
      if (k[ai] == 0 || k[ai] + 1 >= values_.shape()[ai]) continue;
      auto lo = k, hi = k;
      --lo[ai];
      ++hi[ai];
      double d2 = values_.value(values_.flat_index(lo)) - 2 * values_.value(i) + values_.value(values_.flat_index(hi));
      worst = std::max(worst, -d2);
    }
  }
  return worst;
}

void FTable::write_csv(std::ostream& out) const {
  for (int i = 0; i < values_.dim(); ++i) out << 'u' << i << ',';
  out << "f\n";
  for (std::size_t i = 0; i < values_.size(); ++i) {
    for (double c : values_.point(i)) out << format_double(c) << ',';
    out << format_double(values_.value(i)) << '\n';
  }
}

AsymptoteReport asymptote_check_d1(const FTable& f, double radius, double table_edge_g, double tol) {
  const RegularGrid& v = f.values();
  if (v.dim() != 1) throw std::invalid_argument("asymptote check is for d = 1");
  if (v.upper(0) < 8 || v.lower(0) > -8) throw std::invalid_argument("FTable must cover |u| <= 8");
  AsymptoteReport rep;
  rep.boundary_g = table_edge_g;
  rep.lower_bound_ok = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double u = v.point(i)[0];
    if (v.value(i) < std::abs(u) * radius - tol) rep.lower_bound_ok = false;
    if (u >= 0) rep.excess.push_back({u, v.value(i) - u});
  }
  rep.excess_nonincreasing = true;
  for (std::size_t k = 1; k < rep.excess.size(); ++k)
    if (rep.excess[k].second > rep.excess[k - 1].second + tol) rep.excess_nonincreasing = false;
  double u4 = 4, u8 = 8;
  rep.slope = (*f.at(std::span<const double>(&u8, 1)) - *f.at(std::span<const double>(&u4, 1))) / 4;
  rep.slope_ok = rep.slope >= 0.9 && rep.slope <= 1.1;
  rep.convexity_defect = f.convexity_defect();
  rep.convex_ok = rep.convexity_defect <= tol;
  return rep;
}

}  // namespace bdlab::shape
