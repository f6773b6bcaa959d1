#include "bdlab/hopflax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bdlab/csv.hpp"

namespace bdlab::hopflax {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(trim(part)));
  if (out.empty()) throw std::invalid_argument("empty coordinate list");
  return out;
}

std::string join(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

const std::string& require(const Params& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw std::invalid_argument("profile needs '" + key + "'");
  return it->second;
}

std::string get(const Params& p, const std::string& key, const std::string& fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

// Odometer over {0..m-1}^d; returns false after the last index.
bool next_index(std::vector<int>& k, int m) {
  for (std::size_t a = 0; a < k.size(); ++a) {
    if (++k[a] < m) return true;
    k[a] = 0;
  }
  return false;
}

double norm2(std::span<const double> v) {
  double s = 0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

// Running sup of phi(x - tau z) + tau g(z) over candidates z.
class SupSearch {
 public:
  SupSearch(std::span<const double> x, double tau, const std::function<double(std::span<const double>)>& phi,
            const shape::GTable& g, const fpp::B0Table& b0, double delta)
      : x_(x), tau_(tau), phi_(phi), g_(g), b0_(b0), limit_(1 - delta), y_(x.size()) {}

  void offer(const std::vector<double>& z) {
    if (out_.value == kInf) return;
    if (b0_.gauge(z) > limit_ + 1e-12) {
      ++out_.skipped;
      return;
    }
    auto gz = g_.at(z);
    if (!gz) {
      ++out_.skipped;
      return;
    }
    ++out_.candidates;
    for (std::size_t a = 0; a < y_.size(); ++a) y_[a] = x_[a] - tau_ * z[a];
    double v = phi_(y_);
    if (v == -kInf) return;
    if (v == kInf) {
      out_.value = kInf;
      return;
    }
    double c = v + tau_ * *gz;
    if (!found_ || c > out_.value) {
      out_.value = c;
      best_ = z;
      found_ = true;
    }
  }

  bool found() const { return found_; }
  const std::vector<double>& best() const { return best_; }
  PsiValue result() const {
    PsiValue r = out_;
    if (!found_ && r.value != kInf) r.value = -kInf;
    return r;
  }

 private:
  std::span<const double> x_;
  double tau_;
  const std::function<double(std::span<const double>)>& phi_;
  const shape::GTable& g_;
  const fpp::B0Table& b0_;
  double limit_;
  std::vector<double> y_;
  PsiValue out_;
  std::vector<double> best_;
  bool found_ = false;
};

}  // namespace

ProfileSpec ProfileSpec::flat(double c, int dim) {
  ProfileSpec p;
  p.kind = Kind::flat;
  p.level = c;
  p.dim_ = dim;
  return p;
}

ProfileSpec ProfileSpec::seed(std::vector<double> point) {
  if (point.empty()) throw std::invalid_argument("seed profile needs a point");
  ProfileSpec p;
  p.kind = Kind::seed;
  p.dim_ = static_cast<int>(point.size());
  p.point = std::move(point);
  return p;
}

ProfileSpec ProfileSpec::wedge(double slope, int dim) {
  if (!(slope >= 0) || !std::isfinite(slope)) throw std::invalid_argument("wedge slope must be finite and >= 0");
  ProfileSpec p;
  p.kind = Kind::wedge;
  p.slope = slope;
  p.dim_ = dim;
  return p;
}

ProfileSpec ProfileSpec::spike(Site site, double height) {
  ProfileSpec p;
  p.kind = Kind::spike;
  p.dim_ = site.dim();
  p.spike_site = std::move(site);
  p.spike_height = height;
  return p;
}

ProfileSpec ProfileSpec::table(RegularGrid g, std::string source) {
  ProfileSpec p;
  p.kind = Kind::table;
  p.dim_ = g.dim();
  p.grid = std::make_shared<const RegularGrid>(std::move(g));
  p.source = std::move(source);
  return p;
}

double ProfileSpec::operator()(std::span<const double> y) const {
  switch (kind) {
    case Kind::flat:
      return level;
    case Kind::spike:
      return 0.0;
    case Kind::wedge: {
      double s = 0;
      for (double c : y) s += std::abs(c);
      return -slope * s;
    }
    case Kind::seed:
      for (std::size_t a = 0; a < y.size(); ++a)
        if (std::abs(y[a] - point[a]) > 1e-12) return -kInf;
      return 0.0;
    case Kind::table: {
      auto v = grid->interpolate(y);
      return v ? *v : -kInf;
    }
  }
  return -kInf;
}

std::vector<std::vector<double>> ProfileSpec::atoms() const {
  if (kind == Kind::seed) return {point};
  if (kind == Kind::wedge) return {std::vector<double>(static_cast<std::size_t>(dim_), 0.0)};
  return {};
}

bool ProfileSpec::uniformly_continuous() const {
  return kind == Kind::flat || kind == Kind::wedge || kind == Kind::spike;
}

ProfileSpec ProfileSpec::parse(const Params& p) {
  const std::string kind = require(p, "kind");
  const int dim = std::stoi(get(p, "dim", "1"));
  if (kind == "flat") return flat(parse_double(get(p, "level", "0")), dim);
  if (kind == "seed") return seed(parse_vector(get(p, "point", "0")));
  if (kind == "wedge") return wedge(parse_double(get(p, "slope", "1")), dim);
  if (kind == "spike") {
    auto c = parse_vector(get(p, "site", "0"));
    std::vector<int> k;
    for (double v : c) {
      if (v != std::round(v)) throw std::invalid_argument("spike site must be a lattice point");
      k.push_back(static_cast<int>(v));
    }
    return spike(Site(k), parse_double(get(p, "height", "1")));
  }
  if (kind == "table") {
    const std::string path = require(p, "file");
    CsvTable t = read_csv(path);
    std::vector<std::size_t> xc;
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c].size() > 1 && t.header[c][0] == 'x') xc.push_back(c);
    if (xc.empty() || t.rows.empty()) throw std::invalid_argument(path + ": profile table needs x columns and rows");
    const std::size_t vc = t.column("value");
    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
    for (const auto& row : t.rows) {
      std::vector<double> pt;
      for (std::size_t c : xc) pt.push_back(parse_double(row.at(c)));
      pts.push_back(std::move(pt));
      vals.push_back(parse_double(row.at(vc)));
    }
    return table(RegularGrid::from_points(pts, vals), path);
  }
  throw std::invalid_argument("unknown profile kind '" + kind + "'");
}

Params ProfileSpec::to_params() const {
  Params p;
  switch (kind) {
    case Kind::flat:
      p = {{"kind", "flat"}, {"level", format_double(level)}};
      break;
    case Kind::seed:
      p = {{"kind", "seed"}, {"point", join(point)}};
      break;
    case Kind::wedge:
      p = {{"kind", "wedge"}, {"slope", format_double(slope)}};
      break;
    case Kind::spike: {
      std::vector<double> c;
      for (int i = 0; i < spike_site.dim(); ++i) c.push_back(spike_site[i]);
      p = {{"kind", "spike"}, {"site", join(c)}, {"height", format_double(spike_height)}};
      break;
    }
    case Kind::table:
      p = {{"kind", "table"}, {"file", source}};
      break;
  }
  if (kind == Kind::flat || kind == Kind::wedge) p["dim"] = std::to_string(dim_);
  return p;
}

PsiValue hopf_lax_sup(std::span<const double> x, double tau, const std::function<double(std::span<const double>)>& phi,
                      const std::vector<std::vector<double>>& atoms, const shape::GTable& g, const fpp::B0Table& b0,
                      const EvalOptions& opt) {
  if (!(tau > 0)) throw std::invalid_argument("Hopf-Lax sup needs a positive time step");
  if (opt.divisor < 1 || opt.refine_levels < 0) throw std::invalid_argument("bad Hopf-Lax options");
  const std::size_t d = x.size();
  if (static_cast<int>(d) != g.dim()) throw std::invalid_argument("x and GTable dimensions differ");
  const RegularGrid& grid = g.values();
  const double h = grid.step() / opt.divisor;

  SupSearch search(x, tau, phi, g, b0, opt.delta_edge);
  // Candidate lattice aligned with the table nodes.
  std::vector<int> lo(d), count(d);
  for (std::size_t a = 0; a < d; ++a) {
    lo[a] = static_cast<int>(std::llround(grid.lower(static_cast<int>(a)) / h));
    count[a] = static_cast<int>(std::llround((grid.upper(static_cast<int>(a)) - grid.lower(static_cast<int>(a))) / h)) + 1;
  }
  std::vector<int> k(d, 0);
  std::vector<double> z(d);
  const int m = *std::max_element(count.begin(), count.end());
  do {
    bool inside = true;
    for (std::size_t a = 0; a < d; ++a) {
      if (k[a] >= count[a]) inside = false;
      z[a] = (lo[a] + k[a]) * h;
    }
    if (inside) search.offer(z);
  } while (next_index(k, m));

  for (const auto& p : atoms) {
    for (std::size_t a = 0; a < d; ++a) z[a] = (x[a] - p[a]) / tau;
    search.offer(z);
  }

  // Local refinement: 9^d points spanning one coarse step on each side.
  double step = h;
  for (int level = 0; level < opt.refine_levels && search.found(); ++level) {
    const std::vector<double> centre = search.best();
    step /= 4;
    std::vector<int> j(d, 0);
    do {
      bool zero = true;
      for (std::size_t a = 0; a < d; ++a) {
        z[a] = centre[a] + (j[a] - 4) * step;
        zero = zero && j[a] == 4;
      }
      if (!zero) search.offer(z);
    } while (next_index(j, 9));
  }
  return search.result();
}

PsiValue eval_psi(std::span<const double> x, double t, const ProfileSpec& psi0, const shape::GTable& g,
                  const fpp::B0Table& b0, const EvalOptions& opt) {
  if (!(t >= 0)) throw std::invalid_argument("eval_psi needs t >= 0");
  if (static_cast<int>(x.size()) != psi0.dim()) throw std::invalid_argument("x and profile dimensions differ");
  if (t == 0) return {psi0(x), 0, 0};
  std::function<double(std::span<const double>)> phi = [&psi0](std::span<const double> y) { return psi0(y); };
  return hopf_lax_sup(x, t, phi, psi0.atoms(), g, b0, opt);
}

double semigroup_residual(std::span<const double> x, double s, double t, const ProfileSpec& psi0,
                          const shape::GTable& g, const fpp::B0Table& b0, const EvalOptions& opt) {
  if (!(s > 0 && s < t)) throw std::invalid_argument("semigroup check needs 0 < s < t");
  const double direct = eval_psi(x, t, psi0, g, b0, opt).value;
  std::function<double(std::span<const double>)> phi = [&](std::span<const double> y) {
    return eval_psi(y, s, psi0, g, b0, opt).value;
  };
  const double composed = hopf_lax_sup(x, t - s, phi, psi0.atoms(), g, b0, opt).value;
  if (direct == composed) return 0.0;  // covers equal infinities
  return std::abs(direct - composed);
}

RefinementStudy semigroup_refinement(const ProfileSpec& psi0, const shape::GTable& g, const fpp::B0Table& b0,
                                     const std::vector<std::vector<double>>& xs, double s, double t,
                                     std::vector<int> divisors) {
  RefinementStudy st;
  st.divisors = std::move(divisors);
  for (int div : st.divisors) {
    EvalOptions opt;
    opt.divisor = div;
    double worst = 0;
    for (const auto& x : xs) worst = std::max(worst, semigroup_residual(x, s, t, psi0, g, b0, opt));
    st.residuals.push_back(worst);
  }
  st.passed = true;
  for (std::size_t k = 1; k < st.residuals.size(); ++k) {
    const double prev = st.residuals[k - 1], cur = st.residuals[k];
    st.ratios.push_back(prev > 0 ? cur / prev : 0.0);
    if (!(cur <= st.converged_below || cur <= 0.7 * prev)) st.passed = false;
  }
  return st;
}

ModulusReport modulus_check(const ProfileSpec& psi0, const shape::GTable& g, const fpp::B0Table& b0,
                            const std::vector<ModulusSample>& samples, double tol, const EvalOptions& opt) {
  if (!psi0.uniformly_continuous()) throw std::invalid_argument("modulus check needs a finite continuous profile");
  const int d = psi0.dim();
  const auto ud = static_cast<std::size_t>(d);
  const double bmax = b0.max_radius();
  const double gmax = g.max_value();
  auto psi = [&](std::span<const double> x, double t) { return eval_psi(x, t, psi0, g, b0, opt).value; };

  // Offsets w with |w| <= r: axis and diagonal directions at 8 lengths in
  // d <= 2, axis directions otherwise.
  auto offsets = [&](double r) {
    std::vector<std::vector<double>> dirs;
    if (d == 1) {
      dirs = {{1.0}, {-1.0}};
    } else if (d == 2) {
      for (int q = 0; q < 16; ++q) {
        double th = 2 * 3.14159265358979323846 * q / 16;
        dirs.push_back({std::cos(th), std::sin(th)});
      }
    } else {
      for (std::size_t a = 0; a < ud; ++a)
        for (double sg : {-1.0, 1.0}) {
          std::vector<double> e(ud, 0.0);
          e[a] = sg;
          dirs.push_back(e);
        }
    }
    std::vector<std::vector<double>> w;
    for (const auto& e : dirs)
      for (int l = 1; l <= 8; ++l) {
        std::vector<double> v(ud);
        for (std::size_t a = 0; a < ud; ++a) v[a] = e[a] * r * l / 8;
        w.push_back(v);
      }
    return w;
  };

  ModulusReport rep;
  rep.worst_time_margin = kInf;
  rep.worst_space_margin = kInf;
  for (const auto& smp : samples) {
    if (smp.x1.size() != ud || smp.x2.size() != ud) throw std::invalid_argument("modulus sample dimension");
    if (!(smp.s >= 0 && smp.s <= smp.t)) throw std::invalid_argument("modulus sample needs 0 <= s <= t");
    ++rep.checked;

    // Time: 0 <= psi(x,t) - psi(x,s) <= osc(psi(.,s); b0 (t-s)) + (t-s) max g.
    const double vt = psi(smp.x1, smp.t), vs = psi(smp.x1, smp.s);
    const double diff = vt - vs;
    const double r = bmax * (smp.t - smp.s);
    double osc = 0;
    if (r > 0)
      for (const auto& w : offsets(r)) {
        std::vector<double> y(ud);
        for (std::size_t a = 0; a < ud; ++a) y[a] = smp.x1[a] + w[a];
        osc = std::max(osc, std::abs(psi(y, smp.s) - vs));
      }
    const double bound = osc + (smp.t - smp.s) * gmax;
    const double margin = std::min(diff + tol, bound + tol - diff);
    rep.worst_time_margin = std::min(rep.worst_time_margin, std::min(diff, bound - diff));
    if (!(margin >= 0)) ++rep.time_violations;

    // Space: |psi(x1,t) - psi(x2,t)| <= osc(psi0; |x1 - x2|), the modulus taken
    // over pairs in the region the two sups can reach.
    const double dist = [&] {
      std::vector<double> dv(ud);
      for (std::size_t a = 0; a < ud; ++a) dv[a] = smp.x1[a] - smp.x2[a];
      return norm2(dv);
    }();
    const double gap = std::abs(vt - psi(smp.x2, smp.t));
    double osc0 = 0;
    if (dist > 0) {
      const auto ws = offsets(dist);
      const int per_axis = d == 1 ? 65 : d == 2 ? 17 : 5;
      std::vector<double> lo(ud), span(ud);
      for (std::size_t a = 0; a < ud; ++a) {
        lo[a] = std::min(smp.x1[a], smp.x2[a]) - smp.t * bmax;
        span[a] = std::abs(smp.x1[a] - smp.x2[a]) + 2 * smp.t * bmax;
      }
      std::vector<int> k(ud, 0);
      std::vector<double> y(ud), y2(ud);
      do {
        for (std::size_t a = 0; a < ud; ++a) y[a] = lo[a] + span[a] * k[a] / (per_axis - 1);
        const double p0 = psi0(y);
        for (const auto& w : ws) {
          for (std::size_t a = 0; a < ud; ++a) y2[a] = y[a] + w[a];
          osc0 = std::max(osc0, std::abs(psi0(y2) - p0));
        }
      } while (next_index(k, per_axis));
    }
    rep.worst_space_margin = std::min(rep.worst_space_margin, osc0 - gap);
    if (!(gap <= osc0 + tol)) ++rep.space_violations;
  }
  return rep;
}

void PsiField::write_csv(std::ostream& out) const {
  for (int i = 0; i < xs.dim(); ++i) out << 'x' << i << ',';
  out << "t,psi\n";
  for (std::size_t ti = 0; ti < times.size(); ++ti)
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (double c : xs.point(i)) out << format_double(c) << ',';
      out << format_double(times[ti]) << ',' << format_double(values[ti][i]) << '\n';
    }
}

PsiField eval_psi_field(const RegularGrid& xs, const std::vector<double>& times, const ProfileSpec& psi0,
                        const shape::GTable& g, const fpp::B0Table& b0, const EvalOptions& opt) {
  PsiField f;
  f.xs = xs;
  f.times = times;
  for (double t : times) {
    std::vector<double> row;
    row.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto v = eval_psi(xs.point(i), t, psi0, g, b0, opt);
      f.skipped += v.skipped;
      row.push_back(v.value);
    }
    f.values.push_back(std::move(row));
  }
  return f;
}

}  // namespace bdlab::hopflax
