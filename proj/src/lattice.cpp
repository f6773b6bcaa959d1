#include "bdlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "bdlab/ext_height.hpp"
#include "bdlab/random.hpp"

namespace bdlab {

std::string to_string(ExtHeight h) {
  if (h.is_neg_inf()) return "-inf";
  if (h.is_pos_inf()) return "+inf";
  return std::to_string(h.value());
}

ExtHeight parse_ext_height(std::string_view text) {
  if (text == "-inf") return kNegInf;
  if (text == "+inf" || text == "inf") return kPosInf;
  if (text.empty()) throw std::invalid_argument("empty height");
  std::string s(text);
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad height: " + s);
  }
  if (pos != s.size()) throw std::invalid_argument("bad height: " + s);
  ExtHeight h(v);
  if (!h.is_finite()) throw std::invalid_argument("height collides with a sentinel: " + s);
  return h;
}

Site::Site(std::vector<int> coords) : c_(std::move(coords)) {}

long Site::l1_norm() const {
  long s = 0;
  for (int c : c_) s += std::abs(c);
  return s;
}

int Site::linf_norm() const {
  int m = 0;
  for (int c : c_) m = std::max(m, std::abs(c));
  return m;
}

bool Site::is_origin() const {
  return std::all_of(c_.begin(), c_.end(), [](int c) { return c == 0; });
}

Site Site::operator+(const Site& o) const {
  if (o.dim() != dim()) throw std::invalid_argument("dimension mismatch");
  Site r = *this;
  for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] += o.c_[i];
  return r;
}

Site Site::operator-(const Site& o) const { return *this + (-o); }

Site Site::operator-() const {
  Site r = *this;
  for (int& c : r.c_) c = -c;
  return r;
}

std::string to_string(const Site& u) {
  std::string s = "(";
  for (int i = 0; i < u.dim(); ++i) {
    if (i) s += ",";
    s += std::to_string(u[i]);
  }
  return s + ")";
}

Site lattice_point(std::span<const double> x, double n) {
  std::vector<int> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = n * x[i];
    c[i] = static_cast<int>(std::floor(v + 1e-9 * std::max(1.0, std::abs(v))));
  }
  return Site(std::move(c));
}

Box::Box(int dim, int radius, int observation_radius)
    : dim_(dim), radius_(radius), observation_radius_(observation_radius) {
  if (dim < 1) throw std::invalid_argument("box dimension must be >= 1");
  if (radius < 1) throw std::invalid_argument("box radius must be >= 1");
  if (observation_radius < 0 || observation_radius >= radius)
    throw std::invalid_argument("observation radius must lie in [0, radius)");
  strides_.assign(static_cast<std::size_t>(dim), 1);
  std::size_t side = static_cast<std::size_t>(2 * radius + 1);
  for (int i = dim - 2; i >= 0; --i)
    strides_[static_cast<std::size_t>(i)] = strides_[static_cast<std::size_t>(i) + 1] * side;
  size_ = strides_[0] * side;
}

int Box::safety_margin(double horizon) {
  if (!(horizon >= 0)) throw std::invalid_argument("horizon must be >= 0");
  return static_cast<int>(std::ceil(4.0 * horizon)) + 2;
}

Box Box::for_horizon(int dim, int observation_radius, double horizon) {
  return Box(dim, observation_radius + safety_margin(horizon), observation_radius);
}

bool Box::safe_for(double horizon) const {
  return observation_radius_ + safety_margin(horizon) <= radius_;
}

bool Box::contains(const Site& u) const {
  if (u.dim() != dim_) return false;
  return u.linf_norm() <= radius_;
}

std::size_t Box::index(const Site& u) const {
  if (!contains(u)) throw std::out_of_range("site " + to_string(u) + " outside box");
  std::size_t idx = 0;
  for (int i = 0; i < dim_; ++i)
    idx += static_cast<std::size_t>(u[i] + radius_) * strides_[static_cast<std::size_t>(i)];
  return idx;
}

int Box::coord(std::size_t index, int axis) const {
  std::size_t side = static_cast<std::size_t>(2 * radius_ + 1);
  return static_cast<int>((index / strides_[static_cast<std::size_t>(axis)]) % side) - radius_;
}

Site Box::site(std::size_t index) const {
  std::vector<int> c(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) c[static_cast<std::size_t>(i)] = coord(index, i);
  return Site(std::move(c));
}

bool Box::is_halo(std::size_t index) const {
  for (int i = 0; i < dim_; ++i)
    if (std::abs(coord(index, i)) == radius_) return true;
  return false;
}

bool Box::in_observation(std::size_t index) const {
  for (int i = 0; i < dim_; ++i)
    if (std::abs(coord(index, i)) > observation_radius_) return false;
  return true;
}

void Box::neighbors(std::size_t index, std::vector<std::size_t>& out) const {
  out.clear();
  for (int i = 0; i < dim_; ++i) {
    int c = coord(index, i);
    std::size_t s = strides_[static_cast<std::size_t>(i)];
    if (c > -radius_) out.push_back(index - s);
    if (c < radius_) out.push_back(index + s);
  }
}

std::uint64_t site_key(const Site& u) {
  std::uint64_t h = mix64(0x5173ULL + static_cast<std::uint64_t>(u.dim()));
  for (int c : u.coords()) h = combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
  return h;
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                          std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = combine(mix64(parent), hash_tag(tag));
  for (std::uint64_t w : words) h = combine(h, w);
  return h;
}

}  // namespace bdlab
