#include "bdlab/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <set>
#include <stdexcept>

namespace bdlab {

RegularGrid::RegularGrid(std::vector<double> origin, double step, std::vector<int> shape)
    : origin_(std::move(origin)), step_(step), shape_(std::move(shape)) {
  if (!(step > 0) || !std::isfinite(step)) throw std::invalid_argument("grid step must be positive");
  if (origin_.size() != shape_.size() || shape_.empty()) throw std::invalid_argument("grid origin and shape disagree");
  integral_ = true;
  for (double o : origin_) {
    double r = o / step_;
    if (std::abs(r - std::round(r)) > 1e-9) integral_ = false;
    offset_.push_back(static_cast<int>(std::llround(r)));
  }
  strides_.assign(shape_.size(), 1);
  std::size_t total = 1;
  for (int i = dim() - 1; i >= 0; --i) {
    if (shape_[static_cast<std::size_t>(i)] < 1) throw std::invalid_argument("grid axes need at least one node");
    strides_[static_cast<std::size_t>(i)] = total;
    total *= static_cast<std::size_t>(shape_[static_cast<std::size_t>(i)]);
  }
  values_.assign(total, std::numeric_limits<double>::quiet_NaN());
}

RegularGrid RegularGrid::symmetric(int dim, int half, double step) {
  if (dim < 1 || half < 0) throw std::invalid_argument("bad symmetric grid");
  return RegularGrid(std::vector<double>(static_cast<std::size_t>(dim), -half * step), step,
                     std::vector<int>(static_cast<std::size_t>(dim), 2 * half + 1));
}

RegularGrid RegularGrid::from_points(const std::vector<std::vector<double>>& points, std::span<const double> values) {
  if (points.empty() || points.size() != values.size()) throw std::invalid_argument("from_points needs matching data");
  const std::size_t d = points.front().size();
  std::vector<std::set<double>> coords(d);
  for (const auto& p : points) {
    if (p.size() != d) throw std::invalid_argument("from_points: mixed dimensions");
    for (std::size_t a = 0; a < d; ++a) coords[a].insert(p[a]);
  }
  double step = std::numeric_limits<double>::infinity();
  for (const auto& s : coords)
    for (auto it = s.begin(); std::next(it) != s.end(); ++it) step = std::min(step, *std::next(it) - *it);
  if (!std::isfinite(step)) step = 1.0;
  // Grids written as decimals: undo the round-off that differencing adds.
  for (const auto& s : coords)
    if (s.size() > 1) {
      double span = *s.rbegin() - *s.begin();
      step = span / std::llround(span / step);
      break;
    }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", step);
  step = std::strtod(buf, nullptr);
  std::vector<double> origin;
  std::vector<int> shape;
  for (const auto& s : coords) {
    origin.push_back(*s.begin());
    shape.push_back(static_cast<int>(std::llround((*s.rbegin() - *s.begin()) / step)) + 1);
  }
  RegularGrid g(origin, step, shape);
  for (std::size_t r = 0; r < points.size(); ++r) {
    auto node = g.node_at(points[r]);
    if (!node) throw std::runtime_error("points do not lie on a regular grid");
    g.set_value(*node, values[r]);
  }
  return g;
}

std::vector<int> RegularGrid::multi_index(std::size_t flat) const {
  std::vector<int> k(shape_.size());
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    k[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
  return k;
}

std::size_t RegularGrid::flat_index(std::span<const int> k) const {
  std::size_t f = 0;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (k[i] < 0 || k[i] >= shape_[i]) throw std::out_of_range("grid index out of range");
    f += static_cast<std::size_t>(k[i]) * strides_[i];
  }
  return f;
}

std::vector<double> RegularGrid::point(std::size_t flat) const {
  auto k = multi_index(flat);
  std::vector<double> x(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) x[i] = coordinate(i, k[i]);
  return x;
}

double RegularGrid::coordinate(std::size_t axis, int k) const {
  if (integral_) return (k + offset_[axis]) * step_;
  return origin_[axis] + step_ * k;
}

bool RegularGrid::has_value(std::size_t flat) const { return !std::isnan(values_[flat]); }

double RegularGrid::upper(int axis) const {
  return coordinate(static_cast<std::size_t>(axis), shape_[static_cast<std::size_t>(axis)] - 1);
}

std::optional<std::size_t> RegularGrid::node_at(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw std::invalid_argument("grid point dimension mismatch");
  std::vector<int> k(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = (x[i] - origin_[i]) / step_;
    double kr = std::round(r);
    if (std::abs(r - kr) > 1e-9 || kr < 0 || kr >= shape_[i]) return std::nullopt;
    k[i] = static_cast<int>(kr);
  }
  return flat_index(k);
}

std::optional<double> RegularGrid::interpolate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw std::invalid_argument("grid point dimension mismatch");
  const std::size_t d = x.size();
  std::vector<int> base(d);
  std::vector<double> frac(d);
  for (std::size_t i = 0; i < d; ++i) {
    double r = (x[i] - origin_[i]) / step_;
    // Snap values within round-off of a node.
    double kr = std::round(r);
    if (std::abs(r - kr) < 1e-9) r = kr;
    if (r < 0 || r > shape_[i] - 1) return std::nullopt;
    int b = std::min(static_cast<int>(std::floor(r)), shape_[i] - 1);
    base[i] = b;
    frac[i] = r - b;
  }
  double acc = 0.0;
  std::vector<int> k(d);
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double w = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      bool up = (corner >> i) & 1;
      w *= up ? frac[i] : 1.0 - frac[i];
      k[i] = base[i] + (up ? 1 : 0);
    }
    if (w == 0.0) continue;
    double v = values_[flat_index(k)];
    if (std::isnan(v)) return std::nullopt;
    acc += w * v;
  }
  return acc;
}

}  // namespace bdlab
