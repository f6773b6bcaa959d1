#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bdlab {

// Values on the regular lattice origin + step * k, 0 <= k_i < shape_i. NaN
// marks a node without a value.
class RegularGrid {
 public:
  RegularGrid() = default;
  RegularGrid(std::vector<double> origin, double step, std::vector<int> shape);

  // Nodes k * step for -half <= k_i <= half on every axis.
  static RegularGrid symmetric(int dim, int half, double step);
  // Smallest regular grid holding the given points, step inferred from the
  // closest coordinate spacing. Throws when a point misses the lattice.
  static RegularGrid from_points(const std::vector<std::vector<double>>& points, std::span<const double> values);

  int dim() const { return static_cast<int>(shape_.size()); }
  double step() const { return step_; }
  const std::vector<double>& origin() const { return origin_; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  std::vector<int> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const int> k) const;
  std::vector<double> point(std::size_t flat) const;

  double value(std::size_t flat) const { return values_[flat]; }
  void set_value(std::size_t flat, double v) { values_[flat] = v; }
  bool has_value(std::size_t flat) const;
  std::span<const double> values() const { return values_; }

  // Flat index of the node at x, if x sits on a node (to 1e-9 of a step).
  std::optional<std::size_t> node_at(std::span<const double> x) const;

  // Multilinear interpolation. nullopt outside the grid or when a corner with
  // nonzero weight has no value; no extrapolation.
  std::optional<double> interpolate(std::span<const double> x) const;

  // Bounding box of the grid along an axis.
  double lower(int axis) const { return origin_[static_cast<std::size_t>(axis)]; }
  double upper(int axis) const;

 private:
  double coordinate(std::size_t axis, int k) const;

  std::vector<double> origin_;
  // When the origin is an integer multiple of the step, coordinates are
  // formed as (k + offset) * step so mirrored nodes are exact negatives.
  std::vector<int> offset_;
  bool integral_ = false;
  double step_ = 1.0;
  std::vector<int> shape_;
  std::vector<std::size_t> strides_;
  std::vector<double> values_;
};

}  // namespace bdlab
