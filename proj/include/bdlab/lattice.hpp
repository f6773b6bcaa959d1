#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace bdlab {

// A point of Z^d in lattice units.
class Site {
 public:
  Site() = default;
  explicit Site(std::vector<int> coords);
  Site(std::initializer_list<int> coords) : c_(coords) {}

  static Site origin(int dim) { return Site(std::vector<int>(static_cast<std::size_t>(dim), 0)); }

  int dim() const { return static_cast<int>(c_.size()); }
  int operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  int& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  std::span<const int> coords() const { return c_; }

  long l1_norm() const;
  int linf_norm() const;
  bool is_origin() const;

  Site operator+(const Site& o) const;
  Site operator-(const Site& o) const;
  Site operator-() const;

  friend auto operator<=>(const Site&, const Site&) = default;
  friend bool operator==(const Site&, const Site&) = default;

 private:
  std::vector<int> c_;
};

std::string to_string(const Site& u);

// Componentwise integer part [n x]. A tiny upward nudge keeps products such as
// 20 * 0.3 from landing one below the intended lattice point.
Site lattice_point(std::span<const double> x, double n);

// Hypercube [-radius, radius]^d. Sites on the outer layer (|u|_inf == radius)
// form the frozen halo: they never jump and are the only sites whose missing
// neighbours leave the box. Indices are row-major with coordinate 0 most
// significant, so index order is lexicographic site order.
class Box {
 public:
  Box() = default;
  Box(int dim, int radius, int observation_radius);

  // Box whose radius exceeds the observation radius by safety_margin(horizon).
  static Box for_horizon(int dim, int observation_radius, double horizon);
  // ceil(4 * horizon) + 2
  static int safety_margin(double horizon);

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  int observation_radius() const { return observation_radius_; }
  int side() const { return 2 * radius_ + 1; }
  std::size_t size() const { return size_; }

  bool safe_for(double horizon) const;

  bool contains(const Site& u) const;
  std::size_t index(const Site& u) const;  // throws std::out_of_range
  Site site(std::size_t index) const;
  int coord(std::size_t index, int axis) const;

  bool is_halo(std::size_t index) const;
  bool in_observation(std::size_t index) const;

  // Stride of axis i in the linear index.
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  // In-box nearest neighbours of a site (2d of them unless on the halo).
  void neighbors(std::size_t index, std::vector<std::size_t>& out) const;

  friend bool operator==(const Box& a, const Box& b) {
    return a.dim_ == b.dim_ && a.radius_ == b.radius_ &&
           a.observation_radius_ == b.observation_radius_;
  }

 private:
  int dim_ = 0;
  int radius_ = 0;
  int observation_radius_ = 0;
  std::size_t size_ = 0;
  std::vector<std::size_t> strides_;
};

}  // namespace bdlab
