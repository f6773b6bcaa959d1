#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace bdlab {

// Height value in Z ∪ {-inf, +inf}. The sentinels sit at the ends of the
// int64 range so the natural integer order is the extended order.
class ExtHeight {
 public:
  using rep = std::int64_t;

  constexpr ExtHeight() = default;  // -inf
  constexpr explicit ExtHeight(rep v) : v_(v) {}

  static constexpr ExtHeight neg_inf() { return ExtHeight(kNegInf); }
  static constexpr ExtHeight pos_inf() { return ExtHeight(kPosInf); }

  constexpr bool is_neg_inf() const { return v_ == kNegInf; }
  constexpr bool is_pos_inf() const { return v_ == kPosInf; }
  constexpr bool is_finite() const { return v_ != kNegInf && v_ != kPosInf; }

  // Only meaningful for finite heights.
  constexpr rep value() const { return v_; }
  constexpr rep raw() const { return v_; }

  // Scaled real value with the sentinels mapped to +-infinity.
  double as_double() const {
    if (is_neg_inf()) return -std::numeric_limits<double>::infinity();
    if (is_pos_inf()) return std::numeric_limits<double>::infinity();
    return static_cast<double>(v_);
  }

  constexpr ExtHeight successor() const { return is_finite() ? ExtHeight(v_ + 1) : *this; }

  friend constexpr auto operator<=>(ExtHeight, ExtHeight) = default;
  friend constexpr bool operator==(ExtHeight, ExtHeight) = default;

 private:
  static constexpr rep kNegInf = std::numeric_limits<rep>::min();
  static constexpr rep kPosInf = std::numeric_limits<rep>::max();
  rep v_ = kNegInf;
};

inline constexpr ExtHeight kNegInf = ExtHeight::neg_inf();
inline constexpr ExtHeight kPosInf = ExtHeight::pos_inf();

constexpr ExtHeight ext_max(ExtHeight a, ExtHeight b) { return a < b ? b : a; }

// -inf absorbs everything, including +inf.
constexpr ExtHeight ext_add(ExtHeight a, ExtHeight b) {
  if (a.is_neg_inf() || b.is_neg_inf()) return kNegInf;
  if (a.is_pos_inf() || b.is_pos_inf()) return kPosInf;
  return ExtHeight(a.value() + b.value());
}

std::string to_string(ExtHeight h);

// Accepts integers, "-inf" and "+inf"/"inf". Throws std::invalid_argument.
ExtHeight parse_ext_height(std::string_view text);

}  // namespace bdlab
