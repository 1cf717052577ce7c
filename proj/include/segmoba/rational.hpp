#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace segmoba {

/// Exact rational number over signed 128-bit integers.
///
/// Used for rule weights and every cost in the segmentation model so that
/// dynamic-programming ties compare exactly. Values are kept normalized
/// (den > 0, gcd(num, den) == 1). Arithmetic that would overflow 128 bits
/// throws std::overflow_error instead of wrapping.
class Rational {
 public:
  using Int = __int128;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value) {}  // NOLINT: implicit by design of the number type
  Rational(Int num, Int den);

  static Rational from_int(Int value) {
    Rational r;
    r.num_ = value;
    return r;
  }

  /// Accepts "3", "-2", "0.125", "3/4".
  static Rational parse(std::string_view text);

  Int num() const { return num_; }
  Int den() const { return den_; }
  bool is_integer() const { return den_ == 1; }

  double to_double() const;
  /// "7" for integers, "7/3" otherwise.
  std::string to_string() const;

  Rational& operator+=(const Rational& rhs);
  Rational& operator-=(const Rational& rhs);
  Rational& operator*=(const Rational& rhs);

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  Int num_ = 0;
  Int den_ = 1;
};

std::string int128_to_string(__int128 value);

}  // namespace segmoba
