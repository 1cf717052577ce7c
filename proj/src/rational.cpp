#include "segmoba/rational.hpp"

#include <numeric>
#include <stdexcept>

namespace segmoba {
namespace {

using Int = Rational::Int;

Int gcd128(Int a, Int b) { return std::gcd(a, b); }

Int checked_mul(Int a, Int b) {
  Int out;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("rational overflow (mul)");
  return out;
}

Int checked_add(Int a, Int b) {
  Int out;
  if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("rational overflow (add)");
  return out;
}

}  // namespace

Rational::Rational(Int num, Int den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  Int g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  num_ = num;
  den_ = den;
}

Rational Rational::parse(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("malformed number '" + std::string(text) + "'");
  };
  auto parse_int = [&](std::string_view digits, bool allow_sign) -> Int {
    bool neg = false;
    if (allow_sign && !digits.empty() && (digits[0] == '-' || digits[0] == '+')) {
      neg = digits[0] == '-';
      digits.remove_prefix(1);
    }
    if (digits.empty()) fail();
    Int v = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') fail();
      v = checked_add(checked_mul(v, 10), c - '0');
    }
    return neg ? -v : v;
  };

  if (text.empty()) fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(parse_int(text.substr(0, slash), true), parse_int(text.substr(slash + 1), false));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    bool neg = !whole.empty() && whole[0] == '-';
    if (!whole.empty() && (whole[0] == '-' || whole[0] == '+')) whole.remove_prefix(1);
    if (whole.empty() && frac.empty()) fail();
    Int w = whole.empty() ? 0 : parse_int(whole, false);
    Int f = frac.empty() ? 0 : parse_int(frac, false);
    Int scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale = checked_mul(scale, 10);
    Int num = checked_add(checked_mul(w, scale), f);
    return Rational(neg ? -num : num, scale);
  }
  return from_int(parse_int(text, true));
}

double Rational::to_double() const {
  return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rational::to_string() const {
  if (den_ == 1) return int128_to_string(num_);
  return int128_to_string(num_) + "/" + int128_to_string(den_);
}

Rational& Rational::operator+=(const Rational& rhs) {
  if (den_ == 1 && rhs.den_ == 1) {
    num_ = checked_add(num_, rhs.num_);
    return *this;
  }
  Int g = gcd128(den_, rhs.den_);
  Int lhs_scale = rhs.den_ / g;
  Int rhs_scale = den_ / g;
  *this = Rational(checked_add(checked_mul(num_, lhs_scale), checked_mul(rhs.num_, rhs_scale)),
                   checked_mul(den_, lhs_scale));
  return *this;
}

Rational& Rational::operator-=(const Rational& rhs) {
  Rational neg = rhs;
  neg.num_ = -neg.num_;
  return *this += neg;
}

Rational& Rational::operator*=(const Rational& rhs) {
  if (den_ == 1 && rhs.den_ == 1) {
    num_ = checked_mul(num_, rhs.num_);
    return *this;
  }
  // Cross-reduce first to keep intermediates small.
  Int g1 = gcd128(num_, rhs.den_);
  Int g2 = gcd128(rhs.num_, den_);
  if (g1 == 0) g1 = 1;
  if (g2 == 0) g2 = 1;
  *this = Rational(checked_mul(num_ / g1, rhs.num_ / g2), checked_mul(den_ / g2, rhs.den_ / g1));
  return *this;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  if (a.den_ == b.den_) return a.num_ <=> b.num_;
  return checked_mul(a.num_, b.den_) <=> checked_mul(b.num_, a.den_);
}

std::string int128_to_string(__int128 value) {
  if (value == 0) return "0";
  bool neg = value < 0;
  unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-(value + 1)) + 1
                              : static_cast<unsigned __int128>(value);
  std::string out;
  while (mag != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(mag % 10)));
    mag /= 10;
  }
  if (neg) out.push_back('-');
  return {out.rbegin(), out.rend()};
}

}  // namespace segmoba
