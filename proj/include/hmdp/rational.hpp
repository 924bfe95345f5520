#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "hmdp/errors.hpp"

namespace hmdp {

/// Exact rational with 64-bit numerator and denominator, always kept
/// normalized (gcd 1, positive denominator). Model files and generated
/// models use small fractions, so 64 bits with overflow checks suffice.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t numerator, std::int64_t denominator) {
    if (denominator == 0) throw Error("rational with zero denominator");
    num_ = numerator;
    den_ = denominator;
    normalize();
  }
  static Rational integer(std::int64_t n) { return Rational(n, 1); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  bool is_one() const { return num_ == 1 && den_ == 1; }
  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  Rational operator-() const { return make_checked(-static_cast<__int128>(num_), den_); }
  Rational operator+(const Rational& o) const {
    __int128 n = static_cast<__int128>(num_) * o.den_ +
                 static_cast<__int128>(o.num_) * den_;
    return make_checked(n, static_cast<__int128>(den_) * o.den_);
  }
  Rational operator-(const Rational& o) const { return *this + (-o); }
  Rational operator*(const Rational& o) const {
    return make_checked(static_cast<__int128>(num_) * o.num_,
                        static_cast<__int128>(den_) * o.den_);
  }
  Rational operator/(const Rational& o) const {
    if (o.num_ == 0) throw Error("rational division by zero");
    return make_checked(static_cast<__int128>(num_) * o.den_,
                        static_cast<__int128>(den_) * o.num_);
  }
  bool operator==(const Rational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  bool operator<(const Rational& o) const {
    return static_cast<__int128>(num_) * o.den_ <
           static_cast<__int128>(o.num_) * den_;
  }

  /// Prints "n" for integers and "n/d" otherwise.
  std::string to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  static Rational make_checked(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    constexpr __int128 lo = INT64_MIN, hi = INT64_MAX;
    if (n < lo || n > hi || d > hi)
      throw Error("rational overflow; coefficients exceed 64 bits");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }
  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }
  void normalize() {
    Rational r = make_checked(num_, den_);
    num_ = r.num_;
    den_ = r.den_;
  }

  std::int64_t num_{0};
  std::int64_t den_{1};
};

}  // namespace hmdp
