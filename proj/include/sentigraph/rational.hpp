#pragma once

#include <boost/multiprecision/cpp_int.hpp>

// Exact rational used for metric accumulation: numerators and denominators are
// summed exactly and divided once at the end, so results do not depend on
// evaluation order and precision/recall duality holds exactly.

namespace sentigraph {

using BigInt = boost::multiprecision::cpp_int;

class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(long long value) : num_(value), den_(1) {}  // NOLINT(runtime/explicit)
  Rational(BigInt num, BigInt den) : num_(std::move(num)), den_(std::move(den)) {
    normalize();
  }

  const BigInt& num() const { return num_; }
  const BigInt& den() const { return den_; }

  Rational& operator+=(const Rational& o) {
    num_ = num_ * o.den_ + o.num_ * den_;
    den_ *= o.den_;
    normalize();
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }

  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.num_, a.den_ * b.den_);
  }

  friend Rational operator/(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_, a.den_ * b.num_);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

  friend bool operator<(const Rational& a, const Rational& b) {
    return a.num_ * b.den_ < b.num_ * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator!=(const Rational& a, const Rational& b) {
    return !(a == b);
  }

  double to_double() const {
    return static_cast<double>(boost::multiprecision::cpp_rational(num_, den_));
  }

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const BigInt g = boost::multiprecision::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
    if (num_ == 0) den_ = 1;
  }

  BigInt num_;
  BigInt den_;
};

}  // namespace sentigraph
