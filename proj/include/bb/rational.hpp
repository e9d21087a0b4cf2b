#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bb {

// Exact rational order arithmetic. Symbol orders mix integers with halves and
// eighths (inclusion-rule splits), so doubles are avoided on purpose.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n) : num(n), den(1) {}
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return double(num) / double(den); }

  friend Rational operator+(Rational a, Rational b) {
    return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
  }
  friend Rational operator-(Rational a, Rational b) {
    return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
  }
  friend Rational operator*(Rational a, Rational b) {
    return Rational(a.num * b.num, a.den * b.den);
  }
  friend Rational operator-(Rational a) { return Rational(-a.num, a.den); }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return a.num * b.den < b.num * a.den;
  }
  friend bool operator<=(const Rational& a, const Rational& b) {
    return a.num * b.den <= b.num * a.den;
  }

  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

inline Rational rational_max(Rational a, Rational b) { return a < b ? b : a; }

// max(0, r)
inline Rational rational_pos(Rational r) {
  return r < Rational(0) ? Rational(0) : r;
}

// Parses "p" or "p/q". Throws std::invalid_argument on malformed input or
// q == 0 (this is the error surfaced for config strings like "1/0").
inline Rational parse_rational(const std::string& s) {
  size_t slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(s));
    std::int64_t p = std::stoll(s.substr(0, slash));
    std::int64_t q = std::stoll(s.substr(slash + 1));
    return Rational(p, q);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("malformed rational: \"" + s + "\"");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("rational out of range: \"" + s + "\"");
  }
}

}  // namespace bb
