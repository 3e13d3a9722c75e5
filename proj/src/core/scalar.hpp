#pragma once

// Exact scalars: Gaussian rationals re + im*i with arbitrary-precision
// rational components. No floating point anywhere in the library.

#include <boost/multiprecision/gmp.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace csbv {

using Rat = boost::multiprecision::mpq_rational;

struct Scalar {
  Rat re{0};
  Rat im{0};

  Scalar() = default;
  Scalar(long v) : re(v) {}
  Scalar(Rat r) : re(std::move(r)) {}
  Scalar(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}

  static Scalar i() { return Scalar(Rat(0), Rat(1)); }

  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }

  Scalar operator-() const { return Scalar(-re, -im); }
  Scalar conj() const { return Scalar(re, -im); }

  Scalar& operator+=(const Scalar& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  Scalar& operator-=(const Scalar& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
  friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
  friend Scalar operator*(const Scalar& a, const Scalar& b) {
    return Scalar(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
  }
  Scalar& operator*=(const Scalar& o) { return *this = *this * o; }

  // norm = re^2 + im^2; positive rational unless zero.
  Rat norm() const { return re * re + im * im; }

  Scalar inv() const {
    Rat n = norm();
    if (n == 0) throw std::domain_error("Scalar::inv: division by zero");
    return Scalar(re / n, -im / n);
  }
  friend Scalar operator/(const Scalar& a, const Scalar& b) { return a * b.inv(); }

  friend bool operator==(const Scalar& a, const Scalar& b) {
    return a.re == b.re && a.im == b.im;
  }
  friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }
};

inline std::string rat_str(const Rat& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) s += "/" + denominator(r).str();
  return s;
}

// Canonical rendering; parse_scalar below accepts exactly this plus
// obvious variants ("3", "-1/2", "2i", "1/2 - 3/4 i").
inline std::string scalar_str(const Scalar& s) {
  if (s.im == 0) return rat_str(s.re);
  std::string out;
  if (s.re != 0) {
    out = rat_str(s.re);
    out += (s.im > 0) ? " + " : " - ";
    Rat a = abs(s.im);
    if (a != 1) out += rat_str(a) + " ";
    out += "i";
    return out;
  }
  if (s.im == 1) return "i";
  if (s.im == -1) return "-i";
  return rat_str(s.im) + " i";
}

std::optional<Rat> parse_rat(const std::string& tok);
std::optional<Scalar> parse_scalar(const std::string& text);

}  // namespace csbv
