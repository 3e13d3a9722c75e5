#pragma once

// Truncated series in the loop parameter.
//
// LaurentHbar: finitely many powers of hbar in a fixed window [lo, hi];
// products discard contributions outside the window. HbarSeries is the
// nonnegative-window special case. TwoTier keeps the singular tree-level
// exponent quarantined: it represents exp((i/hbar) tree) * loop and no
// operation ever expands the exponential of a negative power.

#include <map>

#include "core/poly.hpp"

namespace csbv {

class LaurentHbar {
 public:
  LaurentHbar() = default;
  LaurentHbar(int lo, int hi, const VarPool* pool) : lo_(lo), hi_(hi), pool_(pool) {}

  static LaurentHbar unit(int lo, int hi, const VarPool* pool) {
    LaurentHbar s(lo, hi, pool);
    s.set(0, Poly::unit(pool));
    return s;
  }
  static LaurentHbar from_poly(int lo, int hi, int power, Poly p) {
    LaurentHbar s(lo, hi, p.pool());
    s.set(power, std::move(p));
    return s;
  }

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  const VarPool* pool() const { return pool_; }
  const std::map<int, Poly>& coeffs() const { return c_; }

  Poly coeff(int k) const {
    auto it = c_.find(k);
    return it == c_.end() ? Poly(pool_) : it->second;
  }
  void set(int k, Poly p) {
    if (k < lo_ || k > hi_ || p.is_zero())
      return;
    c_[k] = std::move(p);
  }
  void add(int k, const Poly& p) {
    if (k < lo_ || k > hi_ || p.is_zero()) return;
    auto [it, fresh] = c_.try_emplace(k, p);
    if (!fresh) {
      it->second += p;
      if (it->second.is_zero()) c_.erase(it);
    }
  }
  bool is_zero() const { return c_.empty(); }

  LaurentHbar& operator+=(const LaurentHbar& o) {
    for (auto& [k, p] : o.c_) add(k, p);
    return *this;
  }
  LaurentHbar& operator-=(const LaurentHbar& o) {
    for (auto& [k, p] : o.c_) add(k, -p);
    return *this;
  }
  friend LaurentHbar operator+(LaurentHbar a, const LaurentHbar& b) { return a += b; }
  friend LaurentHbar operator-(LaurentHbar a, const LaurentHbar& b) { return a -= b; }
  LaurentHbar operator-() const {
    LaurentHbar r(lo_, hi_, pool_);
    for (auto& [k, p] : c_) r.c_[k] = -p;
    return r;
  }

  friend LaurentHbar operator*(const LaurentHbar& a, const LaurentHbar& b) {
    LaurentHbar r(a.lo_, a.hi_, a.pool_);
    for (auto& [ka, pa] : a.c_)
      for (auto& [kb, pb] : b.c_) {
        int k = ka + kb;
        if (k < r.lo_ || k > r.hi_) continue;
        r.add(k, pa * pb);
      }
    return r;
  }
  LaurentHbar mul_poly(const Poly& f) const {
    LaurentHbar r(lo_, hi_, pool_);
    for (auto& [k, p] : c_) r.set(k, f * p);
    return r;
  }
  LaurentHbar shifted(int s) const {  // multiply by hbar^s
    LaurentHbar r(lo_, hi_, pool_);
    for (auto& [k, p] : c_) r.add(k + s, p);
    return r;
  }
  LaurentHbar scaled(const Scalar& s) const {
    LaurentHbar r(lo_, hi_, pool_);
    for (auto& [k, p] : c_) r.set(k, p.scaled(s));
    return r;
  }
  LaurentHbar map(const std::function<Poly(const Poly&)>& f) const {
    LaurentHbar r(lo_, hi_, pool_);
    for (auto& [k, p] : c_) r.set(k, f(p));
    return r;
  }

  // exp of a series with no hbar^{<=0} support or nilpotent coefficients.
  LaurentHbar exp() const {
    LaurentHbar r = unit(lo_, hi_, pool_);
    LaurentHbar inc = unit(lo_, hi_, pool_);
    for (int k = 1; k <= 4096; ++k) {
      inc = inc * *this;
      inc = inc.scaled(Scalar(Rat(1, k)));
      if (inc.is_zero()) return r;
      r += inc;
    }
    throw std::domain_error("LaurentHbar::exp: series did not terminate");
  }

  friend bool operator==(const LaurentHbar& a, const LaurentHbar& b) {
    return a.c_ == b.c_;
  }
  friend bool operator!=(const LaurentHbar& a, const LaurentHbar& b) { return !(a == b); }

 private:
  int lo_ = 0, hi_ = 0;
  const VarPool* pool_ = nullptr;
  std::map<int, Poly> c_;
};

// exp((i/hbar) * tree) * loop. The tree exponent is an hbar-free polynomial.
struct TwoTier {
  Poly tree;
  LaurentHbar loop;

  friend TwoTier operator*(const TwoTier& a, const TwoTier& b) {
    return TwoTier{a.tree + b.tree, a.loop * b.loop};
  }
  friend bool operator==(const TwoTier& a, const TwoTier& b) {
    return a.tree == b.tree && a.loop == b.loop;
  }
};

}  // namespace csbv
