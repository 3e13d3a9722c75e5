#pragma once

// Supercommutative polynomial ring over Gaussian rationals.
//
// One ring handles every coefficient system in the library: truncated jets
// in even parameters, Grassmann jet generators, zero-mode coordinates of
// mixed parity, and auxiliary field variables for moment computations.
// Variables live in a VarPool; each has a parity, a kind tag, and an
// optional per-variable exponent cap. Kinds can carry a total-degree cap;
// any monomial exceeding a cap is identically zero. Terms are kept in a
// deterministic sorted map so that rendering and iteration order never
// depend on memory layout or thread count.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core/scalar.hpp"

namespace csbv {

enum class VarKind : uint8_t { ZeroMode = 0, JetEven = 1, JetOdd = 2, Field = 3, Aux = 4 };

struct VarInfo {
  std::string name;
  bool odd = false;
  VarKind kind = VarKind::Aux;
  int cap = -1;  // max exponent for an even variable; -1 = uncapped
};

class VarPool {
 public:
  int add(std::string name, bool odd, VarKind kind, int cap = -1) {
    vars_.push_back(VarInfo{std::move(name), odd, kind, cap});
    return int(vars_.size()) - 1;
  }
  int size() const { return int(vars_.size()); }
  const VarInfo& info(int id) const { return vars_.at(size_t(id)); }
  int find(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
      if (vars_[size_t(i)].name == name) return i;
    return -1;
  }
  void set_kind_cap(VarKind k, int cap) { kind_caps_[size_t(k)] = cap; }
  int kind_cap(VarKind k) const { return kind_caps_[size_t(k)]; }

 private:
  std::vector<VarInfo> vars_;
  std::array<int, 5> kind_caps_{{-1, -1, -1, -1, -1}};
};

struct Mono {
  std::vector<std::pair<int, int>> ev;  // (var, exp), sorted by var, exp >= 1
  std::vector<int> od;                  // odd var ids, strictly increasing

  bool operator==(const Mono& o) const { return ev == o.ev && od == o.od; }
  bool operator<(const Mono& o) const {
    if (od != o.od) return od < o.od;
    return ev < o.ev;
  }
  bool empty() const { return ev.empty() && od.empty(); }
  int parity() const { return int(od.size()) & 1; }
  int exp_of(int var) const {
    for (auto& [v, e] : ev)
      if (v == var) return e;
    return 0;
  }
  bool has_odd(int var) const {
    return std::binary_search(od.begin(), od.end(), var);
  }
};

class Poly {
 public:
  Poly() : pool_(nullptr) {}
  explicit Poly(const VarPool* pool) : pool_(pool) {}
  Poly(const VarPool* pool, Scalar c) : pool_(pool) {
    if (!c.is_zero()) terms_[Mono{}] = std::move(c);
  }

  static Poly var(const VarPool* pool, int id, int exp = 1);
  static Poly unit(const VarPool* pool) { return Poly(pool, Scalar(1)); }

  const VarPool* pool() const { return pool_; }
  const std::map<Mono, Scalar>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_scalar() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
  }
  Scalar body() const {
    auto it = terms_.find(Mono{});
    return it == terms_.end() ? Scalar(0) : it->second;
  }
  Scalar coeff(const Mono& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Scalar(0) : it->second;
  }

  void add_term(Mono m, Scalar c);

  Poly operator-() const;
  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator*(const Poly& a, const Poly& b);
  Poly& operator*=(const Poly& o) { return *this = *this * o; }
  Poly scaled(const Scalar& c) const;

  friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }
  friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

  // Sign twist used when an operator of the given parity is moved across
  // the coefficients: odd-parity terms change sign when par is odd.
  Poly parity_twist(int par) const;

  // Left partial derivative. For an odd variable the sign is read off after
  // commuting the variable to the front of the monomial.
  Poly deriv(int var) const;

  // Substitute a polynomial for a variable. An odd variable may only be
  // replaced by an odd-parity polynomial (or zero).
  Poly subst(int var, const Poly& repl) const;
  Poly eval_zero(int var) const;  // drop all terms containing var

  // exp/inv for elements whose non-constant part is nilpotent under the
  // active truncation caps. Throws if the series fails to terminate.
  Poly exp_nilpotent() const;   // requires zero body
  Poly inv() const;             // requires invertible body

  // Definite integral over [0,1] of the dte-component: terms te^k dte m
  // map to m/(k+1); terms without dte are discarded.
  Poly integrate01(int te, int dte) const;

  int max_kind_degree(VarKind k) const;
  Poly kind_component(VarKind k, int degree) const;  // total kind-degree slice

  std::string str() const;

 private:
  const VarPool* pool_;
  std::map<Mono, Scalar> terms_;
};

// Multiplies the structural monomials m1*m2 with Koszul sign; returns false
// if the product vanishes (odd square or truncation cap).
bool mono_mul(const VarPool& pool, const Mono& m1, const Mono& m2, Mono& out, int& sign);

}  // namespace csbv
