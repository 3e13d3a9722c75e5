#pragma once

// Graded vector spaces in degrees 0..3 and operator-valued forms on them.
//
// Conventions, used consistently everywhere:
//  - A vector is stored as coefficients on the left of basis elements,
//    v = sum_j c_j e_j with c_j in the supercommutative coefficient ring.
//  - A matrix entry M[i][j] is the e_i-coefficient of M(e_j). The entry may
//    carry odd jet generators; the underlying operator part of the (i,j)
//    entry has parity (deg_i - deg_j) mod 2 since coefficient forms never
//    shift the internal degree.
//  - Applying or composing therefore twists coefficient terms by the
//    operator parity: (w ox A)(c e_j) = (-1)^{|A||c|} w c A(e_j).
//  - Matrices may be rectangular, mapping one graded space into another
//    (inclusions of zero modes, projections, transport maps).
// Associativity of composition and vanishing of supertraces of graded
// commutators hold exactly under these rules and are enforced by tests.

#include <cassert>
#include <functional>

#include "core/poly.hpp"

namespace csbv {

struct GradedSpace {
  std::vector<int> deg;
  std::vector<std::string> name;

  int dim() const { return int(deg.size()); }
  int dim_of(int k) const {
    int n = 0;
    for (int d : deg) n += (d == k);
    return n;
  }
  std::vector<int> indices_of(int k) const {
    std::vector<int> out;
    for (int i = 0; i < dim(); ++i)
      if (deg[size_t(i)] == k) out.push_back(i);
    return out;
  }
};

struct PVec {
  const GradedSpace* sp = nullptr;
  std::vector<Poly> c;

  PVec() = default;
  PVec(const GradedSpace* s, const VarPool* pool) : sp(s), c(size_t(s->dim()), Poly(pool)) {}
  bool is_zero() const {
    for (auto& p : c)
      if (!p.is_zero()) return false;
    return true;
  }
  PVec& operator+=(const PVec& o) {
    for (size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
    return *this;
  }
  PVec& operator-=(const PVec& o) {
    for (size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
    return *this;
  }
  friend PVec operator+(PVec a, const PVec& b) { return a += b; }
  friend PVec operator-(PVec a, const PVec& b) { return a -= b; }
  PVec operator-() const {
    PVec r = *this;
    for (auto& p : r.c) p = -p;
    return r;
  }
  PVec scaled(const Scalar& s) const {
    PVec r = *this;
    for (auto& p : r.c) p = p.scaled(s);
    return r;
  }
  PVec mul(const Poly& f) const {  // left multiplication by a coefficient
    PVec r = *this;
    for (auto& p : r.c) p = f * p;
    return r;
  }
  friend bool operator==(const PVec& a, const PVec& b) { return a.c == b.c; }
};

class PMat {
 public:
  PMat() = default;
  PMat(const GradedSpace* s, const VarPool* pool) : PMat(s, s, pool) {}
  PMat(const GradedSpace* rows, const GradedSpace* cols, const VarPool* pool)
      : rsp_(rows), csp_(cols), pool_(pool),
        a_(size_t(rows->dim()) * size_t(cols->dim()), Poly(pool)) {}

  static PMat identity(const GradedSpace* s, const VarPool* pool) {
    PMat m(s, pool);
    for (int i = 0; i < s->dim(); ++i) m.at(i, i) = Poly::unit(pool);
    return m;
  }

  const GradedSpace* space() const { return rsp_; }
  const GradedSpace* rows() const { return rsp_; }
  const GradedSpace* cols() const { return csp_; }
  const VarPool* pool() const { return pool_; }
  Poly& at(int i, int j) { return a_[size_t(i) * size_t(csp_->dim()) + size_t(j)]; }
  const Poly& at(int i, int j) const {
    return a_[size_t(i) * size_t(csp_->dim()) + size_t(j)];
  }

  bool is_zero() const {
    for (auto& p : a_)
      if (!p.is_zero()) return false;
    return true;
  }

  PMat& operator+=(const PMat& o) {
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  PMat& operator-=(const PMat& o) {
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  friend PMat operator+(PMat a, const PMat& b) { return a += b; }
  friend PMat operator-(PMat a, const PMat& b) { return a -= b; }
  PMat operator-() const {
    PMat r = *this;
    for (auto& p : r.a_) p = -p;
    return r;
  }
  PMat scaled(const Scalar& s) const {
    PMat r = *this;
    for (auto& p : r.a_) p = p.scaled(s);
    return r;
  }
  PMat mul_coeff(const Poly& f) const {  // f * M, coefficient on the left
    PMat r = *this;
    for (auto& p : r.a_) p = f * p;
    return r;
  }
  friend bool operator==(const PMat& a, const PMat& b) { return a.a_ == b.a_; }
  friend bool operator!=(const PMat& a, const PMat& b) { return !(a == b); }

  // Composition with operator-parity twist. Column space of *this must
  // match the row space of n.
  PMat compose(const PMat& n) const {
    assert(csp_->dim() == n.rsp_->dim());
    const int dr = rsp_->dim(), dm = csp_->dim(), dc = n.csp_->dim();
    PMat r(rsp_, n.csp_, pool_);
    for (int i = 0; i < dr; ++i)
      for (int j = 0; j < dm; ++j) {
        const Poly& mij = at(i, j);
        if (mij.is_zero()) continue;
        int par = (rsp_->deg[size_t(i)] - csp_->deg[size_t(j)]) & 1;
        for (int k = 0; k < dc; ++k) {
          const Poly& njk = n.at(j, k);
          if (njk.is_zero()) continue;
          r.at(i, k) += mij * njk.parity_twist(par);
        }
      }
    return r;
  }

  PVec apply(const PVec& v) const {
    assert(csp_->dim() == v.sp->dim());
    const int dr = rsp_->dim(), dm = csp_->dim();
    PVec r(rsp_, pool_);
    for (int i = 0; i < dr; ++i)
      for (int j = 0; j < dm; ++j) {
        const Poly& mij = at(i, j);
        if (mij.is_zero() || v.c[size_t(j)].is_zero()) continue;
        int par = (rsp_->deg[size_t(i)] - csp_->deg[size_t(j)]) & 1;
        r.c[size_t(i)] += mij * v.c[size_t(j)].parity_twist(par);
      }
    return r;
  }

  // Total parity flip: negates terms whose operator-plus-form parity is odd.
  // Used to build graded commutators of inhomogeneous operator forms.
  PMat total_parity_flip() const {
    PMat r(rsp_, csp_, pool_);
    for (int i = 0; i < rsp_->dim(); ++i)
      for (int j = 0; j < csp_->dim(); ++j) {
        const Poly& p = at(i, j);
        if (p.is_zero()) continue;
        int op = (rsp_->deg[size_t(i)] - csp_->deg[size_t(j)]) & 1;
        Poly q(pool_);
        for (auto& [m, c] : p.terms())
          q.add_term(m, ((op + m.parity()) & 1) ? -c : c);
        r.at(i, j) = q;
      }
    return r;
  }

  Poly supertrace() const {
    assert(rsp_->dim() == csp_->dim());
    Poly t(pool_);
    for (int i = 0; i < rsp_->dim(); ++i) {
      if (rsp_->deg[size_t(i)] & 1)
        t -= at(i, i);
      else
        t += at(i, i);
    }
    return t;
  }

  PMat transpose_entries() const {
    PMat r(csp_, rsp_, pool_);
    for (int i = 0; i < csp_->dim(); ++i)
      for (int j = 0; j < rsp_->dim(); ++j) r.at(i, j) = at(j, i);
    return r;
  }

  PMat map_entries(const std::function<Poly(const Poly&)>& f) const {
    PMat r(rsp_, csp_, pool_);
    for (int i = 0; i < rsp_->dim(); ++i)
      for (int j = 0; j < csp_->dim(); ++j) r.at(i, j) = f(at(i, j));
    return r;
  }

  // Entry (i,j) twisted by the parity of the row degree. This involution
  // turns the twisted composition into the plain matrix product:
  //   row_twist(M.compose(N)) = row_twist(M) . row_twist(N),
  // where each factor twists by its own row space degrees.
  PMat row_twist() const {
    PMat r(rsp_, csp_, pool_);
    for (int i = 0; i < rsp_->dim(); ++i)
      for (int j = 0; j < csp_->dim(); ++j)
        r.at(i, j) = at(i, j).parity_twist(rsp_->deg[size_t(i)] & 1);
    return r;
  }

  // Inverse with respect to compose(); pivots must have invertible body.
  PMat inverse() const;

  // Determinant of the degree-k block (by elimination, unit-body pivots).
  Poly block_det(int k) const;

 private:
  const GradedSpace* rsp_ = nullptr;
  const GradedSpace* csp_ = nullptr;
  const VarPool* pool_ = nullptr;
  std::vector<Poly> a_;
};

// d(M) := D.compose(M) - flip(M).compose(D) with flip by total parity.
// For homogeneous M of total parity p this is D M - (-1)^p M D.
inline PMat graded_comm(const PMat& dmat, const PMat& m) {
  return dmat.compose(m) - m.total_parity_flip().compose(dmat);
}

// Plain Gauss-Jordan over the commutative coefficient ring.
inline PMat pm_plain_inverse(const PMat& m) {
  const GradedSpace* sp = m.space();
  const int d = sp->dim();
  PMat a = m;
  PMat inv = PMat::identity(sp, m.pool());
  for (int col = 0; col < d; ++col) {
    int piv = -1;
    for (int r = col; r < d; ++r)
      if (!a.at(r, col).body().is_zero()) {
        piv = r;
        break;
      }
    if (piv < 0) throw std::domain_error("PMat::inverse: body-singular");
    if (piv != col)
      for (int j = 0; j < d; ++j) {
        std::swap(a.at(piv, j), a.at(col, j));
        std::swap(inv.at(piv, j), inv.at(col, j));
      }
    Poly pivinv = a.at(col, col).inv();
    for (int j = 0; j < d; ++j) {
      a.at(col, j) = pivinv * a.at(col, j);
      inv.at(col, j) = pivinv * inv.at(col, j);
    }
    for (int r = 0; r < d; ++r) {
      if (r == col) continue;
      Poly f = a.at(r, col);
      if (f.is_zero()) continue;
      for (int j = 0; j < d; ++j) {
        a.at(r, j) -= f * a.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

inline PMat PMat::inverse() const {
  assert(rsp_->dim() == csp_->dim());
  return pm_plain_inverse(row_twist()).row_twist();
}

inline Poly PMat::block_det(int k) const {
  std::vector<int> idx = rsp_->indices_of(k);
  const int n = int(idx.size());
  if (n == 0) return Poly::unit(pool_);
  std::vector<Poly> b(size_t(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b[size_t(i * n + j)] = at(idx[size_t(i)], idx[size_t(j)]);
  Poly det = Poly::unit(pool_);
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r)
      if (!b[size_t(r * n + col)].body().is_zero()) {
        piv = r;
        break;
      }
    if (piv < 0) throw std::domain_error("PMat::block_det: body-singular block");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(b[size_t(piv * n + j)], b[size_t(col * n + j)]);
      det = -det;
    }
    Poly p = b[size_t(col * n + col)];
    det = det * p;
    Poly pinv = p.inv();
    for (int r = col + 1; r < n; ++r) {
      Poly f = b[size_t(r * n + col)] * pinv;
      if (f.is_zero()) continue;
      for (int j = col; j < n; ++j) b[size_t(r * n + j)] -= f * b[size_t(col * n + j)];
    }
  }
  return det;
}

}  // namespace csbv
