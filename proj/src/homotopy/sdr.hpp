#pragma once

// Gauge-fixing data for a cyclic DGLA: twisted differentials, metric
// adjoints, the synchronized Laplacian, and the induced special deformation
// retract (incl, proj, K) onto its zero modes, all over an exact jet
// coefficient ring. Includes homological perturbation of a retract.

#include <array>
#include <memory>
#include <string>

#include "algebra/dgla.hpp"

namespace csbv {

// An algebra bound to a coefficient variable pool, with its structure
// tables lifted to operator form.
struct AlgebraCtx {
  const CyclicDgla* g = nullptr;
  const VarPool* pool = nullptr;
  PMat d0, ip, ip_inv, pairing;

  AlgebraCtx(const CyclicDgla* g_, const VarPool* pool_);

  const GradedSpace* sp() const { return &g->sp; }
  PVec zero_vec() const { return PVec(sp(), pool); }
  PVec basis_vec(int j) const;
  PMat zero_mat() const { return PMat(sp(), pool); }
  PMat ident() const { return PMat::identity(sp(), pool); }

  // Adjoint action: (ad_x)(v) = [x, v], Koszul signs via apply/compose.
  PMat ad(const PVec& x) const;
  PVec bracket_vec(const PVec& x, const PVec& y) const { return ad(x).apply(y); }

  // Metric adjoint: ip^{-1} M^T ip entrywise (coefficients untouched).
  PMat adjoint(const PMat& m) const;
  static PMat adjoint_with(const PMat& m, const PMat& metric, const PMat& metric_inv);

  // Cyclic pairing of coefficient vectors with the left-coefficient sign:
  // <c e_j, c' e_k> = (-1)^{|c'| deg_j} c c' Pi_jk.
  Poly pair(const PVec& a, const PVec& b) const;
  Poly ip_pair_with(const PVec& a, const PVec& b, const PMat& metric) const;

  PVec mc_defect(const PVec& A) const;  // d0 A + (1/2)[A,A]
  PMat d_twisted(const PVec& A) const;
};

// Result of the Hodge construction at a flat pair (A, A').
//
// Spaces: incl maps the zero-mode space W into the algebra, proj the other
// way; K is the propagator (degree -1), G the Green operator, P = incl proj
// the harmonic projector. The W basis is normalized: degrees 0 and 1 are
// inner-product orthogonalized, degrees 3 and 2 are the cyclic-pairing dual
// bases of degrees 0 and 1.
struct SdrResult {
  bool ok = false;
  std::string why;
  std::shared_ptr<GradedSpace> wsp;
  std::array<int, 4> wdims{{0, 0, 0, 0}};
  PVec A, Aprime;            // the flat pair the data was built at
  PMat metric, metric_inv;   // the inner product used for adjoints
  PMat dA, dstar, lap, G, P, K, incl, proj, dW;
};

// Builds the retract, checking (not assuming) that the Laplacian splits the
// algebra: Omega = ker Lap (+) im Lap over the jet ring, dim ker matches the
// cohomology of the body differential degree-wise, and both dA and dstar
// vanish on ker Lap. On failure ok=false and why explains.
SdrResult hodge(const AlgebraCtx& ctx, const PVec& A, const PVec& Aprime,
                const PMat* metric = nullptr);

// Homological perturbation of a retract by delta (an odd operator with
// (dA + delta)^2 = 0): transfers the retract along 1 + K delta.
struct HplResult {
  bool ok = false;
  std::string why;
  std::shared_ptr<GradedSpace> wsp;
  PMat incl, proj, K, dW;  // dW is the full transferred differential on W
};
HplResult hpl(const AlgebraCtx& ctx, const SdrResult& base, const PMat& delta);

// Plain dense linear algebra over the coefficient ring (no parity twists;
// row operations from the left). Pivots must have invertible body.
struct PolyLin {
  // Right kernel basis of the rows x cols matrix m (row-major).
  // Returns false if elimination leaves a nonzero row with no unit-body
  // pivot (the matrix does not split over the ring).
  static bool kernel(const VarPool* pool, std::vector<Poly> m, int rows, int cols,
                     std::vector<std::vector<Poly>>* out, std::vector<int>* pivot_cols);
  // Solve m x = b for possibly rectangular m with full column rank.
  static bool solve(const VarPool* pool, std::vector<Poly> m, int rows, int cols,
                    std::vector<Poly> b, int bcols, std::vector<Poly>* x);
};

}  // namespace csbv
