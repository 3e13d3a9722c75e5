#pragma once

// Gaussian-moment oracle for the graph expansion.  Expands the cubic
// interaction of the theory on the gauge slice im d* and contracts it with
// the moments of the quadratic action, obtained by plain linear inversion
// -- no graph enumeration, no symmetry factors, no propagator convention:
// the moments are derived from the action itself through the
// integration-by-parts identity <(dS/dc) G> = i hbar <dG/dc>.  Producing
// the same two-tier series as the assembly over graphs is the central
// cross-check of the graphs module.

#include "graphs/graphs.hpp"

namespace csbv {

struct GaussianData {
  bool ok = false;
  std::string why;
  std::vector<PVec> slice;      // homogeneous basis of im d*
  std::vector<int> slice_deg;   // internal degrees of the basis vectors
  std::vector<int> sym;         // field symbol ids, aligned with `slice`
  std::vector<Scalar> moment;   // <c_a c_b>/(i hbar) over the slice basis
  std::vector<Scalar> moment_full;  // <b_j b_k>/(i hbar) on the ambient space
};

// Moments of exp((i/hbar) (1/2) <b, d_A b>) on the gauge slice.  Fails
// (ok = false) when the quadratic form is not even, not scalar, or
// singular on the slice.  `scratch` must be the pool the context is bound
// to; field symbols are allocated from it once per call.
GaussianData gaussian_moments(const AlgebraCtx& ctx, const SdrResult& s,
                              VarPool* scratch);

// The full expectation W = <exp((i/hbar) S_int(incl(a_w) + b))> with the
// cubic interaction S_int = (1/6)<B,[B,B]>, truncated to zero-mode degree
// <= leaf_order, split into tiers: tree = -i [log W]_{hbar^-1}, loop =
// exp(log W minus its hbar^-1 part) on the window [0, hbar_order].
// Throws std::domain_error on invalid Gaussian data or when the series
// fails to terminate within the truncation ("truncation overflow").
TwoTier wick_oracle(const AlgebraCtx& ctx, const SdrResult& s, const PVec& a_w,
                    int hbar_order, int leaf_order, VarPool* scratch);

}  // namespace csbv
