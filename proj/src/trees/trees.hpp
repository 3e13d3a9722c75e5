#pragma once

// Rooted binary trees up to isomorphism (children unordered) and the
// operations assembled from them: transferred multilinear brackets on zero
// modes, the sum-over-trees solution of the Maurer-Cartan equation with its
// Kuranishi inverse, the gauge flow of a closed direction, transport of
// harmonic elements along a deformation, smoothness tests (plain and with
// one first-order family mark), and the convolution identity relating the
// series at shifted base points.

#include "homotopy/kernels.hpp"

namespace csbv {

// One isomorphism class of rooted binary trees. `id` indexes an interned
// shape pool shared by the whole process; id 0 is the single leaf.
struct RootedBinaryTree {
  int id = 0;
  int leaves = 1;
  // |Aut|: doubles at every internal node whose two subtrees are isomorphic.
  long aut = 1;
  // Canonical form: "." for a leaf, "(LR)" with L <= R lexicographically.
  std::string serial;
};

// All classes with n leaves, memoized behind a mutex. n >= 1; throws
// std::invalid_argument otherwise.
const std::vector<RootedBinaryTree>& enumerate_trees(int n);

// Children of an interned shape, (-1,-1) for the leaf.
std::pair<int, int> tree_children(int id);

// Value of one tree shape with every leaf carrying `leaf`, `edge` applied
// above every internal child vertex, and the root left bare (callers attach
// the projection, the propagator, or nothing). The single leaf evaluates to
// `leaf` itself. Leaf inputs must have odd total parity (internal degree
// plus coefficient parity); node values are then insensitive to child
// order, which is what makes unordered shapes well defined on the diagonal.
PVec tree_value_diag(const AlgebraCtx& ctx, const PMat& edge, const PVec& leaf,
                     int id);

// --- transferred operations on zero modes --------------------------------

// The n-ary transferred bracket on zero modes, evaluated at W-coordinate
// vectors (n >= 2). Every argument must be odd in total parity (internal
// degree plus coefficient parity) -- even-degree directions are probed by
// attaching an odd coefficient symbol -- so the coefficient ring performs
// all Koszul bookkeeping and the graded symmetrization is sign-free. For a
// propagator-free retract this reduces to the projected bracket at n = 2
// and vanishes for n >= 3.
PVec induced_l(const AlgebraCtx& ctx, const SdrResult& s, int n,
               const std::vector<PVec>& args);

// --- the deformation series ----------------------------------------------

// x + sum_{n>=2} (-1)^{n-1} sum_T 1/|Aut T| K(tree value at x): the
// sum-over-trees solution of the projected Maurer-Cartan equation at a
// degree-1 input of the full algebra (jet coefficients allowed). The
// propagator is passed explicitly so the series can also be formed for
// perturbed retracts.
PVec tree_exp_tilde(const AlgebraCtx& ctx, const PMat& K, const PVec& x,
                    int max_leaves);

struct TreeExp {
  PVec delta;  // the series at incl(alpha)
  PVec phi;    // A + delta
};

// The series at the inclusion of a zero-mode direction alpha (W
// coordinates, degree 1, jet coefficients allowed).
TreeExp tree_exp(const AlgebraCtx& ctx, const SdrResult& s, const PVec& alpha_w,
                 int max_leaves);

// delta + (1/2) K [delta, delta]. Inverts the deformation series on inputs
// that are propagator kernels satisfying the Maurer-Cartan equation, to the
// active truncation order.
PVec kuranishi(const AlgebraCtx& ctx, const SdrResult& s, const PVec& delta);

// Flow of the base point along a closed degree-1 direction alpha (no
// dependence on tvar): the harmonic part feeds the deformation series, the
// propagator potential beta = K(alpha) acts by nested brackets with
// factorial weights. Returns A + sum_k t^k (...); on a precondition failure
// returns the zero vector and sets err.
PVec gauge_flow_exp(const AlgebraCtx& ctx, const SdrResult& s, const PVec& alpha,
                    int tvar, int order, std::string* err = nullptr);

// Transport of chi along the deformation of alpha_w: the derivative of the
// tree series at incl(alpha_w) in the direction chi. chi must be killed by
// the twisted differential and by the propagator and have uniform total
// parity. A scratch direction variable is allocated from `scratch`, which
// must be the pool the context is bound to.
PVec dphi_transport(const AlgebraCtx& ctx, const SdrResult& s,
                    const PVec& alpha_w, const PVec& chi, int max_leaves,
                    VarPool* scratch, std::string* err = nullptr);

// --- smoothness ----------------------------------------------------------

struct SmoothnessReport {
  bool smooth = true;
  int failed_arity = 0;  // smallest arity with a nonzero operation
  std::string witness;
};

// True when the transferred operations vanish for all arities 2..N. The
// sweep evaluates each arity once on a generic zero-mode vector whose
// coefficients are fresh symbols (odd symbols against even internal
// degrees), which is equivalent to vanishing on all argument tuples.
SmoothnessReport smoothness_test(const AlgebraCtx& ctx, const SdrResult& s,
                                 int N, VarPool* scratch);

// True when the sum of trees with exactly one first-order family mark
// vanishes for all arities 2..N. A mark replaces one internal-edge
// propagator by k.Lambda, or one leaf inclusion by k.I after incl, or the
// root projection by proj after k.Pk; the mark carries an odd family
// one-form symbol, so exactly one mark survives per term. With kernels of
// the gauge leg this is the first-order obstruction to moving the gauge
// base point without changing the transferred data.
SmoothnessReport extended_smoothness_test(const AlgebraCtx& ctx,
                                          const SdrResult& s,
                                          const DeformationKernels& k, int N,
                                          VarPool* scratch);

// --- convolution ----------------------------------------------------------

// Checks that the series at beta + gamma equals the series taken at the
// shifted base A + delta(beta) (with its perturbed retract) of gamma
// transported by the derivative of the series at beta. Exact equality in
// the truncated ring; requires the series at beta to satisfy the
// Maurer-Cartan equation within the truncation (else false, with why).
bool convolution_check(const AlgebraCtx& ctx, const SdrResult& s,
                       const PVec& beta_w, const PVec& gamma_w, int max_leaves,
                       VarPool* scratch, std::string* why = nullptr);

}  // namespace csbv
