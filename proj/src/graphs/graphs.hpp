#pragma once

// Connected trivalent graphs with loose half-edges ("leaves") and the
// machinery that evaluates them against Hodge retract data: propagator
// edges, vertices given by the cyclic pairing composed with the bracket,
// leaf insertions, and short loops as honest supertraces (finite
// dimensions need no diagonal subtraction).  On top of single-graph
// weights the module assembles the two-tier expansion over all graphs and
// the sums over graphs carrying exactly one marked edge or leaf, which
// generate first-order responses of the expansion to deformations of the
// gauge data.
//
// Conventions.  Each half-edge of an internal edge carries a full basis
// worth of port symbols whose parity is opposite to the internal degree,
// so every field entering a vertex is odd in total parity and the
// coefficient ring performs all Koszul bookkeeping.  An edge is contracted
// by a double left derivative against its kernel tensor; the kernel of an
// operator O is the index-raised matrix of O against the cyclic pairing,
// normalized so that the kernel of minus the propagator reproduces the
// Gaussian moments of the quadratic action on the gauge slice (the Wick
// oracle in wick.hpp checks this agreement from the other side).

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "core/hbar.hpp"
#include "homotopy/kernels.hpp"

namespace csbv {

// One isomorphism class of connected trivalent graphs with unlabeled
// leaves.  Every internal vertex has valence exactly 3, counting two for
// a short loop, one per incident internal edge end, one per leaf.
struct FeynmanGraph {
  int vertices = 0;
  std::vector<int> loops_at;   // short loops per vertex (0 or 1)
  std::vector<int> leaves_at;  // leaves per vertex
  std::map<std::pair<int, int>, int> mult;  // (u,v) with u < v -> parallel count
  long aut = 1;                // order of the half-edge automorphism group
  std::string key;             // canonical form; equal keys iff isomorphic

  int leaves() const;
  int internal_edges() const;  // parallel edges plus short loops
  int loop_number() const;     // E - V + 1
  int euler() const;           // V - E; leaves are not counted
  // Edges in canonical order: short loops by vertex (as (v,v)), then pairs
  // (u,v) lexicographically, one entry per parallel copy.
  std::vector<std::pair<int, int>> edge_list() const;
};

// All isomorphism classes with the given loop number and leaf count,
// sorted by canonical key and memoized.  Throws std::invalid_argument for
// negative arguments.  The vertexless circle (loops 1, leaves 0) is not a
// trivalent graph and is never produced; parameter pairs whose vertex or
// edge count would be negative yield an empty list.
const std::vector<FeynmanGraph>& enumerate_graphs(int loops, int leaves);

// Canonical key and vertex-permutation automorphism count of an arbitrary
// presentation (any vertex labeling).  Relabeling the vertices never
// changes the result; enumeration and the idempotence tests share this.
std::pair<std::string, long> canonical_form(
    int vertices, const std::vector<int>& loops_at,
    const std::vector<int>& leaves_at,
    const std::map<std::pair<int, int>, int>& mult);

// Evaluation state bound to a Hodge retract: the index-raising tensor of
// the cyclic pairing, the propagator edge tensor (the raised kernel of
// minus the propagator), and a cache of port symbols drawn from the bound
// pool.  `scratch` must be the pool the context is bound to.
struct GraphKit {
  const AlgebraCtx* ctx = nullptr;
  const SdrResult* s = nullptr;
  VarPool* scratch = nullptr;

  std::vector<Scalar> raise_id;  // dim x dim, raised kernel of the identity
  std::vector<Scalar> edge;      // raised kernel of -K

  // Raised kernel of an arbitrary operator with scalar entries (row-major
  // dim x dim).  Throws std::invalid_argument on non-scalar entries.
  std::vector<Scalar> raise(const PMat& op) const;

  // Port symbol ids: port_sym[edge][side][basis index].
  std::vector<std::array<std::vector<int>, 2>> port_sym;
  std::map<int, std::array<int, 3>> port_of;  // var id -> (edge, side, j)
  void ensure_ports(int edges);
};

GraphKit make_graph_kit(const AlgebraCtx& ctx, const SdrResult& s,
                        VarPool* scratch);

// Decoration of one graph: the insertion used at every leaf, plus at most
// one marked edge (contracted against `marked_edge_tensor` instead of the
// propagator kernel) and at most one marked leaf (using
// `marked_leaf_value`).  `mark` is left-multiplied onto the contribution
// of the marked site; passing an odd symbol keeps the bookkeeping of
// first-order family marks inside the coefficient ring.
struct GraphDecoration {
  PVec leaf;
  int marked_edge = -1;  // index into edge_list()
  std::vector<Scalar> marked_edge_tensor;
  int marked_leaf = -1;  // global leaf slot, counted in vertex order
  PVec marked_leaf_value;
  Poly mark;  // defaults to 1 when left default-constructed
};

// The weight of one graph: contraction of leaf insertions, edge kernels
// and vertex tensors with all Koszul signs delegated to the coefficient
// ring.  Every unmarked leaf insertion must be odd in total parity and
// every insertion must be parity-homogeneous; violations throw
// std::invalid_argument naming the offending site.
Poly weight(GraphKit& kit, const FeynmanGraph& g, const GraphDecoration& dec);

// The expansion over all graphs at leaf insertion incl(a_w).  Tree tier:
// sum of weight/|Aut| over loop-number-0 graphs with up to `leaf_order`
// leaves.  Loop tier: exp of the sum over loop numbers 1..hbar_order+1 of
// (-i hbar)^{l-1} weight/|Aut|, on the window [0, hbar_order].  The input
// must be nilpotent in the presented quotient (odd or capped symbols);
// otherwise the exponential does not terminate and throws.
TwoTier graph_expansion(GraphKit& kit, const PVec& a_w, int hbar_order,
                        int leaf_order);

// Sum over all connected graphs (trees included) carrying exactly one
// mark -- an edge contracted against the raised kernel of k.Lambda, or a
// leaf insertion transformed by k.I -- weighted by (-i hbar)^{-chi}/|Aut|.
// The mark is tagged with the odd symbol `mark_var`, which the caller
// allocates; contributions carry it on the left.  Window [-1, hbar_order].
LaurentHbar marked_sum_r(GraphKit& kit, const DeformationKernels& k,
                         const PVec& a_w, int mark_var, int hbar_order,
                         int leaf_order);

}  // namespace csbv
