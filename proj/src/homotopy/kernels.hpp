// First-order deformation kernels for Hodge retract data, and the jet-ring
// de Rham differential used to differentiate families of operators.
#pragma once

#include "homotopy/sdr.hpp"

namespace csbv {

// A frame of deformation parameters t_i together with their one-form symbols
// dt_i.  jd() maps f to sum_i dt_i * (d f / d t_i), the de Rham differential
// of the parameter space in coordinates.
struct JetFrame {
  std::vector<int> params;   // variable ids of the coordinates
  std::vector<int> dparams;  // variable ids of the one-form symbols, aligned
};

Poly jd_poly(const VarPool* pool, const JetFrame& fr, const Poly& p);
PMat jd(const JetFrame& fr, const PMat& m);
PVec jd(const JetFrame& fr, const PVec& v);

// Restriction to the sub-window of the jet ring on which differentiation
// along the frame is faithful.  A truncated even parameter t with exponent
// cap N stores data correctly through t^N, but any term carrying the
// one-form symbol dt arose from a t-derivative whose t^N coefficient was
// lost to the truncation of t^{N+1}.  Identities that involve jd() are
// therefore exact only after dropping, for every frame parameter, monomials
// whose exponent exceeds the cap minus one when the matching one-form symbol
// is present (and the cap itself otherwise).  Families that terminate below
// the cap (nilpotent directions) are unaffected.
Poly jet_window(const JetFrame& fr, const Poly& p);
PVec jet_window(const JetFrame& fr, const PVec& v);
PMat jet_window(const JetFrame& fr, const PMat& m);

// Which leg of the gauge data the deformation moves.
enum class DirTag { KineticA, GaugeAprime, Metric };

// Closed-form first-order responses of the Hodge retract to a deformation of
// one leg of its input data, together with the kernels they factor through.
struct DeformationKernels {
  bool ok = false;
  std::string why;
  DirTag tag = DirTag::GaugeAprime;
  PMat Lambda;       // degree -2 kernel
  PMat I;            // degree -1 kernel (left factor)
  PMat Pk;           // degree -1 kernel (right factor)
  PMat delta_Delta;  // response of the Laplacian
  PMat delta_P;      // response of the harmonic projector
  PMat delta_K;      // response of the propagator
  PMat delta_incl;   // response of the inclusion (composed with incl)
  PMat delta_proj;   // response of the projection (composed with proj)
  PMat delta_dstar;  // response of the gauge operator (Metric tag only)

  DeformationKernels(const GradedSpace* sp, const VarPool* pool)
      : Lambda(sp, pool),
        I(sp, pool),
        Pk(sp, pool),
        delta_Delta(sp, pool),
        delta_P(sp, pool),
        delta_K(sp, pool),
        delta_incl(sp, pool),
        delta_proj(sp, pool),
        delta_dstar(sp, pool) {}
};

// direction: for KineticA / GaugeAprime a d-closed degree-1 element (checked:
// KineticA needs d_A-closed, GaugeAprime needs d_{A'}-closed, i.e. tangency to
// the flat family); for Metric, `lambda` = metric^{-1} o dmetric is passed
// instead and `direction` is ignored.
DeformationKernels deformation_kernels(const AlgebraCtx& ctx, const SdrResult& s,
                                       DirTag tag, const PVec& direction,
                                       const PMat* lambda = nullptr);

}  // namespace csbv
