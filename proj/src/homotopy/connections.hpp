// Extension of a retract family over a parameter base to a retract for the
// total differential (base de Rham + fiber differential), and the two
// transport connections on the zero-mode bundle with their closed-form
// curvatures.
#pragma once

#include "homotopy/kernels.hpp"

namespace csbv {

// Homotopy-transfer extension of a family of retracts over a parameter base.
// Requires the kinetic differential dA to be constant over the base (only
// the gauge data may vary); the construction first re-bases the family to
// the canonical transport frame (harmonic projection of the base-point
// zero-mode frame), then runs the perturbation series against the base
// de Rham differential. The output satisfies the retract relations for the
// total differential jd + dA, with transferred differential jd + Theta on
// zero modes; all relations are verified internally (ok=false on failure).
struct ExtendedTriple {
  bool ok = false;
  std::string why;
  std::shared_ptr<GradedSpace> wsp;
  PMat incl, proj, K, Theta;
};
ExtendedTriple extend_over_base(const AlgebraCtx& ctx, const SdrResult& s,
                                const JetFrame& fr, int max_steps = 64);

// One-form building blocks of a gauge family: the differentiated kinetic
// leg, the metric adjoint of the differentiated gauge leg, and the metric
// response lambda = metric^{-1} o jd(metric).
struct FamilyLegs {
  PMat ad_dA;
  PMat adstar_dAp;
  PMat lambda;
};
FamilyLegs family_legs(const AlgebraCtx& ctx, const SdrResult& s,
                       const JetFrame& fr);

// Shift-and-project transport on zero modes:
//   H = -G (dstar ad_{dA leg} + dA adstar_{dA' leg}),
// with closed-form curvature (restricted to zero modes)
//   F = -P ad G adstar P - P adstar G ad P.
PMat harm_connection(const SdrResult& s, const FamilyLegs& legs);
PMat harm_curvature_closed(const SdrResult& s, const FamilyLegs& legs);

// Decomposition-preserving connection with legs for each input direction;
// preserves the zero-mode, exact and coexact subbundles.
struct HodgeConnection {
  PMat H_dA, H_dAp, H_dg, H;
};
HodgeConnection hodge_connection(const SdrResult& s, const FamilyLegs& legs);
PMat hodge_curvature_closed(const SdrResult& s, const FamilyLegs& legs);
// Zero-mode block of the curvature, as an endomorphism of W.
PMat cohomology_curvature_closed(const SdrResult& s, const FamilyLegs& legs);

// Curvature of jd + H as a matrix-valued two-form: jd(H) + H o H.
PMat curvature(const JetFrame& fr, const PMat& H);

}  // namespace csbv
