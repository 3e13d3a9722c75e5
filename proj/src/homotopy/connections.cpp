#include "homotopy/connections.hpp"

namespace csbv {

namespace {

// Set all frame coordinates and their one-form symbols to zero.
PMat frame_eval0(const JetFrame& fr, const PMat& m) {
  return m.map_entries([&](const Poly& p) {
    Poly q = p;
    for (int v : fr.params) q = q.subst(v, Poly(m.pool()));
    for (int v : fr.dparams) q = q.subst(v, Poly(m.pool()));
    return q;
  });
}

}  // namespace

ExtendedTriple extend_over_base(const AlgebraCtx& ctx, const SdrResult& s,
                                const JetFrame& fr, int max_steps) {
  ExtendedTriple e;
  e.wsp = s.wsp;
  if (!jd(fr, s.dA).is_zero()) {
    e.why = "kinetic differential varies over the base";
    return e;
  }

  // Canonical transport frame: project the base-point zero-mode frame along
  // the family, then correct the projection so the retract identity holds.
  PMat i0 = frame_eval0(fr, s.incl);
  PMat incl_c = s.P.compose(i0);
  PMat proj_c(s.wsp.get(), ctx.pool);
  try {
    PMat u = s.proj.compose(incl_c);
    proj_c = u.inverse().compose(s.proj);
  } catch (const std::exception&) {
    e.why = "transport frame degenerates over the base";
    return e;
  }

  // Perturbation series for the deformation of dA by the base de Rham
  // differential. Each step adds one base one-form symbol, so the series
  // terminates.
  const VarPool* pool = ctx.pool;
  PMat X = incl_c;    // (K jd)^m incl_c
  PMat acc = incl_c;  // extended inclusion
  PMat th(s.wsp.get(), pool);  // extended zero-mode one-form
  {
    PMat jx = jd(fr, X);
    PMat tterm = proj_c.compose(jx);
    th = tterm;
    int m = 0;
    while (!jx.is_zero()) {
      if (++m > max_steps) {
        e.why = "inclusion series did not terminate";
        return e;
      }
      X = s.K.compose(jx);
      if (m % 2 == 1)
        acc = acc - X;
      else
        acc = acc + X;
      jx = jd(fr, X);
      tterm = proj_c.compose(jx);
      if (m % 2 == 1)
        th = th - tterm;
      else
        th = th + tterm;
    }
  }
  PMat Z = s.K;        // K (jd K)^m
  PMat accp = proj_c;  // extended projection
  PMat acck = s.K;     // extended propagator
  {
    int m = 0;
    while (true) {
      PMat jz = jd(fr, Z);
      if (jz.is_zero()) break;
      if (++m > max_steps) {
        e.why = "projection series did not terminate";
        return e;
      }
      PMat termp = proj_c.compose(jz);
      Z = s.K.compose(jz);
      if (m % 2 == 1) {
        accp = accp - termp;
        acck = acck - Z;
      } else {
        accp = accp + termp;
        acck = acck + Z;
      }
    }
  }
  e.incl = acc;
  e.proj = accp;
  e.K = acck;
  e.Theta = th;

  // Self-test: the retract relations for the total differential jd + dA.
  PMat idw = PMat::identity(s.wsp.get(), pool);
  PMat ida = PMat::identity(ctx.sp(), pool);
  auto fail = [&](const char* what) {
    e.why = what;
    e.ok = false;
    return e;
  };
  // The series are built through jd(), so for truncated non-nilpotent
  // families the relations hold on the faithful jet window only.
  auto w = [&](const PMat& m) { return jet_window(fr, m); };
  if (!(w(e.proj.compose(e.incl)) == idw)) return fail("retract identity failed");
  if (!w(e.K.compose(e.incl)).is_zero()) return fail("propagator does not annihilate zero modes");
  if (!w(e.proj.compose(e.K)).is_zero()) return fail("projection does not annihilate propagator image");
  if (!w(e.K.compose(e.K)).is_zero()) return fail("propagator does not square to zero");
  if (!(w(jd(fr, e.incl) + s.dA.compose(e.incl)) == w(e.incl.compose(e.Theta))))
    return fail("inclusion does not intertwine the differentials");
  if (!(w(jd(fr, e.proj) + e.Theta.compose(e.proj)) == w(e.proj.compose(s.dA))))
    return fail("projection does not intertwine the differentials");
  if (!(w(jd(fr, e.K) + graded_comm(s.dA, e.K)) == w(ida - e.incl.compose(e.proj))))
    return fail("homotopy identity failed");
  e.ok = true;
  return e;
}

FamilyLegs family_legs(const AlgebraCtx& ctx, const SdrResult& s,
                       const JetFrame& fr) {
  FamilyLegs legs;
  legs.ad_dA = ctx.ad(jd(fr, s.A));
  legs.adstar_dAp = AlgebraCtx::adjoint_with(ctx.ad(jd(fr, s.Aprime)),
                                             s.metric, s.metric_inv);
  legs.lambda = s.metric_inv.compose(jd(fr, s.metric));
  return legs;
}

PMat harm_connection(const SdrResult& s, const FamilyLegs& legs) {
  return (s.G.compose(s.dstar.compose(legs.ad_dA) +
                      s.dA.compose(legs.adstar_dAp)))
      .scaled(Scalar(-1));
}

PMat harm_curvature_closed(const SdrResult& s, const FamilyLegs& legs) {
  PMat t1 = s.P.compose(legs.ad_dA).compose(s.G).compose(legs.adstar_dAp).compose(s.P);
  PMat t2 = s.P.compose(legs.adstar_dAp).compose(s.G).compose(legs.ad_dA).compose(s.P);
  return (t1 + t2).scaled(Scalar(-1));
}

HodgeConnection hodge_connection(const SdrResult& s, const FamilyLegs& legs) {
  HodgeConnection h;
  const PMat& K = s.K;
  const PMat& P = s.P;
  const PMat& G = s.G;
  const PMat& d = s.dA;
  const PMat& ad = legs.ad_dA;
  const PMat& adst = legs.adstar_dAp;
  const PMat& lam = legs.lambda;
  h.H_dA = (K.compose(ad).compose(d).compose(K) + K.compose(ad).compose(P) +
            P.compose(ad).compose(K))
               .scaled(Scalar(-1));
  h.H_dAp = (d.compose(G).compose(adst).compose(K).compose(d) +
             d.compose(G).compose(adst).compose(P) +
             P.compose(adst).compose(G).compose(d))
                .scaled(Scalar(-1));
  h.H_dg = d.compose(K).compose(lam).compose(K).compose(d) +
           d.compose(K).compose(lam).compose(P) +
           P.compose(lam).compose(K).compose(d);
  h.H = h.H_dA + h.H_dAp + h.H_dg;
  return h;
}

PMat hodge_curvature_closed(const SdrResult& s, const FamilyLegs& legs) {
  const PMat& K = s.K;
  const PMat& P = s.P;
  const PMat& G = s.G;
  const PMat& d = s.dA;
  const PMat& ad = legs.ad_dA;
  const PMat& adst = legs.adstar_dAp;
  const PMat& lam = legs.lambda;
  PMat mixl = K.compose(lam) - G.compose(adst);   // K lambda - G adstar
  PMat mixr = lam.compose(K) - adst.compose(G);   // lambda K - adstar G
  PMat f = P.compose(ad).compose(mixl).compose(P) +
           P.compose(mixr).compose(ad).compose(P) +
           d.compose(mixl).compose(K.compose(d) + P).compose(ad).compose(K) +
           K.compose(ad).compose(d.compose(K) + P).compose(mixr).compose(d);
  return f;
}

PMat cohomology_curvature_closed(const SdrResult& s, const FamilyLegs& legs) {
  const PMat& K = s.K;
  const PMat& G = s.G;
  const PMat& ad = legs.ad_dA;
  const PMat& adst = legs.adstar_dAp;
  const PMat& lam = legs.lambda;
  PMat mixl = K.compose(lam) - G.compose(adst);
  PMat mixr = lam.compose(K) - adst.compose(G);
  return s.proj.compose(ad.compose(mixl) + mixr.compose(ad)).compose(s.incl);
}

PMat curvature(const JetFrame& fr, const PMat& H) {
  return jd(fr, H) + H.compose(H);
}

}  // namespace csbv
