#include "homotopy/kernels.hpp"

namespace csbv {

Poly jd_poly(const VarPool* pool, const JetFrame& fr, const Poly& p) {
  Poly out(pool);
  for (size_t i = 0; i < fr.params.size(); ++i) {
    Poly der = p.deriv(fr.params[i]);
    if (der.is_zero()) continue;
    out += Poly::var(pool, fr.dparams[i]) * der;
  }
  return out;
}

PMat jd(const JetFrame& fr, const PMat& m) {
  return m.map_entries([&](const Poly& p) { return jd_poly(m.pool(), fr, p); });
}

PVec jd(const JetFrame& fr, const PVec& v) {
  PVec out(v.sp, v.c.empty() ? nullptr : v.c[0].pool());
  for (size_t i = 0; i < v.c.size(); ++i)
    out.c[i] = jd_poly(v.c[i].pool(), fr, v.c[i]);
  return out;
}

Poly jet_window(const JetFrame& fr, const Poly& p) {
  const VarPool* pool = p.pool();
  // One order of faithfulness is lost per derivative, both against a
  // per-variable exponent cap and against a total-degree cap on the
  // parameter's kind.
  Poly out(pool);
  for (const auto& [mono, coef] : p.terms()) {
    bool keep = true;
    std::array<int, 5> kind_loss{};
    for (size_t i = 0; i < fr.params.size(); ++i)
      if (mono.has_odd(fr.dparams[i]))
        kind_loss[size_t(pool->info(fr.params[i]).kind)] += 1;
    for (size_t i = 0; i < fr.params.size() && keep; ++i) {
      const VarInfo& vi = pool->info(fr.params[i]);
      if (vi.cap >= 0) {
        int limit = vi.cap - (mono.has_odd(fr.dparams[i]) ? 1 : 0);
        if (mono.exp_of(fr.params[i]) > limit) keep = false;
      }
      int kcap = pool->kind_cap(vi.kind);
      if (keep && kcap >= 0) {
        int total = 0;
        for (const auto& [v, e] : mono.ev)
          if (pool->info(v).kind == vi.kind) total += e;
        if (total > kcap - kind_loss[size_t(vi.kind)]) keep = false;
      }
    }
    if (keep) out.add_term(mono, coef);
  }
  return out;
}

PVec jet_window(const JetFrame& fr, const PVec& v) {
  PVec out(v.sp, v.c.empty() ? nullptr : v.c[0].pool());
  for (size_t i = 0; i < v.c.size(); ++i) out.c[i] = jet_window(fr, v.c[i]);
  return out;
}

PMat jet_window(const JetFrame& fr, const PMat& m) {
  return m.map_entries([&](const Poly& p) { return jet_window(fr, p); });
}

DeformationKernels deformation_kernels(const AlgebraCtx& ctx, const SdrResult& s,
                                       DirTag tag, const PVec& direction,
                                       const PMat* lambda) {
  DeformationKernels k(ctx.sp(), ctx.pool);
  k.tag = tag;
  switch (tag) {
    case DirTag::KineticA: {
      // Tangency: the direction must be closed for the kinetic differential.
      if (!s.dA.apply(direction).is_zero()) {
        k.why = "direction is not closed for the kinetic differential";
        return k;
      }
      PMat adA = ctx.ad(direction);
      k.Lambda = s.K.compose(adA).compose(s.G);
      k.I = s.K.compose(adA);
      k.Pk = adA.compose(s.K);
      k.delta_Delta = s.dstar.compose(adA) + adA.compose(s.dstar);
      k.delta_P = -k.I.compose(s.P) - s.P.compose(k.Pk);
      k.delta_K = -s.K.compose(adA).compose(s.K);
      k.delta_incl = -k.I.compose(s.incl);
      k.delta_proj = -s.proj.compose(k.Pk);
      break;
    }
    case DirTag::GaugeAprime: {
      // Tangency: the direction must be closed for the gauge differential.
      if (!ctx.d_twisted(s.Aprime).apply(direction).is_zero()) {
        k.why = "direction is not closed for the gauge differential";
        return k;
      }
      PMat adstar =
          AlgebraCtx::adjoint_with(ctx.ad(direction), s.metric, s.metric_inv);
      k.Lambda = s.K.compose(adstar).compose(s.G);
      k.I = s.G.compose(adstar);
      k.Pk = adstar.compose(s.G);
      k.delta_Delta = s.dA.compose(adstar) + adstar.compose(s.dA);
      k.delta_P = -s.dA.compose(k.I).compose(s.P) - s.P.compose(k.Pk).compose(s.dA);
      k.delta_K = graded_comm(s.dA, k.Lambda) + s.P.compose(k.Pk) + k.I.compose(s.P);
      k.delta_incl = -s.dA.compose(k.I).compose(s.incl);
      k.delta_proj = -s.proj.compose(k.Pk).compose(s.dA);
      break;
    }
    case DirTag::Metric: {
      if (!lambda) {
        k.why = "metric direction requires lambda = metric^{-1} o dmetric";
        return k;
      }
      const PMat& lam = *lambda;
      k.Lambda = s.K.compose(lam).compose(s.K);
      k.I = s.K.compose(lam);
      k.Pk = lam.compose(s.K);
      k.delta_dstar = s.dstar.compose(lam) - lam.compose(s.dstar);
      k.delta_Delta =
          k.delta_dstar.compose(s.dA) + s.dA.compose(k.delta_dstar);
      k.delta_P =
          -s.dA.compose(k.I).compose(s.P) + s.P.compose(k.Pk).compose(s.dA);
      k.delta_K = -graded_comm(s.dA, k.Lambda) - s.P.compose(k.Pk) +
                  k.I.compose(s.P);
      k.delta_incl = -s.dA.compose(k.I).compose(s.incl);
      k.delta_proj = s.proj.compose(k.Pk).compose(s.dA);
      break;
    }
  }
  k.ok = true;
  return k;
}

}  // namespace csbv
