#include "graphs/wick.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <stdexcept>

#include "homotopy/sdr.hpp"

namespace csbv {

namespace {

Scalar i_pow(long k) {  // i^k, any sign of k
  long r = ((k % 4) + 4) % 4;
  switch (r) {
    case 0: return Scalar(1);
    case 1: return Scalar(Rat(0), Rat(1));
    case 2: return Scalar(-1);
    default: return Scalar(Rat(0), Rat(-1));
  }
}

// Total degree of a monomial over the given sorted variable id set.
int degree_over(const Mono& m, const std::vector<int>& vars) {
  int d = 0;
  for (auto& [v, e] : m.ev)
    if (std::binary_search(vars.begin(), vars.end(), v)) d += e;
  for (int v : m.od)
    if (std::binary_search(vars.begin(), vars.end(), v)) d += 1;
  return d;
}

// Total degree over all ZeroMode variables of the pool.
int zero_mode_degree(const VarPool* pool, const Mono& m) {
  int d = 0;
  for (auto& [v, e] : m.ev)
    if (pool->info(v).kind == VarKind::ZeroMode) d += e;
  for (int v : m.od)
    if (pool->info(v).kind == VarKind::ZeroMode) d += 1;
  return d;
}

Poly filter_terms(const Poly& p,
                  const std::function<bool(const Mono&)>& keep) {
  Poly out(p.pool());
  for (auto& [m, c] : p.terms())
    if (keep(m)) out.add_term(m, c);
  return out;
}

}  // namespace

GaussianData gaussian_moments(const AlgebraCtx& ctx, const SdrResult& s,
                              VarPool* scratch) {
  GaussianData gd;
  const GradedSpace* sp = ctx.sp();
  const VarPool* pool = ctx.pool;
  const int d = sp->dim();

  // Basis of the gauge slice im d*: the pivot columns of dstar.
  std::vector<Poly> dsm(size_t(d) * size_t(d), Poly(pool));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) dsm[size_t(i * d + j)] = s.dstar.at(i, j);
  std::vector<std::vector<Poly>> ker;
  std::vector<int> piv;
  if (!PolyLin::kernel(pool, dsm, d, d, &ker, &piv)) {
    gd.why = "gauge operator does not column-reduce over the ring";
    return gd;
  }
  for (int j : piv) {
    PVec col(sp, pool);
    int deg = -1;
    for (int i = 0; i < d; ++i) {
      col.c[size_t(i)] = s.dstar.at(i, j);
      if (!col.c[size_t(i)].is_zero()) {
        if (!col.c[size_t(i)].is_scalar()) {
          gd.why = "gauge slice basis is not scalar";
          return gd;
        }
        if (deg < 0) deg = sp->deg[size_t(i)];
        if (deg != sp->deg[size_t(i)]) {
          gd.why = "gauge slice basis is not homogeneous";
          return gd;
        }
      }
    }
    gd.slice.push_back(std::move(col));
    gd.slice_deg.push_back(deg);
  }
  const int dl = int(gd.slice.size());
  if (dl == 0) {
    gd.ok = true;
    return gd;
  }

  static std::atomic<int> batch_ctr{0};  // distinct names across calls
  int batch = ++batch_ctr;
  for (int a = 0; a < dl; ++a) {
    bool odd = ((gd.slice_deg[size_t(a)] + 1) & 1) == 1;
    int id = scratch->add(
        "gw" + std::to_string(batch) + "_" + std::to_string(a), odd,
        VarKind::Aux, -1);
    gd.sym.push_back(id);
  }

  PVec b(sp, pool);
  for (int a = 0; a < dl; ++a)
    b += gd.slice[size_t(a)].mul(Poly::var(pool, gd.sym[size_t(a)]));
  Poly s2 = ctx.pair(b, s.dA.apply(b)).scaled(Scalar(Rat(1, 2)));
  for (auto& [m, c] : s2.terms())
    if (m.parity() != 0) {
      gd.why = "quadratic action is not even";
      return gd;
    }

  // B(a,b) = d/dc_b d/dc_a S2, scalar entries.
  std::vector<Poly> bt(size_t(dl) * size_t(dl), Poly(pool));
  for (int a = 0; a < dl; ++a) {
    Poly row = s2.deriv(gd.sym[size_t(a)]);
    for (int bcol = 0; bcol < dl; ++bcol) {
      Poly e = row.deriv(gd.sym[size_t(bcol)]);
      if (!e.is_scalar()) {
        gd.why = "quadratic action is not quadratic in the slice fields";
        return gd;
      }
      bt[size_t(a * dl + bcol)] = e;
    }
  }
  // moment = B^{-1}: solve B X = Id.
  std::vector<Poly> rhs(size_t(dl) * size_t(dl), Poly(pool));
  for (int a = 0; a < dl; ++a) rhs[size_t(a * dl + a)] = Poly::unit(pool);
  std::vector<Poly> x;
  if (!PolyLin::solve(pool, bt, dl, dl, rhs, dl, &x)) {
    gd.why = "quadratic action is singular on the gauge slice";
    return gd;
  }
  gd.moment.assign(size_t(dl) * size_t(dl), Scalar(0));
  for (int a = 0; a < dl; ++a)
    for (int bcol = 0; bcol < dl; ++bcol)
      gd.moment[size_t(a * dl + bcol)] = x[size_t(a * dl + bcol)].body();

  gd.moment_full.assign(size_t(d) * size_t(d), Scalar(0));
  for (int a = 0; a < dl; ++a)
    for (int bcol = 0; bcol < dl; ++bcol) {
      const Scalar& mab = gd.moment[size_t(a * dl + bcol)];
      if (mab.is_zero()) continue;
      for (int j = 0; j < d; ++j) {
        Scalar lj = gd.slice[size_t(a)].c[size_t(j)].body();
        if (lj.is_zero()) continue;
        for (int k = 0; k < d; ++k) {
          Scalar lk = gd.slice[size_t(bcol)].c[size_t(k)].body();
          if (lk.is_zero()) continue;
          gd.moment_full[size_t(j * d + k)] =
              gd.moment_full[size_t(j * d + k)] + lj * mab * lk;
        }
      }
    }
  gd.ok = true;
  return gd;
}

namespace {

// One application of the moment operator (1/2) sum m_ab d_b d_a.
Poly moment_once(const GaussianData& gd, const Poly& f) {
  const int dl = int(gd.sym.size());
  Poly out(f.pool());
  for (int a = 0; a < dl; ++a) {
    Poly da = f.deriv(gd.sym[size_t(a)]);
    if (da.is_zero()) continue;
    for (int b = 0; b < dl; ++b) {
      const Scalar& mab = gd.moment[size_t(a * dl + b)];
      if (mab.is_zero()) continue;
      Poly dba = da.deriv(gd.sym[size_t(b)]);
      if (dba.is_zero()) continue;
      out += dba.scaled(mab * Scalar(Rat(1, 2)));
    }
  }
  return out;
}

}  // namespace

TwoTier wick_oracle(const AlgebraCtx& ctx, const SdrResult& s, const PVec& a_w,
                    int hbar_order, int leaf_order, VarPool* scratch) {
  if (hbar_order < 0 || leaf_order < 0)
    throw std::invalid_argument("wick_oracle: negative order");
  GaussianData gd = gaussian_moments(ctx, s, scratch);
  if (!gd.ok) throw std::domain_error("wick_oracle: " + gd.why);
  const VarPool* pool = ctx.pool;
  const int H = hbar_order, N = leaf_order;

  PVec B = s.incl.apply(a_w);
  for (size_t a = 0; a < gd.slice.size(); ++a)
    B += gd.slice[a].mul(Poly::var(pool, gd.sym[a]));
  Poly sc = ctx.pair(B, ctx.bracket_vec(B, B)).scaled(Scalar(Rat(1, 6)));
  std::vector<int> csyms = gd.sym;
  std::sort(csyms.begin(), csyms.end());
  auto zm_ok = [&](const Mono& m) { return zero_mode_degree(pool, m) <= N; };
  sc = filter_terms(sc, zm_ok);

  const int lo = -std::max(1, N / 3);
  const int hi = H - lo;  // internal head room for cross products in log
  LaurentHbar w(lo, hi, pool);
  w.add(0, Poly::unit(pool));

  const int vmax = N + 2 * hi;
  Poly p = Poly::unit(pool);
  for (int v = 1; v <= vmax; ++v) {
    p = (p * sc).scaled(Scalar(Rat(1, v)));
    const int cmax = 2 * (v + hi);
    p = filter_terms(p, [&](const Mono& m) {
      return zm_ok(m) && degree_over(m, csyms) <= cmax;
    });
    if (p.is_zero()) break;
    Poly f = p;
    for (int j = 0;; ++j) {
      if (j > 0) {
        f = moment_once(gd, f).scaled(Scalar(Rat(1, j)));
        if (f.is_zero()) break;
      }
      int power = j - v;
      if (power > hi) break;
      Poly slice = filter_terms(f, [&](const Mono& m) {
        return degree_over(m, csyms) == 0;
      });
      if (slice.is_zero()) continue;
      if (power < lo)
        throw std::domain_error("wick_oracle: truncation overflow (window)");
      w.add(power, slice.scaled(i_pow(v + j)));
    }
  }

  // log W by the alternating series, in the quotient by zero-mode degree
  // > N (the log of a truncated series is the truncated log because total
  // zero-mode degree is a ring grading).
  auto zm_filter = [&](const Poly& q) { return filter_terms(q, zm_ok); };
  LaurentHbar x = (w - LaurentHbar::unit(lo, hi, pool)).map(zm_filter);
  LaurentHbar logw(lo, hi, pool);
  LaurentHbar xp = x;
  int k = 1;
  for (; k <= 8 * (hi - lo + 2) + 2 * N + 8; ++k) {
    if (xp.is_zero()) break;
    Scalar coefsign = (k % 2) ? Scalar(Rat(1, k)) : Scalar(Rat(-1, k));
    logw = logw + xp.scaled(coefsign);
    xp = (xp * x).map(zm_filter);
  }
  if (!xp.is_zero())
    throw std::domain_error("wick_oracle: truncation overflow (log)");

  Poly tree = logw.coeff(-1).scaled(Scalar(Rat(0), Rat(-1)));
  LaurentHbar conn(0, H, pool);
  for (int kk = 0; kk <= H; ++kk) conn.set(kk, logw.coeff(kk));
  return TwoTier{tree, conn.exp()};
}

}  // namespace csbv
