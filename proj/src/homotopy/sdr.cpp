#include "homotopy/sdr.hpp"

#include <algorithm>
#include <stdexcept>

namespace csbv {

AlgebraCtx::AlgebraCtx(const CyclicDgla* g_, const VarPool* pool_)
    : g(g_), pool(pool_), d0(&g_->sp, pool_), ip(&g_->sp, pool_),
      ip_inv(&g_->sp, pool_), pairing(&g_->sp, pool_) {
  const int n = g->dim();
  // Exact inverse of the scalar Gram matrix.
  SMat gram(size_t(n), std::vector<Scalar>(size_t(n), Scalar(0)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      d0.at(i, j) = Poly(pool, g->d_at(i, j));
      ip.at(i, j) = Poly(pool, g->ip_at(i, j));
      pairing.at(i, j) = Poly(pool, g->pair_at(i, j));
      gram[size_t(i)][size_t(j)] = g->ip_at(i, j);
    }
  // Gauss-Jordan over scalars.
  SMat inv(size_t(n), std::vector<Scalar>(size_t(n), Scalar(0)));
  for (int i = 0; i < n; ++i) inv[size_t(i)][size_t(i)] = Scalar(1);
  for (int c = 0; c < n; ++c) {
    int piv = c;
    while (piv < n && gram[size_t(piv)][size_t(c)].is_zero()) ++piv;
    if (piv == n) throw std::runtime_error("inner product not invertible");
    std::swap(gram[size_t(piv)], gram[size_t(c)]);
    std::swap(inv[size_t(piv)], inv[size_t(c)]);
    Scalar f = gram[size_t(c)][size_t(c)].inv();
    for (int j = 0; j < n; ++j) {
      gram[size_t(c)][size_t(j)] *= f;
      inv[size_t(c)][size_t(j)] *= f;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c || gram[size_t(r)][size_t(c)].is_zero()) continue;
      Scalar m = gram[size_t(r)][size_t(c)];
      for (int j = 0; j < n; ++j) {
        gram[size_t(r)][size_t(j)] -= m * gram[size_t(c)][size_t(j)];
        inv[size_t(r)][size_t(j)] -= m * inv[size_t(c)][size_t(j)];
      }
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ip_inv.at(i, j) = Poly(pool, inv[size_t(i)][size_t(j)]);
}

PVec AlgebraCtx::basis_vec(int j) const {
  PVec v(sp(), pool);
  v.c[size_t(j)] = Poly::unit(pool);
  return v;
}

PMat AlgebraCtx::ad(const PVec& x) const {
  PMat out(sp(), pool);
  for (auto& [ab, entries] : g->bracket) {
    auto [a, b] = ab;
    const Poly& ca = x.c[size_t(a)];
    if (ca.is_zero()) continue;
    for (auto& [k, c] : entries) out.at(k, b) += ca.scaled(c);
  }
  return out;
}

PMat AlgebraCtx::adjoint(const PMat& m) const {
  return adjoint_with(m, ip, ip_inv);
}

PMat AlgebraCtx::adjoint_with(const PMat& m, const PMat& metric, const PMat& metric_inv) {
  return metric_inv.compose(m.transpose_entries()).compose(metric);
}

Poly AlgebraCtx::pair(const PVec& a, const PVec& b) const {
  Poly acc(pool);
  const int n = g->dim();
  for (int j = 0; j < n; ++j) {
    if (a.c[size_t(j)].is_zero()) continue;
    int par = g->sp.deg[size_t(j)] & 1;
    for (int k = 0; k < n; ++k) {
      Scalar pi = g->pair_at(j, k);
      if (pi.is_zero() || b.c[size_t(k)].is_zero()) continue;
      acc += (a.c[size_t(j)] * b.c[size_t(k)].parity_twist(par)).scaled(pi);
    }
  }
  return acc;
}

Poly AlgebraCtx::ip_pair_with(const PVec& a, const PVec& b, const PMat& metric) const {
  Poly acc(pool);
  const int n = g->dim();
  for (int j = 0; j < n; ++j) {
    if (a.c[size_t(j)].is_zero()) continue;
    int par = g->sp.deg[size_t(j)] & 1;
    for (int k = 0; k < n; ++k) {
      const Poly& gm = metric.at(j, k);
      if (gm.is_zero() || b.c[size_t(k)].is_zero()) continue;
      acc += a.c[size_t(j)] * gm * b.c[size_t(k)].parity_twist(par);
    }
  }
  return acc;
}

PVec AlgebraCtx::mc_defect(const PVec& A) const {
  return d0.apply(A) + bracket_vec(A, A).scaled(Scalar(Rat(1) / 2));
}

PMat AlgebraCtx::d_twisted(const PVec& A) const { return d0 + ad(A); }

bool PolyLin::kernel(const VarPool* pool, std::vector<Poly> m, int rows, int cols,
                     std::vector<std::vector<Poly>>* out, std::vector<int>* pivot_cols) {
  auto at = [&](int r, int c) -> Poly& { return m[size_t(r) * size_t(cols) + size_t(c)]; };
  std::vector<int> pivot_row_of_col(size_t(cols), -1);
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (!at(i, c).body().is_zero()) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    if (piv != r)
      for (int j = 0; j < cols; ++j) std::swap(at(piv, j), at(r, j));
    Poly inv = at(r, c).inv();
    for (int j = 0; j < cols; ++j) at(r, j) = inv * at(r, j);
    for (int i = 0; i < rows; ++i) {
      if (i == r) continue;
      Poly f = at(i, c);
      if (f.is_zero()) continue;
      for (int j = 0; j < cols; ++j) at(i, j) -= f * at(r, j);
    }
    pivot_row_of_col[size_t(c)] = r;
    ++r;
  }
  // Residual rows must vanish or the module does not split.
  for (int i = r; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (!at(i, j).is_zero()) return false;
  out->clear();
  if (pivot_cols) pivot_cols->clear();
  for (int c = 0; c < cols; ++c)
    if (pivot_row_of_col[size_t(c)] >= 0 && pivot_cols) pivot_cols->push_back(c);
  for (int f = 0; f < cols; ++f) {
    if (pivot_row_of_col[size_t(f)] >= 0) continue;
    std::vector<Poly> v;
    v.assign(size_t(cols), Poly(pool));
    v[size_t(f)] = Poly::unit(pool);
    for (int c = 0; c < cols; ++c) {
      int pr = pivot_row_of_col[size_t(c)];
      if (pr >= 0) v[size_t(c)] = -at(pr, f);
    }
    out->push_back(std::move(v));
  }
  return true;
}

bool PolyLin::solve(const VarPool* pool, std::vector<Poly> m, int rows, int cols,
                    std::vector<Poly> b, int bcols, std::vector<Poly>* x) {
  (void)pool;
  auto at = [&](int r, int c) -> Poly& { return m[size_t(r) * size_t(cols) + size_t(c)]; };
  auto bat = [&](int r, int c) -> Poly& { return b[size_t(r) * size_t(bcols) + size_t(c)]; };
  std::vector<int> pivot_row_of_col(size_t(cols), -1);
  int r = 0;
  for (int c = 0; c < cols; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (!at(i, c).body().is_zero()) {
        piv = i;
        break;
      }
    if (piv < 0) return false;  // not full column rank over the ring
    if (piv != r) {
      for (int j = 0; j < cols; ++j) std::swap(at(piv, j), at(r, j));
      for (int j = 0; j < bcols; ++j) std::swap(bat(piv, j), bat(r, j));
    }
    Poly inv = at(r, c).inv();
    for (int j = 0; j < cols; ++j) at(r, j) = inv * at(r, j);
    for (int j = 0; j < bcols; ++j) bat(r, j) = inv * bat(r, j);
    for (int i = 0; i < rows; ++i) {
      if (i == r) continue;
      Poly f = at(i, c);
      if (f.is_zero()) continue;
      for (int j = 0; j < cols; ++j) at(i, j) -= f * at(r, j);
      for (int j = 0; j < bcols; ++j) bat(i, j) -= f * bat(r, j);
    }
    pivot_row_of_col[size_t(c)] = r;
    ++r;
  }
  for (int i = r; i < rows; ++i)
    for (int j = 0; j < bcols; ++j)
      if (!bat(i, j).is_zero()) return false;  // inconsistent system
  x->assign(size_t(cols) * size_t(bcols), Poly(m.empty() ? nullptr : m[0].pool()));
  for (int c = 0; c < cols; ++c)
    for (int j = 0; j < bcols; ++j)
      (*x)[size_t(c) * size_t(bcols) + size_t(j)] = bat(pivot_row_of_col[size_t(c)], j);
  return true;
}

namespace {

// Scalar cohomology dimensions of a body differential.
std::array<int, 4> body_cohomology_dims(const CyclicDgla& g, const PMat& dA) {
  const GradedSpace& sp = g.sp;
  std::array<int, 4> dims{{0, 0, 0, 0}};
  std::array<int, 4> rank_from{{0, 0, 0, 0}};  // rank of d on degree k
  for (int k = 0; k <= 2; ++k) {
    auto cols = sp.indices_of(k), rows = sp.indices_of(k + 1);
    if (cols.empty() || rows.empty()) continue;
    SMat m(rows.size(), std::vector<Scalar>(cols.size(), Scalar(0)));
    for (size_t r = 0; r < rows.size(); ++r)
      for (size_t c = 0; c < cols.size(); ++c)
        m[r][c] = dA.at(rows[r], cols[c]).body();
    rank_from[size_t(k)] = scalar_rank(m);
  }
  for (int k = 0; k <= 3; ++k) {
    int nk = sp.dim_of(k);
    int rk = k <= 2 ? rank_from[size_t(k)] : 0;
    int rprev = k >= 1 ? rank_from[size_t(k - 1)] : 0;
    dims[size_t(k)] = nk - rk - rprev;
  }
  return dims;
}

Poly twisted_entry(const Poly& p, int par) { return p.parity_twist(par); }

}  // namespace

SdrResult hodge(const AlgebraCtx& ctx, const PVec& A, const PVec& Aprime,
                const PMat* metric_in) {
  SdrResult res;
  const GradedSpace* sp = ctx.sp();
  const VarPool* pool = ctx.pool;
  const int n = sp->dim();

  if (!ctx.mc_defect(A).is_zero()) {
    res.why = "A fails the flatness equation";
    return res;
  }
  if (!ctx.mc_defect(Aprime).is_zero()) {
    res.why = "Aprime fails the flatness equation";
    return res;
  }
  PMat metric = metric_in ? *metric_in : ctx.ip;
  PMat metric_inv;
  try {
    metric_inv = metric.inverse();
  } catch (const std::exception&) {
    res.why = "metric is not invertible";
    return res;
  }
  res.A = A;
  res.Aprime = Aprime;
  res.metric = metric;
  res.metric_inv = metric_inv;

  res.dA = ctx.d_twisted(A);
  res.dstar = AlgebraCtx::adjoint_with(ctx.d_twisted(Aprime), metric, metric_inv);
  res.lap = res.dA.compose(res.dstar) + res.dstar.compose(res.dA);

  // Work in the row-twisted picture, where operator composition and action
  // become plain matrix algebra over the coefficient ring.
  PMat lapT = res.lap.row_twist();
  std::vector<Poly> m(size_t(n) * size_t(n), Poly(pool));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[size_t(i) * size_t(n) + size_t(j)] = lapT.at(i, j);

  std::vector<std::vector<Poly>> ker;
  std::vector<int> pivcols;
  if (!PolyLin::kernel(pool, m, n, n, &ker, &pivcols)) {
    res.why = "Laplacian does not split the algebra over the coefficient ring";
    return res;
  }
  if (ker.size() + pivcols.size() != size_t(n)) {
    res.why = "Laplacian splitting has wrong rank";
    return res;
  }

  // Degree labels: free columns of the body echelon are degree-homogeneous.
  std::vector<int> free_cols;
  {
    std::vector<bool> is_piv(size_t(n), false);
    for (int c : pivcols) is_piv[size_t(c)] = true;
    for (int c = 0; c < n; ++c)
      if (!is_piv[size_t(c)]) free_cols.push_back(c);
  }
  auto expected = body_cohomology_dims(*ctx.g, res.dA);
  std::array<int, 4> got{{0, 0, 0, 0}};
  for (int c : free_cols) got[size_t(sp->deg[size_t(c)])]++;
  if (got != expected) {
    res.why = "zero-mode count does not match body cohomology";
    return res;
  }

  // Order kernel vectors by (degree of free column, column index).
  std::vector<int> order(ker.size());
  for (size_t i = 0; i < ker.size(); ++i) order[i] = int(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sp->deg[size_t(free_cols[size_t(a)])] < sp->deg[size_t(free_cols[size_t(b)])];
  });

  const int h = int(ker.size());
  res.wsp = std::make_shared<GradedSpace>();
  for (int a = 0; a < h; ++a) {
    int deg = sp->deg[size_t(free_cols[size_t(order[size_t(a)])])];
    res.wsp->deg.push_back(deg);
  }
  {
    std::array<int, 4> cnt{{0, 0, 0, 0}};
    for (int a = 0; a < h; ++a) {
      int deg = res.wsp->deg[size_t(a)];
      res.wsp->name.push_back("z" + std::to_string(deg) + "_" +
                              std::to_string(cnt[size_t(deg)]++));
    }
    res.wdims = cnt;
  }

  // Projector in the twisted picture: S = [kernel | image], E = unit on the
  // kernel block, P~ = S E S^{-1} (plain algebra).
  std::vector<Poly> S(size_t(n) * size_t(n), Poly(pool));
  for (int a = 0; a < h; ++a)
    for (int i = 0; i < n; ++i)
      S[size_t(i) * size_t(n) + size_t(a)] = ker[size_t(order[size_t(a)])][size_t(i)];
  for (size_t c = 0; c < pivcols.size(); ++c)
    for (int i = 0; i < n; ++i)
      S[size_t(i) * size_t(n) + size_t(h) + c] = lapT.at(i, pivcols[c]);
  // Invert S by solving S X = E_ker.
  std::vector<Poly> eker(size_t(n) * size_t(n), Poly(pool));
  for (int a = 0; a < h; ++a) {
    // column a of S E: kernel columns pass through, image columns die.
    for (int i = 0; i < n; ++i)
      eker[size_t(i) * size_t(n) + size_t(a)] = S[size_t(i) * size_t(n) + size_t(a)];
  }
  // P~ = (S E) S^{-1}: solve S^T? Instead solve S Y = I for S^{-1}.
  std::vector<Poly> id(size_t(n) * size_t(n), Poly(pool));
  for (int i = 0; i < n; ++i) id[size_t(i) * size_t(n) + size_t(i)] = Poly::unit(pool);
  std::vector<Poly> Sinv;
  if (!PolyLin::solve(pool, S, n, n, id, n, &Sinv)) {
    res.why = "splitting basis is not invertible over the coefficient ring";
    return res;
  }
  // P~ = SE * Sinv
  PMat Pt(sp, pool);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Poly acc(pool);
      for (int k = 0; k < h; ++k)
        acc += eker[size_t(i) * size_t(n) + size_t(k)] *
               Sinv[size_t(k) * size_t(n) + size_t(j)];
      Pt.at(i, j) = acc;
    }
  res.P = Pt.row_twist();

  // Closeness: the twisted differential and its adjoint kill the zero modes.
  if (!res.dA.compose(res.P).is_zero()) {
    res.why = "twisted differential does not vanish on zero modes";
    return res;
  }
  if (!res.dstar.compose(res.P).is_zero()) {
    res.why = "adjoint differential does not vanish on zero modes";
    return res;
  }

  // Green operator and propagator.
  try {
    res.G = (res.lap + res.P).inverse();
  } catch (const std::exception&) {
    res.why = "Green operator is not invertible";
    return res;
  }
  res.K = res.dstar.compose(res.G);

  // Inclusion columns (operator picture) from the twisted kernel vectors.
  std::vector<PVec> cols(size_t(h), PVec(sp, pool));
  for (int a = 0; a < h; ++a)
    for (int i = 0; i < n; ++i)
      cols[size_t(a)].c[size_t(i)] =
          twisted_entry(ker[size_t(order[size_t(a)])][size_t(i)], sp->deg[size_t(i)] & 1);

  // Normalize: metric-orthogonalize degrees 0 and 1; replace degrees 3 and 2
  // by the cyclic-pairing duals of degrees 0 and 1.
  auto deg_range = [&](int k, int* lo, int* hi) {
    *lo = 0;
    for (int d = 0; d < k; ++d) *lo += res.wdims[size_t(d)];
    *hi = *lo + res.wdims[size_t(k)];
  };
  for (int k : {0, 1}) {
    int lo, hi;
    deg_range(k, &lo, &hi);
    for (int a = lo; a < hi; ++a)
      for (int b = lo; b < a; ++b) {
        Poly num = ctx.ip_pair_with(cols[size_t(a)], cols[size_t(b)], metric);
        Poly den = ctx.ip_pair_with(cols[size_t(b)], cols[size_t(b)], metric);
        Poly f = num * den.inv();
        cols[size_t(a)] -= cols[size_t(b)].mul(f);
      }
  }
  for (int k : {0, 1}) {
    int lo, hi, dlo, dhi;
    deg_range(k, &lo, &hi);
    deg_range(3 - k, &dlo, &dhi);
    int mdim = hi - lo;
    if (mdim == 0) continue;
    // Gram of <low_a, cand_b>, then dual_b = sum_c cand_c ginv_cb.
    std::vector<Poly> gram(size_t(mdim) * size_t(mdim), Poly(pool));
    for (int a = 0; a < mdim; ++a)
      for (int b = 0; b < mdim; ++b)
        gram[size_t(a) * size_t(mdim) + size_t(b)] =
            ctx.pair(cols[size_t(lo + a)], cols[size_t(dlo + b)]);
    std::vector<Poly> gid(size_t(mdim) * size_t(mdim), Poly(pool));
    for (int a = 0; a < mdim; ++a)
      gid[size_t(a) * size_t(mdim) + size_t(a)] = Poly::unit(pool);
    std::vector<Poly> ginv;
    if (!PolyLin::solve(pool, gram, mdim, mdim, gid, mdim, &ginv)) {
      res.why = "cyclic pairing degenerates on zero modes";
      return res;
    }
    std::vector<PVec> duals(size_t(mdim), PVec(sp, pool));
    for (int b = 0; b < mdim; ++b)
      for (int c = 0; c < mdim; ++c)
        duals[size_t(b)] +=
            cols[size_t(dlo + c)].mul(ginv[size_t(c) * size_t(mdim) + size_t(b)]);
    for (int b = 0; b < mdim; ++b) cols[size_t(dlo + b)] = duals[size_t(b)];
  }

  res.incl = PMat(sp, res.wsp.get(), pool);
  for (int a = 0; a < h; ++a)
    for (int i = 0; i < n; ++i) res.incl.at(i, a) = cols[size_t(a)].c[size_t(i)];

  // Projection: solve incl X = P in the twisted picture.
  {
    PMat inclT = res.incl.row_twist();
    PMat PT = res.P.row_twist();
    std::vector<Poly> im(size_t(n) * size_t(h), Poly(pool)), pb(size_t(n) * size_t(n), Poly(pool));
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < h; ++a) im[size_t(i) * size_t(h) + size_t(a)] = inclT.at(i, a);
      for (int j = 0; j < n; ++j) pb[size_t(i) * size_t(n) + size_t(j)] = PT.at(i, j);
    }
    std::vector<Poly> X;
    if (!PolyLin::solve(pool, im, n, h, pb, n, &X)) {
      res.why = "projection solve failed";
      return res;
    }
    PMat projT(res.wsp.get(), sp, pool);
    for (int a = 0; a < h; ++a)
      for (int j = 0; j < n; ++j) projT.at(a, j) = X[size_t(a) * size_t(n) + size_t(j)];
    res.proj = projT.row_twist();
  }

  if (res.proj.compose(res.incl) != PMat::identity(res.wsp.get(), pool)) {
    res.why = "retraction identity failed";
    return res;
  }
  res.dW = res.proj.compose(res.dA).compose(res.incl);
  if (!res.dW.is_zero()) {
    res.why = "zero-mode differential did not vanish";
    return res;
  }
  res.ok = true;
  return res;
}

HplResult hpl(const AlgebraCtx& ctx, const SdrResult& base, const PMat& delta) {
  HplResult r;
  r.wsp = base.wsp;
  PMat dnew = base.dA + delta;
  if (!(dnew.compose(dnew)).is_zero()) {
    r.why = "perturbed differential does not square to zero";
    return r;
  }
  PMat one = ctx.ident();
  PMat T;
  try {
    T = delta.compose((one + base.K.compose(delta)).inverse());
  } catch (const std::exception&) {
    r.why = "perturbation series is not invertible";
    return r;
  }
  r.incl = base.incl - base.K.compose(T).compose(base.incl);
  r.proj = base.proj - base.proj.compose(T).compose(base.K);
  r.K = base.K - base.K.compose(T).compose(base.K);
  r.dW = base.dW + base.proj.compose(T).compose(base.incl);
  r.ok = true;
  return r;
}

}  // namespace csbv
