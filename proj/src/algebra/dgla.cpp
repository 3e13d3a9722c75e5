#include "algebra/dgla.hpp"

#include <iterator>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace csbv {

namespace {

std::string wit2(const CyclicDgla& g, int a, int b) {
  return "(" + g.sp.name[size_t(a)] + "," + g.sp.name[size_t(b)] + ")";
}
std::string wit3(const CyclicDgla& g, int a, int b, int c) {
  return "(" + g.sp.name[size_t(a)] + "," + g.sp.name[size_t(b)] + "," +
         g.sp.name[size_t(c)] + ")";
}

// Sparse coefficient vector helpers for bracket images.
using SVec = std::map<int, Scalar>;

void sv_add(SVec& v, int k, const Scalar& c) {
  auto it = v.find(k);
  if (it == v.end()) {
    if (!c.is_zero()) v.emplace(k, c);
    return;
  }
  it->second += c;
  if (it->second.is_zero()) v.erase(it);
}

SVec br_vec(const CyclicDgla& g, int a, int b, const Scalar& scale) {
  SVec out;
  if (auto* e = g.br(a, b))
    for (auto& [k, c] : *e) sv_add(out, k, c * scale);
  return out;
}

// [x, e_b] for sparse x, scaled.
SVec br_left(const CyclicDgla& g, const SVec& x, int b, const Scalar& scale) {
  SVec out;
  for (auto& [a, ca] : x)
    if (auto* e = g.br(a, b))
      for (auto& [k, c] : *e) sv_add(out, k, ca * c * scale);
  return out;
}
// [e_a, x] for sparse x, scaled.
SVec br_right(const CyclicDgla& g, int a, const SVec& x, const Scalar& scale) {
  SVec out;
  for (auto& [b, cb] : x)
    if (auto* e = g.br(a, b))
      for (auto& [k, c] : *e) sv_add(out, k, cb * c * scale);
  return out;
}
void sv_acc(SVec& into, const SVec& x, const Scalar& scale) {
  for (auto& [k, c] : x) sv_add(into, k, c * scale);
}

SVec d_vec(const CyclicDgla& g, const SVec& x, const Scalar& scale) {
  SVec out;
  int n = g.dim();
  for (auto& [j, cj] : x)
    for (int i = 0; i < n; ++i) {
      Scalar dij = g.d_at(i, j);
      if (!dij.is_zero()) sv_add(out, i, dij * cj * scale);
    }
  return out;
}

Scalar sgn(int parity) { return parity % 2 ? Scalar(-1) : Scalar(1); }

}  // namespace

ValidationReport validate(const CyclicDgla& g) {
  ValidationReport rep;
  const int n = g.dim();
  if (int(g.sp.name.size()) != n || int(g.d.size()) != n * n ||
      int(g.pairing.size()) != n * n || int(g.ip.size()) != n * n) {
    rep.fail("shape", "table sizes do not match basis size");
    return rep;
  }
  for (int i = 0; i < n; ++i)
    if (g.sp.deg[size_t(i)] < 0 || g.sp.deg[size_t(i)] > 3)
      rep.fail("degree-range", g.sp.name[size_t(i)]);
  if (!rep.ok) return rep;
  auto deg = [&](int i) { return g.sp.deg[size_t(i)]; };

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!g.d_at(i, j).is_zero() && deg(i) != deg(j) + 1)
        rep.fail("d-degree", wit2(g, i, j));

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Scalar acc(0);
      for (int k = 0; k < n; ++k) acc += g.d_at(i, k) * g.d_at(k, j);
      if (!acc.is_zero()) {
        rep.fail("d-squared", wit2(g, i, j) + " = " + scalar_str(acc));
        break;
      }
    }

  for (auto& [ab, entries] : g.bracket) {
    auto [a, b] = ab;
    if (a < 0 || a >= n || b < 0 || b >= n) {
      rep.fail("bracket-degree", "index out of range");
      continue;
    }
    for (auto& [k, c] : entries) {
      if (c.is_zero()) continue;
      if (k < 0 || k >= n || deg(k) != deg(a) + deg(b))
        rep.fail("bracket-degree", wit2(g, a, b));
    }
  }
  if (!rep.ok) return rep;

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      SVec lhs = br_vec(g, a, b, Scalar(1));
      SVec rhs = br_vec(g, b, a, -sgn(deg(a) * deg(b)));
      if (lhs != rhs) rep.fail("antisymmetry", wit2(g, a, b));
    }

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      // d[a,b] - [da,b] - (-1)^|a| [a,db] = 0
      SVec acc = d_vec(g, br_vec(g, a, b, Scalar(1)), Scalar(1));
      for (int i = 0; i < n; ++i) {
        Scalar dia = g.d_at(i, a);
        if (!dia.is_zero()) sv_acc(acc, br_vec(g, i, b, Scalar(1)), -dia);
        Scalar dib = g.d_at(i, b);
        if (!dib.is_zero()) sv_acc(acc, br_vec(g, a, i, Scalar(1)), -sgn(deg(a)) * dib);
      }
      if (!acc.empty()) rep.fail("leibniz", wit2(g, a, b));
    }

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (!g.br(a, b) && !g.br(b, a)) continue;
      for (int c = 0; c < n; ++c) {
        // [a,[b,c]] - [[a,b],c] - (-1)^{|a||b|}[b,[a,c]] = 0
        SVec acc = br_right(g, a, br_vec(g, b, c, Scalar(1)), Scalar(1));
        sv_acc(acc, br_left(g, br_vec(g, a, b, Scalar(1)), c, Scalar(1)), Scalar(-1));
        sv_acc(acc, br_right(g, b, br_vec(g, a, c, Scalar(1)), Scalar(1)),
               -sgn(deg(a) * deg(b)));
        if (!acc.empty()) rep.fail("jacobi", wit3(g, a, b, c));
      }
    }

  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const Scalar& p = g.pair_at(j, k);
      if (!p.is_zero() && deg(j) + deg(k) != 3) rep.fail("pairing-degree", wit2(g, j, k));
      Scalar sym = g.pair_at(k, j) * sgn(deg(j) * deg(k));
      if (!(p == sym)) rep.fail("pairing-symmetry", wit2(g, j, k));
    }
  if (!rep.ok) return rep;

  for (int k = 0; k <= 3; ++k) {
    auto rows = g.sp.indices_of(k), cols = g.sp.indices_of(3 - k);
    if (rows.size() != cols.size()) {
      rep.fail("pairing-nondegenerate",
               "dim mismatch between degrees " + std::to_string(k) + " and " +
                   std::to_string(3 - k));
      continue;
    }
    if (rows.empty()) continue;
    SMat blk(rows.size(), std::vector<Scalar>(cols.size(), Scalar(0)));
    for (size_t r = 0; r < rows.size(); ++r)
      for (size_t c = 0; c < cols.size(); ++c) blk[r][c] = g.pair_at(rows[r], cols[c]);
    if (scalar_rank(blk) != int(rows.size()))
      rep.fail("pairing-nondegenerate", "degree " + std::to_string(k) + " block");
  }

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (!g.br(a, b)) continue;
      for (int c = 0; c < n; ++c) {
        Scalar lhs(0), rhs(0);
        if (auto* e = g.br(a, b))
          for (auto& [m, cf] : *e) lhs += cf * g.pair_at(m, c);
        if (auto* e = g.br(b, c))
          for (auto& [m, cf] : *e) rhs += cf * g.pair_at(a, m);
        if (!(lhs == rhs)) rep.fail("pairing-invariance", wit3(g, a, b, c));
      }
    }

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Scalar acc(0);
      for (int i = 0; i < n; ++i) {
        acc += g.d_at(i, a) * g.pair_at(i, b);
        acc += sgn(deg(a)) * g.d_at(i, b) * g.pair_at(a, i);
      }
      if (!acc.is_zero()) rep.fail("pairing-d-compat", wit2(g, a, b));
    }

  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const Scalar& v = g.ip_at(j, k);
      if (!v.is_zero() && deg(j) != deg(k)) rep.fail("inner-product-block", wit2(g, j, k));
      if (!v.is_real() || !g.ip_at(k, j).is_real() || !(v.re == g.ip_at(k, j).re))
        rep.fail("inner-product-symmetric", wit2(g, j, k));
    }
  if (!rep.ok) return rep;

  for (int k = 0; k <= 3; ++k) {
    auto idx = g.sp.indices_of(k);
    // Positive definiteness via leading principal minors.
    for (size_t m = 1; m <= idx.size(); ++m) {
      SMat blk(m, std::vector<Scalar>(m, Scalar(0)));
      for (size_t r = 0; r < m; ++r)
        for (size_t c = 0; c < m; ++c) blk[r][c] = g.ip_at(idx[r], idx[c]);
      // determinant by fraction-free elimination over Scalar (real entries)
      Scalar det(1);
      bool sing = false;
      for (size_t col = 0; col < m && !sing; ++col) {
        size_t piv = col;
        while (piv < m && blk[piv][col].is_zero()) ++piv;
        if (piv == m) {
          sing = true;
          break;
        }
        if (piv != col) {
          std::swap(blk[piv], blk[col]);
          det = -det;
        }
        det *= blk[col][col];
        for (size_t r = col + 1; r < m; ++r) {
          Scalar f = blk[r][col] / blk[col][col];
          for (size_t c = col; c < m; ++c) blk[r][c] -= f * blk[col][c];
        }
      }
      bool pos = !sing && det.is_real() && det.re > 0;
      if (!pos) {
        rep.fail("inner-product-posdef",
                 "degree " + std::to_string(k) + " leading minor " + std::to_string(m));
        break;
      }
    }
  }

  return rep;
}

std::optional<CyclicDgla> twist(const CyclicDgla& g, const std::vector<Scalar>& pi,
                                std::string* err) {
  const int n = g.dim();
  if (int(pi.size()) != n) {
    if (err) *err = "twist direction has wrong length";
    return std::nullopt;
  }
  for (int j = 0; j < n; ++j)
    if (!pi[size_t(j)].is_zero() && g.sp.deg[size_t(j)] != 1) {
      if (err) *err = "twist direction is not concentrated in degree 1";
      return std::nullopt;
    }
  // Maurer-Cartan test: d(pi) + (1/2)[pi,pi] = 0.
  SVec mc;
  for (int j = 0; j < n; ++j) {
    if (pi[size_t(j)].is_zero()) continue;
    for (int i = 0; i < n; ++i) {
      Scalar dij = g.d_at(i, j);
      if (!dij.is_zero()) sv_add(mc, i, dij * pi[size_t(j)]);
    }
  }
  Scalar half(Rat(1) / 2);
  for (int a = 0; a < n; ++a) {
    if (pi[size_t(a)].is_zero()) continue;
    for (int b = 0; b < n; ++b) {
      if (pi[size_t(b)].is_zero()) continue;
      if (auto* e = g.br(a, b))
        for (auto& [k, c] : *e) sv_add(mc, k, half * pi[size_t(a)] * pi[size_t(b)] * c);
    }
  }
  if (!mc.empty()) {
    if (err) *err = "twist direction fails the Maurer-Cartan equation";
    return std::nullopt;
  }
  CyclicDgla out = g;
  out.name = g.name + "_twisted";
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < n; ++a) {
      if (pi[size_t(a)].is_zero()) continue;
      if (auto* e = g.br(a, j))
        for (auto& [k, c] : *e) out.d[size_t(k * n + j)] += pi[size_t(a)] * c;
    }
  return out;
}

bool same_dgla(const CyclicDgla& a, const CyclicDgla& b) {
  if (a.name != b.name || a.sp.deg != b.sp.deg || a.sp.name != b.sp.name) return false;
  if (!(a.d == b.d) || !(a.pairing == b.pairing) || !(a.ip == b.ip)) return false;
  auto norm = [](const CyclicDgla& g) {
    std::map<std::pair<int, int>, std::map<int, Scalar>> out;
    for (auto& [ab, es] : g.bracket)
      for (auto& [k, c] : es)
        if (!c.is_zero()) out[ab][k] += c;
    for (auto it = out.begin(); it != out.end();) {
      for (auto jt = it->second.begin(); jt != it->second.end();)
        jt = jt->second.is_zero() ? it->second.erase(jt) : std::next(jt);
      it = it->second.empty() ? out.erase(it) : std::next(it);
    }
    return out;
  };
  return norm(a) == norm(b);
}

int scalar_rank(SMat m) {
  if (m.empty()) return 0;
  size_t rows = m.size(), cols = m[0].size(), r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t piv = r;
    while (piv < rows && m[piv][c].is_zero()) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[r]);
    for (size_t i = 0; i < rows; ++i) {
      if (i == r || m[i][c].is_zero()) continue;
      Scalar f = m[i][c] / m[r][c];
      for (size_t j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    ++r;
  }
  return int(r);
}

std::vector<std::vector<Scalar>> scalar_kernel(const SMat& m_in) {
  SMat m = m_in;
  if (m.empty()) return {};
  size_t rows = m.size(), cols = m[0].size();
  std::vector<int> pivot_of_col(cols, -1);
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t piv = r;
    while (piv < rows && m[piv][c].is_zero()) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[r]);
    Scalar inv = m[r][c].inv();
    for (size_t j = c; j < cols; ++j) m[r][j] *= inv;
    for (size_t i = 0; i < rows; ++i) {
      if (i == r || m[i][c].is_zero()) continue;
      Scalar f = m[i][c];
      for (size_t j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    pivot_of_col[c] = int(r);
    ++r;
  }
  std::vector<std::vector<Scalar>> out;
  for (size_t c = 0; c < cols; ++c) {
    if (pivot_of_col[c] >= 0) continue;
    std::vector<Scalar> v(cols, Scalar(0));
    v[c] = Scalar(1);
    for (size_t c2 = 0; c2 < cols; ++c2)
      if (pivot_of_col[c2] >= 0) v[c2] = -m[size_t(pivot_of_col[c2])][c];
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

SMat smat_mul(const SMat& a, const SMat& b) {
  size_t n = a.size(), m = b.empty() ? 0 : b[0].size(), k = b.size();
  SMat out(n, std::vector<Scalar>(m, Scalar(0)));
  for (size_t i = 0; i < n; ++i)
    for (size_t l = 0; l < k; ++l) {
      if (a[i][l].is_zero()) continue;
      for (size_t j = 0; j < m; ++j) out[i][j] += a[i][l] * b[l][j];
    }
  return out;
}

SMat smat_inverse(SMat m) {
  size_t n = m.size();
  SMat inv(n, std::vector<Scalar>(n, Scalar(0)));
  for (size_t i = 0; i < n; ++i) inv[i][i] = Scalar(1);
  for (size_t c = 0; c < n; ++c) {
    size_t piv = c;
    while (piv < n && m[piv][c].is_zero()) ++piv;
    if (piv == n) throw std::runtime_error("scalar matrix not invertible");
    std::swap(m[piv], m[c]);
    std::swap(inv[piv], inv[c]);
    Scalar f = m[c][c].inv();
    for (size_t j = 0; j < n; ++j) {
      m[c][j] *= f;
      inv[c][j] *= f;
    }
    for (size_t i = 0; i < n; ++i) {
      if (i == c || m[i][c].is_zero()) continue;
      Scalar g = m[i][c];
      for (size_t j = 0; j < n; ++j) {
        m[i][j] -= g * m[c][j];
        inv[i][j] -= g * inv[c][j];
      }
    }
  }
  return inv;
}

}  // namespace

Cohomology cohomology(const CyclicDgla& g) {
  const size_t n = size_t(g.dim());
  SMat d(n, std::vector<Scalar>(n, Scalar(0))), ip = d, ipinv;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      d[i][j] = g.d_at(int(i), int(j));
      ip[i][j] = g.ip_at(int(i), int(j));
    }
  ipinv = smat_inverse(ip);
  // d* = ip^{-1} d^T ip
  SMat dt(n, std::vector<Scalar>(n, Scalar(0)));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) dt[i][j] = d[j][i];
  SMat dstar = smat_mul(smat_mul(ipinv, dt), ip);
  SMat lap = smat_mul(d, dstar);
  SMat dsd = smat_mul(dstar, d);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) lap[i][j] += dsd[i][j];

  auto ip_dot = [&](const std::vector<Scalar>& u, const std::vector<Scalar>& v) {
    Scalar acc(0);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) acc += u[i] * ip[i][j] * v[j];
    return acc;
  };
  auto pair_dot = [&](const std::vector<Scalar>& u, const std::vector<Scalar>& v) {
    Scalar acc(0);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) acc += u[i] * g.pair_at(int(i), int(j)) * v[j];
    return acc;
  };

  Cohomology out;
  std::array<std::vector<std::vector<Scalar>>, 4> harm;
  for (int k = 0; k <= 3; ++k) {
    auto idx = g.sp.indices_of(k);
    if (idx.empty()) continue;
    SMat blk(idx.size(), std::vector<Scalar>(idx.size(), Scalar(0)));
    for (size_t r = 0; r < idx.size(); ++r)
      for (size_t c = 0; c < idx.size(); ++c) blk[r][c] = lap[size_t(idx[r])][size_t(idx[c])];
    auto ker = scalar_kernel(blk);
    // Orthogonalize without normalizing (no square roots over Q).
    std::vector<std::vector<Scalar>> basis;
    for (auto& kv : ker) {
      std::vector<Scalar> v(n, Scalar(0));
      for (size_t r = 0; r < idx.size(); ++r) v[size_t(idx[r])] = kv[r];
      for (auto& b : basis) {
        Scalar f = ip_dot(v, b) / ip_dot(b, b);
        for (size_t i = 0; i < n; ++i) v[i] -= f * b[i];
      }
      basis.push_back(std::move(v));
    }
    harm[size_t(k)] = std::move(basis);
  }
  // Replace degrees 2,3 by pairing-duals of degrees 1,0 inside the harmonic
  // subspace, so conjugate zero-mode pairs have unit pairing.
  for (int k : {1, 0}) {
    auto& low = harm[size_t(k)];
    auto& high = harm[size_t(3 - k)];
    if (low.size() != high.size())
      throw std::runtime_error("harmonic dimensions violate duality");
    size_t m = low.size();
    if (m == 0) continue;
    SMat gram(m, std::vector<Scalar>(m, Scalar(0)));
    for (size_t a = 0; a < m; ++a)
      for (size_t b = 0; b < m; ++b) gram[a][b] = pair_dot(low[a], high[b]);
    SMat gi = smat_inverse(gram);  // throws if pairing degenerates on harmonics
    std::vector<std::vector<Scalar>> dual(m, std::vector<Scalar>(n, Scalar(0)));
    for (size_t b = 0; b < m; ++b)
      for (size_t c = 0; c < m; ++c)
        for (size_t i = 0; i < n; ++i) dual[b][i] += high[c][i] * gi[c][b];
    high = std::move(dual);
  }
  for (int k = 0; k <= 3; ++k) {
    out.dims[size_t(k)] = int(harm[size_t(k)].size());
    out.reps[size_t(k)] = std::move(harm[size_t(k)]);
  }
  return out;
}

}  // namespace csbv
