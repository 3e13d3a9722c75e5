#include <algorithm>

#include "algebra/dgla.hpp"

// Bundled example algebras. Tensor products with the exterior algebra on
// three odd generators t1,t2,t3 use basis names like "e_13" for e ox t1 t3.

namespace csbv {

namespace {

// Subsets of {1,2,3} ordered by (size, lexicographic).
const std::vector<std::vector<int>>& subsets() {
  static const std::vector<std::vector<int>> s = {
      {}, {1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, {1, 2, 3}};
  return s;
}

std::string suffix(const std::vector<int>& s) {
  if (s.empty()) return "";
  std::string out = "_";
  for (int i : s) out += char('0' + i);
  return out;
}

// Sign of the shuffle putting (S, T) into sorted order; 0 if S, T overlap.
int eps(const std::vector<int>& s, const std::vector<int>& t) {
  for (int a : s)
    if (std::find(t.begin(), t.end(), a) != t.end()) return 0;
  int inv = 0;
  for (int a : s)
    for (int b : t)
      if (a > b) ++inv;
  return inv % 2 ? -1 : 1;
}

std::vector<int> set_union(const std::vector<int>& s, const std::vector<int>& t) {
  std::vector<int> u = s;
  u.insert(u.end(), t.begin(), t.end());
  std::sort(u.begin(), u.end());
  return u;
}

void init_tables(CyclicDgla& g) {
  size_t n2 = size_t(g.dim()) * size_t(g.dim());
  g.d.assign(n2, Scalar(0));
  g.pairing.assign(n2, Scalar(0));
  g.ip.assign(n2, Scalar(0));
  for (int i = 0; i < g.dim(); ++i) g.ip[size_t(i * g.dim() + i)] = Scalar(1);
}

void add_bracket(CyclicDgla& g, int a, int b, int k, const Scalar& c) {
  auto& v = g.bracket[{a, b}];
  for (auto& [kk, cc] : v)
    if (kk == k) {
      cc += c;
      if (cc.is_zero())
        v.erase(std::remove_if(v.begin(), v.end(),
                               [&](auto& e) { return e.second.is_zero(); }),
                v.end());
      if (v.empty()) g.bracket.erase({a, b});
      return;
    }
  if (!c.is_zero()) v.push_back({k, c});
}

}  // namespace

CyclicDgla instance_u1_lambda3() {
  CyclicDgla g;
  g.name = "u1_lambda3";
  for (auto& s : subsets()) {
    g.sp.deg.push_back(int(s.size()));
    g.sp.name.push_back("u" + suffix(s));
  }
  init_tables(g);
  const auto& ss = subsets();
  for (size_t a = 0; a < ss.size(); ++a)
    for (size_t b = 0; b < ss.size(); ++b) {
      if (ss[a].size() + ss[b].size() != 3) continue;
      int e = eps(ss[a], ss[b]);
      if (e) g.pairing[a * ss.size() + b] = Scalar(e);
    }
  return g;
}

CyclicDgla instance_acyclic4() {
  CyclicDgla g;
  g.name = "acyclic4";
  g.sp.deg = {0, 1, 2, 3};
  g.sp.name = {"u", "v", "vs", "us"};
  init_tables(g);
  int n = 4;
  g.d[size_t(1 * n + 0)] = Scalar(1);   // d u = v
  g.d[size_t(3 * n + 2)] = Scalar(-1);  // d vs = -us
  auto P = [&](int j, int k, long c) { g.pairing[size_t(j * n + k)] = Scalar(c); };
  P(0, 3, 1);  // <u, us> = 1
  P(3, 0, 1);  // graded symmetry, (-1)^{0*3}
  P(1, 2, 1);  // <v, vs> = 1
  P(2, 1, 1);  // (-1)^{1*2}
  return g;
}

CyclicDgla instance_sl2_lambda3() {
  CyclicDgla g;
  g.name = "sl2_lambda3";
  const char* xs[3] = {"e", "f", "h"};
  for (auto& s : subsets())
    for (int x = 0; x < 3; ++x) {
      g.sp.deg.push_back(int(s.size()));
      g.sp.name.push_back(std::string(xs[size_t(x)]) + suffix(s));
    }
  init_tables(g);
  const auto& ss = subsets();
  auto idx = [&](int x, size_t s) { return int(s * 3 + size_t(x)); };
  auto sidx = [&](const std::vector<int>& s) {
    for (size_t i = 0; i < ss.size(); ++i)
      if (ss[i] == s) return i;
    return size_t(0);
  };
  // sl2 structure constants: [e,f]=h, [h,e]=2e, [h,f]=-2f.
  // Entries: (x, y) -> list of (z, coeff).
  const int E = 0, F = 1, H = 2;
  std::vector<std::array<int, 4>> sl2 = {
      {E, F, H, 1}, {F, E, H, -1}, {H, E, E, 2}, {E, H, E, -2}, {H, F, F, -2}, {F, H, F, 2}};
  // trace form: tr(hh)=2, tr(ef)=tr(fe)=1.
  std::vector<std::array<int, 3>> tr = {{H, H, 2}, {E, F, 1}, {F, E, 1}};

  for (size_t a = 0; a < ss.size(); ++a)
    for (size_t b = 0; b < ss.size(); ++b) {
      int e = eps(ss[a], ss[b]);
      if (!e) continue;
      auto u = sidx(set_union(ss[a], ss[b]));
      for (auto& [x, y, z, c] : sl2)
        add_bracket(g, idx(x, a), idx(y, b), idx(z, u), Scalar(long(c) * e));
      if (ss[a].size() + ss[b].size() == 3)
        for (auto& [x, y, c] : tr)
          g.pairing[size_t(idx(x, a)) * size_t(g.dim()) + size_t(idx(y, b))] =
              Scalar(long(c) * e);
    }
  return g;
}

CyclicDgla instance_sl2_lambda3_twisted() {
  CyclicDgla base = instance_sl2_lambda3();
  std::vector<Scalar> pi(size_t(base.dim()), Scalar(0));
  pi[size_t(base.index_of("h_1"))] = Scalar(1);
  auto out = twist(base, pi);
  if (!out) throw std::runtime_error("internal: h_1 twist rejected");
  out->name = "sl2_lambda3_twisted";
  return *out;
}

CyclicDgla instance_sl2_plus_acyclic() {
  CyclicDgla a = instance_sl2_lambda3(), b = instance_acyclic4();
  CyclicDgla g;
  g.name = "sl2_plus_acyclic";
  int na = a.dim(), nb = b.dim(), n = na + nb;
  g.sp.deg = a.sp.deg;
  g.sp.name = a.sp.name;
  g.sp.deg.insert(g.sp.deg.end(), b.sp.deg.begin(), b.sp.deg.end());
  g.sp.name.insert(g.sp.name.end(), b.sp.name.begin(), b.sp.name.end());
  init_tables(g);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < na; ++j) {
      g.d[size_t(i * n + j)] = a.d_at(i, j);
      g.pairing[size_t(i * n + j)] = a.pair_at(i, j);
      g.ip[size_t(i * n + j)] = a.ip_at(i, j);
    }
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      g.d[size_t((na + i) * n + na + j)] = b.d_at(i, j);
      g.pairing[size_t((na + i) * n + na + j)] = b.pair_at(i, j);
      g.ip[size_t((na + i) * n + na + j)] = b.ip_at(i, j);
    }
  g.bracket = a.bracket;
  return g;
}

CyclicDgla instance_pair_h12() {
  CyclicDgla g;
  g.name = "pair_h12";
  g.sp.deg = {1, 2};
  g.sp.name = {"x", "y"};
  init_tables(g);
  g.pairing[size_t(0 * 2 + 1)] = Scalar(1);
  g.pairing[size_t(1 * 2 + 0)] = Scalar(1);  // (-1)^{1*2}
  return g;
}

const std::vector<std::pair<std::string, CyclicDgla (*)()>>& bundled_instances() {
  static const std::vector<std::pair<std::string, CyclicDgla (*)()>> v = {
      {"u1_lambda3", &instance_u1_lambda3},
      {"acyclic4", &instance_acyclic4},
      {"sl2_lambda3", &instance_sl2_lambda3},
      {"sl2_lambda3_twisted", &instance_sl2_lambda3_twisted},
      {"sl2_plus_acyclic", &instance_sl2_plus_acyclic},
      {"pair_h12", &instance_pair_h12},
  };
  return v;
}

}  // namespace csbv
