#include "trees/trees.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace csbv {

namespace {

// Interned shape pool. Children are stored canonically (left serial <=
// right serial); id 0 is the leaf. Guarded by one mutex; the per-count
// vectors are immutable once published, so references handed out stay valid
// while other counts are being built.
struct ShapeStore {
  std::mutex mu;
  std::vector<std::array<int, 2>> kids{{{-1, -1}}};
  std::vector<int> nleaves{1};
  std::vector<long> aut{1};
  std::vector<std::string> serial{"."};
  std::map<std::pair<int, int>, int> by_kids;
  std::map<int, std::vector<RootedBinaryTree>> by_count;
};

ShapeStore& store() {
  static ShapeStore* s = new ShapeStore;
  return *s;
}

int intern_node(ShapeStore& st, int a, int b) {
  if (st.serial[size_t(a)] > st.serial[size_t(b)]) std::swap(a, b);
  auto key = std::make_pair(a, b);
  auto it = st.by_kids.find(key);
  if (it != st.by_kids.end()) return it->second;
  int id = int(st.kids.size());
  st.kids.push_back({a, b});
  st.nleaves.push_back(st.nleaves[size_t(a)] + st.nleaves[size_t(b)]);
  st.aut.push_back(st.aut[size_t(a)] * st.aut[size_t(b)] * (a == b ? 2 : 1));
  st.serial.push_back("(" + st.serial[size_t(a)] + st.serial[size_t(b)] + ")");
  st.by_kids.emplace(key, id);
  return id;
}

}  // namespace

const std::vector<RootedBinaryTree>& enumerate_trees(int n) {
  if (n < 1) throw std::invalid_argument("enumerate_trees: need at least one leaf");
  ShapeStore& st = store();
  std::lock_guard<std::mutex> lock(st.mu);
  if (st.by_count.find(1) == st.by_count.end())
    st.by_count[1] = {RootedBinaryTree{0, 1, 1, "."}};
  for (int m = 2; m <= n; ++m) {
    if (st.by_count.find(m) != st.by_count.end()) continue;
    std::vector<RootedBinaryTree> level;
    std::set<int> seen;
    for (int k = 1; 2 * k <= m; ++k) {
      const auto& left = st.by_count.at(k);
      const auto& right = st.by_count.at(m - k);
      for (const auto& ta : left)
        for (const auto& tb : right) {
          if (k == m - k && ta.serial > tb.serial) continue;
          int id = intern_node(st, ta.id, tb.id);
          if (seen.insert(id).second)
            level.push_back(
                {id, m, st.aut[size_t(id)], st.serial[size_t(id)]});
        }
    }
    std::sort(level.begin(), level.end(),
              [](const RootedBinaryTree& a, const RootedBinaryTree& b) {
                return a.serial < b.serial;
              });
    st.by_count[m] = std::move(level);
  }
  return st.by_count.at(n);
}

std::pair<int, int> tree_children(int id) {
  ShapeStore& st = store();
  std::lock_guard<std::mutex> lock(st.mu);
  const auto& k = st.kids.at(size_t(id));
  return {k[0], k[1]};
}

namespace {

// Diagonal evaluation with a shared subtree memo (shape ids are global, so
// one memo covers a whole forest as long as edge and leaf stay fixed).
const PVec& eval_diag_memo(const AlgebraCtx& ctx, const PMat& edge,
                           const PVec& leaf, int id,
                           std::unordered_map<int, PVec>& memo) {
  auto it = memo.find(id);
  if (it != memo.end()) return it->second;
  auto [a, b] = tree_children(id);
  PVec va = (a == 0) ? leaf : edge.apply(eval_diag_memo(ctx, edge, leaf, a, memo));
  PVec vb = (b == 0) ? leaf : edge.apply(eval_diag_memo(ctx, edge, leaf, b, memo));
  return memo.emplace(id, ctx.bracket_vec(va, vb)).first->second;
}

// Total parity (internal degree plus coefficient parity) of v: 0 or 1 when
// uniform, -1 when v = 0, -2 when mixed.
int total_parity(const PVec& v) {
  int par = -1;
  for (int j = 0; j < v.sp->dim(); ++j)
    for (const auto& [m, c] : v.c[size_t(j)].terms()) {
      int p = (m.parity() + v.sp->deg[size_t(j)]) & 1;
      if (par == -1)
        par = p;
      else if (par != p)
        return -2;
    }
  return par;
}

PVec deriv_vec(const PVec& v, int var) {
  PVec out(v.sp, v.c.empty() ? nullptr : v.c[0].pool());
  for (size_t i = 0; i < v.c.size(); ++i)
    out.c[i] = v.c[i].deriv(var).eval_zero(var);
  return out;
}

// Positional evaluation: leaves consume the slot list left to right in the
// canonical planar embedding of the shape.
PVec eval_ordered(const AlgebraCtx& ctx, const PMat& edge, int id,
                  const std::vector<const PVec*>& slots, size_t& pos) {
  auto [a, b] = tree_children(id);
  PVec va = (a == 0) ? *slots[pos++]
                     : edge.apply(eval_ordered(ctx, edge, a, slots, pos));
  PVec vb = (b == 0) ? *slots[pos++]
                     : edge.apply(eval_ordered(ctx, edge, b, slots, pos));
  return ctx.bracket_vec(va, vb);
}

long factorial(int n) {
  long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

int fresh_aux(VarPool* scratch, const char* tag, bool odd, int cap) {
  return scratch->add(std::string(tag) + std::to_string(scratch->size()), odd,
                      VarKind::Aux, cap);
}

}  // namespace

PVec tree_value_diag(const AlgebraCtx& ctx, const PMat& edge, const PVec& leaf,
                     int id) {
  if (id == 0) return leaf;
  std::unordered_map<int, PVec> memo;
  return eval_diag_memo(ctx, edge, leaf, id, memo);
}

PVec induced_l(const AlgebraCtx& ctx, const SdrResult& s, int n,
               const std::vector<PVec>& args) {
  if (n < 2 || int(args.size()) != n)
    throw std::invalid_argument(
        "induced_l: arity must be >= 2 and match the argument count");
  std::vector<PVec> inc;
  inc.reserve(size_t(n));
  for (const auto& a : args) {
    PVec v = s.incl.apply(a);
    int p = total_parity(v);
    if (p == -1) return PVec(s.wsp.get(), ctx.pool);
    // With every slot odd in total, node values are insensitive to child
    // order and the symmetrization needs no explicit signs: the coefficient
    // ring performs the Koszul bookkeeping. Callers probe even-degree
    // directions by attaching an odd coefficient symbol.
    if (p != 1)
      throw std::invalid_argument(
          "induced_l: arguments must be odd in total (degree plus "
          "coefficient parity)");
    inc.push_back(std::move(v));
  }
  PVec out(s.wsp.get(), ctx.pool);
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::vector<const PVec*> slots(static_cast<size_t>(n), nullptr);
    for (int i = 0; i < n; ++i) slots[size_t(i)] = &inc[size_t(perm[size_t(i)])];
    for (const auto& t : enumerate_trees(n)) {
      size_t pos = 0;
      PVec val = eval_ordered(ctx, s.K, t.id, slots, pos);
      if (val.is_zero()) continue;
      out += s.proj.apply(val).scaled(Scalar(Rat(1, t.aut)));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (n & 1) out = -out;  // the overall (-1)^n
  return out;
}

PVec tree_exp_tilde(const AlgebraCtx& ctx, const PMat& K, const PVec& x,
                    int max_leaves) {
  PVec out = x;
  std::unordered_map<int, PVec> memo;
  for (int n = 2; n <= max_leaves; ++n) {
    PVec acc(x.sp, ctx.pool);
    bool any = false;
    for (const auto& t : enumerate_trees(n)) {
      const PVec& v = eval_diag_memo(ctx, K, x, t.id, memo);
      if (v.is_zero()) continue;
      acc += v.scaled(Scalar(Rat(1, t.aut)));
      any = true;
    }
    if (!any) continue;
    PVec kacc = K.apply(acc);
    out += (n % 2 == 0) ? -kacc : kacc;  // (-1)^{n-1}
  }
  return out;
}

TreeExp tree_exp(const AlgebraCtx& ctx, const SdrResult& s, const PVec& alpha_w,
                 int max_leaves) {
  TreeExp r;
  r.delta = tree_exp_tilde(ctx, s.K, s.incl.apply(alpha_w), max_leaves);
  r.phi = s.A + r.delta;
  return r;
}

PVec kuranishi(const AlgebraCtx& ctx, const SdrResult& s, const PVec& delta) {
  return delta +
         s.K.apply(ctx.bracket_vec(delta, delta)).scaled(Scalar(Rat(1, 2)));
}

PVec gauge_flow_exp(const AlgebraCtx& ctx, const SdrResult& s, const PVec& alpha,
                    int tvar, int order, std::string* err) {
  auto fail = [&](const char* m) {
    if (err) *err = m;
    return PVec(ctx.sp(), ctx.pool);
  };
  if (!s.dA.apply(alpha).is_zero())
    return fail("gauge_flow_exp: direction is not closed");
  const Poly t = Poly::var(ctx.pool, tvar);
  PVec beta = s.K.apply(alpha);
  PVec dbeta = s.dA.apply(beta);
  PVec out = s.A;
  // Potential part: sum_k t^k ((-1)^{k-1}/k!) ad_beta^{k-1}(d beta).
  PVec cur = dbeta;
  Poly tk = t;
  for (int k = 1; k <= order; ++k) {
    out += cur.mul(tk).scaled(Scalar(Rat((k % 2) ? 1 : -1, factorial(k))));
    cur = ctx.bracket_vec(beta, cur);
    tk = tk * t;
  }
  // Zero-mode part, conjugated: sum_j t^j ((-1)^j/j!) ad_beta^j of the series.
  PVec deltah =
      tree_exp_tilde(ctx, s.K, s.incl.apply(s.proj.apply(alpha)).mul(t), order);
  cur = deltah;
  out += cur;
  Poly tj = t;
  for (int j = 1; j <= order; ++j) {
    cur = ctx.bracket_vec(beta, cur);
    out += cur.mul(tj).scaled(Scalar(Rat((j % 2) ? -1 : 1, factorial(j))));
    tj = tj * t;
  }
  if (err) err->clear();
  return out;
}

PVec dphi_transport(const AlgebraCtx& ctx, const SdrResult& s,
                    const PVec& alpha_w, const PVec& chi, int max_leaves,
                    VarPool* scratch, std::string* err) {
  auto fail = [&](const char* m) {
    if (err) *err = m;
    return PVec(ctx.sp(), ctx.pool);
  };
  if (!s.dA.apply(chi).is_zero())
    return fail("dphi_transport: chi is not closed");
  if (!s.K.apply(chi).is_zero())
    return fail("dphi_transport: chi is not a propagator kernel");
  int cp = total_parity(chi);
  if (cp == -2) return fail("dphi_transport: chi has mixed total parity");
  if (err) err->clear();
  if (cp == -1) return PVec(ctx.sp(), ctx.pool);
  // The direction symbol keeps every leaf slot odd in total, so the
  // unordered-children evaluation stays well defined.
  bool odd_eps = (cp == 0);
  int eps = fresh_aux(scratch, "_dir", odd_eps, odd_eps ? -1 : 1);
  PVec x = s.incl.apply(alpha_w) + chi.mul(Poly::var(ctx.pool, eps));
  return deriv_vec(tree_exp_tilde(ctx, s.K, x, max_leaves), eps);
}

namespace {

// Generic zero-mode vector with fresh coefficient symbols, odd against even
// internal degrees so every slot has odd total parity.
PVec generic_zero_mode(const SdrResult& s, const AlgebraCtx& ctx,
                       VarPool* scratch) {
  PVec xw(s.wsp.get(), ctx.pool);
  for (int j = 0; j < s.wsp->dim(); ++j) {
    bool oddc = ((s.wsp->deg[size_t(j)] & 1) == 0);
    xw.c[size_t(j)] =
        Poly::var(ctx.pool, fresh_aux(scratch, "_zm", oddc, -1));
  }
  return xw;
}

}  // namespace

SmoothnessReport smoothness_test(const AlgebraCtx& ctx, const SdrResult& s,
                                 int N, VarPool* scratch) {
  SmoothnessReport rep;
  PVec x = s.incl.apply(generic_zero_mode(s, ctx, scratch));
  std::unordered_map<int, PVec> memo;
  for (int n = 2; n <= N; ++n) {
    PVec acc(ctx.sp(), ctx.pool);
    for (const auto& t : enumerate_trees(n))
      acc += eval_diag_memo(ctx, s.K, x, t.id, memo)
                 .scaled(Scalar(Rat(1, t.aut)));
    if (!s.proj.apply(acc).is_zero()) {
      rep.smooth = false;
      rep.failed_arity = n;
      rep.witness = "l'_" + std::to_string(n) +
                    " is nonzero on a generic zero-mode input";
      return rep;
    }
  }
  return rep;
}

SmoothnessReport extended_smoothness_test(const AlgebraCtx& ctx,
                                          const SdrResult& s,
                                          const DeformationKernels& k, int N,
                                          VarPool* scratch) {
  SmoothnessReport rep;
  PVec xw = generic_zero_mode(s, ctx, scratch);
  // Odd family one-form symbol carried by each mark: products of two marks
  // vanish, and leaf slots keep odd total parity.
  int eid = fresh_aux(scratch, "_mk", true, -1);
  Poly e = Poly::var(ctx.pool, eid);
  PVec x0 = s.incl.apply(xw);
  PVec x = x0 + k.I.apply(x0).mul(e);
  PMat edge = s.K + k.Lambda.mul_coeff(e);
  std::unordered_map<int, PVec> memo;
  for (int n = 2; n <= N; ++n) {
    PVec acc(ctx.sp(), ctx.pool);
    for (const auto& t : enumerate_trees(n))
      acc += eval_diag_memo(ctx, edge, x, t.id, memo)
                 .scaled(Scalar(Rat(1, t.aut)));
    PVec val = s.proj.apply(acc) + s.proj.apply(k.Pk.apply(acc)).mul(e);
    if (!deriv_vec(val, eid).is_zero()) {
      rep.smooth = false;
      rep.failed_arity = n;
      rep.witness = "marked tree sum with " + std::to_string(n) +
                    " leaves is nonzero";
      return rep;
    }
  }
  return rep;
}

bool convolution_check(const AlgebraCtx& ctx, const SdrResult& s,
                       const PVec& beta_w, const PVec& gamma_w, int max_leaves,
                       VarPool* scratch, std::string* why) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  TreeExp at_beta = tree_exp(ctx, s, beta_w, max_leaves);
  if (!ctx.mc_defect(at_beta.phi).is_zero())
    return fail(
        "series at beta does not satisfy the deformation equation within "
        "the truncation");
  HplResult h = hpl(ctx, s, ctx.ad(at_beta.delta));
  if (!h.ok) return fail("perturbed retract: " + h.why);
  std::string err;
  PVec moved = dphi_transport(ctx, s, beta_w, s.incl.apply(gamma_w), max_leaves,
                              scratch, &err);
  if (!err.empty()) return fail("transport: " + err);
  PVec lhs = tree_exp(ctx, s, beta_w + gamma_w, max_leaves).phi;
  PVec rhs = at_beta.phi + tree_exp_tilde(ctx, h.K, moved, max_leaves);
  if (!(lhs == rhs)) return fail("convolution identity violated");
  if (why) why->clear();
  return true;
}

}  // namespace csbv
