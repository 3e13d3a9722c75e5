#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <set>
#include <string>
#include <vector>

#include "algebra/dgla.hpp"
#include "homotopy/kernels.hpp"
#include "homotopy/sdr.hpp"
#include "trees/trees.hpp"

using namespace csbv;

namespace {

long fact(int n) {
  long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Exact coefficient of t^k: k-fold derivative over k!, evaluated at t = 0.
PVec tcoeff(const PVec& v, int t, int k) {
  PVec r = v;
  for (auto& c : r.c) {
    Poly q = c;
    for (int i = 0; i < k; ++i) q = q.deriv(t);
    c = q.eval_zero(t).scaled(Scalar(Rat(1, fact(k))));
  }
  return r;
}

PVec deriv_at_zero(const PVec& v, int var) {
  PVec r = v;
  for (auto& c : r.c) c = c.deriv(var).eval_zero(var);
  return r;
}

// sl2 x Lambda(theta1..3) with the extra derivation differential
// d(theta1) = theta2 theta3.  The propagator is nonzero while the zero modes
// still bracket nontrivially, so tree sums survive beyond two leaves; the
// first obstruction to extending a degree-1 zero mode appears at third order.
CyclicDgla make_sl2_dtheta() {
  CyclicDgla g = instance_sl2_lambda3();
  g.name = "sl2_dtheta";
  for (const char* x : {"e", "f", "h"}) {
    int from = g.index_of(std::string(x) + "_1");
    int to = g.index_of(std::string(x) + "_23");
    g.d[size_t(to * g.dim() + from)] = Scalar(1);
  }
  return g;
}

PVec basisv(const AlgebraCtx& ctx, const std::string& name) {
  int j = ctx.g->index_of(name);
  REQUIRE(j >= 0);
  return ctx.basis_vec(j);
}

// Generic degree-1 zero mode: one fresh even coefficient symbol per W^1 slot.
PVec generic_w1(const SdrResult& s, const AlgebraCtx& ctx, VarPool* pool,
                const char* tag) {
  PVec v(s.wsp.get(), ctx.pool);
  int k = 0;
  for (int j = 0; j < s.wsp->dim(); ++j)
    if (s.wsp->deg[size_t(j)] == 1)
      v.c[size_t(j)] = Poly::var(
          ctx.pool,
          pool->add(std::string(tag) + std::to_string(k++), false, VarKind::Aux, -1));
  return v;
}

// Generic zero mode over every degree, polarized so that each slot is odd in
// total: even-degree slots get odd coefficient symbols and vice versa.
PVec generic_w_all(const SdrResult& s, const AlgebraCtx& ctx, VarPool* pool,
                   const char* tag) {
  PVec v(s.wsp.get(), ctx.pool);
  int k = 0;
  for (int j = 0; j < s.wsp->dim(); ++j) {
    bool oddc = ((s.wsp->deg[size_t(j)] & 1) == 0);
    v.c[size_t(j)] = Poly::var(
        ctx.pool, pool->add(std::string(tag) + std::to_string(k++), oddc,
                            VarKind::Aux, oddc ? -1 : 1));
  }
  return v;
}

bool has_sub(const std::string& s, const std::string& needle) {
  return s.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("shape enumeration matches independent counting oracles") {
  // Oracle 1: the two-type recurrence for unordered binary shapes,
  //   w(1) = 1,  w(n) = sum_{k < n/2} w(k) w(n-k) + [n even] w(n/2)(w(n/2)+1)/2.
  std::vector<long> w{0, 1};
  for (int n = 2; n <= 10; ++n) {
    long c = 0;
    for (int k = 1; 2 * k < n; ++k) c += w[size_t(k)] * w[size_t(n - k)];
    if (n % 2 == 0) c += w[size_t(n / 2)] * (w[size_t(n / 2)] + 1) / 2;
    w.push_back(c);
  }
  CHECK(w == std::vector<long>{0, 1, 1, 1, 2, 3, 6, 11, 23, 46, 98});

  for (int n = 1; n <= 10; ++n) {
    const auto& ts = enumerate_trees(n);
    CHECK(long(ts.size()) == w[size_t(n)]);
    // Oracle 2: summing the orbit sizes n!/|Aut T| over all shapes counts
    // binary trees with n distinguishable leaves, which is (2n-3)!!.
    long dblfact = 1;
    for (int m = 2 * n - 3; m >= 2; m -= 2) dblfact *= m;
    long labeled = 0;
    std::set<std::string> serials;
    for (const auto& t : ts) {
      CHECK(t.leaves == n);
      REQUIRE(t.aut >= 1);
      CHECK(fact(n) % t.aut == 0);
      labeled += fact(n) / t.aut;
      CHECK(serials.insert(t.serial).second);  // canonical keys are distinct
      if (n >= 2) {
        // Child leaf counts add up to the parent's.
        auto [a, b] = tree_children(t.id);
        auto leaves_of = [&](int id) {
          if (id == 0) return 1;
          for (int m = 2; m < n; ++m)
            for (const auto& u : enumerate_trees(m))
              if (u.id == id) return u.leaves;
          return -1;
        };
        CHECK(leaves_of(a) + leaves_of(b) == n);
      }
    }
    CHECK(labeled == dblfact);
  }

  // Frozen small cases: one shape each for 2 and 3 leaves with |Aut| = 2, and
  // for 4 leaves the balanced shape (|Aut| = 8) plus the comb (|Aut| = 2).
  REQUIRE(enumerate_trees(2).size() == 1);
  CHECK(enumerate_trees(2)[0].aut == 2);
  REQUIRE(enumerate_trees(3).size() == 1);
  CHECK(enumerate_trees(3)[0].aut == 2);
  {
    std::vector<long> auts;
    for (const auto& t : enumerate_trees(4)) auts.push_back(t.aut);
    std::sort(auts.begin(), auts.end());
    CHECK(auts == std::vector<long>{2, 8});
  }

  CHECK_THROWS_AS(enumerate_trees(0), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_trees(-3), std::invalid_argument);

  // Raw shape evaluation: a leaf returns the input; two leaves give the
  // bracket; three leaves nest one propagator edge.
  CyclicDgla g = make_sl2_dtheta();
  VarPool pool;
  AlgebraCtx ctx(&g, &pool);
  SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
  REQUIRE(s.ok);
  PVec x = basisv(ctx, "e_2") + basisv(ctx, "f_3") + basisv(ctx, "h_3");
  CHECK(tree_value_diag(ctx, s.K, x, 0) == x);
  PVec xx = ctx.bracket_vec(x, x);
  CHECK(tree_value_diag(ctx, s.K, x, enumerate_trees(2)[0].id) == xx);
  CHECK(tree_value_diag(ctx, s.K, x, enumerate_trees(3)[0].id) ==
        ctx.bracket_vec(s.K.apply(xx), x));
}

TEST_CASE("transferred brackets on zero modes") {
  SUBCASE("minimal retract: the induced binary bracket is the bracket") {
    CyclicDgla g = instance_sl2_lambda3();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    // Everything is a zero mode here (the differential vanishes), so the
    // two-slot operation reduces to the bracket itself...
    PVec a = basisv(ctx, "e_1"), b = basisv(ctx, "f_2");
    PVec l2 = induced_l(ctx, s, 2, {s.proj.apply(a), s.proj.apply(b)});
    CHECK(s.incl.apply(l2) == ctx.bracket_vec(a, b));
    CHECK(s.incl.apply(l2) == basisv(ctx, "h_12"));
    // ...including the shuffle sign of the odd factors.
    PVec l2s = induced_l(ctx, s, 2,
                         {s.proj.apply(basisv(ctx, "e_2")),
                          s.proj.apply(basisv(ctx, "f_1"))});
    CHECK(s.incl.apply(l2s) == -basisv(ctx, "h_12"));
    // ...and the three-slot operation vanishes with the propagator.
    PVec l3 = induced_l(ctx, s, 3,
                        {s.proj.apply(a), s.proj.apply(b),
                         s.proj.apply(basisv(ctx, "h_3"))});
    CHECK(l3.is_zero());
  }

  SUBCASE("frozen third bracket on the obstructed instance") {
    CyclicDgla g = make_sl2_dtheta();
    REQUIRE(validate(g).ok);
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    REQUIRE(s.wdims == std::array<int, 4>{3, 6, 6, 3});
    // The propagator inverts the new differential on its line.
    CHECK(s.K.apply(basisv(ctx, "h_23")) == basisv(ctx, "h_1"));

    PVec ea = basisv(ctx, "e_2"), fb = basisv(ctx, "f_3"), hc = basisv(ctx, "h_2");
    // All three inputs are harmonic.
    CHECK(s.P.apply(ea) == ea);
    CHECK(s.P.apply(fb) == fb);
    CHECK(s.P.apply(hc) == hc);
    PVec pa = s.proj.apply(ea), pb = s.proj.apply(fb), pc = s.proj.apply(hc);

    // On degree-1 zero modes the binary operation vanishes identically:
    // brackets of distinct one-form factors are exact, equal factors square
    // to zero.
    CHECK(induced_l(ctx, s, 2, {pa, pb}).is_zero());
    CHECK(induced_l(ctx, s, 2, {pa, pc}).is_zero());
    CHECK(induced_l(ctx, s, 2, {pb, pc}).is_zero());

    // Frozen by-hand value.  Only orderings that feed the pair (f_3, h_2)
    // into the inner bracket survive the propagator:
    //   [f_3, h_2] = -2 f_23, K(-2 f_23) = -2 f_1, [-2 f_1, e_2] = 2 h_12,
    // summing to 4 h_12 over the orderings; the weight (-1)^3 * (3!/|Aut|) /
    // 3! = -1/2 gives -2 h_12.
    PVec l3 = induced_l(ctx, s, 3, {pa, pb, pc});
    CHECK(s.incl.apply(l3) == basisv(ctx, "h_12").scaled(Scalar(-2)));

    // Slot order is immaterial.
    CHECK(l3 == induced_l(ctx, s, 3, {pb, pa, pc}));
    CHECK(l3 == induced_l(ctx, s, 3, {pc, pb, pa}));
    CHECK(l3 == induced_l(ctx, s, 3, {pc, pa, pb}));

    // Zero input short-circuits to zero.
    PVec zw(s.wsp.get(), &pool);
    CHECK(induced_l(ctx, s, 2, {pa, zw}).is_zero());

    // Arity and parity preconditions.
    CHECK_THROWS_AS(induced_l(ctx, s, 1, {pa}), std::invalid_argument);
    CHECK_THROWS_AS(induced_l(ctx, s, 3, {pa, pb}), std::invalid_argument);
    PVec even = s.proj.apply(basisv(ctx, "h_12"));  // degree 2, plain coefficient
    CHECK_THROWS_AS(induced_l(ctx, s, 2, {pa, even}), std::invalid_argument);
  }

  SUBCASE("abelian zero modes have no higher operations") {
    CyclicDgla g = instance_sl2_lambda3_twisted();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    PVec a = generic_w1(s, ctx, &pool, "a");
    CHECK(induced_l(ctx, s, 2, {a, a}).is_zero());
    CHECK(induced_l(ctx, s, 3, {a, a, a}).is_zero());
  }

  SUBCASE("direct summand with an acyclic complement") {
    CyclicDgla g = instance_sl2_plus_acyclic();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    PVec a = s.proj.apply(basisv(ctx, "e_1")), b = s.proj.apply(basisv(ctx, "f_2"));
    PVec l2 = induced_l(ctx, s, 2, {a, b});
    CHECK(s.incl.apply(l2) == basisv(ctx, "h_12"));
    // The propagator lives on the acyclic summand, which the bracket never
    // reaches, so the three-slot operation still vanishes.
    CHECK(induced_l(ctx, s, 3, {a, b, s.proj.apply(basisv(ctx, "h_3"))}).is_zero());
  }
}

TEST_CASE("sum over trees solves the deformation equation order by order") {
  SUBCASE("obstructed instance at the zero base point") {
    CyclicDgla g = make_sl2_dtheta();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    int t = pool.add("t", false, VarKind::JetEven, 6);
    Poly tp = Poly::var(&pool, t);
    PVec aw = generic_w1(s, ctx, &pool, "a");
    PVec ia = s.incl.apply(aw);
    TreeExp te = tree_exp(ctx, s, aw.mul(tp), 6);

    // Independent route: the quadratic recursion
    //   a^(n) = -(1/2) K sum_{k=1}^{n-1} [a^(k), a^(n-k)].
    std::vector<PVec> an(7, ctx.zero_vec());
    an[1] = ia;
    for (int n = 2; n <= 6; ++n) {
      PVec b = ctx.zero_vec();
      for (int k = 1; k < n; ++k) b += ctx.bracket_vec(an[size_t(k)], an[size_t(n - k)]);
      an[size_t(n)] = s.K.apply(b).scaled(Scalar(Rat(-1, 2)));
    }
    CHECK(tcoeff(te.delta, t, 0).is_zero());
    for (int n = 1; n <= 6; ++n) CHECK(tcoeff(te.delta, t, n) == an[size_t(n)]);

    // The series stays in the kernel of the propagator.
    CHECK(s.K.apply(te.delta).is_zero());

    // Second order is genuinely nonzero here, third order vanishes (the
    // propagator kills the harmonic two-forms produced at that order).
    REQUIRE_FALSE(an[2].is_zero());
    CHECK(tcoeff(te.delta, t, 2) ==
          s.K.apply(ctx.bracket_vec(ia, ia)).scaled(Scalar(Rat(-1, 2))));
    CHECK(tcoeff(te.delta, t, 3).is_zero());

    // Equation defect: zero through second order; at third order it is purely
    // the harmonic obstruction and equals the cubic operation with its Taylor
    // weight 1/3!.
    PVec defect = ctx.mc_defect(te.phi);
    CHECK(tcoeff(defect, t, 0).is_zero());
    CHECK(tcoeff(defect, t, 1).is_zero());
    CHECK(tcoeff(defect, t, 2).is_zero());
    PVec d3 = tcoeff(defect, t, 3);
    REQUIRE_FALSE(d3.is_zero());
    PVec l3 = induced_l(ctx, s, 3, {aw, aw, aw});
    CHECK(d3 == s.incl.apply(l3).scaled(Scalar(Rat(1, 6))));
    CHECK(s.P.apply(d3) == d3);  // the first defect is harmonic

    // Zero input returns the base point.
    PVec zw(s.wsp.get(), &pool);
    CHECK(tree_exp(ctx, s, zw, 4).phi == s.A);
    CHECK(tree_exp(ctx, s, zw, 4).delta.is_zero());
  }

  SUBCASE("abelian zero modes: the series terminates at first order") {
    CyclicDgla g = instance_sl2_lambda3_twisted();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    int t = pool.add("t", false, VarKind::JetEven, 6);
    PVec aw = generic_w1(s, ctx, &pool, "a");
    PVec awt = aw.mul(Poly::var(&pool, t));
    TreeExp te = tree_exp(ctx, s, awt, 6);
    CHECK(te.delta == s.incl.apply(awt));
    CHECK(ctx.mc_defect(te.phi).is_zero());
  }

  SUBCASE("flat twisted base point of the obstructed instance") {
    CyclicDgla g = make_sl2_dtheta();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    PVec base = ctx.basis_vec(g.index_of("e_2"));
    REQUIRE(ctx.mc_defect(base).is_zero());
    SdrResult s = hodge(ctx, base, base);
    REQUIRE(s.ok);
    REQUIRE(s.wdims == std::array<int, 4>{1, 3, 3, 1});
    int t = pool.add("t", false, VarKind::JetEven, 4);
    PVec aw = generic_w1(s, ctx, &pool, "a");
    PVec ia = s.incl.apply(aw);
    TreeExp te = tree_exp(ctx, s, aw.mul(Poly::var(&pool, t)), 4);
    std::vector<PVec> an(5, ctx.zero_vec());
    an[1] = ia;
    for (int n = 2; n <= 4; ++n) {
      PVec b = ctx.zero_vec();
      for (int k = 1; k < n; ++k) b += ctx.bracket_vec(an[size_t(k)], an[size_t(n - k)]);
      an[size_t(n)] = s.K.apply(b).scaled(Scalar(Rat(-1, 2)));
    }
    for (int n = 1; n <= 4; ++n) CHECK(tcoeff(te.delta, t, n) == an[size_t(n)]);
    REQUIRE_FALSE(an[2].is_zero());
    CHECK(s.K.apply(te.delta).is_zero());
  }
}

TEST_CASE("quadratic correction inverts the tree series") {
  // On every bundled instance and the obstructed one: composing the series
  // with its correction returns the zero-mode input exactly.
  std::vector<CyclicDgla> gs;
  for (const auto& [name, fn] : bundled_instances()) gs.push_back(fn());
  gs.push_back(make_sl2_dtheta());
  for (auto& g : gs) {
    CAPTURE(g.name);
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    int t = pool.add("t", false, VarKind::JetEven, 4);
    PVec aw = generic_w1(s, ctx, &pool, "a");
    PVec awt = aw.mul(Poly::var(&pool, t));
    TreeExp te = tree_exp(ctx, s, awt, 4);
    PVec m = te.delta;
    CHECK(kuranishi(ctx, s, m) == s.incl.apply(awt));
    // Rebuilding the series from the corrected element closes the loop.
    CHECK(tree_exp_tilde(ctx, s.K, kuranishi(ctx, s, m), 4) == m);
  }

  SUBCASE("bracket-free instances: the correction is the identity") {
    for (const char* which : {"u1_lambda3", "pair_h12"}) {
      CyclicDgla g;
      for (const auto& [name, fn] : bundled_instances())
        if (name == which) g = fn();
      VarPool pool;
      AlgebraCtx ctx(&g, &pool);
      SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
      REQUIRE(s.ok);
      PVec v(ctx.sp(), &pool);
      for (int j = 0; j < ctx.sp()->dim(); ++j)
        v.c[size_t(j)] = Poly(ctx.pool, Scalar(j + 1));
      CHECK(kuranishi(ctx, s, v) == v);
    }
  }

  SUBCASE("the corrected element of any flat family is closed") {
    // Take a flat family with propagator components: the gauge flow of an
    // exact direction.  Its correction must be annihilated by the
    // differential even though the family leaves the harmonic gauge.
    CyclicDgla g = instance_sl2_lambda3_twisted();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    int t = pool.add("t", false, VarKind::JetEven, 4);
    PVec beta = basisv(ctx, "e") + basisv(ctx, "f");
    std::string err;
    PVec psi = gauge_flow_exp(ctx, s, s.dA.apply(beta), t, 4, &err);
    REQUIRE(err.empty());
    PVec m = psi - s.A;
    REQUIRE(ctx.mc_defect(psi).is_zero());
    REQUIRE_FALSE(s.K.apply(m).is_zero());  // genuinely outside the kernel
    CHECK(s.dA.apply(kuranishi(ctx, s, m)).is_zero());
  }
}

TEST_CASE("gauge flow of closed directions") {
  CyclicDgla g = instance_sl2_lambda3_twisted();
  VarPool pool;
  AlgebraCtx ctx(&g, &pool);
  SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
  REQUIRE(s.ok);
  int t = pool.add("t", false, VarKind::JetEven, 5);
  Poly tp = Poly::var(&pool, t);

  // Independent route: integrate the flow equation
  //   w' = exp(-t ad_beta)(m'(t)) + d_A beta + [w - A, beta],  w(0) = A,
  // order by order in t, where m is the harmonic-part series and
  // beta the propagator image of the direction.
  auto ode_flow = [](const AlgebraCtx& cx, const SdrResult& sd, const PVec& alpha,
                     VarPool* pl, int tv, int order) {
    Poly tq = Poly::var(pl, tv);
    PVec beta = sd.K.apply(alpha);
    PVec mh = tree_exp_tilde(cx, sd.K,
                             sd.incl.apply(sd.proj.apply(alpha)).mul(tq), order);
    PVec mdot = mh;
    for (auto& c : mdot.c) c = c.deriv(tv);
    // exp(-t ad_beta)(mdot)
    PVec em = mdot, acc = mdot;
    Poly tpow(pl, Scalar(1));
    for (int m = 1; m <= order; ++m) {
      acc = cx.bracket_vec(beta, acc);
      tpow = tpow * tq;
      em += acc.mul(tpow).scaled(Scalar(Rat((m % 2) ? -1 : 1, fact(m))));
    }
    PVec dbeta = sd.dA.apply(beta);
    PVec w = sd.A;
    Poly tk(pl, Scalar(1));
    for (int k = 1; k <= order; ++k) {
      PVec rhs = em + dbeta + cx.bracket_vec(w - sd.A, beta);
      tk = tk * tq;
      w += tcoeff(rhs, tv, k - 1).scaled(Scalar(Rat(1, k))).mul(tk);
    }
    return w;
  };

  SUBCASE("pure gauge direction: frozen low orders and the flow equation") {
    PVec beta = basisv(ctx, "e") + basisv(ctx, "f");
    PVec dbeta = s.dA.apply(beta);
    REQUIRE_FALSE(dbeta.is_zero());
    REQUIRE_FALSE(ctx.bracket_vec(beta, dbeta).is_zero());
    std::string err;
    PVec psi = gauge_flow_exp(ctx, s, dbeta, t, 5, &err);
    REQUIRE(err.empty());
    CHECK(tcoeff(psi, t, 0) == s.A);
    CHECK(tcoeff(psi, t, 1) == dbeta);
    // Frozen second and third orders of a pure gauge direction:
    // -(1/2)[beta, d beta] and +(1/6)[beta, [beta, d beta]].
    CHECK(tcoeff(psi, t, 2) ==
          ctx.bracket_vec(beta, dbeta).scaled(Scalar(Rat(-1, 2))));
    PVec third =
        ctx.bracket_vec(beta, ctx.bracket_vec(beta, dbeta)).scaled(Scalar(Rat(1, 6)));
    REQUIRE_FALSE(third.is_zero());
    CHECK(tcoeff(psi, t, 3) == third);
    // The flow stays flat and matches the integrated equation.
    CHECK(ctx.mc_defect(psi).is_zero());
    CHECK(psi == ode_flow(ctx, s, dbeta, &pool, t, 5));
  }

  SUBCASE("harmonic direction: the flow is the plain series") {
    PVec ah = basisv(ctx, "h_2");
    std::string err;
    PVec psi = gauge_flow_exp(ctx, s, ah, t, 5, &err);
    REQUIRE(err.empty());
    TreeExp te = tree_exp(ctx, s, s.proj.apply(ah).mul(tp), 5);
    CHECK(psi == te.phi);
    CHECK(psi == ode_flow(ctx, s, ah, &pool, t, 5));
  }

  SUBCASE("mixed direction: exact plus harmonic") {
    PVec beta = basisv(ctx, "e") + basisv(ctx, "f");
    PVec mix = s.dA.apply(beta) + basisv(ctx, "h_2");
    std::string err;
    PVec psi = gauge_flow_exp(ctx, s, mix, t, 5, &err);
    REQUIRE(err.empty());
    CHECK(tcoeff(psi, t, 1) == mix);
    CHECK(ctx.mc_defect(psi).is_zero());
    CHECK(psi == ode_flow(ctx, s, mix, &pool, t, 5));
    // The two parts genuinely interact: the flow differs from the sum of the
    // pure flows beyond first order.
    PVec pure = gauge_flow_exp(ctx, s, s.dA.apply(beta), t, 5, &err);
    PVec harm = gauge_flow_exp(ctx, s, basisv(ctx, "h_2"), t, 5, &err);
    CHECK_FALSE(psi == pure + harm - s.A);
  }

  SUBCASE("non-closed directions are rejected") {
    // On this instance d(e_2) = 2 e_12 (the twist brackets with the h-line).
    std::string err;
    PVec out = gauge_flow_exp(ctx, s, basisv(ctx, "e_2"), t, 3, &err);
    CHECK_FALSE(err.empty());
    CHECK(out.is_zero());
  }

  SUBCASE("nontrivial flow at a twisted base point") {
    CyclicDgla g2 = make_sl2_dtheta();
    VarPool pool2;
    AlgebraCtx ctx2(&g2, &pool2);
    PVec base = ctx2.basis_vec(g2.index_of("e_2"));
    SdrResult s2 = hodge(ctx2, base, base);
    REQUIRE(s2.ok);
    int t2 = pool2.add("t", false, VarKind::JetEven, 5);
    PVec alpha = s2.dA.apply(basisv(ctx2, "h"));
    REQUIRE_FALSE(alpha.is_zero());
    std::string err;
    PVec psi = gauge_flow_exp(ctx2, s2, alpha, t2, 5, &err);
    REQUIRE(err.empty());
    PVec beta = s2.K.apply(alpha);
    REQUIRE_FALSE(ctx2.bracket_vec(beta, s2.dA.apply(beta)).is_zero());
    CHECK(tcoeff(psi, t2, 1) == alpha);
    CHECK(ctx2.mc_defect(psi).is_zero());
    CHECK(psi == ode_flow(ctx2, s2, alpha, &pool2, t2, 5));
  }
}

TEST_CASE("transport of tangent directions along the series") {
  CyclicDgla g = make_sl2_dtheta();
  VarPool pool;
  AlgebraCtx ctx(&g, &pool);
  SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
  REQUIRE(s.ok);
  int t = pool.add("t", false, VarKind::JetEven, 2);
  Poly tp = Poly::var(&pool, t);
  PVec aw = s.proj.apply(basisv(ctx, "e_2") + basisv(ctx, "f_3"));
  PVec awt = aw.mul(tp);
  PVec ia = s.incl.apply(aw);
  PVec chi = basisv(ctx, "h_3");

  std::string err;
  PVec ta = dphi_transport(ctx, s, awt, chi, 4, &pool, &err);
  REQUIRE(err.empty());

  SUBCASE("three routes agree") {
    // Route B: the linearized recursion
    //   chi^(n) = -K sum_{k=1}^{n} [a^(k), chi^(n-k)].
    std::vector<PVec> an(3, ctx.zero_vec()), ch(3, ctx.zero_vec());
    an[1] = ia;
    an[2] = s.K.apply(ctx.bracket_vec(ia, ia)).scaled(Scalar(Rat(-1, 2)));
    ch[0] = chi;
    for (int n = 1; n <= 2; ++n) {
      PVec b = ctx.zero_vec();
      for (int k = 1; k <= n; ++k)
        b += ctx.bracket_vec(an[size_t(k)], ch[size_t(n - k)]);
      ch[size_t(n)] = -s.K.apply(b);
    }
    for (int n = 0; n <= 2; ++n) CHECK(tcoeff(ta, t, n) == ch[size_t(n)]);
    // Frozen first order.
    CHECK(ch[1] == basisv(ctx, "e_1").scaled(Scalar(2)));
    REQUIRE_FALSE(ch[1].is_zero());

    // Route C: the perturbed inclusion of the transferred data.
    TreeExp te = tree_exp(ctx, s, awt, 4);
    HplResult h = hpl(ctx, s, ctx.ad(te.delta));
    REQUIRE(h.ok);
    CHECK(ta == h.incl.apply(s.proj.apply(chi)));
  }

  SUBCASE("kernel membership and the differentiated defect") {
    TreeExp te = tree_exp(ctx, s, awt, 4);
    CHECK(s.K.apply(ta).is_zero());

    // Exact identity at every order: applying the twisted differential along
    // the family equals the derivative of the equation defect in the
    // direction of the tangent vector.
    int ev = pool.add("_eps", false, VarKind::Aux, 1);
    PVec xeps = s.incl.apply(awt) + chi.mul(Poly::var(&pool, ev));
    PVec defect_eps = ctx.mc_defect(s.A + tree_exp_tilde(ctx, s.K, xeps, 4));
    PVec lhs = ctx.d_twisted(te.phi).apply(ta);
    CHECK(lhs == deriv_at_zero(defect_eps, ev));

    // The kill holds through first order and is obstructed at second order
    // (the cubic operation pairs the family with the direction).
    CHECK(tcoeff(lhs, t, 0).is_zero());
    CHECK(tcoeff(lhs, t, 1).is_zero());
    REQUIRE_FALSE(tcoeff(lhs, t, 2).is_zero());
  }

  SUBCASE("degenerate and error cases") {
    // Zero family: transport is the identity.
    PVec zw(s.wsp.get(), &pool);
    std::string e2;
    CHECK(dphi_transport(ctx, s, zw, chi, 4, &pool, &e2) == chi);
    CHECK(e2.empty());

    // A degree-2 harmonic direction rides along unchanged here (its brackets
    // with the family die in top degree where the propagator vanishes).
    PVec chi2 = basisv(ctx, "h_12");
    PVec ta2 = dphi_transport(ctx, s, awt, chi2, 4, &pool, &e2);
    CHECK(e2.empty());
    CHECK(ta2 == chi2);

    // Non-closed or non-kernel directions are rejected.
    dphi_transport(ctx, s, awt, basisv(ctx, "e_1"), 4, &pool, &e2);
    CHECK_FALSE(e2.empty());
    e2.clear();
    dphi_transport(ctx, s, awt, basisv(ctx, "e_23"), 4, &pool, &e2);
    CHECK_FALSE(e2.empty());
  }

  SUBCASE("abelian zero modes transport trivially") {
    CyclicDgla g2 = instance_sl2_lambda3_twisted();
    VarPool pool2;
    AlgebraCtx ctx2(&g2, &pool2);
    SdrResult s2 = hodge(ctx2, ctx2.zero_vec(), ctx2.zero_vec());
    REQUIRE(s2.ok);
    int t2 = pool2.add("t", false, VarKind::JetEven, 3);
    PVec aw2 = generic_w1(s2, ctx2, &pool2, "a").mul(Poly::var(&pool2, t2));
    PVec chi2 = ctx2.basis_vec(g2.index_of("h_3"));
    std::string e3;
    CHECK(dphi_transport(ctx2, s2, aw2, chi2, 4, &pool2, &e3) == chi2);
    CHECK(e3.empty());
  }
}

TEST_CASE("perturbed differential matches the transferred operations") {
  // Dual route: the zero-mode differential produced by perturbing the retract
  // along the family must agree, order by order, with the Taylor-weighted
  // transferred operations evaluated on the family.
  SUBCASE("minimal retract, first order") {
    CyclicDgla g = instance_sl2_lambda3();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    int t = pool.add("t", false, VarKind::JetEven, 1);
    PVec aw = generic_w1(s, ctx, &pool, "a");
    PVec xp = generic_w_all(s, ctx, &pool, "x");
    TreeExp te = tree_exp(ctx, s, aw.mul(Poly::var(&pool, t)), 3);
    HplResult h = hpl(ctx, s, ctx.ad(te.delta));
    REQUIRE(h.ok);
    PVec r = h.dW.apply(xp);
    CHECK(tcoeff(r, t, 0).is_zero());
    PVec l2 = induced_l(ctx, s, 2, {aw, xp});
    REQUIRE_FALSE(l2.is_zero());
    CHECK(tcoeff(r, t, 1) == l2);
  }

  SUBCASE("obstructed instance, through second order") {
    CyclicDgla g = make_sl2_dtheta();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    int t = pool.add("t", false, VarKind::JetEven, 2);
    PVec aw = generic_w1(s, ctx, &pool, "a");
    PVec xp = generic_w_all(s, ctx, &pool, "x");
    TreeExp te = tree_exp(ctx, s, aw.mul(Poly::var(&pool, t)), 4);
    HplResult h = hpl(ctx, s, ctx.ad(te.delta));
    REQUIRE(h.ok);
    PVec r = h.dW.apply(xp);
    CHECK(tcoeff(r, t, 0).is_zero());
    PVec l2 = induced_l(ctx, s, 2, {aw, xp});
    PVec l3 = induced_l(ctx, s, 3, {aw, aw, xp});
    REQUIRE_FALSE(l2.is_zero());
    REQUIRE_FALSE(l3.is_zero());
    CHECK(tcoeff(r, t, 1) == l2);
    CHECK(tcoeff(r, t, 2) == l3.scaled(Scalar(Rat(1, 2))));
  }
}

TEST_CASE("smoothness sweeps") {
  struct Verdict {
    const char* name;
    bool smooth;
    int arity;
  };
  // Frozen verdicts: an instance is flagged at the first arity whose
  // transferred operation is nonzero somewhere on the zero modes.
  const Verdict table[] = {
      {"u1_lambda3", true, 0},          // abelian
      {"acyclic4", true, 0},            // no zero modes at all
      {"sl2_lambda3", false, 2},        // the bracket survives whole
      {"sl2_lambda3_twisted", true, 0}, // zero modes form an abelian line
      {"sl2_plus_acyclic", false, 2},   // the summand bracket survives
      {"pair_h12", true, 0},            // no bracket
  };
  for (const auto& v : table) {
    CAPTURE(v.name);
    CyclicDgla g;
    for (const auto& [name, fn] : bundled_instances())
      if (name == v.name) g = fn();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    SmoothnessReport rep = smoothness_test(ctx, s, 5, &pool);
    CHECK(rep.smooth == v.smooth);
    CHECK(rep.failed_arity == v.arity);
    if (!v.smooth) CHECK(has_sub(rep.witness, "l'_2"));
  }

  // The obstructed instance fails at arity 2 as well: the binary operation
  // vanishes on degree-1 zero modes but not across mixed degrees.
  CyclicDgla g = make_sl2_dtheta();
  VarPool pool;
  AlgebraCtx ctx(&g, &pool);
  SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
  REQUIRE(s.ok);
  SmoothnessReport rep = smoothness_test(ctx, s, 4, &pool);
  CHECK_FALSE(rep.smooth);
  CHECK(rep.failed_arity == 2);
}

TEST_CASE("extended smoothness with one family-direction mark") {
  SUBCASE("abelian zero modes stay smooth under marked sums") {
    CyclicDgla g = instance_sl2_lambda3_twisted();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    // A direction with all three kernels nonzero...
    PVec dir = basisv(ctx, "h_2");
    DeformationKernels k = deformation_kernels(ctx, s, DirTag::GaugeAprime, dir);
    REQUIRE(k.ok);
    REQUIRE_FALSE(k.Lambda.is_zero());
    REQUIRE_FALSE(k.I.is_zero());
    REQUIRE_FALSE(k.Pk.is_zero());
    SmoothnessReport rep = extended_smoothness_test(ctx, s, k, 4, &pool);
    CHECK(rep.smooth);
    CHECK(rep.failed_arity == 0);
    // ...and one whose edge kernel vanishes while the end marks do not.
    PVec dir2 = basisv(ctx, "e_1");
    DeformationKernels k2 = deformation_kernels(ctx, s, DirTag::GaugeAprime, dir2);
    REQUIRE(k2.ok);
    REQUIRE(k2.Lambda.is_zero());
    REQUIRE_FALSE(k2.I.is_zero());
    SmoothnessReport rep2 = extended_smoothness_test(ctx, s, k2, 4, &pool);
    CHECK(rep2.smooth);
  }

  SUBCASE("the obstructed instance fails already at two leaves") {
    CyclicDgla g = make_sl2_dtheta();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    PVec dir = basisv(ctx, "e_2");
    DeformationKernels k = deformation_kernels(ctx, s, DirTag::GaugeAprime, dir);
    REQUIRE(k.ok);
    SmoothnessReport rep = extended_smoothness_test(ctx, s, k, 4, &pool);
    CHECK_FALSE(rep.smooth);
    CHECK(rep.failed_arity == 2);
    CHECK(has_sub(rep.witness, "marked tree sum"));
  }
}

TEST_CASE("convolution of the series across a shifted base") {
  SUBCASE("bracket-free instance") {
    CyclicDgla g = instance_u1_lambda3();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    int t = pool.add("t", false, VarKind::JetEven, 3);
    int u = pool.add("u", false, VarKind::JetEven, 3);
    PVec bw = generic_w1(s, ctx, &pool, "b").mul(Poly::var(&pool, t));
    PVec cw = generic_w1(s, ctx, &pool, "c").mul(Poly::var(&pool, u));
    std::string why;
    CHECK(convolution_check(ctx, s, bw, cw, 4, &pool, &why));
    CHECK(why.empty());
  }

  SUBCASE("abelian zero modes, third-order caps") {
    CyclicDgla g = instance_sl2_lambda3_twisted();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    int t = pool.add("t", false, VarKind::JetEven, 3);
    int u = pool.add("u", false, VarKind::JetEven, 3);
    PVec bw = generic_w1(s, ctx, &pool, "b").mul(Poly::var(&pool, t));
    PVec cw = generic_w1(s, ctx, &pool, "c").mul(Poly::var(&pool, u));
    std::string why;
    CHECK(convolution_check(ctx, s, bw, cw, 4, &pool, &why));
    CHECK(why.empty());
  }

  SUBCASE("obstructed instance inside its flat window") {
    CyclicDgla g = make_sl2_dtheta();
    VarPool pool;
    AlgebraCtx ctx(&g, &pool);
    SdrResult s = hodge(ctx, ctx.zero_vec(), ctx.zero_vec());
    REQUIRE(s.ok);
    // Caps of two on both family parameters keep the shifted base flat (its
    // first defect sits at total order three), which the check requires.
    int t = pool.add("t", false, VarKind::JetEven, 2);
    int u = pool.add("u", false, VarKind::JetEven, 2);
    PVec bw(s.wsp.get(), &pool), cw(s.wsp.get(), &pool);
    int k1 = 0;
    for (int j = 0; j < s.wsp->dim(); ++j) {
      if (s.wsp->deg[size_t(j)] != 1) continue;
      int vb = (k1 % 3) - 1;
      int vc = ((k1 * 2 + 1) % 5) - 2;
      if (vb) bw.c[size_t(j)] = Poly::var(&pool, t).scaled(Scalar(vb));
      if (vc) cw.c[size_t(j)] = Poly::var(&pool, u).scaled(Scalar(vc));
      ++k1;
    }
    REQUIRE_FALSE(bw.is_zero());
    REQUIRE_FALSE(cw.is_zero());
    std::string why;
    CHECK(convolution_check(ctx, s, bw, cw, 4, &pool, &why));
    CHECK(why.empty());

    // An empty first summand degenerates to the plain series.
    PVec zw(s.wsp.get(), &pool);
    CHECK(convolution_check(ctx, s, zw, cw, 4, &pool, &why));
  }
}
