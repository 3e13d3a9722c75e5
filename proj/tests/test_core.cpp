#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "core/graded.hpp"
#include "core/hbar.hpp"
#include "core/poly.hpp"

using namespace csbv;

TEST_CASE("scalar arithmetic and parsing") {
  Scalar a(Rat(1, 2), Rat(-3, 4));
  Scalar b(Rat(2), Rat(5));
  CHECK(a * b == Scalar(Rat(1, 2) * 2 - Rat(-3, 4) * 5, Rat(1, 2) * 5 + Rat(-3, 4) * 2));
  CHECK((a / b) * b == a);
  CHECK(a * a.inv() == Scalar(1));
  CHECK(Scalar::i() * Scalar::i() == Scalar(-1));

  CHECK(*parse_scalar("3") == Scalar(3));
  CHECK(*parse_scalar("-1/2") == Scalar(Rat(-1, 2)));
  CHECK(*parse_scalar("i") == Scalar::i());
  CHECK(*parse_scalar("-i") == -Scalar::i());
  CHECK(*parse_scalar("2 i") == Scalar(Rat(0), Rat(2)));
  CHECK(*parse_scalar("1/2 + 3/4 i") == Scalar(Rat(1, 2), Rat(3, 4)));
  CHECK(*parse_scalar("1/2 - 3/4 i") == Scalar(Rat(1, 2), Rat(-3, 4)));
  CHECK(!parse_scalar("1/0"));
  CHECK(!parse_scalar("x"));
  // Round trip through the canonical rendering.
  for (auto s : {Scalar(0), Scalar(7), Scalar(Rat(-2, 3)), Scalar(Rat(0), Rat(1)),
                 Scalar(Rat(1, 2), Rat(-3, 4)), Scalar(Rat(-1), Rat(1))}) {
    CHECK(*parse_scalar(scalar_str(s)) == s);
  }
}

TEST_CASE("grassmann signs") {
  VarPool pool;
  int t1 = pool.add("q1", true, VarKind::JetOdd);
  int t2 = pool.add("q2", true, VarKind::JetOdd);
  int t3 = pool.add("q3", true, VarKind::JetOdd);
  Poly p1 = Poly::var(&pool, t1), p2 = Poly::var(&pool, t2), p3 = Poly::var(&pool, t3);

  CHECK(p1 * p2 == -(p2 * p1));
  CHECK((p1 * p1).is_zero());
  CHECK(p1 * (p2 * p3) == (p1 * p2) * p3);
  CHECK(p3 * p2 * p1 == -(p1 * p2 * p3));

  // Left derivative: d/dq2 (q1 q2) = -q1.
  CHECK((p1 * p2).deriv(t2) == -p1);
  CHECK((p1 * p2).deriv(t1) == p2);
}

TEST_CASE("even truncation caps") {
  VarPool pool;
  int t = pool.add("t", false, VarKind::JetEven, 3);
  Poly pt = Poly::var(&pool, t);
  Poly p = Poly::unit(&pool) + pt;
  Poly p4 = p * p * p * p;  // (1+t)^4 truncated at t^3
  Mono m3;
  m3.ev = {{t, 3}};
  CHECK(p4.coeff(m3) == Scalar(4));
  Mono m4;
  m4.ev = {{t, 4}};
  CHECK(p4.coeff(m4) == Scalar(0));

  // exp(t)*exp(-t) = 1 under truncation.
  CHECK(pt.exp_nilpotent() * (-pt).exp_nilpotent() == Poly::unit(&pool));
  // inv(1+t)*(1+t) = 1.
  CHECK(p.inv() * p == Poly::unit(&pool));
}

TEST_CASE("kind caps") {
  VarPool pool;
  pool.set_kind_cap(VarKind::ZeroMode, 2);
  int a = pool.add("a", false, VarKind::ZeroMode);
  int b = pool.add("b", false, VarKind::ZeroMode);
  Poly pa = Poly::var(&pool, a), pb = Poly::var(&pool, b);
  Poly prod = (pa + pb) * (pa + pb) * (pa + pb);
  CHECK(prod.is_zero());
  CHECK(!((pa + pb) * (pa + pb)).is_zero());
}

TEST_CASE("substitution and shift") {
  VarPool pool;
  int x = pool.add("x", false, VarKind::ZeroMode);
  int y = pool.add("y", true, VarKind::ZeroMode);
  int z = pool.add("z", true, VarKind::ZeroMode);
  Poly px = Poly::var(&pool, x), py = Poly::var(&pool, y), pz = Poly::var(&pool, z);
  Poly f = px * px * py + pz;
  // x -> x + 1
  Poly g = f.subst(x, px + Poly::unit(&pool));
  Poly expect = (px + Poly::unit(&pool)) * (px + Poly::unit(&pool)) * py + pz;
  CHECK(g == expect);
  // odd substitution y -> y + z
  Poly h = f.subst(y, py + pz);
  CHECK(h == px * px * (py + pz) + pz);
  CHECK(f.eval_zero(y) == pz);
}

TEST_CASE("de rham and integration") {
  VarPool pool;
  int t = pool.add("t", false, VarKind::JetEven, 5);
  int dt = pool.add("dt", true, VarKind::JetOdd);
  Poly pt = Poly::var(&pool, t), pdt = Poly::var(&pool, dt);
  Poly f = pt * pt * pt;  // t^3
  Poly df = pdt * f.deriv(t);
  // integral over [0,1] of 3 t^2 dt = 1
  CHECK(df.integrate01(t, dt) == Poly::unit(&pool));
  // d^2 = 0
  Poly ddf = pdt * df.deriv(t);
  CHECK(ddf.is_zero());
}

// Associativity fuzz: left fold and right fold of random expression lists
// must agree term-for-term, and renderings must be byte identical.
TEST_CASE("fold determinism fuzz") {
  VarPool pool;
  std::vector<int> vars;
  for (int k = 0; k < 3; ++k) vars.push_back(pool.add("t" + std::to_string(k), false, VarKind::JetEven, 4));
  for (int k = 0; k < 3; ++k) vars.push_back(pool.add("q" + std::to_string(k), true, VarKind::JetOdd));

  std::mt19937 rng(12345);
  auto rnd_poly = [&]() {
    Poly p(&pool);
    int nterms = 1 + int(rng() % 3);
    for (int t = 0; t < nterms; ++t) {
      Mono m;
      for (int v = 0; v < 3; ++v)
        if (rng() % 3 == 0) m.ev.push_back({vars[size_t(v)], 1 + int(rng() % 2)});
      for (int v = 3; v < 6; ++v)
        if (rng() % 3 == 0) m.od.push_back(vars[size_t(v)]);
      long num = long(rng() % 7) - 3;
      long den = 1 + long(rng() % 4);
      p.add_term(m, Scalar(Rat(num, den)));
    }
    return p;
  };

  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Poly> xs;
    int n = 3 + int(rng() % 3);
    for (int k = 0; k < n; ++k) xs.push_back(rnd_poly());
    Poly left = xs[0];
    for (int k = 1; k < n; ++k) left = left * xs[size_t(k)];
    Poly right = xs[size_t(n) - 1];
    for (int k = n - 2; k >= 0; --k) right = xs[size_t(k)] * right;
    REQUIRE(left == right);
    REQUIRE(left.str() == right.str());

    // Additive fold order.
    Poly suml(&pool), sumr(&pool);
    for (int k = 0; k < n; ++k) suml += xs[size_t(k)];
    for (int k = n - 1; k >= 0; --k) sumr += xs[size_t(k)];
    REQUIRE(suml == sumr);
    REQUIRE(suml.str() == sumr.str());
  }
}

TEST_CASE("graded matrix calculus") {
  GradedSpace sp;
  sp.deg = {0, 1, 1, 2, 3};
  sp.name = {"e0", "e1a", "e1b", "e2", "e3"};
  VarPool pool;
  int q1 = pool.add("q1", true, VarKind::JetOdd);
  int q2 = pool.add("q2", true, VarKind::JetOdd);
  int t = pool.add("t", false, VarKind::JetEven, 3);

  std::mt19937 rng(777);
  auto rnd_entry = [&]() {
    Poly p(&pool);
    for (int k = 0; k < 2; ++k) {
      Mono m;
      if (rng() % 2) m.ev.push_back({t, 1 + int(rng() % 2)});
      if (rng() % 2) m.od.push_back(q1);
      if (rng() % 2) m.od.push_back(q2);
      p.add_term(m, Scalar(Rat(long(rng() % 5) - 2, 1 + long(rng() % 3))));
    }
    return p;
  };
  auto rnd_mat = [&]() {
    PMat m(&sp, &pool);
    for (int i = 0; i < sp.dim(); ++i)
      for (int j = 0; j < sp.dim(); ++j)
        if (rng() % 2) m.at(i, j) = rnd_entry();
    return m;
  };

  for (int trial = 0; trial < 25; ++trial) {
    PMat A = rnd_mat(), B = rnd_mat(), C = rnd_mat();
    // Associativity of twisted composition.
    CHECK(A.compose(B).compose(C) == A.compose(B.compose(C)));
    // Application compatibility.
    PVec v(&sp, &pool);
    for (int i = 0; i < sp.dim(); ++i) v.c[size_t(i)] = rnd_entry();
    CHECK(A.apply(B.apply(v)) == A.compose(B).apply(v));
  }

  // Supertrace cyclicity: Str(AB) = Str(flip(B) A) with the sign rule; use
  // homogeneous-parity matrices where it reads Str(AB) = (-1)^{|A||B|}Str(BA).
  PMat X(&sp, &pool), Y(&sp, &pool);
  // X odd operator: shifts degree by 1, no form part. Y odd as well.
  X.at(1, 0) = Poly(&pool, Scalar(2));
  X.at(3, 2) = Poly(&pool, Scalar(-1));
  X.at(4, 3) = Poly(&pool, Scalar(5));
  Y.at(0, 1) = Poly(&pool, Scalar(3));
  Y.at(2, 3) = Poly(&pool, Scalar(7));
  Y.at(3, 4) = Poly(&pool, Scalar(-2));
  Poly strXY = X.compose(Y).supertrace();
  Poly strYX = Y.compose(X).supertrace();
  CHECK(strXY == -strYX);  // |X||Y| = 1: Str(XY) = -Str(YX)

  // Inverse.
  PMat M = PMat::identity(&sp, &pool);
  M.at(0, 2) = Poly::var(&pool, q1);
  M.at(1, 3) = Poly::var(&pool, t);
  M.at(2, 2) = Poly(&pool, Scalar(Rat(3, 2)));
  M.at(4, 0) = Poly::var(&pool, q2);
  PMat Minv = M.inverse();
  CHECK(M.compose(Minv) == PMat::identity(&sp, &pool));
  CHECK(Minv.compose(M) == PMat::identity(&sp, &pool));
}

TEST_CASE("laurent window") {
  VarPool pool;
  int a = pool.add("a", false, VarKind::ZeroMode);
  Poly pa = Poly::var(&pool, a);
  LaurentHbar s(-2, 2, &pool);
  s.set(-1, pa);
  s.set(0, Poly::unit(&pool));
  LaurentHbar sq = s * s;
  CHECK(sq.coeff(-2) == pa * pa);
  CHECK(sq.coeff(-1) == pa.scaled(Scalar(2)));
  CHECK(sq.coeff(0) == Poly::unit(&pool));
  CHECK(sq.coeff(3).is_zero());
  CHECK(s.shifted(1).coeff(0) == pa);

  // exp of strictly positive support terminates by window truncation.
  LaurentHbar x(-2, 2, &pool);
  x.set(1, pa);
  LaurentHbar ex = x.exp();
  CHECK(ex.coeff(0) == Poly::unit(&pool));
  CHECK(ex.coeff(1) == pa);
  CHECK(ex.coeff(2) == (pa * pa).scaled(Scalar(Rat(1, 2))));
}
