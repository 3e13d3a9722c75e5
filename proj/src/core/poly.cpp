#include "core/poly.hpp"

#include <sstream>

namespace csbv {

std::optional<Rat> parse_rat(const std::string& tok) {
  if (tok.empty()) return std::nullopt;
  size_t slash = tok.find('/');
  try {
    if (slash == std::string::npos) {
      bool any_digit = false;
      for (size_t k = 0; k < tok.size(); ++k) {
        char c = tok[k];
        if (std::isdigit(static_cast<unsigned char>(c)))
          any_digit = true;
        else if (!(k == 0 && (c == '-' || c == '+')))
          return std::nullopt;
      }
      if (!any_digit) return std::nullopt;
      return Rat(boost::multiprecision::mpz_int(tok));
    }
    std::string num = tok.substr(0, slash), den = tok.substr(slash + 1);
    if (num.empty() || den.empty()) return std::nullopt;
    auto pn = parse_rat(num), pd = parse_rat(den);
    if (!pn || !pd || *pd == 0) return std::nullopt;
    return *pn / *pd;
  } catch (...) {
    return std::nullopt;
  }
}

// Accepts "a", "a + b i", "a - b i", "b i", "i", "-i" with rational a, b.
std::optional<Scalar> parse_scalar(const std::string& text) {
  std::vector<std::string> toks;
  std::istringstream in(text);
  for (std::string t; in >> t;) toks.push_back(t);
  if (toks.empty()) return std::nullopt;

  auto part = [](std::vector<std::string> ts, bool neg) -> std::optional<Scalar> {
    if (ts.empty()) return std::nullopt;
    bool imag = false;
    if (ts.back() == "i") {
      imag = true;
      ts.pop_back();
    } else if (ts.size() == 1 && ts[0].size() > 1 && ts[0].back() == 'i') {
      imag = true;
      ts[0].pop_back();
    }
    Rat v(1);
    if (!ts.empty() && ts[0] == "-" && ts.size() == 1 && imag) {
      v = -1;
    } else if (!ts.empty()) {
      if (ts.size() != 1) return std::nullopt;
      auto p = parse_rat(ts[0]);
      if (!p) return std::nullopt;
      v = *p;
    } else if (!imag) {
      return std::nullopt;
    }
    if (neg) v = -v;
    return imag ? Scalar(Rat(0), v) : Scalar(v);
  };

  // Split on a standalone +/- that is not the leading sign.
  for (size_t k = 1; k < toks.size(); ++k) {
    if (toks[k] == "+" || toks[k] == "-") {
      auto lhs = part({toks.begin(), toks.begin() + long(k)}, false);
      auto rhs = part({toks.begin() + long(k) + 1, toks.end()}, toks[k] == "-");
      if (!lhs || !rhs) return std::nullopt;
      if (lhs->im != 0 || (rhs->im == 0)) return std::nullopt;
      return Scalar(lhs->re, rhs->im);
    }
  }
  bool neg = false;
  if (toks[0] == "-") {
    neg = true;
    toks.erase(toks.begin());
  }
  return part(toks, neg);
}

Poly Poly::var(const VarPool* pool, int id, int exp) {
  Poly p(pool);
  if (exp == 0) return unit(pool);
  const VarInfo& vi = pool->info(id);
  Mono m;
  if (vi.odd) {
    if (exp > 1) return p;
    m.od.push_back(id);
  } else {
    if (vi.cap >= 0 && exp > vi.cap) return p;
    int kc = pool->kind_cap(vi.kind);
    if (kc >= 0 && exp > kc) return p;
    m.ev.push_back({id, exp});
  }
  p.terms_[m] = Scalar(1);
  return p;
}

void Poly::add_term(Mono m, Scalar c) {
  if (c.is_zero()) return;
  auto [it, fresh] = terms_.try_emplace(std::move(m), c);
  if (!fresh) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

Poly Poly::operator-() const {
  Poly r(pool_);
  for (auto& [m, c] : terms_) r.terms_[m] = -c;
  return r;
}

Poly& Poly::operator+=(const Poly& o) {
  if (!pool_) pool_ = o.pool_;
  for (auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Poly& Poly::operator-=(const Poly& o) {
  if (!pool_) pool_ = o.pool_;
  for (auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Poly Poly::scaled(const Scalar& c) const {
  Poly r(pool_);
  if (c.is_zero()) return r;
  for (auto& [m, v] : terms_) r.terms_[m] = v * c;
  return r;
}

bool mono_mul(const VarPool& pool, const Mono& m1, const Mono& m2, Mono& out, int& sign) {
  out.ev.clear();
  out.od.clear();
  sign = 1;

  // Odd part: merge two increasing sequences, counting transpositions.
  // A shared variable squares to zero.
  size_t i = 0, j = 0;
  long inversions = 0;
  while (i < m1.od.size() && j < m2.od.size()) {
    if (m1.od[i] == m2.od[j]) return false;
    if (m1.od[i] < m2.od[j]) {
      out.od.push_back(m1.od[i++]);
    } else {
      out.od.push_back(m2.od[j++]);
      inversions += long(m1.od.size() - i);
    }
  }
  while (i < m1.od.size()) out.od.push_back(m1.od[i++]);
  while (j < m2.od.size()) out.od.push_back(m2.od[j++]);
  if (inversions % 2 != 0) sign = -sign;

  // Even part: merge exponents against per-variable caps.
  i = j = 0;
  while (i < m1.ev.size() || j < m2.ev.size()) {
    int var;
    int exp;
    if (j >= m2.ev.size() || (i < m1.ev.size() && m1.ev[i].first < m2.ev[j].first)) {
      var = m1.ev[i].first;
      exp = m1.ev[i].second;
      ++i;
    } else if (i >= m1.ev.size() || m2.ev[j].first < m1.ev[i].first) {
      var = m2.ev[j].first;
      exp = m2.ev[j].second;
      ++j;
    } else {
      var = m1.ev[i].first;
      exp = m1.ev[i].second + m2.ev[j].second;
      ++i;
      ++j;
    }
    int cap = pool.info(var).cap;
    if (cap >= 0 && exp > cap) return false;
    out.ev.push_back({var, exp});
  }

  // Kind caps over the merged monomial.
  std::array<int, 5> degs{{0, 0, 0, 0, 0}};
  bool any_cap = false;
  for (int k = 0; k < 5; ++k) any_cap = any_cap || pool.kind_cap(VarKind(k)) >= 0;
  if (any_cap) {
    for (auto& [v, e] : out.ev) degs[size_t(pool.info(v).kind)] += e;
    for (int v : out.od) degs[size_t(pool.info(v).kind)] += 1;
    for (int k = 0; k < 5; ++k) {
      int cap = pool.kind_cap(VarKind(k));
      if (cap >= 0 && degs[size_t(k)] > cap) return false;
    }
  }
  return true;
}

Poly operator*(const Poly& a, const Poly& b) {
  const VarPool* pool = a.pool_ ? a.pool_ : b.pool_;
  Poly r(pool);
  if (a.terms_.empty() || b.terms_.empty()) return r;
  Mono m;
  int sign;
  for (auto& [m1, c1] : a.terms_) {
    for (auto& [m2, c2] : b.terms_) {
      if (!mono_mul(*pool, m1, m2, m, sign)) continue;
      Scalar c = c1 * c2;
      if (sign < 0) c = -c;
      r.add_term(m, c);
    }
  }
  return r;
}

Poly Poly::parity_twist(int par) const {
  if (par % 2 == 0) return *this;
  Poly r(pool_);
  for (auto& [m, c] : terms_) r.terms_[m] = (m.parity() ? -c : c);
  return r;
}

Poly Poly::deriv(int var) const {
  Poly r(pool_);
  const bool odd = pool_->info(var).odd;
  for (auto& [m, c] : terms_) {
    if (odd) {
      auto it = std::lower_bound(m.od.begin(), m.od.end(), var);
      if (it == m.od.end() || *it != var) continue;
      Mono mm = m;
      size_t pos = size_t(it - m.od.begin());
      mm.od.erase(mm.od.begin() + long(pos));
      r.add_term(std::move(mm), (pos % 2) ? -c : c);
    } else {
      int e = m.exp_of(var);
      if (e == 0) continue;
      Mono mm = m;
      for (auto& p : mm.ev)
        if (p.first == var) p.second -= 1;
      mm.ev.erase(std::remove_if(mm.ev.begin(), mm.ev.end(),
                                 [](auto& p) { return p.second == 0; }),
                  mm.ev.end());
      r.add_term(std::move(mm), c * Scalar(e));
    }
  }
  return r;
}

Poly Poly::subst(int var, const Poly& repl) const {
  Poly r(pool_);
  const bool odd = pool_->info(var).odd;
  for (auto& [m, c] : terms_) {
    if (odd) {
      auto it = std::lower_bound(m.od.begin(), m.od.end(), var);
      if (it == m.od.end() || *it != var) {
        r.add_term(m, c);
        continue;
      }
      // m = (-1)^pos var * rest
      Mono rest = m;
      size_t pos = size_t(it - m.od.begin());
      rest.od.erase(rest.od.begin() + long(pos));
      Poly restp(pool_);
      restp.add_term(rest, (pos % 2) ? -c : c);
      r += repl * restp;
    } else {
      int e = m.exp_of(var);
      if (e == 0) {
        r.add_term(m, c);
        continue;
      }
      Mono rest = m;
      rest.ev.erase(std::remove_if(rest.ev.begin(), rest.ev.end(),
                                   [&](auto& p) { return p.first == var; }),
                    rest.ev.end());
      Poly acc(pool_, Scalar(1));
      for (int k = 0; k < e; ++k) acc = acc * repl;
      Poly restp(pool_);
      restp.add_term(rest, c);
      r += acc * restp;
    }
  }
  return r;
}

Poly Poly::eval_zero(int var) const {
  Poly r(pool_);
  const bool odd = pool_->info(var).odd;
  for (auto& [m, c] : terms_) {
    bool has = odd ? m.has_odd(var) : (m.exp_of(var) > 0);
    if (!has) r.add_term(m, c);
  }
  return r;
}

Poly Poly::exp_nilpotent() const {
  if (!body().is_zero())
    throw std::domain_error("exp_nilpotent: nonzero body");
  Poly r = Poly::unit(pool_);
  Poly inc = Poly::unit(pool_);
  for (int k = 1; k <= 4096; ++k) {
    inc = inc * *this;
    if (inc.is_zero()) return r;
    Scalar invk = Scalar(Rat(1, k));
    inc = inc.scaled(invk);
    r += inc;
  }
  throw std::domain_error("exp_nilpotent: series did not terminate");
}

Poly Poly::inv() const {
  Scalar b = body();
  if (b.is_zero()) throw std::domain_error("Poly::inv: zero body");
  Scalar binv = b.inv();
  Poly n = *this - Poly(pool_, b);  // nilpotent part
  Poly r = Poly(pool_, binv);
  Poly pw = Poly::unit(pool_);
  for (int k = 1; k <= 4096; ++k) {
    pw = pw * n;
    if (pw.is_zero()) return r;
    Scalar c = binv;
    for (int t = 0; t < k; ++t) c = c * (-binv);
    r += pw.scaled(c);
  }
  throw std::domain_error("Poly::inv: series did not terminate");
}

Poly Poly::integrate01(int te, int dte) const {
  Poly r(pool_);
  for (auto& [m, c] : terms_) {
    auto it = std::lower_bound(m.od.begin(), m.od.end(), dte);
    if (it == m.od.end() || *it != dte) continue;
    Mono mm = m;
    size_t pos = size_t(it - m.od.begin());
    mm.od.erase(mm.od.begin() + long(pos));
    Scalar cc = (pos % 2) ? -c : c;
    int e = mm.exp_of(te);
    mm.ev.erase(std::remove_if(mm.ev.begin(), mm.ev.end(),
                               [&](auto& p) { return p.first == te; }),
                mm.ev.end());
    r.add_term(std::move(mm), cc * Scalar(Rat(1, e + 1)));
  }
  return r;
}

int Poly::max_kind_degree(VarKind k) const {
  int best = 0;
  for (auto& [m, c] : terms_) {
    int d = 0;
    for (auto& [v, e] : m.ev)
      if (pool_->info(v).kind == k) d += e;
    for (int v : m.od)
      if (pool_->info(v).kind == k) d += 1;
    best = std::max(best, d);
  }
  return best;
}

Poly Poly::kind_component(VarKind k, int degree) const {
  Poly r(pool_);
  for (auto& [m, c] : terms_) {
    int d = 0;
    for (auto& [v, e] : m.ev)
      if (pool_->info(v).kind == k) d += e;
    for (int v : m.od)
      if (pool_->info(v).kind == k) d += 1;
    if (d == degree) r.add_term(m, c);
  }
  return r;
}

std::string Poly::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (auto& [m, c] : terms_) {
    if (!first) out += " + ";
    first = false;
    out += "(" + scalar_str(c) + ")";
    for (auto& [v, e] : m.ev) {
      out += " " + pool_->info(v).name;
      if (e > 1) out += "^" + std::to_string(e);
    }
    for (int v : m.od) out += " " + pool_->info(v).name;
  }
  return out;
}

}  // namespace csbv
