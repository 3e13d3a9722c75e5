#include <algorithm>
#include <map>
#include <sstream>

#include "algebra/dgla.hpp"

// Instance file format, version 1.
//
//   # comment
//   [meta]
//   format = cyclic-dgla-v1
//   name = <ident>
//   [basis]
//   <ident> <degree>
//   [d]
//   <src> -> <scalar> <dst>
//   [bracket]
//   <a> <b> -> <scalar> <c>
//   [pairing]
//   <a> <b> = <scalar>
//   [inner_product]
//   <a> <b> = <scalar>
//
// Scalars are Gaussian rationals, e.g. "2", "-1/3", "1/2 + 3/4 i".
// Unknown sections or keys are rejected. All nonzero table entries are
// explicit; the parser performs no symmetry completion.

namespace csbv {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::optional<CyclicDgla> parse_instance(const std::string& text, std::string* err) {
  auto fail = [&](int line, const std::string& msg) -> std::optional<CyclicDgla> {
    if (err) *err = "line " + std::to_string(line) + ": " + msg;
    return std::nullopt;
  };
  CyclicDgla g;
  std::map<std::string, int> index;
  std::string section;
  bool saw_format = false, saw_name = false;
  // Deferred table entries, resolved once the basis is complete.
  struct DEntry {
    int line;
    std::string src, dst, sc;
  };
  struct BEntry {
    int line;
    std::string a, b, dst, sc;
  };
  struct PEntry {
    int line;
    std::string a, b, sc;
    bool inner;
  };
  std::vector<DEntry> dents;
  std::vector<BEntry> bents;
  std::vector<PEntry> pents;

  std::istringstream is(text);
  std::string raw;
  int ln = 0;
  while (std::getline(is, raw)) {
    ++ln;
    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') return fail(ln, "malformed section header");
      section = line.substr(1, line.size() - 2);
      if (section != "meta" && section != "basis" && section != "d" &&
          section != "bracket" && section != "pairing" && section != "inner_product")
        return fail(ln, "unknown section [" + section + "]");
      continue;
    }
    if (section.empty()) return fail(ln, "content before first section");
    if (section == "meta") {
      size_t eq = line.find('=');
      if (eq == std::string::npos) return fail(ln, "expected key = value");
      std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
      if (key == "format") {
        if (val != "cyclic-dgla-v1") return fail(ln, "unsupported format " + val);
        saw_format = true;
      } else if (key == "name") {
        g.name = val;
        saw_name = true;
      } else {
        return fail(ln, "unknown meta key " + key);
      }
      continue;
    }
    if (section == "basis") {
      auto toks = split_ws(line);
      if (toks.size() != 2) return fail(ln, "expected: ident degree");
      if (index.count(toks[0])) return fail(ln, "duplicate basis ident " + toks[0]);
      int deg = -1;
      try {
        deg = std::stoi(toks[1]);
      } catch (...) {
        return fail(ln, "bad degree " + toks[1]);
      }
      if (deg < 0 || deg > 3) return fail(ln, "degree out of range 0..3");
      index[toks[0]] = int(g.sp.deg.size());
      g.sp.deg.push_back(deg);
      g.sp.name.push_back(toks[0]);
      continue;
    }
    if (section == "d" || section == "bracket") {
      size_t arrow = line.find("->");
      if (arrow == std::string::npos) return fail(ln, "expected ->");
      auto lhs = split_ws(line.substr(0, arrow));
      auto rhs = split_ws(line.substr(arrow + 2));
      if (rhs.size() < 2) return fail(ln, "expected: scalar dst");
      std::string dst = rhs.back();
      rhs.pop_back();
      std::string sc;
      for (auto& t : rhs) sc += (sc.empty() ? "" : " ") + t;
      if (section == "d") {
        if (lhs.size() != 1) return fail(ln, "expected: src -> scalar dst");
        dents.push_back({ln, lhs[0], dst, sc});
      } else {
        if (lhs.size() != 2) return fail(ln, "expected: a b -> scalar dst");
        bents.push_back({ln, lhs[0], lhs[1], dst, sc});
      }
      continue;
    }
    // pairing / inner_product
    size_t eq = line.find('=');
    if (eq == std::string::npos) return fail(ln, "expected =");
    auto lhs = split_ws(line.substr(0, eq));
    if (lhs.size() != 2) return fail(ln, "expected: a b = scalar");
    pents.push_back({ln, lhs[0], lhs[1], trim(line.substr(eq + 1)),
                     section == "inner_product"});
  }

  if (!saw_format) return fail(ln, "missing meta format line");
  if (!saw_name) return fail(ln, "missing meta name line");
  if (g.sp.deg.empty()) return fail(ln, "empty basis");

  size_t n = size_t(g.dim());
  g.d.assign(n * n, Scalar(0));
  g.pairing.assign(n * n, Scalar(0));
  g.ip.assign(n * n, Scalar(0));

  auto look = [&](int line, const std::string& id, int* out) {
    auto it = index.find(id);
    if (it == index.end()) {
      fail(line, "unknown basis ident " + id);
      return false;
    }
    *out = it->second;
    return true;
  };
  auto scal = [&](int line, const std::string& s, Scalar* out) {
    auto v = parse_scalar(s);
    if (!v) {
      fail(line, "bad scalar '" + s + "'");
      return false;
    }
    *out = *v;
    return true;
  };

  for (auto& e : dents) {
    int src, dst;
    Scalar c;
    if (!look(e.line, e.src, &src) || !look(e.line, e.dst, &dst) ||
        !scal(e.line, e.sc, &c))
      return std::nullopt;
    g.d[size_t(dst) * n + size_t(src)] += c;
  }
  for (auto& e : bents) {
    int a, b, dst;
    Scalar c;
    if (!look(e.line, e.a, &a) || !look(e.line, e.b, &b) ||
        !look(e.line, e.dst, &dst) || !scal(e.line, e.sc, &c))
      return std::nullopt;
    if (c.is_zero()) continue;
    auto& v = g.bracket[{a, b}];
    bool found = false;
    for (auto& [k, cc] : v)
      if (k == dst) {
        cc += c;
        found = true;
      }
    if (!found) v.push_back({dst, c});
  }
  // Prune cancelled bracket entries so parsed data is canonical.
  for (auto it = g.bracket.begin(); it != g.bracket.end();) {
    auto& v = it->second;
    v.erase(std::remove_if(v.begin(), v.end(), [](auto& e) { return e.second.is_zero(); }),
            v.end());
    it = v.empty() ? g.bracket.erase(it) : std::next(it);
  }
  for (auto& e : pents) {
    int a, b;
    Scalar c;
    if (!look(e.line, e.a, &a) || !look(e.line, e.b, &b) || !scal(e.line, e.sc, &c))
      return std::nullopt;
    (e.inner ? g.ip : g.pairing)[size_t(a) * n + size_t(b)] += c;
  }
  return g;
}

std::string serialize_instance(const CyclicDgla& g) {
  std::ostringstream os;
  size_t n = size_t(g.dim());
  os << "[meta]\n";
  os << "format = cyclic-dgla-v1\n";
  os << "name = " << g.name << "\n";
  os << "[basis]\n";
  for (size_t i = 0; i < n; ++i)
    os << g.sp.name[i] << " " << g.sp.deg[i] << "\n";
  os << "[d]\n";
  for (size_t j = 0; j < n; ++j)
    for (size_t i = 0; i < n; ++i) {
      Scalar c = g.d_at(int(i), int(j));
      if (!c.is_zero())
        os << g.sp.name[j] << " -> " << scalar_str(c) << " " << g.sp.name[i] << "\n";
    }
  os << "[bracket]\n";
  for (auto& [ab, entries] : g.bracket) {
    for (auto& [k, c] : entries)
      if (!c.is_zero())
        os << g.sp.name[size_t(ab.first)] << " " << g.sp.name[size_t(ab.second)]
           << " -> " << scalar_str(c) << " " << g.sp.name[size_t(k)] << "\n";
  }
  os << "[pairing]\n";
  for (size_t j = 0; j < n; ++j)
    for (size_t k = 0; k < n; ++k) {
      Scalar c = g.pair_at(int(j), int(k));
      if (!c.is_zero())
        os << g.sp.name[j] << " " << g.sp.name[k] << " = " << scalar_str(c) << "\n";
    }
  os << "[inner_product]\n";
  for (size_t j = 0; j < n; ++j)
    for (size_t k = 0; k < n; ++k) {
      Scalar c = g.ip_at(int(j), int(k));
      if (!c.is_zero())
        os << g.sp.name[j] << " " << g.sp.name[k] << " = " << scalar_str(c) << "\n";
    }
  return os.str();
}

}  // namespace csbv
