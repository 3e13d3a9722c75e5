#include "graphs/graphs.hpp"

#include <algorithm>
#include <functional>
#include <mutex>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace csbv {

// ---------------------------------------------------------------------------
// FeynmanGraph basics
// ---------------------------------------------------------------------------

int FeynmanGraph::leaves() const {
  int n = 0;
  for (int v : leaves_at) n += v;
  return n;
}

int FeynmanGraph::internal_edges() const {
  int e = 0;
  for (int v : loops_at) e += v;
  for (auto& [p, m] : mult) e += m;
  return e;
}

int FeynmanGraph::loop_number() const { return internal_edges() - vertices + 1; }

int FeynmanGraph::euler() const { return vertices - internal_edges(); }

std::vector<std::pair<int, int>> FeynmanGraph::edge_list() const {
  std::vector<std::pair<int, int>> out;
  for (int v = 0; v < vertices; ++v)
    for (int i = 0; i < loops_at[size_t(v)]; ++i) out.emplace_back(v, v);
  for (auto& [p, m] : mult)
    for (int i = 0; i < m; ++i) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

namespace {

// Serialization of one labeled presentation under a vertex permutation
// perm (perm[i] = original label placed at position i).
std::vector<int> serialize_under(int V, const std::vector<int>& loops_at,
                                 const std::vector<int>& leaves_at,
                                 const std::map<std::pair<int, int>, int>& mult,
                                 const std::vector<int>& perm) {
  std::vector<int> inv(static_cast<size_t>(V));
  for (int i = 0; i < V; ++i) inv[size_t(perm[size_t(i)])] = i;
  std::vector<int> out;
  out.reserve(size_t(2 * V + V * (V - 1) / 2));
  for (int i = 0; i < V; ++i) {
    out.push_back(loops_at[size_t(perm[size_t(i)])]);
    out.push_back(leaves_at[size_t(perm[size_t(i)])]);
  }
  std::vector<int> m(size_t(V * V), 0);
  for (auto& [p, k] : mult) {
    int a = inv[size_t(p.first)], b = inv[size_t(p.second)];
    if (a > b) std::swap(a, b);
    m[size_t(a * V + b)] = k;
  }
  for (int a = 0; a < V; ++a)
    for (int b = a + 1; b < V; ++b) out.push_back(m[size_t(a * V + b)]);
  return out;
}

}  // namespace

std::pair<std::string, long> canonical_form(
    int V, const std::vector<int>& loops_at, const std::vector<int>& leaves_at,
    const std::map<std::pair<int, int>, int>& mult) {
  if (V <= 0) return {std::string("v0"), 1};
  // Vertex invariants: (loops, leaves, sorted incident multiplicities),
  // refined once by the multiset of neighbor invariants.
  std::vector<std::vector<int>> inv0(static_cast<size_t>(V));
  for (int v = 0; v < V; ++v) {
    std::vector<int> adj;
    for (auto& [p, k] : mult) {
      if (p.first == v) adj.push_back(k);
      if (p.second == v) adj.push_back(k);
    }
    std::sort(adj.begin(), adj.end());
    inv0[size_t(v)] = {loops_at[size_t(v)], leaves_at[size_t(v)]};
    inv0[size_t(v)].insert(inv0[size_t(v)].end(), adj.begin(), adj.end());
  }
  // index inv0 values
  std::vector<std::vector<int>> inv0_sorted = inv0;
  std::sort(inv0_sorted.begin(), inv0_sorted.end());
  inv0_sorted.erase(std::unique(inv0_sorted.begin(), inv0_sorted.end()),
                    inv0_sorted.end());
  auto idx0 = [&](int v) {
    return int(std::lower_bound(inv0_sorted.begin(), inv0_sorted.end(),
                                inv0[size_t(v)]) -
               inv0_sorted.begin());
  };
  std::vector<std::vector<int>> inv1(static_cast<size_t>(V));
  for (int v = 0; v < V; ++v) {
    std::vector<int> nb;
    for (auto& [p, k] : mult) {
      if (p.first == v)
        for (int i = 0; i < k; ++i) nb.push_back(idx0(p.second));
      if (p.second == v)
        for (int i = 0; i < k; ++i) nb.push_back(idx0(p.first));
    }
    std::sort(nb.begin(), nb.end());
    inv1[size_t(v)] = inv0[size_t(v)];
    inv1[size_t(v)].push_back(-1);  // separator
    inv1[size_t(v)].insert(inv1[size_t(v)].end(), nb.begin(), nb.end());
  }
  // group vertices into classes ordered by invariant value
  std::vector<int> order(static_cast<size_t>(V));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (inv1[size_t(a)] != inv1[size_t(b)]) return inv1[size_t(a)] < inv1[size_t(b)];
    return a < b;
  });
  std::vector<std::pair<int, int>> blocks;  // [start, end) in `order`
  for (int i = 0; i < V;) {
    int j = i;
    while (j < V && inv1[size_t(order[size_t(j)])] == inv1[size_t(order[size_t(i)])]) ++j;
    blocks.emplace_back(i, j);
    i = j;
  }
  // iterate products of within-block permutations via an odometer
  std::vector<int> best;
  long stab = 0;
  std::vector<int> perm = order;
  std::function<void(size_t)> iterate = [&](size_t bi) {
    if (bi == blocks.size()) {
      std::vector<int> ser = serialize_under(V, loops_at, leaves_at, mult, perm);
      if (best.empty() || ser < best) {
        best = ser;
        stab = 1;
      } else if (ser == best) {
        ++stab;
      }
      return;
    }
    auto [s, e] = blocks[bi];
    std::vector<int> block(perm.begin() + s, perm.begin() + e);
    std::sort(block.begin(), block.end());
    do {
      std::copy(block.begin(), block.end(), perm.begin() + s);
      iterate(bi + 1);
    } while (std::next_permutation(block.begin(), block.end()));
  };
  iterate(0);
  std::ostringstream os;
  os << "v" << V;
  for (int x : best) os << ":" << x;
  return {os.str(), stab};
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

namespace {

bool connected(int V, const std::map<std::pair<int, int>, int>& mult) {
  if (V <= 1) return true;
  std::vector<int> uf(static_cast<size_t>(V));
  std::iota(uf.begin(), uf.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (uf[size_t(x)] != x) x = uf[size_t(x)] = uf[size_t(uf[size_t(x)])];
    return x;
  };
  for (auto& [p, m] : mult)
    if (m > 0) uf[size_t(find(p.first))] = find(p.second);
  int root = find(0);
  for (int v = 1; v < V; ++v)
    if (find(v) != root) return false;
  return true;
}

long factorial(int n) {
  long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::vector<FeynmanGraph> build_graphs(int l, int n) {
  const int V = 2 * l - 2 + n;
  const int E = 3 * l - 3 + n;
  std::vector<FeynmanGraph> out;
  if (V <= 0 || E < 0) return out;  // includes the vertexless circle (1,0)

  std::map<std::string, FeynmanGraph> found;
  std::vector<int> loops(static_cast<size_t>(V)), leaves(static_cast<size_t>(V)), rem(static_cast<size_t>(V));
  std::map<std::pair<int, int>, int> mult;

  std::function<void(int, int)> assign_pairs;  // over pair index
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < V; ++a)
    for (int b = a + 1; b < V; ++b) pairs.emplace_back(a, b);

  auto finish = [&]() {
    if (!connected(V, mult)) return;
    auto [key, stab] = canonical_form(V, loops, leaves, mult);
    if (found.count(key)) return;
    FeynmanGraph g;
    g.vertices = V;
    g.loops_at = loops;
    g.leaves_at = leaves;
    g.mult = mult;
    for (auto it = g.mult.begin(); it != g.mult.end();)
      it = it->second == 0 ? g.mult.erase(it) : std::next(it);
    g.key = key;
    long aut = stab;
    for (auto& [p, m] : g.mult) aut *= factorial(m);
    for (int v = 0; v < V; ++v) {
      if (g.loops_at[size_t(v)]) aut *= 2;  // swap the two loop half-edges
      aut *= factorial(g.leaves_at[size_t(v)]);
    }
    g.aut = aut;
    found.emplace(key, std::move(g));
  };

  assign_pairs = [&](int pi, int left) {
    if (pi == int(pairs.size())) {
      if (left == 0) finish();
      return;
    }
    auto [a, b] = pairs[size_t(pi)];
    int cap = std::min(rem[size_t(a)], rem[size_t(b)]);
    // after the last pair touching vertex a, its remaining degree must be 0
    for (int m = 0; m <= cap; ++m) {
      rem[size_t(a)] -= m;
      rem[size_t(b)] -= m;
      if (m > 0) mult[{a, b}] = m;
      bool a_done = (b == V - 1);  // pairs with first = a are exhausted
      if (!a_done || rem[size_t(a)] == 0) assign_pairs(pi + 1, left - 2 * m);
      if (m > 0) mult.erase({a, b});
      rem[size_t(a)] += m;
      rem[size_t(b)] += m;
    }
  };

  std::function<void(int, int, int)> assign_vertices = [&](int v, int lsum,
                                                           int fsum) {
    if (v == V) {
      if (fsum != n) return;
      int degsum = 0;
      for (int x : rem) degsum += x;
      if (degsum % 2) return;
      int pair_edges = E - lsum;
      if (pair_edges < 0 || degsum != 2 * pair_edges) return;
      mult.clear();
      assign_pairs(0, degsum);
      return;
    }
    for (int lo = 0; lo <= 1; ++lo) {
      if (2 * lo > 3) break;
      for (int lv = 0; lv + 2 * lo <= 3; ++lv) {
        // canonical labelings are non-increasing in (loops, leaves)
        if (v > 0 && std::make_pair(lo, lv) >
                         std::make_pair(loops[size_t(v - 1)], leaves[size_t(v - 1)]))
          continue;
        if (lsum + lo > l || fsum + lv > n) continue;
        loops[size_t(v)] = lo;
        leaves[size_t(v)] = lv;
        rem[size_t(v)] = 3 - 2 * lo - lv;
        assign_vertices(v + 1, lsum + lo, fsum + lv);
      }
    }
  };

  assign_vertices(0, 0, 0);
  out.reserve(found.size());
  for (auto& [k, g] : found) out.push_back(std::move(g));
  return out;
}

}  // namespace

const std::vector<FeynmanGraph>& enumerate_graphs(int loops, int leaves) {
  if (loops < 0 || leaves < 0)
    throw std::invalid_argument("enumerate_graphs: negative bounds");
  static std::map<std::pair<int, int>, std::vector<FeynmanGraph>> memo;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = memo.find({loops, leaves});
  if (it == memo.end())
    it = memo.emplace(std::make_pair(loops, leaves), build_graphs(loops, leaves))
             .first;
  return it->second;
}

// ---------------------------------------------------------------------------
// Evaluation kit
// ---------------------------------------------------------------------------

namespace {

// Plain Gauss-Jordan inverse of a scalar matrix.
std::vector<Scalar> scalar_inverse(std::vector<Scalar> a, int d) {
  std::vector<Scalar> inv(size_t(d) * size_t(d), Scalar(0));
  for (int i = 0; i < d; ++i) inv[size_t(i * d + i)] = Scalar(1);
  for (int col = 0; col < d; ++col) {
    int piv = -1;
    for (int r = col; r < d; ++r)
      if (!a[size_t(r * d + col)].is_zero()) {
        piv = r;
        break;
      }
    if (piv < 0) throw std::domain_error("scalar_inverse: singular matrix");
    if (piv != col)
      for (int j = 0; j < d; ++j) {
        std::swap(a[size_t(piv * d + j)], a[size_t(col * d + j)]);
        std::swap(inv[size_t(piv * d + j)], inv[size_t(col * d + j)]);
      }
    Scalar p = a[size_t(col * d + col)];
    for (int j = 0; j < d; ++j) {
      a[size_t(col * d + j)] = a[size_t(col * d + j)] / p;
      inv[size_t(col * d + j)] = inv[size_t(col * d + j)] / p;
    }
    for (int r = 0; r < d; ++r) {
      if (r == col) continue;
      Scalar f = a[size_t(r * d + col)];
      if (f.is_zero()) continue;
      for (int j = 0; j < d; ++j) {
        a[size_t(r * d + j)] = a[size_t(r * d + j)] - f * a[size_t(col * d + j)];
        inv[size_t(r * d + j)] =
            inv[size_t(r * d + j)] - f * inv[size_t(col * d + j)];
      }
    }
  }
  return inv;
}

int port_parity(const GradedSpace* sp, int j) {
  return (sp->deg[size_t(j)] + 1) & 1;
}

// Graded symmetrization matching the side-swap identity of the edge
// contraction: T_{jk} -> (T_{jk} + (-1)^{p_j p_k} T_{kj}) / 2.
std::vector<Scalar> graded_symmetrize(const GradedSpace* sp,
                                      const std::vector<Scalar>& t) {
  const int d = sp->dim();
  std::vector<Scalar> r(size_t(d) * size_t(d));
  const Scalar half(Rat(1, 2));
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      Scalar s = t[size_t(k * d + j)];
      if (port_parity(sp, j) && port_parity(sp, k)) s = -s;
      r[size_t(j * d + k)] = (t[size_t(j * d + k)] + s) * half;
    }
  return r;
}

}  // namespace

std::vector<Scalar> GraphKit::raise(const PMat& op) const {
  const GradedSpace* sp = ctx->sp();
  const int d = sp->dim();
  std::vector<Scalar> om(size_t(d) * size_t(d), Scalar(0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const Poly& p = op.at(i, j);
      if (p.is_zero()) continue;
      if (!p.is_scalar())
        throw std::invalid_argument("GraphKit::raise: non-scalar operator entry");
      om[size_t(i * d + j)] = p.body();
    }
  std::vector<Scalar> r(size_t(d) * size_t(d), Scalar(0));
  for (int j = 0; j < d; ++j)
    for (int m = 0; m < d; ++m) {
      if (om[size_t(j * d + m)].is_zero()) continue;
      for (int k = 0; k < d; ++k) {
        const Scalar& x = raise_id[size_t(m * d + k)];
        if (x.is_zero()) continue;
        r[size_t(j * d + k)] = r[size_t(j * d + k)] + om[size_t(j * d + m)] * x;
      }
    }
  return r;
}

void GraphKit::ensure_ports(int edges) {
  const GradedSpace* sp = ctx->sp();
  const int d = sp->dim();
  while (int(port_sym.size()) < edges) {
    int e = int(port_sym.size());
    std::array<std::vector<int>, 2> sides;
    for (int side = 0; side < 2; ++side) {
      sides[size_t(side)].resize(size_t(d));
      for (int j = 0; j < d; ++j) {
        std::string nm = "gp" + std::to_string(e) + "_" + std::to_string(side) +
                         "_" + std::to_string(j);
        int id = scratch->add(nm, port_parity(sp, j) == 1, VarKind::Aux, -1);
        sides[size_t(side)][size_t(j)] = id;
        port_of[id] = {e, side, j};
      }
    }
    port_sym.push_back(std::move(sides));
  }
}

GraphKit make_graph_kit(const AlgebraCtx& ctx, const SdrResult& s,
                        VarPool* scratch) {
  GraphKit kit;
  kit.ctx = &ctx;
  kit.s = &s;
  kit.scratch = scratch;
  const GradedSpace* sp = ctx.sp();
  const int d = sp->dim();
  std::vector<Scalar> pi(size_t(d) * size_t(d));
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) pi[size_t(j * d + k)] = ctx.g->pair_at(j, k);
  // Index raising: the kernel of the identity is the inverse pairing with
  // a parity twist on the contracted index; the convention is pinned by the
  // agreement of kernel(-K) with the Gaussian moments of the quadratic
  // action (checked by the Wick-oracle tests).
  std::vector<Scalar> pinv = scalar_inverse(pi, d);
  kit.raise_id.assign(size_t(d) * size_t(d), Scalar(0));
  for (int m = 0; m < d; ++m)
    for (int k = 0; k < d; ++k) {
      Scalar v = pinv[size_t(m * d + k)];
      if ((sp->deg[size_t(k)] & 1) != 0) v = -v;
      kit.raise_id[size_t(m * d + k)] = v;
    }
  kit.edge = graded_symmetrize(sp, kit.raise(s.K.scaled(Scalar(-1))));
  return kit;
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

namespace {

// -2: zero, 0/1: homogeneous total parity, -1: mixed.
int total_parity_of(const PVec& v) {
  int par = -2;
  const GradedSpace* sp = v.sp;
  for (int j = 0; j < sp->dim(); ++j) {
    for (auto& [m, c] : v.c[size_t(j)].terms()) {
      int p = (m.parity() + sp->deg[size_t(j)]) & 1;
      if (par == -2)
        par = p;
      else if (par != p)
        return -1;
    }
  }
  return par;
}

struct VertexSlot {
  bool is_leaf = false;
  int edge = -1, side = -1;  // when a port
  int leaf_index = -1;       // when a leaf
};

}  // namespace

Poly weight(GraphKit& kit, const FeynmanGraph& g, const GraphDecoration& dec) {
  const AlgebraCtx& ctx = *kit.ctx;
  const GradedSpace* sp = ctx.sp();
  const VarPool* pool = ctx.pool;
  const int d = sp->dim();
  const int V = g.vertices;
  if (V <= 0) return Poly(pool);
  auto edges = g.edge_list();
  const int E = int(edges.size());
  kit.ensure_ports(E);

  // Leaf insertions must be parity-homogeneous; unmarked ones odd.
  {
    int lp = total_parity_of(dec.leaf);
    bool have_unmarked = g.leaves() > (dec.marked_leaf >= 0 ? 1 : 0);
    if (have_unmarked && lp != 1 && lp != -2)
      throw std::invalid_argument(
          "weight: leaf insertion must be odd in total parity");
    if (dec.marked_leaf >= 0 && total_parity_of(dec.marked_leaf_value) == -1)
      throw std::invalid_argument(
          "weight: marked leaf insertion is not parity-homogeneous");
  }
  // Marked edge tensor must couple a homogeneous parity pattern.
  if (dec.marked_edge >= 0) {
    if (dec.marked_edge >= E)
      throw std::invalid_argument("weight: marked edge index out of range");
    int tpar = -2;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        if (dec.marked_edge_tensor[size_t(j * d + k)].is_zero()) continue;
        int p = (port_parity(sp, j) + port_parity(sp, k)) & 1;
        if (tpar == -2)
          tpar = p;
        else if (tpar != p)
          throw std::invalid_argument(
              "weight: marked edge kernel mixes parities at edge " +
              std::to_string(dec.marked_edge));
      }
  }

  // Slot assembly, in vertex order: loops, pair-edge ports, leaves.
  std::vector<std::array<VertexSlot, 3>> slots(static_cast<size_t>(V));
  {
    std::vector<int> fill(size_t(V), 0);
    auto put = [&](int v, VertexSlot sl) {
      if (fill[size_t(v)] >= 3)
        throw std::invalid_argument("weight: vertex valence exceeds 3");
      slots[size_t(v)][size_t(fill[size_t(v)]++)] = sl;
    };
    for (int e = 0; e < E; ++e) {
      auto [u, v] = edges[size_t(e)];
      put(u, VertexSlot{false, e, 0, -1});
      put(v, VertexSlot{false, e, 1, -1});
    }
    int leaf_idx = 0;
    for (int v = 0; v < V; ++v)
      for (int i = 0; i < g.leaves_at[size_t(v)]; ++i)
        put(v, VertexSlot{true, -1, -1, leaf_idx++});
    for (int v = 0; v < V; ++v)
      if (fill[size_t(v)] != 3)
        throw std::invalid_argument("weight: vertex valence below 3");
  }

  // Port fields.
  std::vector<std::array<PVec, 2>> pf(static_cast<size_t>(E));
  for (int e = 0; e < E; ++e)
    for (int side = 0; side < 2; ++side) {
      PVec b(sp, pool);
      for (int j = 0; j < d; ++j)
        b.c[size_t(j)] = Poly::var(pool, kit.port_sym[size_t(e)][size_t(side)][size_t(j)]);
      pf[size_t(e)][size_t(side)] = std::move(b);
    }

  const bool have_mark = (dec.marked_edge >= 0 || dec.marked_leaf >= 0) &&
                         dec.mark.pool() != nullptr;
  PVec marked_leaf_field(sp, pool);
  if (dec.marked_leaf >= 0) {
    marked_leaf_field = dec.marked_leaf_value;
    if (have_mark && dec.marked_leaf >= 0)
      marked_leaf_field = marked_leaf_field.mul(dec.mark);
  }

  auto field_of = [&](const VertexSlot& sl) -> const PVec* {
    if (!sl.is_leaf) return &pf[size_t(sl.edge)][size_t(sl.side)];
    if (sl.leaf_index == dec.marked_leaf) return &marked_leaf_field;
    return &dec.leaf;
  };

  // BFS processing order for small frontiers.
  std::vector<int> order;
  {
    std::vector<char> seen(size_t(V), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      order.push_back(v);
      for (auto& [p, m] : g.mult) {
        if (m <= 0) continue;
        int w = -1;
        if (p.first == v) w = p.second;
        if (p.second == v) w = p.first;
        if (w >= 0 && !seen[size_t(w)]) {
          seen[size_t(w)] = 1;
          q.push(w);
        }
      }
    }
    if (int(order.size()) != V)
      throw std::invalid_argument("weight: graph is not connected");
  }
  std::vector<int> pos(static_cast<size_t>(V));
  for (int i = 0; i < V; ++i) pos[size_t(order[size_t(i)])] = i;

  Poly acc = Poly::unit(pool);
  std::vector<char> done(size_t(E), 0);
  for (int step = 0; step < V; ++step) {
    int v = order[size_t(step)];
    const PVec* f1 = field_of(slots[size_t(v)][0]);
    const PVec* f2 = field_of(slots[size_t(v)][1]);
    const PVec* f3 = field_of(slots[size_t(v)][2]);
    acc = acc * ctx.pair(*f1, ctx.bracket_vec(*f2, *f3));
    if (acc.is_zero()) return acc;
    for (int e = 0; e < E; ++e) {
      if (done[size_t(e)]) continue;
      auto [a, b] = edges[size_t(e)];
      if (pos[size_t(a)] > step || pos[size_t(b)] > step) continue;
      done[size_t(e)] = 1;
      const std::vector<Scalar>& T =
          (e == dec.marked_edge) ? dec.marked_edge_tensor : kit.edge;
      const Poly* mark =
          (e == dec.marked_edge && have_mark) ? &dec.mark : nullptr;
      // contract edge e
      Poly out(pool);
      const auto& psym = kit.port_sym[size_t(e)][0];
      const auto& qsym = kit.port_sym[size_t(e)][1];
      for (auto& [m, c] : acc.terms()) {
        int pj = -1, qk = -1;
        for (int id : m.od) {
          auto it = kit.port_of.find(id);
          if (it == kit.port_of.end() || it->second[0] != e) continue;
          (it->second[1] == 0 ? pj : qk) = it->second[2];
        }
        for (auto& [id, ex] : m.ev) {
          auto it = kit.port_of.find(id);
          if (it == kit.port_of.end() || it->second[0] != e) continue;
          (it->second[1] == 0 ? pj : qk) = it->second[2];
        }
        if (pj < 0 || qk < 0)
          throw std::logic_error("weight: open port missing from a term");
        const Scalar& t = T[size_t(pj * d + qk)];
        if (t.is_zero()) continue;
        Poly one(pool);
        one.add_term(m, c);
        Poly ext = one.deriv(psym[size_t(pj)]).deriv(qsym[size_t(qk)]);
        if (ext.is_zero()) continue;
        Poly contrib = ext.scaled(t);
        if (mark) contrib = (*mark) * contrib;
        out += contrib;
      }
      acc = std::move(out);
      if (acc.is_zero()) return acc;
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Assembled sums
// ---------------------------------------------------------------------------

namespace {

Scalar neg_i_pow(long k) {  // (-i)^k, any sign of k
  long r = ((k % 4) + 4) % 4;
  switch (r) {
    case 0: return Scalar(1);
    case 1: return Scalar(Rat(0), Rat(-1));
    case 2: return Scalar(-1);
    default: return Scalar(Rat(0), Rat(1));
  }
}

}  // namespace

TwoTier graph_expansion(GraphKit& kit, const PVec& a_w, int hbar_order,
                        int leaf_order) {
  if (hbar_order < 0 || leaf_order < 0)
    throw std::invalid_argument("graph_expansion: negative order");
  const VarPool* pool = kit.ctx->pool;
  GraphDecoration dec;
  dec.leaf = kit.s->incl.apply(a_w);
  Poly tree(pool);
  for (int n = 3; n <= leaf_order; ++n)
    for (const auto& g : enumerate_graphs(0, n)) {
      Poly w = weight(kit, g, dec);
      if (w.is_zero()) continue;
      tree += w.scaled(Scalar(Rat(1, g.aut)));
    }
  LaurentHbar lg(0, hbar_order, pool);
  for (int l = 1; l <= hbar_order + 1; ++l)
    for (int n = 0; n <= leaf_order; ++n)
      for (const auto& g : enumerate_graphs(l, n)) {
        Poly w = weight(kit, g, dec);
        if (w.is_zero()) continue;
        lg.add(l - 1, w.scaled(neg_i_pow(l - 1) * Scalar(Rat(1, g.aut))));
      }
  return TwoTier{tree, lg.exp()};
}

LaurentHbar marked_sum_r(GraphKit& kit, const DeformationKernels& k,
                         const PVec& a_w, int mark_var, int hbar_order,
                         int leaf_order) {
  if (hbar_order < 0 || leaf_order < 0)
    throw std::invalid_argument("marked_sum_r: negative order");
  const VarPool* pool = kit.ctx->pool;
  LaurentHbar r(-1, hbar_order, pool);
  std::vector<Scalar> lam =
      graded_symmetrize(kit.ctx->sp(), kit.raise(k.Lambda));
  bool lam_zero = true;
  for (auto& s : lam) lam_zero = lam_zero && s.is_zero();
  Poly mark = Poly::var(pool, mark_var);
  PVec leaf = kit.s->incl.apply(a_w);
  PVec ileaf = k.I.apply(leaf);
  for (int l = 0; l <= hbar_order + 1; ++l)
    for (int n = 0; n <= leaf_order; ++n)
      for (const auto& g : enumerate_graphs(l, n)) {
        Poly sum(pool);
        const int E = g.internal_edges();
        if (!lam_zero)
          for (int e = 0; e < E; ++e) {
            GraphDecoration dec;
            dec.leaf = leaf;
            dec.marked_edge = e;
            dec.marked_edge_tensor = lam;
            dec.mark = mark;
            sum += weight(kit, g, dec);
          }
        if (!ileaf.is_zero())
          for (int i = 0; i < n; ++i) {
            GraphDecoration dec;
            dec.leaf = leaf;
            dec.marked_leaf = i;
            dec.marked_leaf_value = ileaf;
            dec.mark = mark;
            sum += weight(kit, g, dec);
          }
        if (sum.is_zero()) continue;
        r.add(l - 1, sum.scaled(neg_i_pow(l - 1) * Scalar(Rat(1, g.aut))));
      }
  return r;
}

}  // namespace csbv
