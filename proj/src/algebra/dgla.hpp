#pragma once

// Finite-dimensional cyclic differential graded Lie algebras concentrated
// in degrees 0..3, with an invariant degree -3 pairing and a positive
// definite degree-wise inner product used for gauge fixing.

#include <map>
#include <optional>

#include "core/graded.hpp"

namespace csbv {

struct CyclicDgla {
  std::string name;
  GradedSpace sp;
  // d[i*dim+j]: e_i-coefficient of d(e_j).
  std::vector<Scalar> d;
  // [e_a, e_b] = sum over (k, c) entries.
  std::map<std::pair<int, int>, std::vector<std::pair<int, Scalar>>> bracket;
  // pairing[j*dim+k] = <e_j, e_k>, nonzero only for deg_j + deg_k = 3.
  std::vector<Scalar> pairing;
  // Degree-wise Gram matrix of the gauge-fixing inner product.
  std::vector<Scalar> ip;

  int dim() const { return sp.dim(); }
  Scalar d_at(int i, int j) const { return d[size_t(i * dim() + j)]; }
  Scalar pair_at(int j, int k) const { return pairing[size_t(j * dim() + k)]; }
  Scalar ip_at(int j, int k) const { return ip[size_t(j * dim() + k)]; }
  const std::vector<std::pair<int, Scalar>>* br(int a, int b) const {
    auto it = bracket.find({a, b});
    return it == bracket.end() ? nullptr : &it->second;
  }
  int index_of(const std::string& n) const {
    for (int i = 0; i < dim(); ++i)
      if (sp.name[size_t(i)] == n) return i;
    return -1;
  }
};

struct ValidationIssue {
  std::string axiom;
  std::string witness;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;
  void fail(std::string axiom, std::string witness) {
    ok = false;
    issues.push_back({std::move(axiom), std::move(witness)});
  }
};

ValidationReport validate(const CyclicDgla& g);

// Twist by a Maurer-Cartan element of degree 1 with scalar coefficients:
// d -> d + ad_pi. Returns nullopt (with message) if pi fails the MC test
// or has wrong degree.
std::optional<CyclicDgla> twist(const CyclicDgla& g, const std::vector<Scalar>& pi,
                                std::string* err = nullptr);

// Cohomology of (g, d): harmonic representatives w.r.t. the synchronized
// Laplacian d d* + d* d, orthogonalized degree-wise w.r.t. inner_product.
// Degrees 2 and 3 are then replaced by the pairing-dual bases of degrees 1
// and 0, so that zero-mode coordinates come in exact conjugate pairs.
struct Cohomology {
  std::array<int, 4> dims{{0, 0, 0, 0}};
  // reps[k]: list of coefficient vectors (length dim) for degree k.
  std::array<std::vector<std::vector<Scalar>>, 4> reps;
  int total() const { return dims[0] + dims[1] + dims[2] + dims[3]; }
};
Cohomology cohomology(const CyclicDgla& g);

// Scalar-matrix helpers shared by the exact linear algebra in this module.
using SMat = std::vector<std::vector<Scalar>>;
std::vector<std::vector<Scalar>> scalar_kernel(const SMat& m);  // column basis of ker
int scalar_rank(SMat m);

// Instances bundled with the library.
CyclicDgla instance_u1_lambda3();        // abelian u(1) ox Lambda(t1,t2,t3)
CyclicDgla instance_acyclic4();          // four-dimensional acyclic complex
CyclicDgla instance_sl2_lambda3();       // sl2(Q) ox Lambda(t1,t2,t3)
CyclicDgla instance_sl2_lambda3_twisted();  // previous, twisted by h ox t1
CyclicDgla instance_sl2_plus_acyclic();  // direct sum of the two above
CyclicDgla instance_pair_h12();          // one conjugate pair in degrees 1,2
const std::vector<std::pair<std::string, CyclicDgla (*)()>>& bundled_instances();

// Structural equality (bracket entry order insensitive).
bool same_dgla(const CyclicDgla& a, const CyclicDgla& b);

// Instance file format, version 1. parse returns issues in err when failing.
std::optional<CyclicDgla> parse_instance(const std::string& text, std::string* err = nullptr);
std::string serialize_instance(const CyclicDgla& g);

}  // namespace csbv
