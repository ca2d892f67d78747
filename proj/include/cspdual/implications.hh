#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cspdual/algebra.hh"
#include "cspdual/ppformulas.hh"

namespace cspdual {

struct ImplicationFlags {
  bool is_implication = false;
  bool nontrivial = false;
  bool stable = false;
  bool proper = false;
  bool balanced = false;

  bool operator==(const ImplicationFlags&) const = default;
};

struct Implication {
  PPFormula formula;
  std::vector<std::string> u, v;
  Rows C, D;
  Rows proj_u, proj_v;  // projections of the formula onto u and v
  ImplicationFlags flags;
  std::vector<std::pair<int, int>> pi;  // (i, j) with u[i] == v[j]
};

// Evaluates f once and fills every field of the result.
Implication check_implication(const PPFormula& f, const Rows& C, const std::vector<std::string>& u, const Rows& D,
                              const std::vector<std::string>& v, const Algebra& alg);

// Unary relations reachable from the template by acyclic conjunctions;
// the full domain is not included.
std::vector<Rows> definable_unary_sets(const Algebra& alg);

// Single-atom implications over the template relations. Finite mode
// conjoins unary restrictions from definable_unary_sets; orbit mode adds up
// to k isolated variables. Only nontrivial implications are kept.
std::vector<Implication> harvest_atom_implications(const Algebra& alg);
// Same over the constraints of an instance (each constraint as an atom with
// its explicit extent).
std::vector<Implication> harvest_instance_implications(const Instance& inst, const Algebra& alg);

// i1 then i2 with v of i1 identified with u of i2; flags recomputed.
Implication compose(const Implication& i1, const Implication& i2, const Algebra& alg);
Implication power(const Implication& i, int n, const Algebra& alg);
Implication stabilize(const Implication& i, const Algebra& alg);

struct SearchBudget {
  int max_atoms = 6;
  int max_compositions = 64;
};

struct ImplicationGraph {
  struct Vertex {
    int arity;
    Rows extent;
    Rows proj;
  };
  std::vector<Vertex> vertices;
  std::vector<Implication> arcs_impl;
  std::vector<std::pair<int, int>> arcs;

  int vertex_of(int arity, const Rows& extent, const Rows& proj) const;  // -1 when absent
  int add_vertex(int arity, const Rows& extent, const Rows& proj);
  std::string to_dot(const Algebra& alg) const;
};

// Arcs are the proper nontrivial implications in `impls`.
ImplicationGraph build_implication_graph(const std::vector<Implication>& impls);

struct BalancedSearchResult {
  std::optional<Implication> witness;
  std::vector<int> cycle;  // arc indices composed into the witness
  ImplicationGraph graph;
  int compositions_used = 0;
  bool budget_exhausted = false;
};

BalancedSearchResult search_balanced(const Algebra& alg, SearchBudget budget = {});

struct EqualityDefinition {
  PPFormula formula;  // free variables (x, y)
};

std::optional<EqualityDefinition> search_equality_definition(const Algebra& alg, int max_atoms);

std::string implication_to_string(const Implication& i, const Algebra& alg);
std::string flags_to_string(const ImplicationFlags& f);

}  // namespace cspdual
