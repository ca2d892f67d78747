#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cspdual/algebra.hh"
#include "cspdual/implications.hh"
#include "cspdual/relcore.hh"

namespace cspdual {

// First-order formulae with equality, conjunction, disjunction and
// existential quantification.
struct FOFormula {
  enum class Kind { truth, falsity, atom, equal, conj, disj, exists };
  Kind kind = Kind::truth;
  std::string relation;           // atom
  std::vector<std::string> vars;  // atom arguments, the two sides of equal, or the bound variables
  std::vector<FOFormula> parts;   // conj/disj operands, or the single body of exists

  static FOFormula top() { return {}; }
  static FOFormula atom(std::string rel, std::vector<std::string> args);
  static FOFormula eq(std::string a, std::string b);
  static FOFormula all_of(std::vector<FOFormula> parts);
  static FOFormula any_of(std::vector<FOFormula> parts);
  static FOFormula exists(std::vector<std::string> bound, FOFormula body);

  bool operator==(const FOFormula&) const = default;
};

bool eval_fo(const FOFormula& f, const Structure& s, std::map<std::string, int>& env);
std::string fo_to_string(const FOFormula& f);

struct RelationDefinition {
  std::string name;
  std::vector<std::string> vars;  // arity * dimension variables
  FOFormula body;

  bool operator==(const RelationDefinition&) const = default;
};

struct Interpretation {
  int dimension = 1;
  std::vector<std::string> params;
  Signature source, target;
  std::vector<std::string> universe_vars;  // dimension variables
  FOFormula universe;
  std::vector<RelationDefinition> relations;  // parallel to target.relations

  bool operator==(const Interpretation&) const = default;
};

// Universe tuples are numbered in lexicographic order.
Structure apply_interpretation(const Interpretation& in, const Structure& src, const std::vector<int>& params);

// ({0,1}; R0 = {0}, R1 = {1}, Eq = equality).
Structure equality_csp_template();

struct ImplicationDigraph {
  int arity = 0;
  std::vector<Row> vertices;  // rows of proj_u
  std::vector<std::pair<int, int>> arcs;
  std::vector<int> component;  // strong component per vertex
  int components = 0;
  std::string to_dot(const Algebra& alg) const;
};

// Throws when no sink component lies in C or no source component in D \ C.
ImplicationDigraph implication_digraph(const Implication& i, const Algebra& alg);

struct Equivalence {
  Implication power;  // the witness composed with itself
  PPFormula theta;    // free variables u then the non-shared part of v
  std::vector<int> order;                         // positions of u: non-shared first, then shared
  std::vector<std::pair<Row, Row>> pairs;         // related rows of proj_u, in reordered positions
  std::vector<std::vector<Row>> classes;          // sorted by least member
  bool theta_matches = true;                      // tuple-level theta agrees with the row relation
};

// Throws when the relation is not an equivalence or has fewer than 2 classes.
Equivalence build_equivalence(const Implication& i, const Algebra& alg);

enum class ReductionKind { finite_balanced, orbit_balanced, equality };

struct Reduction {
  ReductionKind kind = ReductionKind::finite_balanced;
  Interpretation interp;
  std::shared_ptr<const Algebra> target;  // the template expanded by the new relations
  std::vector<std::string> notes;         // choices made while emitting
};

Reduction emit_reduction(const Implication& witness, std::shared_ptr<const Algebra> tmpl);
Reduction emit_equality_reduction(const EqualityDefinition& def, std::shared_ptr<const Algebra> tmpl);

// Satisfiability of a structure over (a subset of) the target relations.
bool target_solvable(const Algebra& target, const Structure& s);

struct ReductionReport {
  bool pass = true;
  int n = 0;
  std::size_t structures = 0;
  std::size_t parameter_tuples = 0;
  std::size_t skipped_small = 0;  // fewer elements than parameters
  std::string counterexample;
};

ReductionReport verify_reduction(const Interpretation& in, const Structure& src_template, const Algebra& target,
                                 int n);

// Unreachability of t from s in an undirected graph as an equality-CSP instance.
Structure unreachability_instance(int vertices, const std::vector<std::pair<int, int>>& edges, int s, int t);

struct ChainReport {
  bool pass = true;
  std::size_t cases = 0;
  std::string counterexample;
};

// Every graph on up to max_vertices vertices and every pair s != t.
ChainReport verify_reduction_chain(const Reduction& red, int max_vertices);

}  // namespace cspdual
