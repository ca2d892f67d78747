#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cspdual/algebra.hh"
#include "cspdual/relcore.hh"

namespace cspdual {

struct Atom {
  std::string relation;
  std::vector<std::string> args;
  // Explicit extent for copies of derived constraints; the template relation
  // named by `relation` is used when this is null.
  std::shared_ptr<const Rows> extent;

  bool operator==(const Atom& o) const;
};

struct PPFormula {
  std::vector<Atom> atoms;
  std::vector<std::string> free_vars;

  // Free variables first, then the remaining atom variables in order of appearance.
  std::vector<std::string> variables() const;
};

struct TreeFormula {
  std::vector<std::string> root;
  Atom atom;
  std::vector<TreeFormula> children;

  std::size_t atom_count() const;
  std::vector<std::string> variables() const;
  // Atoms in post-order; free variables are the root.
  PPFormula to_pp() const;
};

struct TheoreticalBounds {
  // Values saturate at UINT64_MAX; the flag records it.
  struct Value {
    std::uint64_t v = 0;
    bool saturated = false;
    std::string str() const;
  };
  Value d, K, L, Z, P, M;
};

// Relation over f.free_vars, rows in the algebra encoding.
Rows eval_pp(const PPFormula& f, const Algebra& alg);
Rows project(const Algebra& alg, int arity, const Rows& rel, std::span<const int> positions);
bool validate_tree(const TreeFormula& t, int k);
Structure canonical_structure(const PPFormula& f, const Signature& sig);
// Greedily drops subtrees while the root projection stays the same.
TreeFormula trim_minimal(const TreeFormula& t, const Algebra& alg);
// Descends to the smallest subtree whose own root projection is empty, then trims.
TreeFormula normalize_empty_witness(const TreeFormula& t, const Algebra& alg);
Rows eval_tree_root(const TreeFormula& t, const Algebra& alg);

TheoreticalBounds finite_bounds(int domain_size);
TheoreticalBounds orbit_bounds(std::uint64_t orbits_of_k_tuples, int k);

std::string atom_to_string(const Atom& a, const Algebra* alg = nullptr);
std::string formula_to_string(const PPFormula& f, const Algebra* alg = nullptr);
std::string tree_to_string(const TreeFormula& t, const Algebra* alg = nullptr);

}  // namespace cspdual
