#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cspdual {

using Tuple = std::vector<int>;
using Row = std::uint32_t;
using Rows = std::vector<Row>;  // sorted, duplicate-free

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RelationSymbol {
  std::string name;
  int arity = 1;
  bool symmetric = false;  // binary only; tuples are closed under swap

  bool operator==(const RelationSymbol&) const = default;
};

struct Signature {
  std::vector<RelationSymbol> relations;

  int index_of(const std::string& name) const;  // -1 when absent
  void add(const std::string& name, int arity, bool symmetric = false);
  bool operator==(const Signature&) const = default;
};

struct Structure {
  Signature sig;
  int domain_size = 0;
  std::vector<std::vector<Tuple>> extents;  // parallel to sig.relations

  Structure() = default;
  Structure(Signature s, int n);

  std::vector<Tuple>& extent(const std::string& name);
  const std::vector<Tuple>& extent(const std::string& name) const;
  void add_tuple(int rel, Tuple t);
  // Sort, dedupe, close symmetric relations, validate entries.
  void normalize();
  std::size_t tuple_count() const;
  bool operator==(const Structure&) const = default;
};

struct Constraint {
  std::vector<int> scope;  // indices into Instance::variables; repeats allowed
  Rows extent;             // rows in the algebra encoding of arity scope.size()
  std::string provenance;  // relation name, "derived" or "full"

  bool operator==(const Constraint&) const = default;
};

struct Instance {
  std::vector<std::string> variables;
  std::vector<Constraint> constraints;

  int var_index(const std::string& v) const;  // -1 when absent
  int add_variable(const std::string& v);     // returns existing index if present
  bool operator==(const Instance&) const = default;
};

using Assignment = std::vector<int>;  // indexed like Instance::variables

// Base-d row codes with position 0 most significant.
Row encode_tuple(const Tuple& t, int d);
Tuple decode_row(Row r, int arity, int d);
Row row_count(int arity, int d);  // d^arity, throws above 2^31
Rows rows_of(const std::vector<Tuple>& ts, int d);

std::optional<std::vector<int>> find_homomorphism(const Structure& src, const Structure& dst);
std::optional<Assignment> solve_brute(const Instance& inst, const Structure& tmpl);
Structure instance_to_structure(const Instance& inst, const Structure& tmpl);
Instance structure_to_instance(const Structure& s, const Structure& tmpl);
bool is_core_with_constants(const Structure& tmpl);

// Substructure induced on the listed elements, renumbered in list order.
Structure induced_substructure(const Structure& s, const std::vector<int>& keep);
// Elements that occur in no tuple are dropped.
Structure drop_isolated(const Structure& s);
bool is_connected(const Structure& s);
// Canonical labelling by exhaustive permutation; intended for at most 8 elements.
Structure canonical_form(const Structure& s);
bool isomorphic(const Structure& a, const Structure& b);

// Calls back once per isomorphism class of structures with 0..max_size
// elements, smaller sizes first. With loops=false no tuple repeats an element.
// Throws when a size needs more than 64 candidate tuples.
void for_each_structure(const Signature& sig, int max_size, const std::function<void(const Structure&)>& fn,
                        bool loops = true);

std::string tuple_to_string(const Tuple& t);

}  // namespace cspdual
