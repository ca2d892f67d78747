#pragma once

#include <memory>
#include <string>

#include "cspdual/algebra.hh"
#include "cspdual/duality.hh"
#include "cspdual/hardness.hh"
#include "cspdual/minimality.hh"
#include "cspdual/orbits.hh"
#include "cspdual/relcore.hh"

namespace cspdual {

struct ParseError : Error {
  int line, column;
  ParseError(int line, int column, const std::string& what);
};

std::string read_file(const std::string& path);

// domain_size: N
// relation NAME/ARITY [symmetric]: (a,b) (c,d) ...
Structure parse_structure(const std::string& text);
std::string print_structure(const Structure& s);

// One `structure PROVENANCE` header per member, followed by a structure block.
ObstructionSet parse_obstruction_set(const std::string& text);
std::string print_obstruction_set(const ObstructionSet& obs);

// variables: x y ...
// constraint NAME(x,y)              extent of the template relation NAME
// constraint NAME(x,y): ROW ROW ... explicit extent, NAME kept as provenance
Instance parse_instance(const std::string& text, const Algebra& alg);
std::string print_instance(const Instance& inst, const Algebra& alg);

// orbit_template NAME, base, k, l, bound and relation lines.
std::shared_ptr<OrbitTemplate> parse_orbit_template(const std::string& text);
std::string print_orbit_template(const OrbitTemplate& t);

FOFormula parse_fo(const std::string& text);
Interpretation parse_interpretation(const std::string& text);
std::string print_interpretation(const Interpretation& in);

std::string print_domain_map(const DomainMap& dm, const Instance& inst, const Algebra& alg);

}  // namespace cspdual
