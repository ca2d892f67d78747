#pragma once

#include <memory>
#include <string>

#include "cspdual/algebra.hh"
#include "cspdual/orbits.hh"
#include "cspdual/relcore.hh"
#include "cspdual/textio.hh"

namespace testing {

inline std::string fixture(const std::string& name) { return std::string(CSPDUAL_FIXTURES) + "/" + name; }

inline cspdual::Structure load_structure(const std::string& name) {
  return cspdual::parse_structure(cspdual::read_file(fixture(name)));
}

inline std::shared_ptr<cspdual::FiniteAlgebra> t_unary() {
  return std::make_shared<cspdual::FiniteAlgebra>(load_structure("t_unary.tpl"));
}

inline std::shared_ptr<cspdual::FiniteAlgebra> t_imp() {
  return std::make_shared<cspdual::FiniteAlgebra>(load_structure("t_imp.tpl"));
}

inline cspdual::Instance load_instance(const std::string& name, const cspdual::Algebra& alg) {
  return cspdual::parse_instance(cspdual::read_file(fixture(name)), alg);
}

}  // namespace testing
