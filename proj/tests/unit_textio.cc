#include <doctest.h>

#include "common.hh"
#include "cspdual/textio.hh"

using namespace cspdual;

namespace {

// Line and column of the parse error thrown by fn, or (-1, -1).
template <class Fn>
std::pair<int, int> error_at(Fn fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return {e.line, e.column};
  }
  return {-1, -1};
}

}  // namespace

TEST_CASE("structure round trip") {
  Structure s = testing::load_structure("t_imp.tpl");
  CHECK(s.domain_size == 2);
  CHECK(s.extent("Leq").size() == 3);
  std::string text = print_structure(s);
  CHECK(parse_structure(text) == s);
  CHECK(print_structure(parse_structure(text)) == text);
}

TEST_CASE("structure parse errors carry positions") {
  CHECK(error_at([] { parse_structure("domain_size: 2\nrelation E/2: (0,5)\n"); }).first == 2);
  CHECK(error_at([] { parse_structure("domain_size: x\n"); }) == std::pair<int, int>{1, 14});
  CHECK(error_at([] { parse_structure("domain_size: 1\ncolour: red\n"); }).first == 2);
  CHECK(error_at([] { parse_structure("domain_size: 1\nrelation E/2: (0)\n"); }).first == 2);
}

TEST_CASE("comments and blank lines are skipped") {
  Structure s = parse_structure("# a comment\n\n  # indented\ndomain_size: 1\nrelation C/1: (0)\n");
  CHECK(s.extent("C") == std::vector<Tuple>{{0}});
}

TEST_CASE("instance round trip, finite") {
  auto t = testing::t_imp();
  Instance inst = testing::load_instance("unsat.ins", *t);
  CHECK(inst.variables == std::vector<std::string>{"x", "y"});
  CHECK(inst.constraints.size() == 3);
  CHECK(parse_instance(print_instance(inst, *t), *t) == inst);

  Instance explicit_rows = parse_instance("variables: x y\nconstraint Leq(y,x): (0,0)\n", *t);
  CHECK(explicit_rows.constraints[0].extent == Rows{t->encode({0, 0})});
  CHECK(explicit_rows.constraints[0].provenance == "Leq");
}

TEST_CASE("instance round trip, orbit") {
  auto q = builtin("QLT");
  Instance inst = parse_instance("variables: a b\nconstraint Lt(a,b): [0 1 : Lt(0,1)]\n", *q);
  CHECK(inst.constraints[0].extent.size() == 1);
  CHECK(parse_instance(print_instance(inst, *q), *q) == inst);
}

TEST_CASE("instance parse errors") {
  auto t = testing::t_imp();
  CHECK(error_at([&] { parse_instance("variables: x\nconstraint Nope(x)\n", *t); }).first == 2);
  CHECK(error_at([&] { parse_instance("variables: x\nconstraint Leq(x,z)\n", *t); }).first == 2);
  CHECK(error_at([&] { parse_instance("variables: x\nconstraint Leq(x)\n", *t); }).first == 2);
}

TEST_CASE("obstruction set round trip") {
  auto r = builtin("RGEN");
  ObstructionSet obs = harvest_obstructions(*r, 2);
  std::string text = print_obstruction_set(obs);
  ObstructionSet back = parse_obstruction_set(text);
  CHECK(back.same_members(obs));
  CHECK(back.provenance == obs.provenance);
  CHECK(print_obstruction_set(back) == text);
}

TEST_CASE("orbit template round trip") {
  for (auto name : {"QLT", "RGEN", "TFG"}) {
    auto t = builtin(name);
    std::string text = print_orbit_template(*t);
    auto back = parse_orbit_template(text);
    CHECK(print_orbit_template(*back) == text);
    CHECK(back->all_rows(3).size() == t->all_rows(3).size());
  }
}

TEST_CASE("orbit template rejects relations above the bounds") {
  std::string text =
      "orbit_template X\nbase E/2 symmetric\nk: 2\nl: 2\nbound 1: E(0,0)\nrelation Big/3: [0 1 2 :]\n";
  CHECK(error_at([&] { parse_orbit_template(text); }).first == 6);
}

TEST_CASE("parse_fo") {
  FOFormula f = parse_fo("(exists z . (E(x,z) & z = y)) | false");
  CHECK(f.kind == FOFormula::Kind::disj);
  CHECK(fo_to_string(f) == "((exists z . (E(x,z) & z = y)) | false)");
  CHECK(parse_fo(fo_to_string(f)) == f);
  CHECK(parse_fo("true").kind == FOFormula::Kind::truth);
  CHECK(error_at([] { parse_fo("E(x,"); }).first == 1);
}

TEST_CASE("interpretation round trip") {
  auto t = testing::t_imp();
  auto def = search_equality_definition(*t, 6);
  REQUIRE(def.has_value());
  Interpretation in = emit_equality_reduction(*def, t).interp;
  std::string text = print_interpretation(in);
  CHECK(parse_interpretation(text) == in);

  auto q = builtin("QLT");
  auto found = search_balanced(*q);
  REQUIRE(found.witness.has_value());
  Interpretation orbit = emit_reduction(*found.witness, q).interp;
  CHECK(parse_interpretation(print_interpretation(orbit)) == orbit);
}

TEST_CASE("print_domain_map") {
  auto t = testing::t_imp();
  Instance inst = testing::load_instance("sat.ins", *t);
  std::string text = print_domain_map(one_minimality(inst, *t), inst, *t);
  CHECK(text.find("D(x) = { (0) }") != std::string::npos);
}

TEST_CASE("read_file on a missing path") { CHECK_THROWS_AS(read_file("/nonexistent/file"), Error); }
