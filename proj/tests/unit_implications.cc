#include <doctest.h>

#include "common.hh"
#include "cspdual/hardness.hh"
#include "cspdual/implications.hh"

using namespace cspdual;

namespace {

Atom atom(const std::string& rel, std::vector<std::string> args) { return Atom{rel, std::move(args), nullptr}; }

Row orbit_row(const OrbitTemplate& t, const std::string& descriptor) {
  return t.space().intern(t.space().parse_descriptor(descriptor));
}

bool all_flags(const ImplicationFlags& f) {
  return f.is_implication && f.nontrivial && f.stable && f.proper && f.balanced;
}

Implication leq_implication(const FiniteAlgebra& t) {
  Rows one{t.encode({1})};
  return check_implication({{atom("Leq", {"x", "y"})}, {"x", "y"}}, one, {"x"}, one, {"y"}, t);
}

Implication qlt_implication(const OrbitTemplate& q) {
  Rows lt{orbit_row(q, "[0 1 : Lt(0,1)]")};
  return check_implication({{atom("Lt", {"y", "z"})}, {"x", "y", "z"}}, lt, {"x", "y"}, lt, {"x", "z"}, q);
}

}  // namespace

TEST_CASE("check_implication: Leq over T_IMP") {
  auto t = testing::t_imp();
  Implication i = leq_implication(*t);
  CHECK(all_flags(i.flags));
  CHECK(i.pi.empty());
}

TEST_CASE("check_implication: y<z with free x over QLT") {
  auto q = builtin("QLT");
  Implication i = qlt_implication(*q);
  CHECK(all_flags(i.flags));
  CHECK(i.pi == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("check_implication: a product formula is no implication") {
  auto t = testing::t_unary();
  Implication i = check_implication({{atom("R0", {"x"}), atom("R1", {"y"})}, {"x", "y"}}, {t->encode({0})}, {"x"},
                                    {t->encode({1})}, {"y"}, *t);
  CHECK_FALSE(i.flags.is_implication);
}

TEST_CASE("check_implication rejects repeated variables") {
  auto t = testing::t_imp();
  Rows one{t->encode({1})};
  CHECK_THROWS_AS(check_implication({{atom("Leq", {"x", "y"})}, {"x", "y"}}, {t->encode({1, 1})}, {"x", "x"}, one,
                                    {"y"}, *t),
                  Error);
}

TEST_CASE("harvest_atom_implications") {
  CHECK(harvest_atom_implications(*testing::t_unary()).empty());

  auto t = testing::t_imp();
  bool found = false;
  for (const auto& i : harvest_atom_implications(*t))
    found = found || (i.formula.atoms.size() == 1 && i.formula.atoms[0].relation == "Leq" && i.u.size() == 1 &&
                      i.C == Rows{t->encode({1})} && i.D == Rows{t->encode({1})});
  CHECK(found);

  auto phi = builtin("RGEN_PHI");
  Row e = orbit_row(*phi, "[0 1 : E(0,1) E(1,0)]");
  found = false;
  for (const auto& i : harvest_atom_implications(*phi))
    found = found || (i.formula.atoms[0].relation == "Phi" && i.u.size() == 2 && i.C == Rows{e} && i.D == Rows{e} &&
                      i.pi.empty());
  CHECK(found);
}

TEST_CASE("compose Leq with itself") {
  auto t = testing::t_imp();
  Implication i = leq_implication(*t);
  Implication c = compose(i, i, *t);
  CHECK(c.formula.atoms.size() == 2);
  CHECK(c.flags.is_implication);
  CHECK(c.flags.balanced);
  CHECK(c.C == Rows{t->encode({1})});
  CHECK(c.D == Rows{t->encode({1})});
}

TEST_CASE("compose the QLT implication with itself") {
  auto q = builtin("QLT");
  Implication i = qlt_implication(*q);
  Implication c = compose(i, i, *q);
  CHECK(all_flags(c.flags));
  CHECK(c.pi == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("compose rejects mismatched interfaces") {
  auto t = testing::t_imp();
  Implication i = leq_implication(*t);
  Rows zero{t->encode({0})};
  Implication j = check_implication({{atom("Leq", {"x", "y"})}, {"x", "y"}}, zero, {"y"}, zero, {"x"}, *t);
  CHECK_THROWS_AS(compose(i, j, *t), Error);
}

TEST_CASE("stabilize leaves stable implications alone") {
  auto t = testing::t_imp();
  Implication i = leq_implication(*t);
  Implication s = stabilize(i, *t);
  CHECK(s.formula.atoms.size() == i.formula.atoms.size());
  CHECK(s.flags.stable);

  auto q = builtin("QLT");
  Implication qi = qlt_implication(*q);
  CHECK(stabilize(qi, *q).formula.atoms.size() == 1);
}

TEST_CASE("stabilize rejects unbalanced input") {
  auto t = testing::t_unary();
  Implication i = check_implication({{atom("R0", {"x"}), atom("R1", {"y"})}, {"x", "y"}}, {t->encode({0})}, {"x"},
                                    {t->encode({1})}, {"y"}, *t);
  CHECK_THROWS_AS(stabilize(i, *t), Error);
}

TEST_CASE("search_balanced") {
  auto t = testing::t_imp();
  auto r = search_balanced(*t);
  REQUIRE(r.witness.has_value());
  CHECK(all_flags(r.witness->flags));

  auto u = search_balanced(*testing::t_unary());
  CHECK_FALSE(u.witness.has_value());
  CHECK(u.graph.vertices.empty());

  auto q = builtin("QLT");
  auto qr = search_balanced(*q);
  REQUIRE(qr.witness.has_value());
  const Implication& w = *qr.witness;
  CHECK(all_flags(check_implication(w.formula, w.C, w.u, w.D, w.v, *q).flags));
}

TEST_CASE("search_equality_definition") {
  FiniteAlgebra eqt(equality_csp_template());
  auto e = search_equality_definition(eqt, 6);
  REQUIRE(e.has_value());
  CHECK(e->formula.atoms.size() == 1);

  auto t = testing::t_imp();
  auto d = search_equality_definition(*t, 6);
  REQUIRE(d.has_value());
  CHECK(eval_pp(d->formula, *t) == t->equality_rows());
  CHECK(formula_to_string(d->formula) == "[x,y] : Leq(x,y) & Leq(y,x)");

  CHECK_FALSE(search_equality_definition(*builtin("QLT"), 6).has_value());
}

TEST_CASE("implication graph DOT export") {
  auto r = search_balanced(*testing::t_imp());
  std::string dot = r.graph.to_dot(*testing::t_imp());
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("->") != std::string::npos);
}
