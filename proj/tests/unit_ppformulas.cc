#include <doctest.h>

#include "common.hh"
#include "cspdual/ppformulas.hh"

using namespace cspdual;

namespace {

Atom atom(const std::string& rel, std::vector<std::string> args) { return Atom{rel, std::move(args), nullptr}; }

TreeFormula leaf(std::vector<std::string> root, Atom a) { return TreeFormula{std::move(root), std::move(a), {}}; }

Rows rows(const FiniteAlgebra& alg, std::vector<Tuple> ts) {
  Rows out;
  for (const auto& t : ts) out.push_back(alg.encode(t));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("eval_pp over T_IMP") {
  auto t = testing::t_imp();
  CHECK(eval_pp({{atom("Leq", {"x", "y"})}, {"x", "y"}}, *t) == rows(*t, {{0, 0}, {0, 1}, {1, 1}}));
  CHECK(eval_pp({{atom("Leq", {"x", "y"}), atom("Leq", {"y", "z"})}, {"x", "z"}}, *t) ==
        rows(*t, {{0, 0}, {0, 1}, {1, 1}}));
  CHECK(eval_pp({{atom("R0", {"x"}), atom("R1", {"x"})}, {"x"}}, *t).empty());
}

TEST_CASE("eval_pp with an isolated free variable") {
  auto t = testing::t_imp();
  Rows r = eval_pp({{atom("R0", {"x"})}, {"x", "w"}}, *t);
  CHECK(r == rows(*t, {{0, 0}, {0, 1}}));
}

TEST_CASE("eval_pp rejects unknown relations") {
  auto t = testing::t_imp();
  CHECK_THROWS_AS(eval_pp({{atom("Nope", {"x"})}, {"x"}}, *t), Error);
}

TEST_CASE("project") {
  auto t = testing::t_imp();
  std::vector<int> second{1}, first{0};
  CHECK(project(*t, 2, rows(*t, {{0, 1}, {1, 1}}), second) == rows(*t, {{1}}));
  CHECK(project(*t, 2, t->relation_rows("Leq"), first) == rows(*t, {{0}, {1}}));
  CHECK(project(*t, 2, {}, first).empty());
  std::vector<int> bad{2};
  CHECK_THROWS_AS(project(*t, 2, t->relation_rows("Leq"), bad), Error);
}

TEST_CASE("validate_tree") {
  CHECK(validate_tree(leaf({"x"}, atom("Leq", {"x", "y"})), 1));
  CHECK_FALSE(validate_tree(leaf({"q"}, atom("Leq", {"x", "y"})), 1));

  TreeFormula bad = leaf({"x"}, atom("Leq", {"x", "y"}));
  bad.children.push_back(leaf({"y"}, atom("Leq", {"y", "z"})));
  bad.children.push_back(leaf({"y"}, atom("Leq", {"y", "z"})));
  CHECK_FALSE(validate_tree(bad, 1));

  TreeFormula good = leaf({"x"}, atom("Leq", {"x", "y"}));
  good.children.push_back(leaf({"y"}, atom("Leq", {"y", "z"})));
  good.children.push_back(leaf({"x"}, atom("R0", {"x"})));
  CHECK(validate_tree(good, 1));
}

TEST_CASE("canonical_structure") {
  auto t = testing::t_imp();
  const Signature& sig = t->structure().sig;
  Structure s = canonical_structure({{atom("R0", {"x"}), atom("R1", {"x"})}, {"x"}}, sig);
  CHECK(s.domain_size == 1);
  CHECK(s.extent("R0") == std::vector<Tuple>{{0}});
  CHECK(s.extent("R1") == std::vector<Tuple>{{0}});

  Structure path = canonical_structure({{atom("Leq", {"x", "y"}), atom("Leq", {"y", "z"})}, {"x", "z"}}, sig);
  CHECK(path.domain_size == 3);
  CHECK(path.extent("Leq").size() == 2);

  Structure lone = canonical_structure({{}, {"x"}}, sig);
  CHECK(lone.domain_size == 1);
  CHECK(lone.tuple_count() == 0);
}

TEST_CASE("trim_minimal") {
  auto t = testing::t_imp();
  TreeFormula dup = leaf({"x"}, atom("R0", {"x"}));
  dup.children.push_back(leaf({"x"}, atom("R0", {"x"})));
  TreeFormula trimmed = trim_minimal(dup, *t);
  CHECK(trimmed.atom_count() == 1);
  CHECK(eval_tree_root(trimmed, *t) == eval_tree_root(dup, *t));

  TreeFormula witness = leaf({"x"}, atom("Leq", {"x", "y"}));
  witness.children.push_back(leaf({"x"}, atom("R1", {"x"})));
  witness.children.push_back(leaf({"y"}, atom("R0", {"y"})));
  REQUIRE(eval_tree_root(witness, *t).empty());
  CHECK(trim_minimal(witness, *t).atom_count() == 3);

  TreeFormula single = leaf({"x"}, atom("Leq", {"x", "y"}));
  CHECK(trim_minimal(single, *t).atom_count() == 1);
}

TEST_CASE("theoretical bounds") {
  auto b = finite_bounds(2);
  CHECK(b.d.v == 34);  // (2^2)^2 * 2 + 2
  CHECK_FALSE(b.d.saturated);
  auto o = orbit_bounds(3, 2);
  CHECK(o.K.v == 3);
  CHECK(o.L.v == 8);
  CHECK(o.P.v == 3 * 3 * (64 * 2 + 3) * (64 * 2 + 3));
  CHECK(o.M.v == o.P.v * (2 * 64 + 1) + 1);
}

TEST_CASE("formula printing") {
  auto t = testing::t_imp();
  PPFormula f{{atom("Leq", {"x", "y"}), atom("Leq", {"y", "x"})}, {"x", "y"}};
  CHECK(formula_to_string(f) == "[x,y] : Leq(x,y) & Leq(y,x)");
}
