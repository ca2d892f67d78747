// Expected values computed independently (orbit counting by Burnside's
// lemma, Stirling sums over labelled graphs, hand enumeration) and frozen.
#include <doctest.h>

#include "common.hh"
#include "cspdual/duality.hh"
#include "cspdual/hardness.hh"

using namespace cspdual;

namespace {

std::vector<std::size_t> type_counts(const OrbitTemplate& t, int max_arity) {
  std::vector<std::size_t> out;
  for (int m = 1; m <= max_arity; ++m) out.push_back(t.all_rows(m).size());
  return out;
}

std::vector<std::string> summaries(const ObstructionSet& obs) {
  std::vector<std::string> out;
  for (const auto& s : obs.structures) out.push_back(structure_summary(s));
  return out;
}

Reduction t_imp_equality_reduction() {
  auto t = testing::t_imp();
  auto def = search_equality_definition(*t, 6);
  REQUIRE(def.has_value());
  return emit_equality_reduction(*def, t);
}

}  // namespace

TEST_CASE("frozen: atomic type counts") {
  CHECK(type_counts(*builtin("QLT"), 5) == std::vector<std::size_t>{1, 3, 13, 75, 541});
  CHECK(type_counts(*builtin("RGEN"), 5) == std::vector<std::size_t>{1, 3, 15, 127, 1895});
  CHECK(type_counts(*builtin("TFG"), 5) == std::vector<std::size_t>{1, 3, 14, 98, 1004});
}

TEST_CASE("frozen: structures enumerated by duality checks") {
  auto u = testing::t_unary();
  DualityReport ru = verify_duality(*u, harvest_obstructions(*u, 2), 4);
  CHECK(ru.pass);
  CHECK(ru.structures == 70);

  auto r = builtin("RGEN");
  DualityReport rr = verify_duality(*r, harvest_obstructions(*r, 4), 4);
  CHECK(rr.pass);
  CHECK(rr.structures == 49261);
}

TEST_CASE("frozen: obstruction sets") {
  CHECK(summaries(harvest_obstructions(*testing::t_unary(), 4)) == std::vector<std::string>{"1: R0(0) R1(0)"});
  CHECK(summaries(harvest_obstructions(*builtin("RGEN"), 4)) ==
        std::vector<std::string>{"1: E(0,0)", "1: N(0,0)", "2: E(0,1) E(1,0) N(0,1) N(1,0)"});
  std::vector<std::size_t> sizes;
  auto t = testing::t_imp();
  for (int b = 1; b <= 3; ++b) sizes.push_back(harvest_obstructions(*t, b).structures.size());
  CHECK(sizes == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("frozen: reduction verification over T_IMP") {
  Reduction red = t_imp_equality_reduction();
  ReductionReport rep = verify_reduction(red.interp, equality_csp_template(), *red.target, 4);
  CHECK(rep.pass);
  CHECK(rep.structures == 722177);
  CHECK(rep.skipped_small == 0);
}

TEST_CASE("frozen: reduction verification over QLT") {
  auto q = builtin("QLT");
  auto found = search_balanced(*q);
  REQUIRE(found.witness.has_value());
  CHECK(formula_to_string(found.witness->formula) == "[w] : Lt(x1,x2)");
  Reduction red = emit_reduction(*found.witness, q);
  ReductionReport rep = verify_reduction(red.interp, equality_csp_template(), *red.target, 3);
  CHECK(rep.pass);
  CHECK(rep.structures == 5864);
  CHECK(rep.skipped_small == 9);
  CHECK(rep.parameter_tuples == 34640);
}

TEST_CASE("frozen: unreachability chain cases") {
  ChainReport rep = verify_reduction_chain(t_imp_equality_reduction(), 4);
  CHECK(rep.pass);
  CHECK(rep.cases == 820);
}

TEST_CASE("frozen: classification verdicts") {
  ClassifyBudgets b;
  b.verify_n = 3;
  CHECK(classify(testing::t_unary(), b).verdict == ClassVerdict::fo_definable);
  CHECK(classify(testing::t_imp(), b).verdict == ClassVerdict::l_hard);
  CHECK(classify(builtin("RGEN"), b).verdict == ClassVerdict::fo_definable);
  b.obstruction_budget = 2;
  CHECK(classify(builtin("TFG"), b).verdict == ClassVerdict::unknown);
}

TEST_CASE("frozen: equality definition over T_IMP") {
  auto def = search_equality_definition(*testing::t_imp(), 6);
  REQUIRE(def.has_value());
  CHECK(formula_to_string(def->formula) == "[x,y] : Leq(x,y) & Leq(y,x)");
}
