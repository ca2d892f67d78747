#include <doctest.h>

#include "common.hh"
#include "cspdual/duality.hh"

using namespace cspdual;

namespace {

std::vector<std::string> summaries(const ObstructionSet& obs) {
  std::vector<std::string> out;
  for (const auto& s : obs.structures) out.push_back(structure_summary(s));
  return out;
}

ClassifyBudgets quick() {
  ClassifyBudgets b;
  b.verify_n = 3;
  return b;
}

}  // namespace

TEST_CASE("harvest on T_UNARY") {
  auto t = testing::t_unary();
  ObstructionSet obs = harvest_obstructions(*t, 2);
  CHECK(summaries(obs) == std::vector<std::string>{"1: R0(0) R1(0)"});
  CHECK(obs.provenance.size() == 1);
  for (const auto& s : obs.structures) CHECK(is_critical(s, *t));
}

TEST_CASE("harvest on RGEN") {
  auto r = builtin("RGEN");
  ObstructionSet obs = harvest_obstructions(*r, 2);
  REQUIRE(obs.structures.size() == 3);
  for (const auto& s : obs.structures) {
    CHECK_FALSE(maps_to_template(s, *r));
    CHECK(is_critical(s, *r));
  }
  CHECK(harvest_obstructions(*r, 1).structures.size() == 2);
}

TEST_CASE("is_critical") {
  auto t = testing::t_imp();
  Signature sig = template_signature(*t);
  Structure s(sig, 1);
  s.add_tuple(sig.index_of("R0"), {0});
  s.add_tuple(sig.index_of("R1"), {0});
  s.normalize();
  CHECK(is_critical(s, *t));
  Structure extra = s;
  extra.add_tuple(sig.index_of("Leq"), {0, 0});
  extra.normalize();
  CHECK_FALSE(maps_to_template(extra, *t));
  CHECK_FALSE(is_critical(extra, *t));
}

TEST_CASE("verify_duality") {
  auto t = testing::t_unary();
  ObstructionSet obs = harvest_obstructions(*t, 2);
  DualityReport rep = verify_duality(*t, obs, 3);
  CHECK(rep.pass);
  CHECK(rep.structures > 0);

  ObstructionSet empty;
  empty.sig = obs.sig;
  DualityReport fail = verify_duality(*t, empty, 2);
  CHECK_FALSE(fail.pass);
  CHECK_FALSE(fail.counterexample.empty());
}

TEST_CASE("verify_duality with several jobs agrees") {
  auto r = builtin("RGEN");
  ObstructionSet obs = harvest_obstructions(*r, 2);
  DualityReport one = verify_duality(*r, obs, 3, 1);
  DualityReport two = verify_duality(*r, obs, 3, 2);
  CHECK(one.pass == two.pass);
  CHECK(one.structures == two.structures);
}

TEST_CASE("fo_recognize") {
  auto r = builtin("RGEN");
  ObstructionSet obs = harvest_obstructions(*r, 2);
  CHECK_FALSE(fo_recognize(testing::load_instance("rgen_loop.ins", *r), obs, *r));
  CHECK(fo_recognize(testing::load_instance("rgen_edge.ins", *r), obs, *r));
}

TEST_CASE("classify T_UNARY") {
  auto rep = classify(testing::t_unary(), quick());
  CHECK(rep.verdict == ClassVerdict::fo_definable);
  CHECK(verdict_name(rep.verdict) == "FO_DEFINABLE");
  REQUIRE(rep.obstructions.has_value());
  CHECK(rep.obstructions->structures.size() == 1);
}

TEST_CASE("classify T_IMP") {
  auto rep = classify(testing::t_imp(), quick());
  CHECK(rep.verdict == ClassVerdict::l_hard);
  REQUIRE(rep.reduction.has_value());
  REQUIRE(rep.reduction_report.has_value());
  CHECK(rep.reduction_report->pass);
}

TEST_CASE("classify rejects a template that is not a core with constants") {
  Signature sig;
  sig.add("Leq", 2);
  Structure leq(sig, 2);
  leq.add_tuple(0, {0, 0});
  leq.add_tuple(0, {0, 1});
  leq.add_tuple(0, {1, 1});
  leq.normalize();
  CHECK_THROWS_AS(classify(std::make_shared<FiniteAlgebra>(leq), quick()), Error);
}

TEST_CASE("structure_summary") {
  Signature sig;
  sig.add("E", 2);
  Structure s(sig, 2);
  s.add_tuple(0, {1, 0});
  s.add_tuple(0, {0, 1});
  s.normalize();
  CHECK(structure_summary(s) == "2: E(0,1) E(1,0)");
}
