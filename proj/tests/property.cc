#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "common.hh"
#include "cspdual/duality.hh"
#include "cspdual/hardness.hh"
#include "cspdual/implications.hh"
#include "cspdual/minimality.hh"
#include "cspdual/textio.hh"
#include "generators.hh"
#include "orbit_mapping.hh"

using namespace cspdual;
using testing::coin;
using testing::uniform;

namespace {

std::vector<Assignment> all_solutions(const Instance& inst, const FiniteAlgebra& alg) {
  const int n = static_cast<int>(inst.variables.size());
  const int d = alg.domain_size();
  std::vector<Assignment> out;
  Assignment a(n, 0);
  while (true) {
    bool ok = true;
    for (const auto& c : inst.constraints) {
      Tuple t;
      for (int v : c.scope) t.push_back(a[v]);
      ok = ok && std::binary_search(c.extent.begin(), c.extent.end(), alg.encode(t));
    }
    if (ok) out.push_back(a);
    int i = n - 1;
    while (i >= 0 && ++a[i] == d) a[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

bool brute_core_with_constants(const Structure& s) {
  const int n = s.domain_size;
  for (int a = 0; a < n; ++a) {
    bool named = false;
    for (std::size_t r = 0; r < s.extents.size(); ++r)
      named = named || (s.sig.relations[r].arity == 1 && s.extents[r] == std::vector<Tuple>{{a}});
    if (!named) return false;
  }
  std::vector<int> f(n, 0);
  while (true) {
    bool hom = true;
    for (std::size_t r = 0; r < s.extents.size() && hom; ++r)
      for (const auto& t : s.extents[r]) {
        Tuple img;
        for (int x : t) img.push_back(f[x]);
        if (!std::binary_search(s.extents[r].begin(), s.extents[r].end(), img)) {
          hom = false;
          break;
        }
      }
    if (hom && std::set<int>(f.begin(), f.end()).size() != static_cast<std::size_t>(n)) return false;
    int i = n - 1;
    while (i >= 0 && ++f[i] == n) f[i--] = 0;
    if (i < 0) break;
  }
  return true;
}

Structure with_constants(Structure s, std::mt19937_64& rng) {
  Signature sig = s.sig;
  const int d = s.domain_size;
  for (int a = 0; a < d; ++a) sig.add("K" + std::to_string(a), 1);
  Structure out(sig, d);
  out.extents = s.extents;
  out.extents.resize(sig.relations.size());
  for (int a = 0; a < d; ++a) {
    out.add_tuple(static_cast<int>(s.extents.size()) + a, {a});
    if (coin(rng, 0.2)) out.add_tuple(static_cast<int>(s.extents.size()) + a, {(a + 1) % d});
  }
  out.normalize();
  return out;
}

Implication renamed(const Implication& i, const std::string& prefix) {
  auto r = [&](const std::string& x) { return prefix + x; };
  PPFormula f = i.formula;
  for (auto& a : f.atoms)
    for (auto& x : a.args) x = r(x);
  for (auto& x : f.free_vars) x = r(x);
  std::vector<std::string> u, v;
  for (const auto& x : i.u) u.push_back(r(x));
  for (const auto& x : i.v) v.push_back(r(x));
  return Implication{f, u, v, i.C, i.D, {}, {}, {}, {}};
}

// eval_pp over the u variables followed by the v variables not in u.
Rows outer_relation(const Implication& i, const Algebra& alg) {
  PPFormula f = i.formula;
  f.free_vars = i.u;
  for (const auto& x : i.v)
    if (std::find(f.free_vars.begin(), f.free_vars.end(), x) == f.free_vars.end()) f.free_vars.push_back(x);
  return eval_pp(f, alg);
}

Implication leq_implication(const FiniteAlgebra& t) {
  Rows one{t.encode({1})};
  return check_implication({{Atom{"Leq", {"x", "y"}, nullptr}}, {"x", "y"}}, one, {"x"}, one, {"y"}, t);
}

}  // namespace

TEST_CASE("property: solve_brute agrees with find_homomorphism") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 400; ++trial) {
    Structure tmpl = testing::random_structure(rng, uniform(rng, 1, 4), uniform(rng, 0, 2), uniform(rng, 1, 2));
    FiniteAlgebra alg(tmpl);
    Instance inst = testing::random_instance(rng, alg, 4, 6);
    CHECK(solve_brute(inst, tmpl).has_value() ==
          find_homomorphism(instance_to_structure(inst, tmpl), tmpl).has_value());
  }
}

TEST_CASE("property: normalization and serialization are stable") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    Structure s = testing::random_structure(rng, uniform(rng, 0, 4), uniform(rng, 0, 2), uniform(rng, 0, 2));
    Structure again = s;
    again.normalize();
    CHECK(again == s);
    CHECK(parse_structure(print_structure(s)) == s);
  }
}

TEST_CASE("property: is_core_with_constants matches endomorphism enumeration") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    Structure s = testing::random_structure(rng, uniform(rng, 1, 3), uniform(rng, 0, 1), uniform(rng, 0, 2));
    if (coin(rng, 0.7)) s = with_constants(s, rng);
    CHECK(is_core_with_constants(s) == brute_core_with_constants(s));
  }
}

TEST_CASE("property: eval_pp is monotone and commutes with projection") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    FiniteAlgebra alg(testing::random_structure(rng, uniform(rng, 1, 3), 1, 2));
    PPFormula f = testing::random_formula(rng, alg, uniform(rng, 1, 4), 4);
    Rows base = eval_pp(f, alg);

    PPFormula more = f;
    more.atoms.push_back(testing::random_formula(rng, alg, 1, 4).atoms[0]);
    Rows narrowed = eval_pp(more, alg);
    CHECK(std::includes(base.begin(), base.end(), narrowed.begin(), narrowed.end()));

    const int arity = static_cast<int>(f.free_vars.size());
    std::vector<int> keep;
    PPFormula fewer = f;
    fewer.free_vars.clear();
    for (int i = 0; i < arity; ++i)
      if (coin(rng)) {
        keep.push_back(i);
        fewer.free_vars.push_back(f.free_vars[i]);
      }
    if (keep.empty()) continue;
    CHECK(project(alg, arity, base, keep) == eval_pp(fewer, alg));
  }
}

TEST_CASE("property: canonical structure maps iff the formula is satisfiable") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 300; ++trial) {
    Structure tmpl = testing::random_structure(rng, uniform(rng, 1, 3), uniform(rng, 0, 2), uniform(rng, 1, 2));
    FiniteAlgebra alg(tmpl);
    PPFormula f = testing::random_formula(rng, alg, uniform(rng, 1, 5), 4);
    CHECK(find_homomorphism(canonical_structure(f, tmpl.sig), tmpl).has_value() == !eval_pp(f, alg).empty());
  }
}

TEST_CASE("property: propagation keeps every solution and certifies every step") {
  std::mt19937_64 rng(16);
  int checked = 0, steps = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Structure tmpl = testing::random_structure(rng, uniform(rng, 1, 3), uniform(rng, 1, 2), uniform(rng, 1, 2));
    FiniteAlgebra alg(tmpl);
    Instance inst = testing::random_instance(rng, alg, 4, 6);
    std::vector<char> seen(inst.variables.size(), 0);
    for (const auto& c : inst.constraints)
      for (int v : c.scope) seen[v] = 1;
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) continue;

    DomainMap dm = one_minimality(inst, alg);
    ++checked;
    steps += static_cast<int>(dm.log.size());
    CHECK(all_solutions(apply_domains(inst, dm, alg), alg) == all_solutions(inst, alg));
    for (std::size_t s = 0; s < dm.log.size(); ++s) {
      TreeFormula t = derivation_to_tree(dm, dm.log[s].target, inst, alg, static_cast<int>(s));
      CHECK(validate_tree(t, 1));
      CHECK(eval_tree_root(t, alg) == dm.log[s].new_extent);
      CHECK(eval_tree_root(trim_minimal(t, alg), alg) == eval_tree_root(t, alg));
    }
    std::mt19937_64 sched(trial);
    CHECK(one_minimality(inst, alg, {&sched, false}) == dm);
  }
  CHECK(checked > 100);
  CHECK(steps > 100);
}

TEST_CASE("property: orbit propagation is schedule independent") {
  std::mt19937_64 rng(17);
  for (auto name : {"QLT", "RGEN"}) {
    auto t = builtin(name);
    for (int trial = 0; trial < 20; ++trial) {
      Instance inst = build_imax(testing::random_instance(rng, *t, 4, 5), *t, t->k(), t->l());
      DomainMap base = kl_minimality(inst, *t, t->k(), t->l());
      std::mt19937_64 sched(trial);
      CHECK(kl_minimality(inst, *t, t->k(), t->l(), {&sched, false}) == base);
    }
  }
}

TEST_CASE("property: implication flags survive renaming") {
  auto t_imp = testing::t_imp();
  auto qlt = builtin("QLT");
  std::vector<std::pair<const Algebra*, std::vector<Implication>>> sets{
      {t_imp.get(), harvest_atom_implications(*t_imp)}, {qlt.get(), harvest_atom_implications(*qlt)}};
  for (const auto& [alg, impls] : sets) {
    REQUIRE_FALSE(impls.empty());
    for (const auto& i : impls) {
      Implication r = renamed(i, "r_");
      Implication again = check_implication(r.formula, r.C, r.u, r.D, r.v, *alg);
      CHECK(again.flags == i.flags);
      CHECK(again.pi == i.pi);
    }
  }
}

TEST_CASE("property: composition is associative") {
  auto t = testing::t_imp();
  Implication a = leq_implication(*t);
  Implication left = compose(compose(a, a, *t), a, *t);
  Implication right = compose(a, compose(a, a, *t), *t);
  CHECK(outer_relation(left, *t) == outer_relation(right, *t));

  auto q = builtin("QLT");
  auto found = search_balanced(*q);
  REQUIRE(found.witness.has_value());
  const Implication& w = *found.witness;
  CHECK(outer_relation(compose(compose(w, w, *q), w, *q), *q) ==
        outer_relation(compose(w, compose(w, w, *q), *q), *q));
}

TEST_CASE("property: balanced witnesses re-check") {
  std::vector<std::shared_ptr<const Algebra>> algs{testing::t_imp(), builtin("QLT"), builtin("RGEN_PHI")};
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 30; ++trial)
    algs.push_back(std::make_shared<FiniteAlgebra>(
        testing::constant_template(2, {static_cast<unsigned>(uniform(rng, 0, 15))})));
  for (const auto& alg : algs) {
    auto r = search_balanced(*alg);
    if (!r.witness) continue;
    const Implication& w = *r.witness;
    ImplicationFlags f = check_implication(w.formula, w.C, w.u, w.D, w.v, *alg).flags;
    CHECK(f.stable);
    CHECK(f.balanced);
    CHECK(f.proper);
  }
}

TEST_CASE("property: orbit mappings compose") {
  int composed = 0;
  for (auto name : {"QLT", "RGEN"}) {
    auto t = builtin(name);
    auto impls = harvest_atom_implications(*t);
    for (const auto& a : impls)
      for (const auto& b : impls) {
        Implication c;
        try {
          c = compose(a, b, *t);
        } catch (const Error&) {
          continue;
        }
        ++composed;
        CHECK(testing::orbit_pairs(c, *t) ==
              testing::compose_pairs(testing::orbit_pairs(a, *t), testing::orbit_pairs(b, *t)));
      }
  }
  CHECK(composed > 0);
}

TEST_CASE("property: interpretations commute with isomorphisms") {
  auto t = testing::t_imp();
  auto def = search_equality_definition(*t, 6);
  REQUIRE(def.has_value());
  auto q = builtin("QLT");
  auto found = search_balanced(*q);
  REQUIRE(found.witness.has_value());
  std::vector<Interpretation> interps{emit_equality_reduction(*def, t).interp, emit_reduction(*found.witness, q).interp};

  std::mt19937_64 rng(19);
  for (const auto& in : interps)
    for (int trial = 0; trial < 40; ++trial) {
      const int n = uniform(rng, 2, 4);
      Structure src(in.source, n);
      for (std::size_t r = 0; r < in.source.relations.size(); ++r) {
        const int ar = in.source.relations[r].arity;
        for (int x = 0; x < n; ++x)
          for (int y = 0; y < (ar == 2 ? n : 1); ++y)
            if (coin(rng, 0.3)) src.add_tuple(static_cast<int>(r), ar == 2 ? Tuple{x, y} : Tuple{x});
      }
      src.normalize();
      std::vector<int> sigma(n);
      std::iota(sigma.begin(), sigma.end(), 0);
      std::shuffle(sigma.begin(), sigma.end(), rng);
      Structure moved(in.source, n);
      for (std::size_t r = 0; r < src.extents.size(); ++r)
        for (const auto& tp : src.extents[r]) {
          Tuple img;
          for (int x : tp) img.push_back(sigma[x]);
          moved.add_tuple(static_cast<int>(r), img);
        }
      moved.normalize();
      std::vector<int> params, moved_params;
      for (std::size_t p = 0; p < in.params.size(); ++p) {
        params.push_back(static_cast<int>(p));
        moved_params.push_back(sigma[p]);
      }
      CHECK(isomorphic(apply_interpretation(in, src, params), apply_interpretation(in, moved, moved_params)));
    }
}

TEST_CASE("property: obstruction harvests grow with the budget and stay critical") {
  std::vector<std::shared_ptr<const Algebra>> algs{testing::t_unary(), testing::t_imp(), builtin("RGEN")};
  for (const auto& alg : algs) {
    ObstructionSet prev = harvest_obstructions(*alg, 1);
    for (int b = 2; b <= 3; ++b) {
      ObstructionSet cur = harvest_obstructions(*alg, b);
      for (const auto& s : prev.structures)
        CHECK(std::any_of(cur.structures.begin(), cur.structures.end(),
                          [&](const Structure& o) { return isomorphic(o, s); }));
      for (const auto& s : cur.structures) {
        CHECK(is_critical(s, *alg));
        for (int drop = 0; drop < s.domain_size; ++drop) {
          std::vector<int> keep;
          for (int x = 0; x < s.domain_size; ++x)
            if (x != drop) keep.push_back(x);
          CHECK(maps_to_template(induced_substructure(s, keep), *alg));
        }
      }
      prev = cur;
    }
  }
}

TEST_CASE("property: no fixture has both a duality and a hardness witness") {
  for (const auto& alg : std::vector<std::shared_ptr<const Algebra>>{testing::t_unary(), builtin("RGEN")}) {
    CHECK_FALSE(search_balanced(*alg).witness.has_value());
    CHECK_FALSE(search_equality_definition(*alg, 6).has_value());
  }
  auto t = testing::t_imp();
  CHECK_FALSE(harvest_obstructions(*t, 3).same_members(harvest_obstructions(*t, 2)));
  auto q = builtin("QLT");
  CHECK_FALSE(verify_duality(*q, harvest_obstructions(*q, 3), 4).pass);
}

TEST_CASE("property: atomic types avoid every bound") {
  for (const auto& name : builtin_names()) {
    auto t = builtin(name);
    for (int m = 1; m <= 4; ++m)
      for (Row r : t->all_rows(m)) CHECK_FALSE(t->space().embeds_bound(t->space().type(m, r).diagram));
  }
}

TEST_CASE("property: orbit joins are sound") {
  std::mt19937_64 rng(20);
  for (auto name : {"QLT", "RGEN", "TFG"}) {
    auto t = builtin(name);
    const Rows& two = t->all_rows(2);
    for (int trial = 0; trial < 30; ++trial) {
      Rows s1, s2;
      for (Row r : two) {
        if (coin(rng)) s1.push_back(r);
        if (coin(rng)) s2.push_back(r);
      }
      std::vector<int> pos1{0, 1}, pos2{uniform(rng, 0, 1) == 0 ? 0 : 1, 2};
      Rows joined = orbit_join(*t, 3, s1, pos1, s2, pos2);
      Rows back = orbit_project(*t, 3, joined, pos1);
      CHECK(std::includes(s1.begin(), s1.end(), back.begin(), back.end()));
      back = orbit_project(*t, 3, joined, pos2);
      CHECK(std::includes(s2.begin(), s2.end(), back.begin(), back.end()));
    }
  }
}

TEST_CASE("property: orbit solver modes agree") {
  std::mt19937_64 rng(21);
  for (const auto& name : builtin_names()) {
    auto t = builtin(name);
    for (int trial = 0; trial < 25; ++trial) {
      Instance inst = testing::random_instance(rng, *t, 5, 6);
      CHECK(solve_orbit(inst, *t, SolveMode::theorem).verdict == solve_orbit(inst, *t, SolveMode::search).verdict);
    }
  }
}

TEST_CASE("property: emitted artifacts re-parse") {
  std::mt19937_64 rng(22);
  auto t = testing::t_imp();
  for (int trial = 0; trial < 50; ++trial) {
    Instance inst = testing::random_instance(rng, *t, 4, 5);
    CHECK(parse_instance(print_instance(inst, *t), *t) == inst);
  }
  auto q = builtin("QLT");
  for (int trial = 0; trial < 20; ++trial) {
    Instance inst = testing::random_instance(rng, *q, 4, 4);
    CHECK(parse_instance(print_instance(inst, *q), *q) == inst);
  }
  auto r = builtin("RGEN");
  ObstructionSet obs = harvest_obstructions(*r, 3);
  CHECK(parse_obstruction_set(print_obstruction_set(obs)).same_members(obs));
}
