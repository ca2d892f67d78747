#include "cspdual/duality.hh"

#include <algorithm>
#include <atomic>
#include <map>
#include <sstream>
#include <thread>

#include "cspdual/minimality.hh"
#include "cspdual/orbits.hh"

namespace cspdual {

std::string structure_summary(const Structure& s) {
  std::ostringstream os;
  os << s.domain_size << ":";
  for (std::size_t r = 0; r < s.extents.size(); ++r)
    for (const auto& t : s.extents[r]) os << ' ' << s.sig.relations[r].name << tuple_to_string(t);
  return os.str();
}

bool ObstructionSet::same_members(const ObstructionSet& o) const {
  if (structures.size() != o.structures.size()) return false;
  std::vector<std::string> a, b;
  for (const auto& s : structures) a.push_back(structure_summary(canonical_form(s)));
  for (const auto& s : o.structures) b.push_back(structure_summary(canonical_form(s)));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

Signature template_signature(const Algebra& alg) {
  if (auto* ot = dynamic_cast<const OrbitTemplate*>(&alg)) return ot->relation_signature();
  if (auto* fa = dynamic_cast<const FiniteAlgebra*>(&alg)) return fa->structure().sig;
  throw Error("unsupported template kind");
}

bool maps_to_template(const Structure& s, const Algebra& alg) {
  if (auto* fa = dynamic_cast<const FiniteAlgebra*>(&alg)) return find_homomorphism(s, fa->structure()).has_value();
  return target_solvable(alg, s);
}

namespace {

Structure without_tuple(const Structure& s, std::size_t r, std::size_t i) {
  Structure out = s;
  Tuple t = s.extents[r][i];
  auto& ext = out.extents[r];
  ext.erase(ext.begin() + static_cast<std::ptrdiff_t>(i));
  if (s.sig.relations[r].symmetric && t.size() == 2 && t[0] != t[1]) {
    Tuple rev{t[1], t[0]};
    ext.erase(std::remove(ext.begin(), ext.end(), rev), ext.end());
  }
  return out;
}

Structure without_element(const Structure& s, int e) {
  std::vector<int> keep;
  for (int a = 0; a < s.domain_size; ++a)
    if (a != e) keep.push_back(a);
  return induced_substructure(s, keep);
}

// Drops elements, then tuples, while the structure still fails to map.
Structure trim_to_critical(Structure s, const Algebra& alg) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (int e = 0; e < s.domain_size && !changed; ++e) {
      Structure t = without_element(s, e);
      if (!maps_to_template(t, alg)) s = std::move(t), changed = true;
    }
    for (std::size_t r = 0; r < s.extents.size() && !changed; ++r)
      for (std::size_t i = 0; i < s.extents[r].size() && !changed; ++i) {
        Structure t = without_tuple(s, r, i);
        if (!maps_to_template(t, alg)) s = std::move(t), changed = true;
      }
  }
  return canonical_form(drop_isolated(s));
}

std::optional<Structure> derivation_obstruction(const Structure& s, const Algebra& alg, const Signature& sig) {
  Instance inst;
  DomainMap dm;
  if (auto* fa = dynamic_cast<const FiniteAlgebra*>(&alg)) {
    inst = structure_to_instance(s, fa->structure());
    dm = one_minimality(inst, alg);
  } else {
    inst = build_imax(orbit_structure_to_instance(s, dynamic_cast<const OrbitTemplate&>(alg)), alg, alg.k(), alg.l());
    dm = kl_minimality(inst, alg, alg.k(), alg.l());
  }
  if (!dm.trivial()) return std::nullopt;
  int set = 0;
  while (!dm.extents[set].empty()) ++set;
  TreeFormula tree = normalize_empty_witness(derivation_to_tree(dm, set, inst, alg), alg);
  Structure c = canonical_structure(tree.to_pp(), sig);
  if (maps_to_template(c, alg)) return std::nullopt;
  return trim_to_critical(std::move(c), alg);
}

bool structure_less(const Structure& a, const Structure& b) {
  if (a.domain_size != b.domain_size) return a.domain_size < b.domain_size;
  if (a.tuple_count() != b.tuple_count()) return a.tuple_count() < b.tuple_count();
  return structure_summary(a) < structure_summary(b);
}

}  // namespace

bool is_critical(const Structure& s, const Algebra& alg) {
  if (maps_to_template(s, alg)) return false;
  for (int e = 0; e < s.domain_size; ++e)
    if (!maps_to_template(without_element(s, e), alg)) return false;
  for (std::size_t r = 0; r < s.extents.size(); ++r)
    for (std::size_t i = 0; i < s.extents[r].size(); ++i)
      if (!maps_to_template(without_tuple(s, r, i), alg)) return false;
  return true;
}

ObstructionSet harvest_obstructions(const Algebra& alg, int size_budget) {
  ObstructionSet out;
  out.sig = template_signature(alg);
  std::map<std::string, std::pair<Structure, bool>> found;  // summary -> (structure, from derivations)
  auto add = [&](Structure s, bool derived) {
    auto key = structure_summary(s);
    auto it = found.find(key);
    if (it == found.end())
      found.emplace(key, std::make_pair(std::move(s), derived));
    else
      it->second.second = it->second.second || derived;
  };
  int reached = 0;
  try {
    for_each_structure(out.sig, size_budget, [&](const Structure& s) {
      reached = std::max(reached, s.domain_size);
      if (s.domain_size == 0 || !is_connected(s) || maps_to_template(s, alg)) return;
      if (auto d = derivation_obstruction(s, alg, out.sig)) add(std::move(*d), true);
      if (is_critical(s, alg)) add(canonical_form(s), false);
    });
  } catch (const Error& e) {
    out.notes.push_back("enumeration stopped after size " + std::to_string(reached) + ": " + e.what());
  }
  std::vector<std::pair<Structure, bool>> all;
  for (auto& [k, v] : found) all.push_back(std::move(v));
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return structure_less(a.first, b.first); });
  for (auto& [s, derived] : all) {
    out.structures.push_back(std::move(s));
    out.provenance.push_back(derived ? kDerivationHarvest : kCriticalEnumeration);
  }
  return out;
}

bool fo_recognize(const Structure& s, const ObstructionSet& obs) {
  for (const auto& o : obs.structures)
    if (find_homomorphism(o, s)) return false;
  return true;
}

bool fo_recognize(const Instance& inst, const ObstructionSet& obs, const Algebra& alg) {
  Structure s;
  if (auto* fa = dynamic_cast<const FiniteAlgebra*>(&alg))
    s = instance_to_structure(inst, fa->structure());
  else
    s = orbit_instance_to_structure(inst, dynamic_cast<const OrbitTemplate&>(alg));
  return fo_recognize(s, obs);
}

DualityReport verify_duality(const Algebra& alg, const ObstructionSet& obs, int n, int jobs) {
  DualityReport rep;
  rep.n = n;
  if (jobs <= 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* fa = dynamic_cast<const FiniteAlgebra*>(&alg);
  auto check = [&](const Structure& s) {
    bool sat = fa ? solve_brute(structure_to_instance(s, fa->structure()), fa->structure()).has_value()
                  : maps_to_template(s, alg);
    return sat == fo_recognize(s, obs);
  };
  std::vector<Structure> batch;
  auto flush = [&] {
    if (!rep.pass || batch.empty()) return;
    std::atomic<std::size_t> first_bad{batch.size()};
    auto work = [&](int w) {
      for (std::size_t i = static_cast<std::size_t>(w); i < batch.size(); i += static_cast<std::size_t>(jobs)) {
        if (i >= first_bad.load()) return;
        if (!check(batch[i])) {
          std::size_t cur = first_bad.load();
          while (i < cur && !first_bad.compare_exchange_weak(cur, i)) {
          }
          return;
        }
      }
    };
    if (jobs == 1) {
      work(0);
    } else {
      std::vector<std::thread> ts;
      for (int w = 0; w < jobs; ++w) ts.emplace_back(work, w);
      for (auto& t : ts) t.join();
    }
    if (first_bad.load() < batch.size()) {
      rep.pass = false;
      rep.structures += first_bad.load() + 1;
      rep.counterexample = structure_summary(batch[first_bad.load()]);
    } else {
      rep.structures += batch.size();
    }
    batch.clear();
  };
  for_each_structure(template_signature(alg), n, [&](const Structure& s) {
    if (!rep.pass) return;
    batch.push_back(s);
    if (batch.size() >= 4096) flush();
  });
  flush();
  return rep;
}

std::string verdict_name(ClassVerdict v) {
  switch (v) {
    case ClassVerdict::fo_definable:
      return "FO_DEFINABLE";
    case ClassVerdict::l_hard:
      return "L_HARD";
    case ClassVerdict::unknown:
      return "UNKNOWN";
  }
  return "";
}

ClassificationReport classify(std::shared_ptr<const Algebra> tmpl, const ClassifyBudgets& budgets) {
  const Algebra& alg = *tmpl;
  ClassificationReport rep;
  auto* fa = dynamic_cast<const FiniteAlgebra*>(&alg);
  if (fa) {
    if (!is_core_with_constants(fa->structure())) throw Error("classify: template is not a core with all constants");
    rep.bounds = finite_bounds(fa->domain_size());
  } else {
    rep.bounds = orbit_bounds(alg.all_rows(alg.k()).size(), alg.k());
  }
  auto log = [&](const std::string& s) { rep.log.push_back(s); };

  auto try_reduction = [&](Reduction red) {
    const bool orbit_target = red.target->orbit_mode();
    const int n = orbit_target ? std::min(budgets.verify_n, budgets.orbit_verify_n) : budgets.verify_n;
    ReductionReport rr = verify_reduction(red.interp, equality_csp_template(), *red.target, n);
    std::ostringstream os;
    os << "verify_reduction n=" << n << ": " << (rr.pass ? "PASS" : "FAIL") << " (" << rr.structures << " structures, "
       << rr.parameter_tuples << " parameter tuples, " << rr.skipped_small << " below parameter count)";
    if (!rr.pass) os << " counterexample " << rr.counterexample;
    log(os.str());
    for (const auto& note : red.notes) log("  " + note);
    if (!rr.pass) return false;
    rep.verdict = ClassVerdict::l_hard;
    rep.verified_up_to = n;
    rep.reduction = std::move(red);
    rep.reduction_report = rr;
    return true;
  };

  if (auto eq = search_equality_definition(alg, budgets.max_atoms)) {
    log("equality definition: " + formula_to_string(eq->formula, &alg));
    rep.equality = eq;
    if (try_reduction(emit_equality_reduction(*eq, tmpl))) return rep;
  } else {
    log("equality definition: none within " + std::to_string(budgets.max_atoms) + " atoms");
  }

  SearchBudget sb{budgets.max_atoms, budgets.max_compositions};
  BalancedSearchResult bal = search_balanced(alg, sb);
  {
    std::ostringstream os;
    os << "implication graph: " << bal.graph.vertices.size() << " vertices, " << bal.graph.arcs.size() << " arcs, "
       << bal.compositions_used << " compositions" << (bal.budget_exhausted ? " (budget exhausted)" : "");
    log(os.str());
  }
  if (bal.witness) {
    log("balanced witness: " + implication_to_string(*bal.witness, alg));
    rep.witness = bal.witness;
    if (try_reduction(emit_reduction(*bal.witness, tmpl))) return rep;
  } else {
    log("balanced witness: none");
  }

  std::vector<int> rounds;
  for (int b = 1; b < budgets.obstruction_budget; b *= 2) rounds.push_back(b);
  if (budgets.obstruction_budget >= 1) rounds.push_back(budgets.obstruction_budget);
  std::optional<ObstructionSet> prev;
  for (int b : rounds) {
    ObstructionSet obs = harvest_obstructions(alg, b);
    std::ostringstream os;
    os << "obstructions at budget " << b << ": " << obs.structures.size();
    log(os.str());
    for (const auto& note : obs.notes) log("  " + note);
    const bool stable = prev && prev->same_members(obs);
    prev = obs;
    if (!stable) continue;
    DualityReport dr = verify_duality(alg, obs, budgets.verify_n, budgets.jobs);
    std::ostringstream vs;
    vs << "verify_duality n=" << budgets.verify_n << ": " << (dr.pass ? "PASS" : "FAIL") << " (" << dr.structures
       << " structures)";
    if (!dr.pass) vs << " counterexample " << dr.counterexample;
    log(vs.str());
    if (dr.pass) {
      log("obstruction set unchanged across two consecutive budgets (heuristic convergence)");
      rep.verdict = ClassVerdict::fo_definable;
      rep.verified_up_to = budgets.verify_n;
      rep.obstructions = std::move(obs);
      return rep;
    }
  }
  rep.obstructions = prev;
  log("budgets exhausted");
  return rep;
}

}  // namespace cspdual
