#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "cspdual/duality.hh"
#include "cspdual/hardness.hh"
#include "cspdual/implications.hh"
#include "cspdual/minimality.hh"
#include "cspdual/orbits.hh"
#include "cspdual/textio.hh"

using namespace cspdual;

namespace {

enum Exit { ok = 0, usage = 1, unsat = 10, lhard = 20, unknown = 30 };

struct TemplateArgs {
  std::string file, orbit, orbit_file;
};

void add_template_options(CLI::App* cmd, TemplateArgs& t) {
  auto* a = cmd->add_option("--template", t.file, "finite template file");
  auto* b = cmd->add_option("--orbit", t.orbit, "built-in orbit template (QLT, RGEN, RGEN_PHI, TFG)");
  auto* c = cmd->add_option("--orbit-file", t.orbit_file, "orbit template file");
  a->excludes(b)->excludes(c);
  b->excludes(c);
}

struct FileError : Error {
  using Error::Error;
};

template <class F>
auto parse_file(const std::string& path, F parse) {
  std::string text = read_file(path);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw FileError(path + ":" + e.what());
  }
}

std::shared_ptr<const Algebra> load_template(const TemplateArgs& t) {
  if (!t.file.empty())
    return std::make_shared<FiniteAlgebra>(parse_file(t.file, [](const std::string& s) { return parse_structure(s); }));
  if (!t.orbit.empty()) return builtin(t.orbit);
  if (!t.orbit_file.empty())
    return parse_file(t.orbit_file, [](const std::string& s) { return parse_orbit_template(s); });
  throw CLI::ValidationError("one of --template, --orbit, --orbit-file is required");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string assignment_text(const Instance& inst, const std::vector<int>& values) {
  std::string s;
  for (std::size_t i = 0; i < inst.variables.size(); ++i)
    s += "  " + inst.variables[i] + " = " + std::to_string(values[i]) + "\n";
  return s;
}

int run_solve(const TemplateArgs& ta, const std::string& inst_path, const std::string& mode) {
  auto alg = load_template(ta);
  Instance inst = parse_file(inst_path, [&](const std::string& s) { return parse_instance(s, *alg); });
  if (auto* fa = dynamic_cast<const FiniteAlgebra*>(alg.get())) {
    auto sol = solve_brute(inst, fa->structure());
    if (!sol) {
      std::cout << "UNSAT\n";
      return unsat;
    }
    std::cout << "SAT\n" << assignment_text(inst, *sol);
    return ok;
  }
  auto& ot = dynamic_cast<const OrbitTemplate&>(*alg);
  auto sol = solve_orbit(inst, ot, mode == "theorem" ? SolveMode::theorem : SolveMode::search);
  if (sol.verdict == Verdict::unsat) {
    std::cout << "UNSAT\n";
    return unsat;
  }
  std::cout << "SAT\n";
  if (!sol.point_of.empty()) {
    std::cout << "points (variables sharing a number are equal):\n" << assignment_text(inst, sol.point_of);
  }
  return ok;
}

int run_minimize(const TemplateArgs& ta, const std::string& inst_path, int k, int l, bool certify,
                 const std::string& emit) {
  auto alg = load_template(ta);
  Instance inst = parse_file(inst_path, [&](const std::string& s) { return parse_instance(s, *alg); });
  Instance work = inst;
  DomainMap dm;
  if (!alg->orbit_mode() && k <= 0) {
    dm = one_minimality(work, *alg);
  } else {
    if (k <= 0) k = alg->k();
    if (l <= 0) l = alg->l();
    work = build_imax(inst, *alg, k, l);
    dm = kl_minimality(work, *alg, k, l);
  }
  std::cout << "domains:\n" << print_domain_map(dm, work, *alg);
  std::cout << "trivial: " << (dm.trivial() ? "yes" : "no") << "\n";
  std::cout << "pruning steps: " << dm.log.size() << "\n";
  if (certify) {
    std::cout << "certificates:\n";
    for (std::size_t s = 0; s < dm.sets.size(); ++s) {
      std::string names;
      for (int v : dm.sets[s]) names += (names.empty() ? "" : ",") + work.variables[v];
      TreeFormula t = derivation_to_tree(dm, static_cast<int>(s), work, *alg);
      std::cout << "  D(" << names << "): " << tree_to_string(t, alg.get()) << "\n";
    }
  }
  Instance reduced = apply_domains(work, dm, *alg);
  if (!emit.empty()) write_text(emit, print_instance(reduced, *alg));
  return dm.trivial() ? unsat : ok;
}

void print_bounds(const TheoreticalBounds& b, bool orbit) {
  if (orbit)
    std::cout << "bounds: K=" << b.K.str() << " L=" << b.L.str() << " Z=" << b.Z.str() << " P=" << b.P.str()
              << " M=" << b.M.str() << "\n";
  else
    std::cout << "bounds: d=" << b.d.str() << "\n";
}

int run_classify(const TemplateArgs& ta, const ClassifyBudgets& budgets, const std::string& dot) {
  auto alg = load_template(ta);
  ClassificationReport rep = classify(alg, budgets);
  std::cout << "verdict: " << verdict_name(rep.verdict) << "\n";
  if (rep.verdict != ClassVerdict::unknown) std::cout << "verified up to n=" << rep.verified_up_to << "\n";
  if (rep.verdict == ClassVerdict::fo_definable && rep.obstructions) {
    std::cout << "obstructions: " << rep.obstructions->structures.size() << "\n";
    for (std::size_t i = 0; i < rep.obstructions->structures.size(); ++i)
      std::cout << "  " << structure_summary(rep.obstructions->structures[i]) << " ["
                << rep.obstructions->provenance[i] << "]\n";
  }
  if (rep.verdict == ClassVerdict::l_hard && rep.reduction) {
    std::cout << "reduction: "
              << (rep.reduction->kind == ReductionKind::equality ? "equality definition" : "balanced implication")
              << "\n";
  }
  print_bounds(rep.bounds, alg->orbit_mode());
  std::cout << "log:\n";
  for (const auto& l : rep.log) std::cout << "  " << l << "\n";
  if (!dot.empty()) {
    SearchBudget sb{budgets.max_atoms, budgets.max_compositions};
    write_text(dot, search_balanced(*alg, sb).graph.to_dot(*alg));
  }
  switch (rep.verdict) {
    case ClassVerdict::fo_definable:
      return ok;
    case ClassVerdict::l_hard:
      return lhard;
    case ClassVerdict::unknown:
      return unknown;
  }
  return unknown;
}

int run_obstructions(const TemplateArgs& ta, int budget, const std::string& out) {
  auto alg = load_template(ta);
  ObstructionSet obs = harvest_obstructions(*alg, budget);
  std::string text = print_obstruction_set(obs);
  for (const auto& n : obs.notes) std::cerr << "note: " << n << "\n";
  if (out.empty())
    std::cout << text;
  else
    write_text(out, text);
  return ok;
}

int run_reduce(const TemplateArgs& ta, int max_atoms, const std::string& emit, int verify_n, int chain,
               const std::string& dot) {
  auto alg = load_template(ta);
  std::optional<Reduction> red;
  if (auto eq = search_equality_definition(*alg, max_atoms)) {
    std::cout << "witness: equality definition " << formula_to_string(eq->formula, alg.get()) << "\n";
    red = emit_equality_reduction(*eq, alg);
  } else if (auto bal = search_balanced(*alg, {max_atoms, 64}); bal.witness) {
    std::cout << "witness: " << implication_to_string(*bal.witness, *alg) << "\n";
    red = emit_reduction(*bal.witness, alg);
    if (!dot.empty()) write_text(dot, implication_digraph(*bal.witness, *alg).to_dot(*alg));
  }
  if (!red) {
    std::cout << "no hardness witness within " << max_atoms << " atoms\n";
    return unknown;
  }
  for (const auto& n : red->notes) std::cout << "note: " << n << "\n";
  std::string text = print_interpretation(red->interp);
  if (emit.empty())
    std::cout << text;
  else
    write_text(emit, text);
  int code = lhard;
  if (verify_n > 0) {
    ReductionReport rr = verify_reduction(red->interp, equality_csp_template(), *red->target, verify_n);
    std::cout << "verify n=" << verify_n << ": " << (rr.pass ? "PASS" : "FAIL") << " (" << rr.structures
              << " structures, " << rr.parameter_tuples << " parameter tuples, " << rr.skipped_small
              << " below parameter count)\n";
    if (!rr.pass) std::cout << "counterexample: " << rr.counterexample << "\n", code = unknown;
  }
  if (chain > 0) {
    ChainReport cr = verify_reduction_chain(*red, chain);
    std::cout << "reachability chain up to " << chain << " vertices: " << (cr.pass ? "PASS" : "FAIL") << " ("
              << cr.cases << " cases)\n";
    if (!cr.pass) std::cout << "counterexample: " << cr.counterexample << "\n", code = unknown;
  }
  return code;
}

int run_check_duality(const TemplateArgs& ta, const std::string& obs_path, int n, int jobs) {
  auto alg = load_template(ta);
  ObstructionSet obs = parse_file(obs_path, [](const std::string& s) { return parse_obstruction_set(s); });
  if (!(obs.sig == template_signature(*alg))) throw Error("obstruction signature differs from the template's");
  DualityReport r = verify_duality(*alg, obs, n, jobs);
  std::cout << "duality n=" << n << ": " << (r.pass ? "PASS" : "FAIL") << " (" << r.structures << " structures)\n";
  if (!r.pass) std::cout << "counterexample: " << r.counterexample << "\n";
  return r.pass ? ok : unknown;
}

int run_orbit_info(const TemplateArgs& ta, int arity, const std::string& emit) {
  auto alg = load_template(ta);
  auto* ot = dynamic_cast<const OrbitTemplate*>(alg.get());
  if (!ot) throw CLI::ValidationError("orbit-info needs --orbit or --orbit-file");
  std::cout << "name: " << ot->name() << "\nk: " << ot->k() << "\nl: " << ot->l() << "\n";
  std::cout << "bounds: " << ot->bounds().size() << "\n";
  for (const auto& b : ot->bounds()) std::cout << "  " << structure_summary(b) << "\n";
  for (int m = 1; m <= arity; ++m) std::cout << "atomic types of arity " << m << ": " << ot->all_rows(m).size() << "\n";
  for (const auto& n : ot->relation_names())
    std::cout << "relation " << n << "/" << ot->relation_arity(n) << ": " << ot->relation_rows(n).size() << " types"
              << (ot->is_base_relation(n) ? " (base)" : "") << "\n";
  if (!emit.empty()) write_text(emit, print_orbit_template(*ot));
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cspdual: solve, minimize and classify constraint templates"};
  app.require_subcommand(1);

  TemplateArgs ta;
  std::string inst_path, mode = "search", emit, dot, obs_path, out;
  int k = 0, l = 0, budget = 4, verify_n = 0, chain = 0, n = 4, arity = 4;
  bool certify = false;
  ClassifyBudgets cb;
  cb.jobs = 0;

  auto* solve = app.add_subcommand("solve", "decide an instance");
  add_template_options(solve, ta);
  solve->add_option("--instance", inst_path, "instance file")->required();
  solve->add_option("--mode", mode, "orbit solver mode")->check(CLI::IsMember({"theorem", "search"}));

  auto* minimize = app.add_subcommand("minimize", "run the propagation engine");
  add_template_options(minimize, ta);
  minimize->add_option("--instance", inst_path, "instance file")->required();
  minimize->add_option("--k", k, "set size (default: 1 finite, template k orbit)")->check(CLI::PositiveNumber);
  minimize->add_option("--l", l, "scope size for the full constraints")->check(CLI::PositiveNumber);
  minimize->add_flag("--certify", certify, "print a tree certificate per domain");
  minimize->add_option("--emit", emit, "write the minimized instance");

  auto* cls = app.add_subcommand("classify", "classify a template");
  add_template_options(cls, ta);
  cls->add_option("--max-atoms", cb.max_atoms, "formula size budget")->check(CLI::PositiveNumber);
  cls->add_option("--verify-n", cb.verify_n, "verification size")->check(CLI::NonNegativeNumber);
  cls->add_option("--obstruction-budget", cb.obstruction_budget, "largest obstruction size searched")
      ->check(CLI::PositiveNumber);
  cls->add_option("--jobs", cb.jobs, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  cls->add_option("--dot", dot, "write the implication graph");

  auto* obs = app.add_subcommand("obstructions", "harvest an obstruction set");
  add_template_options(obs, ta);
  obs->add_option("--budget", budget, "largest structure size")->check(CLI::PositiveNumber);
  obs->add_option("--out", out, "output file (default: stdout)");

  auto* reduce = app.add_subcommand("reduce", "emit a hardness reduction");
  add_template_options(reduce, ta);
  reduce->add_option("--max-atoms", cb.max_atoms, "formula size budget")->check(CLI::PositiveNumber);
  reduce->add_option("--emit", emit, "write the interpretation (default: stdout)");
  reduce->add_option("--verify", verify_n, "verify on all source structures up to this size")
      ->check(CLI::NonNegativeNumber);
  reduce->add_option("--chain", chain, "check the reachability chain on graphs up to this size")
      ->check(CLI::NonNegativeNumber);
  reduce->add_option("--dot", dot, "write the witness digraph");

  auto* dual = app.add_subcommand("check-duality", "verify an obstruction set");
  add_template_options(dual, ta);
  dual->add_option("--obstructions", obs_path, "obstruction set file")->required();
  dual->add_option("--n", n, "largest structure size")->check(CLI::NonNegativeNumber);
  dual->add_option("--jobs", cb.jobs, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

  auto* info = app.add_subcommand("orbit-info", "describe an orbit template");
  add_template_options(info, ta);
  info->add_option("--arity", arity, "count atomic types up to this arity")->check(CLI::Range(1, 6));
  info->add_option("--emit", emit, "write the template in file form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*solve) return run_solve(ta, inst_path, mode);
    if (*minimize) return run_minimize(ta, inst_path, k, l, certify, emit);
    if (*cls) return run_classify(ta, cb, dot);
    if (*obs) return run_obstructions(ta, budget, out);
    if (*reduce) return run_reduce(ta, cb.max_atoms, emit, verify_n, chain, dot);
    if (*dual) return run_check_duality(ta, obs_path, n, cb.jobs);
    if (*info) return run_orbit_info(ta, arity, emit);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  }
  return usage;
}
