#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cspdual/algebra.hh"
#include "cspdual/hardness.hh"
#include "cspdual/implications.hh"
#include "cspdual/ppformulas.hh"
#include "cspdual/relcore.hh"

namespace cspdual {

inline constexpr const char* kDerivationHarvest = "derivation-harvest";
inline constexpr const char* kCriticalEnumeration = "critical-enumeration";

struct ObstructionSet {
  Signature sig;
  std::vector<Structure> structures;    // canonical forms
  std::vector<std::string> provenance;  // parallel to structures
  std::vector<std::string> notes;

  bool same_members(const ObstructionSet& o) const;  // up to isomorphism
};

// Signature instances are read with: the template's own (finite) or its
// relation signature (orbit).
Signature template_signature(const Algebra& alg);
// Homomorphism test into the template; orbit mode uses the search solver.
bool maps_to_template(const Structure& s, const Algebra& alg);
// Doesn't map, but every structure obtained by dropping one element or one
// tuple does.
bool is_critical(const Structure& s, const Algebra& alg);

ObstructionSet harvest_obstructions(const Algebra& alg, int size_budget);

struct DualityReport {
  bool pass = true;
  int n = 0;
  std::size_t structures = 0;
  std::string counterexample;  // least failing structure in enumeration order
};

// jobs <= 0 means hardware concurrency.
DualityReport verify_duality(const Algebra& alg, const ObstructionSet& obs, int n, int jobs = 1);

// Accepts iff no obstruction maps into s.
bool fo_recognize(const Structure& s, const ObstructionSet& obs);
bool fo_recognize(const Instance& inst, const ObstructionSet& obs, const Algebra& alg);

struct ClassifyBudgets {
  int max_atoms = 6;
  int max_compositions = 64;
  int verify_n = 4;
  int orbit_verify_n = 3;  // cap on verify_n when the reduction target is an orbit template
  int obstruction_budget = 4;
  int jobs = 1;
};

enum class ClassVerdict { fo_definable, l_hard, unknown };

struct ClassificationReport {
  ClassVerdict verdict = ClassVerdict::unknown;
  int verified_up_to = 0;
  std::optional<ObstructionSet> obstructions;
  std::optional<Implication> witness;
  std::optional<EqualityDefinition> equality;
  std::optional<Reduction> reduction;
  std::optional<ReductionReport> reduction_report;
  TheoreticalBounds bounds;
  std::vector<std::string> log;
};

// Throws on a finite template that is not a core with constants.
ClassificationReport classify(std::shared_ptr<const Algebra> alg, const ClassifyBudgets& budgets = {});

std::string verdict_name(ClassVerdict v);
std::string structure_summary(const Structure& s);

}  // namespace cspdual
