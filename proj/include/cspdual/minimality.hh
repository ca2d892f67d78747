#pragma once

#include <map>
#include <random>
#include <vector>

#include "cspdual/algebra.hh"
#include "cspdual/ppformulas.hh"
#include "cspdual/relcore.hh"

namespace cspdual {

struct DerivationStep {
  int constraint = -1;
  int target = -1;  // index into DomainMap::sets
  Rows old_extent, new_extent;
  // (set, step that produced the extent read; -1 for the initial extent)
  std::vector<std::pair<int, int>> used;
};

struct DomainMap {
  int k = 1;
  bool init_from_constraints = true;  // first engine; otherwise full initialisation
  std::vector<std::vector<int>> sets;  // sorted variable indices, size 1..k
  std::vector<Rows> extents;           // rows over the set in sorted variable order
  std::vector<Rows> initial;           // extents after initialisation
  std::vector<int> init_constraint;    // constraint read at initialisation, -1 for full
  std::vector<int> latest;             // last step touching the set, -1 if none
  std::vector<DerivationStep> log;

  int find(const std::vector<int>& vars) const;  // vars sorted; -1 when absent
  bool trivial() const;                          // some extent is empty
  bool operator==(const DomainMap& o) const { return sets == o.sets && extents == o.extents; }
};

struct Schedule {
  std::mt19937_64* rng = nullptr;  // null: lexicographic over (constraint, set)
  bool record = true;
};

DomainMap one_minimality(const Instance& inst, const Algebra& alg, Schedule sched = {});
Instance build_imax(const Instance& inst, const Algebra& alg, int k, int l);
DomainMap kl_minimality(const Instance& inst, const Algebra& alg, int k, int l, Schedule sched = {});
// Continues pruning from the extents currently in dm.
void propagate(const Instance& inst, const Algebra& alg, DomainMap& dm, Schedule sched = {});
Instance apply_domains(const Instance& inst, const DomainMap& dm, const Algebra& alg);
// Certificate for the extent of `set` after `step` (the latest when step is -2).
TreeFormula derivation_to_tree(const DomainMap& dm, int set, const Instance& inst, const Algebra& alg,
                               int step = -2);

}  // namespace cspdual
