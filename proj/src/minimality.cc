#include "cspdual/minimality.hh"

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>

namespace cspdual {

int DomainMap::find(const std::vector<int>& vars) const {
  auto it = std::lower_bound(sets.begin(), sets.end(), vars);
  if (it == sets.end() || *it != vars) return -1;
  return static_cast<int>(it - sets.begin());
}

bool DomainMap::trivial() const {
  return std::any_of(extents.begin(), extents.end(), [](const Rows& r) { return r.empty(); });
}

namespace {

void subsets_upto(const std::vector<int>& vars, int k, std::vector<std::vector<int>>& out) {
  const int n = static_cast<int>(vars.size());
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int from) {
    if (!cur.empty()) out.push_back(cur);
    if (static_cast<int>(cur.size()) == k) return;
    for (int i = from; i < n; ++i) {
      cur.push_back(vars[i]);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

// Static view of one constraint: rows consistent with repeated variables and
// their restrictions to every subset of at most k variables.
struct ConstraintView {
  std::vector<int> vars;       // sorted distinct
  std::vector<int> first_pos;  // parallel to vars
  Rows rows;
  std::vector<int> zsets;
  std::vector<std::vector<int>> zpos;
  std::vector<std::vector<Row>> proj;  // proj[z][row]
};

std::vector<int> positions_for(const ConstraintView& v, const std::vector<int>& set) {
  std::vector<int> pos;
  for (int x : set) {
    auto it = std::find(v.vars.begin(), v.vars.end(), x);
    pos.push_back(v.first_pos[it - v.vars.begin()]);
  }
  return pos;
}

ConstraintView make_view(const Constraint& c, const Algebra& alg, const DomainMap& dm) {
  ConstraintView v;
  const int ar = static_cast<int>(c.scope.size());
  for (int p = 0; p < ar; ++p)
    if (std::find(v.vars.begin(), v.vars.end(), c.scope[p]) == v.vars.end()) {
      v.vars.push_back(c.scope[p]);
      v.first_pos.push_back(p);
    }
  std::vector<int> idx(v.vars.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v.vars[a] < v.vars[b]; });
  std::vector<int> sv, sp;
  for (int i : idx) {
    sv.push_back(v.vars[i]);
    sp.push_back(v.first_pos[i]);
  }
  v.vars = sv;
  v.first_pos = sp;
  std::vector<std::pair<int, int>> repeats;
  for (int p = 0; p < ar; ++p)
    for (int q = p + 1; q < ar; ++q)
      if (c.scope[p] == c.scope[q]) repeats.push_back({p, q});
  for (Row r : c.extent) {
    bool ok = true;
    for (auto [p, q] : repeats)
      if (!alg.same_point(ar, r, p, q)) {
        ok = false;
        break;
      }
    if (ok) v.rows.push_back(r);
  }
  std::vector<std::vector<int>> subs;
  subsets_upto(v.vars, dm.k, subs);
  for (const auto& z : subs) {
    int zi = dm.find(z);
    if (zi < 0) continue;
    v.zsets.push_back(zi);
    v.zpos.push_back(positions_for(v, z));
    std::vector<Row> pr;
    pr.reserve(v.rows.size());
    for (Row r : v.rows) pr.push_back(alg.restrict(ar, r, v.zpos.back()));
    v.proj.push_back(std::move(pr));
  }
  return v;
}

void init_sets(DomainMap& dm, int nvars, int k) {
  dm.k = k;
  std::vector<int> all(nvars);
  std::iota(all.begin(), all.end(), 0);
  dm.sets.clear();
  subsets_upto(all, k, dm.sets);
  std::sort(dm.sets.begin(), dm.sets.end());
  dm.extents.assign(dm.sets.size(), {});
  dm.init_constraint.assign(dm.sets.size(), -1);
  dm.latest.assign(dm.sets.size(), -1);
  dm.log.clear();
}

bool visit(const ConstraintView& v, int ci, DomainMap& dm, const Schedule& sched) {
  const std::size_t nr = v.rows.size();
  std::vector<char> pass(nr, 1);
  for (std::size_t z = 0; z < v.zsets.size(); ++z) {
    const Rows& ext = dm.extents[v.zsets[z]];
    for (std::size_t i = 0; i < nr; ++i)
      if (pass[i] && !std::binary_search(ext.begin(), ext.end(), v.proj[z][i])) pass[i] = 0;
  }
  std::vector<std::pair<int, int>> used;
  if (sched.record)
    for (int zi : v.zsets) used.push_back({zi, dm.latest[zi]});
  std::vector<std::size_t> order(v.zsets.size());
  std::iota(order.begin(), order.end(), 0);
  if (sched.rng) std::shuffle(order.begin(), order.end(), *sched.rng);
  bool changed = false;
  for (std::size_t z : order) {
    Rows hat;
    for (std::size_t i = 0; i < nr; ++i)
      if (pass[i]) hat.push_back(v.proj[z][i]);
    std::sort(hat.begin(), hat.end());
    hat.erase(std::unique(hat.begin(), hat.end()), hat.end());
    const int zi = v.zsets[z];
    if (hat.size() == dm.extents[zi].size()) continue;
    if (sched.record) {
      DerivationStep st;
      st.constraint = ci;
      st.target = zi;
      st.old_extent = dm.extents[zi];
      st.new_extent = hat;
      st.used = used;
      dm.latest[zi] = static_cast<int>(dm.log.size());
      dm.log.push_back(std::move(st));
    }
    dm.extents[zi] = std::move(hat);
    changed = true;
  }
  return changed;
}

void run(const std::vector<ConstraintView>& views, DomainMap& dm, const Schedule& sched) {
  std::vector<int> order(views.size());
  std::iota(order.begin(), order.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    if (sched.rng) std::shuffle(order.begin(), order.end(), *sched.rng);
    for (int ci : order)
      if (visit(views[ci], ci, dm, sched)) changed = true;
  }
}

std::vector<ConstraintView> views_of(const Instance& inst, const Algebra& alg, const DomainMap& dm) {
  std::vector<ConstraintView> views;
  views.reserve(inst.constraints.size());
  for (const auto& c : inst.constraints) views.push_back(make_view(c, alg, dm));
  return views;
}

}  // namespace

DomainMap one_minimality(const Instance& inst, const Algebra& alg, Schedule sched) {
  DomainMap dm;
  dm.init_from_constraints = true;
  init_sets(dm, static_cast<int>(inst.variables.size()), 1);
  auto views = views_of(inst, alg, dm);
  for (std::size_t s = 0; s < dm.sets.size(); ++s) {
    const int u = dm.sets[s][0];
    int found = -1;
    for (std::size_t ci = 0; ci < views.size() && found < 0; ++ci)
      if (std::binary_search(views[ci].vars.begin(), views[ci].vars.end(), u)) found = static_cast<int>(ci);
    if (found < 0) throw Error("variable " + inst.variables[u] + " occurs in no constraint scope");
    const auto& v = views[found];
    const int ar = static_cast<int>(inst.constraints[found].scope.size());
    dm.extents[s] = alg.project(ar, v.rows, positions_for(v, dm.sets[s]));
    dm.init_constraint[s] = found;
  }
  dm.initial = dm.extents;
  run(views, dm, sched);
  return dm;
}

Instance build_imax(const Instance& inst, const Algebra& alg, int k, int l) {
  Instance out = inst;
  const int m = std::max(k, l);
  const int n = static_cast<int>(inst.variables.size());
  auto has_full = [&](const std::vector<int>& u) {
    for (const auto& c : out.constraints) {
      std::vector<int> s = c.scope;
      std::sort(s.begin(), s.end());
      if (s == u && c.extent == alg.all_rows(static_cast<int>(u.size()))) return true;
    }
    return false;
  };
  std::vector<std::vector<int>> targets;
  if (n == 0) return out;
  if (n < m) {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    targets.push_back(all);
  } else {
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int from) {
      if (static_cast<int>(cur.size()) == m) {
        targets.push_back(cur);
        return;
      }
      for (int i = from; i < n; ++i) {
        cur.push_back(i);
        rec(i + 1);
        cur.pop_back();
      }
    };
    rec(0);
  }
  for (const auto& u : targets)
    if (!has_full(u)) out.constraints.push_back({u, alg.all_rows(static_cast<int>(u.size())), "full"});
  return out;
}

DomainMap kl_minimality(const Instance& inst, const Algebra& alg, int k, int l, Schedule sched) {
  (void)l;
  DomainMap dm;
  dm.init_from_constraints = false;
  init_sets(dm, static_cast<int>(inst.variables.size()), k);
  for (std::size_t s = 0; s < dm.sets.size(); ++s) dm.extents[s] = alg.all_rows(static_cast<int>(dm.sets[s].size()));
  dm.initial = dm.extents;
  auto views = views_of(inst, alg, dm);
  run(views, dm, sched);
  return dm;
}

void propagate(const Instance& inst, const Algebra& alg, DomainMap& dm, Schedule sched) {
  auto views = views_of(inst, alg, dm);
  run(views, dm, sched);
}

Instance apply_domains(const Instance& inst, const DomainMap& dm, const Algebra& alg) {
  Instance out = inst;
  for (auto& c : out.constraints) {
    ConstraintView v = make_view(c, alg, dm);
    Rows kept;
    for (std::size_t i = 0; i < v.rows.size(); ++i) {
      bool ok = true;
      for (std::size_t z = 0; z < v.zsets.size() && ok; ++z) {
        const Rows& ext = dm.extents[v.zsets[z]];
        ok = std::binary_search(ext.begin(), ext.end(), v.proj[z][i]);
      }
      if (ok) kept.push_back(v.rows[i]);
    }
    c.extent = std::move(kept);
  }
  return out;
}

namespace {

struct TreeBuilder {
  const DomainMap& dm;
  const Instance& inst;
  const Algebra& alg;
  int fresh = 0;

  const Rows& extent_at(int set, int step) const { return step < 0 ? dm.initial[set] : dm.log[step].new_extent; }

  Atom copy_of(int ci, const std::vector<std::string>& names) const {
    const Constraint& c = inst.constraints[ci];
    Atom a;
    a.relation = c.provenance;
    for (int v : c.scope) a.args.push_back(names[v]);
    bool named = alg.relation_arity(c.provenance) == static_cast<int>(c.scope.size()) &&
                 alg.relation_rows(c.provenance) == c.extent;
    if (!named) {
      if (c.provenance != "full") a.relation = "derived";
      a.extent = std::make_shared<const Rows>(c.extent);
    }
    return a;
  }

  std::vector<std::string> names_for(int ci, int set, const std::vector<std::string>& root) {
    std::vector<std::string> names(inst.variables.size());
    const auto& vars = dm.sets[set];
    for (std::size_t i = 0; i < vars.size(); ++i) names[vars[i]] = root[i];
    for (int v : inst.constraints[ci].scope)
      if (names[v].empty()) names[v] = inst.variables[v] + "#" + std::to_string(++fresh);
    return names;
  }

  int covering_constraint(int set) const {
    const auto& vars = dm.sets[set];
    int fallback = -1;
    for (std::size_t ci = 0; ci < inst.constraints.size(); ++ci) {
      ConstraintView v = make_view(inst.constraints[ci], alg, dm);
      if (!std::includes(v.vars.begin(), v.vars.end(), vars.begin(), vars.end())) continue;
      const int ar = static_cast<int>(inst.constraints[ci].scope.size());
      if (alg.project(ar, v.rows, positions_for(v, vars)) != dm.initial[set]) continue;
      if (inst.constraints[ci].provenance == "full") return static_cast<int>(ci);
      if (fallback < 0) fallback = static_cast<int>(ci);
    }
    if (fallback < 0) throw Error("derivation_to_tree: no constraint covers an initial extent");
    return fallback;
  }

  TreeFormula build(int set, int step, const std::vector<std::string>& root) {
    TreeFormula t;
    t.root = root;
    if (step < 0) {
      int ci = dm.init_from_constraints ? dm.init_constraint[set] : covering_constraint(set);
      t.atom = copy_of(ci, names_for(ci, set, root));
      return t;
    }
    const DerivationStep& st = dm.log[step];
    auto names = names_for(st.constraint, set, root);
    t.atom = copy_of(st.constraint, names);
    ConstraintView v = make_view(inst.constraints[st.constraint], alg, dm);
    std::vector<int> zidx;  // positions in v.zsets matching st.used
    for (const auto& [zs, ver] : st.used)
      zidx.push_back(static_cast<int>(std::find(v.zsets.begin(), v.zsets.end(), zs) - v.zsets.begin()));
    int tz = static_cast<int>(std::find(v.zsets.begin(), v.zsets.end(), st.target) - v.zsets.begin());
    std::vector<char> keep(st.used.size(), 1);
    auto hat_with = [&](const std::vector<char>& k) {
      Rows hat;
      for (std::size_t i = 0; i < v.rows.size(); ++i) {
        bool ok = true;
        for (std::size_t u = 0; u < st.used.size() && ok; ++u)
          if (k[u]) {
            const Rows& ext = extent_at(st.used[u].first, st.used[u].second);
            ok = std::binary_search(ext.begin(), ext.end(), v.proj[zidx[u]][i]);
          }
        if (ok) hat.push_back(v.proj[tz][i]);
      }
      std::sort(hat.begin(), hat.end());
      hat.erase(std::unique(hat.begin(), hat.end()), hat.end());
      return hat;
    };
    for (std::size_t u = 0; u < st.used.size(); ++u) {
      keep[u] = 0;
      if (hat_with(keep) != st.new_extent) keep[u] = 1;
    }
    for (std::size_t u = 0; u < st.used.size(); ++u) {
      if (!keep[u]) continue;
      auto [zs, ver] = st.used[u];
      std::vector<std::string> croot;
      for (int x : dm.sets[zs]) croot.push_back(names[x]);
      t.children.push_back(build(zs, ver, croot));
    }
    return t;
  }
};

}  // namespace

TreeFormula derivation_to_tree(const DomainMap& dm, int set, const Instance& inst, const Algebra& alg, int step) {
  if (step == -2) step = dm.latest[set];
  TreeBuilder b{dm, inst, alg};
  std::vector<std::string> root;
  for (int v : dm.sets[set]) root.push_back(inst.variables[v] + "#" + std::to_string(++b.fresh));
  return b.build(set, step, root);
}

}  // namespace cspdual
