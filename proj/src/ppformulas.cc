#include "cspdual/ppformulas.hh"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace cspdual {

bool Atom::operator==(const Atom& o) const {
  if (relation != o.relation || args != o.args) return false;
  if (!extent || !o.extent) return !extent && !o.extent;
  return *extent == *o.extent;
}

std::vector<std::string> PPFormula::variables() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& v) {
    if (seen.insert(v).second) out.push_back(v);
  };
  for (const auto& v : free_vars) add(v);
  for (const auto& a : atoms)
    for (const auto& v : a.args) add(v);
  return out;
}

std::size_t TreeFormula::atom_count() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.atom_count();
  return n;
}

std::vector<std::string> TreeFormula::variables() const { return to_pp().variables(); }

PPFormula TreeFormula::to_pp() const {
  PPFormula f;
  std::function<void(const TreeFormula&)> walk = [&](const TreeFormula& t) {
    for (const auto& c : t.children) walk(c);
    f.atoms.push_back(t.atom);
  };
  walk(*this);
  f.free_vars = root;
  return f;
}

namespace {

const Rows& atom_rows(const Atom& a, const Algebra& alg) {
  if (a.extent) return *a.extent;
  int ar = alg.relation_arity(a.relation);
  if (ar < 0) throw Error("unknown relation " + a.relation);
  if (ar != static_cast<int>(a.args.size()))
    throw Error("relation " + a.relation + " used with wrong arity");
  return alg.relation_rows(a.relation);
}

void sort_unique(Rows& r) {
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
}

}  // namespace

Rows eval_pp(const PPFormula& f, const Algebra& alg) {
  std::map<std::string, int> id;
  for (const auto& v : f.variables()) id.emplace(v, static_cast<int>(id.size()));
  const int nv = static_cast<int>(id.size());
  std::vector<const Rows*> ext;
  for (const auto& a : f.atoms) ext.push_back(&atom_rows(a, alg));

  // need[i]: variables used by free list or atoms after i
  std::vector<std::vector<char>> need(f.atoms.size() + 1, std::vector<char>(nv, 0));
  for (const auto& v : f.free_vars) need[f.atoms.size()][id[v]] = 1;
  for (int i = static_cast<int>(f.atoms.size()) - 1; i >= 0; --i) {
    need[i] = need[i + 1];
    for (const auto& v : f.atoms[i].args) need[i][id[v]] = 1;
  }

  std::vector<int> live;
  Rows rows = {0};
  std::vector<Row> kids;
  auto add_var = [&](int v) {
    Rows next;
    for (Row r : rows) {
      alg.extend(static_cast<int>(live.size()), r, kids);
      next.insert(next.end(), kids.begin(), kids.end());
    }
    sort_unique(next);
    rows = std::move(next);
    live.push_back(v);
  };
  auto pos_of = [&](int v) {
    return static_cast<int>(std::find(live.begin(), live.end(), v) - live.begin());
  };

  for (std::size_t i = 0; i < f.atoms.size(); ++i) {
    std::vector<int> pos;
    for (const auto& name : f.atoms[i].args) {
      int v = id[name];
      if (pos_of(v) == static_cast<int>(live.size())) add_var(v);
      pos.push_back(pos_of(v));
    }
    const int ar = static_cast<int>(live.size());
    Rows kept;
    for (Row r : rows)
      if (std::binary_search(ext[i]->begin(), ext[i]->end(), alg.restrict(ar, r, pos))) kept.push_back(r);
    rows = std::move(kept);
    std::vector<int> keep_pos, keep_vars;
    for (int p = 0; p < ar; ++p)
      if (need[i + 1][live[p]]) {
        keep_pos.push_back(p);
        keep_vars.push_back(live[p]);
      }
    if (static_cast<int>(keep_pos.size()) < ar) {
      rows = alg.project(ar, rows, keep_pos);
      live = keep_vars;
    }
  }
  for (const auto& v : f.free_vars)
    if (pos_of(id[v]) == static_cast<int>(live.size())) add_var(id[v]);
  std::vector<int> out_pos;
  for (const auto& v : f.free_vars) out_pos.push_back(pos_of(id[v]));
  return alg.project(static_cast<int>(live.size()), rows, out_pos);
}

Rows project(const Algebra& alg, int arity, const Rows& rel, std::span<const int> positions) {
  return alg.project(arity, rel, positions);
}

namespace {

std::set<std::string> var_set(const TreeFormula& t) {
  std::set<std::string> s(t.atom.args.begin(), t.atom.args.end());
  for (const auto& c : t.children) {
    auto cs = var_set(c);
    s.insert(cs.begin(), cs.end());
  }
  return s;
}

std::set<std::string> intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
  return out;
}

}  // namespace

bool validate_tree(const TreeFormula& t, int k) {
  std::set<std::string> root(t.root.begin(), t.root.end());
  if (root.size() != t.root.size() || static_cast<int>(t.root.size()) > k) return false;
  std::set<std::string> atom_vars(t.atom.args.begin(), t.atom.args.end());
  for (const auto& r : root)
    if (!atom_vars.count(r)) return false;
  std::vector<std::set<std::string>> cv;
  for (const auto& c : t.children) {
    if (!validate_tree(c, k)) return false;
    cv.push_back(var_set(c));
    std::set<std::string> croot(c.root.begin(), c.root.end());
    if (intersect(atom_vars, cv.back()) != croot) return false;
  }
  for (std::size_t i = 0; i < cv.size(); ++i)
    for (std::size_t j = i + 1; j < cv.size(); ++j) {
      std::set<std::string> ri(t.children[i].root.begin(), t.children[i].root.end());
      std::set<std::string> rj(t.children[j].root.begin(), t.children[j].root.end());
      if (intersect(cv[i], cv[j]) != intersect(ri, rj)) return false;
    }
  return true;
}

Structure canonical_structure(const PPFormula& f, const Signature& sig) {
  auto vars = f.variables();
  std::map<std::string, int> id;
  for (const auto& v : vars) id.emplace(v, static_cast<int>(id.size()));
  Structure s(sig, static_cast<int>(vars.size()));
  for (const auto& a : f.atoms) {
    int r = sig.index_of(a.relation);
    if (r < 0 || a.extent) continue;
    Tuple t;
    for (const auto& v : a.args) t.push_back(id[v]);
    s.add_tuple(r, std::move(t));
  }
  s.normalize();
  return s;
}

Rows eval_tree_root(const TreeFormula& t, const Algebra& alg) { return eval_pp(t.to_pp(), alg); }

namespace {

void child_paths(const TreeFormula& t, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    prefix.push_back(static_cast<int>(i));
    child_paths(t.children[i], prefix, out);
    out.push_back(prefix);
    prefix.pop_back();
  }
}

TreeFormula without(const TreeFormula& t, const std::vector<int>& path, std::size_t depth = 0) {
  TreeFormula out = t;
  if (depth + 1 == path.size()) {
    out.children.erase(out.children.begin() + path[depth]);
    return out;
  }
  out.children[path[depth]] = without(t.children[path[depth]], path, depth + 1);
  return out;
}

const TreeFormula& at_path(const TreeFormula& t, const std::vector<int>& path) {
  const TreeFormula* cur = &t;
  for (int i : path) cur = &cur->children[i];
  return *cur;
}

}  // namespace

TreeFormula trim_minimal(const TreeFormula& t, const Algebra& alg) {
  const Rows target = eval_tree_root(t, alg);
  TreeFormula cur = t;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::vector<int>> paths;
    std::vector<int> prefix;
    child_paths(cur, prefix, paths);
    // deepest first
    std::stable_sort(paths.begin(), paths.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    for (const auto& p : paths) {
      TreeFormula cand = without(cur, p);
      if (eval_tree_root(cand, alg) == target) {
        cur = std::move(cand);
        changed = true;
        break;
      }
    }
  }
  return cur;
}

TreeFormula normalize_empty_witness(const TreeFormula& t, const Algebra& alg) {
  if (!eval_tree_root(t, alg).empty()) return trim_minimal(t, alg);
  std::vector<std::vector<int>> paths;
  std::vector<int> prefix;
  child_paths(t, prefix, paths);
  const TreeFormula* best = nullptr;
  for (const auto& p : paths) {
    const TreeFormula& s = at_path(t, p);
    if (best && s.atom_count() >= best->atom_count()) continue;
    if (eval_tree_root(s, alg).empty()) best = &s;
  }
  if (best) return trim_minimal(*best, alg);
  return trim_minimal(t, alg);
}

std::string TheoreticalBounds::Value::str() const {
  return saturated ? ">=" + std::to_string(v) : std::to_string(v);
}

namespace {

using Value = TheoreticalBounds::Value;

Value mul(Value a, Value b) {
  Value r;
  r.saturated = a.saturated || b.saturated;
  if (__builtin_mul_overflow(a.v, b.v, &r.v)) {
    r.v = UINT64_MAX;
    r.saturated = true;
  }
  return r;
}

Value add(Value a, Value b) {
  Value r;
  r.saturated = a.saturated || b.saturated;
  if (__builtin_add_overflow(a.v, b.v, &r.v)) {
    r.v = UINT64_MAX;
    r.saturated = true;
  }
  return r;
}

Value pow2(std::uint64_t e) {
  if (e >= 64) return {UINT64_MAX, true};
  return {1ull << e, false};
}

Value num(std::uint64_t v) { return {v, false}; }

}  // namespace

TheoreticalBounds finite_bounds(int domain_size) {
  TheoreticalBounds b;
  Value p = pow2(static_cast<std::uint64_t>(domain_size));
  b.d = add(mul(mul(p, p), num(domain_size)), num(2));
  return b;
}

TheoreticalBounds orbit_bounds(std::uint64_t orbits_of_k_tuples, int k) {
  TheoreticalBounds b;
  b.K = num(orbits_of_k_tuples);
  b.L = pow2(orbits_of_k_tuples);
  Value l2 = mul(b.L, b.L);
  b.Z = mul(b.K, add(mul(l2, num(k)), num(3)));
  b.P = num(1);
  for (int i = 0; i < k; ++i) b.P = mul(b.P, b.Z);
  b.M = add(mul(b.P, add(mul(num(k), l2), num(1))), num(1));
  return b;
}

std::string atom_to_string(const Atom& a, const Algebra* alg) {
  std::ostringstream os;
  os << a.relation;
  if (a.extent && a.relation != "full") {
    os << '{';
    if (alg) {
      auto strs = alg->rows_to_strings(static_cast<int>(a.args.size()), *a.extent);
      for (std::size_t i = 0; i < strs.size(); ++i) os << (i ? " " : "") << strs[i];
    } else {
      os << a.extent->size() << " rows";
    }
    os << '}';
  }
  os << '(';
  for (std::size_t i = 0; i < a.args.size(); ++i) os << (i ? "," : "") << a.args[i];
  os << ')';
  return os.str();
}

std::string formula_to_string(const PPFormula& f, const Algebra* alg) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < f.free_vars.size(); ++i) os << (i ? "," : "") << f.free_vars[i];
  os << "] :";
  if (f.atoms.empty()) os << " true";
  for (std::size_t i = 0; i < f.atoms.size(); ++i) os << (i ? " & " : " ") << atom_to_string(f.atoms[i], alg);
  return os.str();
}

std::string tree_to_string(const TreeFormula& t, const Algebra* alg) {
  std::ostringstream os;
  os << "([";
  for (std::size_t i = 0; i < t.root.size(); ++i) os << (i ? "," : "") << t.root[i];
  os << "] " << atom_to_string(t.atom, alg);
  for (const auto& c : t.children) os << ' ' << tree_to_string(c, alg);
  os << ')';
  return os.str();
}

}  // namespace cspdual
