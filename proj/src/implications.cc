#include "cspdual/implications.hh"

#include <algorithm>
#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/strong_components.hpp>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace cspdual {

namespace {

bool contains(const Rows& s, Row r) { return std::binary_search(s.begin(), s.end(), r); }

bool subset(const Rows& a, const Rows& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

void check_distinct(const std::vector<std::string>& t, const char* what) {
  std::set<std::string> s(t.begin(), t.end());
  if (s.size() != t.size()) throw Error(std::string("implication: repeated variable in ") + what);
}

struct Joint {
  int arity = 0;
  Rows rows;
  std::vector<int> pos_u, pos_v;
};

// The formula evaluated over u followed by the variables of v not in u.
Joint joint_relation(const PPFormula& f, const std::vector<std::string>& u, const std::vector<std::string>& v,
                     const Algebra& alg) {
  auto vars = f.variables();
  for (const auto* t : {&u, &v})
    for (const auto& x : *t)
      if (std::find(vars.begin(), vars.end(), x) == vars.end())
        throw Error("implication: variable " + x + " does not occur in the formula");
  Joint j;
  PPFormula g = f;
  g.free_vars = u;
  for (std::size_t i = 0; i < u.size(); ++i) j.pos_u.push_back(static_cast<int>(i));
  for (const auto& x : v) {
    auto it = std::find(g.free_vars.begin(), g.free_vars.end(), x);
    if (it == g.free_vars.end()) {
      j.pos_v.push_back(static_cast<int>(g.free_vars.size()));
      g.free_vars.push_back(x);
    } else {
      j.pos_v.push_back(static_cast<int>(it - g.free_vars.begin()));
    }
  }
  j.arity = static_cast<int>(g.free_vars.size());
  j.rows = eval_pp(g, alg);
  return j;
}

Rows image(const Joint& j, const Rows& C, const Algebra& alg) {
  Rows D;
  for (Row r : j.rows)
    if (contains(C, alg.restrict(j.arity, r, j.pos_u))) D.push_back(alg.restrict(j.arity, r, j.pos_v));
  std::sort(D.begin(), D.end());
  D.erase(std::unique(D.begin(), D.end()), D.end());
  return D;
}

std::string strip_suffix(const std::string& s) {
  auto p = s.rfind('_');
  if (p == std::string::npos || p + 1 == s.size()) return s;
  for (std::size_t i = p + 1; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return s;
  return s.substr(0, p);
}

}  // namespace

Implication check_implication(const PPFormula& f, const Rows& C, const std::vector<std::string>& u, const Rows& D,
                              const std::vector<std::string>& v, const Algebra& alg) {
  check_distinct(u, "u");
  check_distinct(v, "v");
  Implication im;
  im.formula = f;
  im.u = u;
  im.v = v;
  im.C = C;
  im.D = D;
  Joint j = joint_relation(f, u, v, alg);
  im.proj_u = alg.project(j.arity, j.rows, j.pos_u);
  im.proj_v = alg.project(j.arity, j.rows, j.pos_v);

  bool ok = !C.empty() && !D.empty();
  ok = ok && subset(C, im.proj_u) && C != im.proj_u;
  ok = ok && subset(D, im.proj_v) && D != im.proj_v;
  if (ok) {
    std::vector<char> reached(D.size(), 0);
    for (Row r : j.rows) {
      if (!contains(C, alg.restrict(j.arity, r, j.pos_u))) continue;
      Row rv = alg.restrict(j.arity, r, j.pos_v);
      auto it = std::lower_bound(D.begin(), D.end(), rv);
      if (it == D.end() || *it != rv) {
        ok = false;
        break;
      }
      reached[it - D.begin()] = 1;
    }
    for (char c : reached) ok = ok && c;
  }
  im.flags.is_implication = ok;

  for (std::size_t a = 0; a < u.size(); ++a)
    for (std::size_t b = 0; b < v.size(); ++b)
      if (u[a] == v[b]) im.pi.push_back({static_cast<int>(a), static_cast<int>(b)});
  im.flags.nontrivial = im.pi.size() < u.size() && im.pi.size() < v.size();
  bool identity = true;
  for (auto [a, b] : im.pi) identity = identity && a == b;
  im.flags.stable = im.flags.nontrivial && identity;

  std::vector<int> zu, zv, zj;
  for (auto [a, b] : im.pi) {
    zu.push_back(a);
    zv.push_back(b);
    zj.push_back(j.pos_u[a]);
  }
  const int au = static_cast<int>(u.size()), av = static_cast<int>(v.size());
  Rows pz = alg.project(j.arity, j.rows, zj);
  im.flags.proper = pz == alg.project(au, C, zu) && pz == alg.project(av, D, zv);
  im.flags.balanced = au == av && C == D && im.proj_u == im.proj_v;
  return im;
}

std::vector<Rows> definable_unary_sets(const Algebra& alg) {
  const Rows& full = alg.all_rows(1);
  std::set<Rows> found;
  auto names = alg.relation_names();
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Rows> known(found.begin(), found.end());
    std::vector<Rows> choices = known;
    choices.push_back(full);
    auto add = [&](Rows s) {
      if (s.empty() || s == full) return;
      if (found.insert(std::move(s)).second) changed = true;
    };
    for (const auto& name : names) {
      const int ar = alg.relation_arity(name);
      const Rows& rel = alg.relation_rows(name);
      double combos = 1;
      for (int i = 1; i < ar; ++i) combos *= static_cast<double>(choices.size());
      if (combos > 4096) continue;
      std::vector<std::vector<Row>> unary(rel.size(), std::vector<Row>(ar));
      for (std::size_t r = 0; r < rel.size(); ++r)
        for (int p = 0; p < ar; ++p) {
          const int pos[1] = {p};
          unary[r][p] = alg.restrict(ar, rel[r], pos);
        }
      for (int i = 0; i < ar; ++i) {
        std::vector<std::size_t> pick(ar, 0);
        while (true) {
          Rows out;
          for (std::size_t r = 0; r < rel.size(); ++r) {
            bool keep = true;
            for (int p = 0; p < ar && keep; ++p)
              if (p != i) keep = contains(choices[pick[p]], unary[r][p]);
            if (keep) out.push_back(unary[r][i]);
          }
          std::sort(out.begin(), out.end());
          out.erase(std::unique(out.begin(), out.end()), out.end());
          add(out);
          int p = ar - 1;
          for (; p >= 0; --p) {
            if (p == i) continue;
            if (++pick[p] < choices.size()) break;
            pick[p] = 0;
          }
          if (p < 0) break;
        }
      }
    }
    for (std::size_t a = 0; a < known.size(); ++a)
      for (std::size_t b = a + 1; b < known.size(); ++b) {
        Rows both;
        std::set_intersection(known[a].begin(), known[a].end(), known[b].begin(), known[b].end(),
                              std::back_inserter(both));
        add(both);
      }
  }
  return {found.begin(), found.end()};
}

namespace {

struct Harvester {
  const Algebra& alg;
  std::vector<Implication> out;
  std::set<std::tuple<int, Rows, Rows, int, Rows, Rows>> seen;

  void run(const PPFormula& f, const std::vector<std::string>& u, const std::vector<std::string>& v) {
    Joint j = joint_relation(f, u, v, alg);
    Rows pu = alg.project(j.arity, j.rows, j.pos_u);
    Rows pv = alg.project(j.arity, j.rows, j.pos_v);
    if (pu.size() < 2 || pu.size() > 8) return;
    const std::uint32_t n = static_cast<std::uint32_t>(pu.size());
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
      Rows C;
      for (std::uint32_t b = 0; b < n; ++b)
        if (mask >> b & 1) C.push_back(pu[b]);
      Rows D = image(j, C, alg);
      if (D.empty() || D == pv) continue;
      auto key = std::make_tuple(static_cast<int>(u.size()), C, pu, static_cast<int>(v.size()), D, pv);
      if (seen.count(key)) continue;
      Implication im = check_implication(f, C, u, D, v, alg);
      if (!im.flags.is_implication || !im.flags.nontrivial) continue;
      if (im.flags.proper) seen.insert(key);
      out.push_back(std::move(im));
    }
  }
};

// Ordered tuples of distinct entries of `pool`, lengths 1..k.
std::vector<std::vector<std::string>> tuples_upto(const std::vector<std::string>& pool, int k) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> cur;
  std::function<void()> rec = [&] {
    if (!cur.empty()) out.push_back(cur);
    if (static_cast<int>(cur.size()) == k) return;
    for (const auto& x : pool) {
      if (std::find(cur.begin(), cur.end(), x) != cur.end()) continue;
      cur.push_back(x);
      rec();
      cur.pop_back();
    }
  };
  rec();
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
  return out;
}

}  // namespace

std::vector<Implication> harvest_atom_implications(const Algebra& alg) {
  Harvester h{alg, {}, {}};
  if (!alg.orbit_mode()) {
    auto unary = definable_unary_sets(alg);
    std::vector<std::shared_ptr<const Rows>> restr;
    for (auto& s : unary) restr.push_back(std::make_shared<const Rows>(s));
    for (const auto& name : alg.relation_names()) {
      const int ar = alg.relation_arity(name);
      if (ar < 2) continue;
      std::vector<std::string> xs;
      for (int i = 0; i < ar; ++i) xs.push_back("x" + std::to_string(i + 1));
      double combos = 1;
      for (int i = 0; i < ar; ++i) combos *= static_cast<double>(restr.size() + 1);
      std::vector<std::size_t> pick(ar, 0);
      const bool restrict_args = combos <= 4096;
      while (true) {
        PPFormula f;
        f.atoms.push_back({name, xs, nullptr});
        for (int i = 0; i < ar; ++i)
          if (pick[i] > 0) f.atoms.push_back({"dom", {xs[i]}, restr[pick[i] - 1]});
        for (int a = 0; a < ar; ++a)
          for (int b = 0; b < ar; ++b)
            if (a != b) h.run(f, {xs[a]}, {xs[b]});
        if (!restrict_args) break;
        int p = ar - 1;
        for (; p >= 0; --p) {
          if (++pick[p] <= restr.size()) break;
          pick[p] = 0;
        }
        if (p < 0) break;
      }
    }
    return h.out;
  }
  const int k = alg.k();
  const std::vector<std::string> extras_all = {"w", "z", "w2", "z2"};
  for (const auto& name : alg.relation_names()) {
    const int ar = alg.relation_arity(name);
    std::vector<std::string> xs;
    for (int i = 0; i < ar; ++i) xs.push_back("x" + std::to_string(i + 1));
    std::vector<std::string> extras(extras_all.begin(), extras_all.begin() + std::min<int>(k, 4));
    std::vector<std::string> pool = extras;
    pool.insert(pool.end(), xs.begin(), xs.end());
    auto tups = tuples_upto(pool, k);
    for (const auto& u : tups)
      for (const auto& v : tups) {
        std::set<std::string> used(u.begin(), u.end());
        used.insert(v.begin(), v.end());
        // extras are used in order so renamed copies are not revisited
        bool canonical = true;
        for (std::size_t e = 1; e < extras.size(); ++e)
          if (used.count(extras[e]) && !used.count(extras[e - 1])) canonical = false;
        if (!canonical) continue;
        PPFormula f;
        f.atoms.push_back({name, xs, nullptr});
        for (const auto& e : extras)
          if (used.count(e)) f.free_vars.push_back(e);
        h.run(f, u, v);
      }
  }
  return h.out;
}

std::vector<Implication> harvest_instance_implications(const Instance& inst, const Algebra& alg) {
  Harvester h{alg, {}, {}};
  const int k = alg.orbit_mode() ? alg.k() : 1;
  for (const auto& c : inst.constraints) {
    PPFormula f;
    std::vector<std::string> args;
    for (int x : c.scope) args.push_back(inst.variables[x]);
    f.atoms.push_back({c.provenance, args, std::make_shared<const Rows>(c.extent)});
    std::vector<std::string> pool;
    for (const auto& a : args)
      if (std::find(pool.begin(), pool.end(), a) == pool.end()) pool.push_back(a);
    auto tups = tuples_upto(pool, k);
    for (const auto& u : tups)
      for (const auto& v : tups) h.run(f, u, v);
  }
  return h.out;
}

Implication compose(const Implication& i1, const Implication& i2, const Algebra& alg) {
  if (i1.v.size() != i2.u.size() || i1.D != i2.C || i1.proj_v != i2.proj_u)
    throw Error("compose: interface extents do not match");
  std::set<std::string> used;
  for (const auto& x : i1.formula.variables()) used.insert(x);
  for (const auto& x : i1.u) used.insert(x);
  for (const auto& x : i1.v) used.insert(x);
  auto vars2 = i2.formula.variables();
  for (const auto& x : i2.u) vars2.push_back(x);
  for (const auto& x : i2.v) vars2.push_back(x);
  std::map<std::string, std::string> ren;
  for (std::size_t j = 0; j < i2.u.size(); ++j) ren[i2.u[j]] = i1.v[j];
  std::map<std::string, int> counter;
  for (const auto& x : vars2) {
    if (ren.count(x)) continue;
    std::string base = strip_suffix(x);
    std::string name;
    do {
      name = base + "_" + std::to_string(++counter[base]);
    } while (used.count(name));
    used.insert(name);
    ren[x] = name;
  }
  PPFormula f = i1.formula;
  for (const auto& a : i2.formula.atoms) {
    Atom b = a;
    for (auto& x : b.args) x = ren.at(x);
    f.atoms.push_back(std::move(b));
  }
  for (const auto& x : i2.formula.free_vars)
    if (std::find(f.free_vars.begin(), f.free_vars.end(), ren.at(x)) == f.free_vars.end())
      f.free_vars.push_back(ren.at(x));
  for (const auto& x : i1.u)
    if (std::find(f.free_vars.begin(), f.free_vars.end(), x) == f.free_vars.end()) f.free_vars.push_back(x);
  std::vector<std::string> v;
  for (const auto& x : i2.v) {
    v.push_back(ren.at(x));
    if (std::find(f.free_vars.begin(), f.free_vars.end(), v.back()) == f.free_vars.end())
      f.free_vars.push_back(v.back());
  }
  return check_implication(f, i1.C, i1.u, i2.D, v, alg);
}

Implication power(const Implication& i, int n, const Algebra& alg) {
  if (n < 1) throw Error("power: exponent must be positive");
  Implication acc = i;
  for (int t = 1; t < n; ++t) acc = compose(acc, i, alg);
  return acc;
}

Implication stabilize(const Implication& i, const Algebra& alg) {
  if (!i.flags.balanced || !i.flags.nontrivial) throw Error("stabilize: implication must be balanced and nontrivial");
  bool identity = true;
  for (auto [a, b] : i.pi) identity = identity && a == b;
  if (identity) return i;
  const int m = static_cast<int>(i.u.size());
  std::vector<int> next(m, -1);
  for (auto [a, b] : i.pi) next[a] = b;
  long l = 1;
  for (int s = 0; s < m; ++s) {
    int x = next[s], len = 1;
    while (x >= 0 && x != s && len <= m) x = next[x], ++len;
    if (x == s) l = std::lcm(l, static_cast<long>(len));
  }
  Implication out = power(i, static_cast<int>(l * m), alg);
  if (!out.flags.stable) throw Error("stabilize: power is not stable");
  return out;
}

int ImplicationGraph::vertex_of(int arity, const Rows& extent, const Rows& proj) const {
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (vertices[i].arity == arity && vertices[i].extent == extent && vertices[i].proj == proj)
      return static_cast<int>(i);
  return -1;
}

int ImplicationGraph::add_vertex(int arity, const Rows& extent, const Rows& proj) {
  int v = vertex_of(arity, extent, proj);
  if (v >= 0) return v;
  vertices.push_back({arity, extent, proj});
  return static_cast<int>(vertices.size()) - 1;
}

namespace {

std::string rows_text(const Algebra& alg, int arity, const Rows& rows) {
  auto strs = alg.rows_to_strings(arity, rows);
  std::string s = "{";
  for (std::size_t i = 0; i < strs.size(); ++i) s += (i ? " " : "") + strs[i];
  return s + "}";
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string ImplicationGraph::to_dot(const Algebra& alg) const {
  std::ostringstream os;
  os << "digraph implications {\n";
  for (std::size_t i = 0; i < vertices.size(); ++i)
    os << "  v" << i << " [label=\""
       << dot_escape(rows_text(alg, vertices[i].arity, vertices[i].extent) + " in " +
                     rows_text(alg, vertices[i].arity, vertices[i].proj))
       << "\"];\n";
  for (std::size_t a = 0; a < arcs.size(); ++a)
    os << "  v" << arcs[a].first << " -> v" << arcs[a].second << " [label=\""
       << dot_escape(formula_to_string(arcs_impl[a].formula)) << "\"];\n";
  os << "}\n";
  return os.str();
}

ImplicationGraph build_implication_graph(const std::vector<Implication>& impls) {
  ImplicationGraph g;
  for (const auto& im : impls) {
    if (!im.flags.is_implication || !im.flags.nontrivial || !im.flags.proper) continue;
    int a = g.add_vertex(static_cast<int>(im.u.size()), im.C, im.proj_u);
    int b = g.add_vertex(static_cast<int>(im.v.size()), im.D, im.proj_v);
    g.arcs.push_back({a, b});
    g.arcs_impl.push_back(im);
  }
  return g;
}

namespace {

// Shortest cycles through each vertex of nontrivial strong components,
// self-loops first; each cycle lists arc indices.
std::vector<std::vector<int>> candidate_cycles(const ImplicationGraph& g) {
  using G = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS>;
  const int n = static_cast<int>(g.vertices.size());
  G bg(n);
  for (auto [a, b] : g.arcs) boost::add_edge(a, b, bg);
  std::vector<int> comp(n);
  if (n > 0) boost::strong_components(bg, boost::make_iterator_property_map(comp.begin(), boost::get(boost::vertex_index, bg)));
  std::vector<std::vector<int>> out;
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    if (g.arcs[a].first == g.arcs[a].second) out.push_back({static_cast<int>(a)});
  std::set<std::vector<int>> seen;
  for (int s = 0; s < n; ++s) {
    // BFS from s over arcs inside its component, back to s
    std::vector<int> via(n, -1);
    std::deque<int> q;
    q.push_back(s);
    std::vector<char> vis(n, 0);
    vis[s] = 1;
    int closing = -1;
    while (!q.empty() && closing < 0) {
      int x = q.front();
      q.pop_front();
      for (std::size_t a = 0; a < g.arcs.size(); ++a) {
        auto [p, t] = g.arcs[a];
        if (p != x || comp[t] != comp[s] || p == t) continue;
        if (t == s) {
          closing = static_cast<int>(a);
          break;
        }
        if (vis[t]) continue;
        vis[t] = 1;
        via[t] = static_cast<int>(a);
        q.push_back(t);
      }
    }
    if (closing < 0) continue;
    std::vector<int> cyc{closing};
    int x = g.arcs[closing].first;
    while (x != s) {
      cyc.push_back(via[x]);
      x = g.arcs[via[x]].first;
    }
    std::reverse(cyc.begin(), cyc.end());
    std::vector<int> key = cyc;
    std::sort(key.begin(), key.end());
    if (seen.insert(key).second) out.push_back(cyc);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
  return out;
}

}  // namespace

BalancedSearchResult search_balanced(const Algebra& alg, SearchBudget budget) {
  BalancedSearchResult res;
  auto impls = harvest_atom_implications(alg);
  std::vector<Implication> kept;
  for (auto& im : impls)
    if (static_cast<int>(im.formula.atoms.size()) <= budget.max_atoms) kept.push_back(std::move(im));
  res.graph = build_implication_graph(kept);
  for (const auto& cyc : candidate_cycles(res.graph)) {
    int used = static_cast<int>(cyc.size()) - 1;
    if (used > budget.max_compositions) {
      res.budget_exhausted = true;
      continue;
    }
    Implication acc = res.graph.arcs_impl[cyc[0]];
    bool ok = true;
    for (std::size_t t = 1; t < cyc.size() && ok; ++t) {
      acc = compose(acc, res.graph.arcs_impl[cyc[t]], alg);
      ok = acc.flags.is_implication;
    }
    if (!ok || !acc.flags.balanced || !acc.flags.nontrivial) continue;
    bool identity = true;
    for (auto [a, b] : acc.pi) identity = identity && a == b;
    if (!identity) {
      const int m = static_cast<int>(acc.u.size());
      if (used + m * m * 2 > budget.max_compositions) {
        res.budget_exhausted = true;
        continue;
      }
      acc = stabilize(acc, alg);
      used += m * m * 2;
    }
    if (acc.flags.is_implication && acc.flags.stable && acc.flags.balanced && acc.flags.proper) {
      res.witness = acc;
      res.cycle = cyc;
      res.compositions_used = used;
      return res;
    }
  }
  return res;
}

namespace {

// Binary relations as bitmasks over the rows of arity 2.
struct BinaryNode {
  enum Kind { base, meet, chain, converse } kind;
  int a = -1, b = -1;
  Atom atom;  // base: arguments over x, y and e1, e2, ...
  int atoms = 1;
};

void emit(const std::vector<BinaryNode>& nodes, int id, const std::string& x, const std::string& y, int& fresh,
          std::vector<Atom>& out) {
  const auto& n = nodes[id];
  switch (n.kind) {
    case BinaryNode::base: {
      std::map<std::string, std::string> ren{{"x", x}, {"y", y}};
      Atom a = n.atom;
      for (auto& arg : a.args) {
        if (!ren.count(arg)) ren[arg] = "e" + std::to_string(++fresh);
        arg = ren[arg];
      }
      out.push_back(std::move(a));
      break;
    }
    case BinaryNode::meet:
      emit(nodes, n.a, x, y, fresh, out);
      emit(nodes, n.b, x, y, fresh, out);
      break;
    case BinaryNode::chain: {
      std::string z = "e" + std::to_string(++fresh);
      emit(nodes, n.a, x, z, fresh, out);
      emit(nodes, n.b, z, y, fresh, out);
      break;
    }
    case BinaryNode::converse:
      emit(nodes, n.a, y, x, fresh, out);
      break;
  }
}

}  // namespace

std::optional<EqualityDefinition> search_equality_definition(const Algebra& alg, int max_atoms) {
  const Rows& pairs = alg.all_rows(2);
  if (pairs.size() > 64) return std::nullopt;
  std::map<Row, int> bit;
  for (std::size_t i = 0; i < pairs.size(); ++i) bit[pairs[i]] = static_cast<int>(i);
  auto mask_of = [&](const Rows& rows) {
    std::uint64_t m = 0;
    for (Row r : rows) m |= 1ull << bit.at(r);
    return m;
  };
  const std::uint64_t eq = mask_of(alg.equality_rows());
  std::vector<std::uint64_t> swap_bit(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const int sw[2] = {1, 0};
    swap_bit[i] = 1ull << bit.at(alg.restrict(2, pairs[i], sw));
  }
  struct Triple {
    int ab, bc, ac;
  };
  std::vector<Triple> triples;
  for (Row r : alg.all_rows(3)) {
    const int p01[2] = {0, 1}, p12[2] = {1, 2}, p02[2] = {0, 2};
    triples.push_back({bit.at(alg.restrict(3, r, p01)), bit.at(alg.restrict(3, r, p12)), bit.at(alg.restrict(3, r, p02))});
  }
  auto conv = [&](std::uint64_t m) {
    std::uint64_t o = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (m >> i & 1) o |= swap_bit[i];
    return o;
  };
  auto chain = [&](std::uint64_t a, std::uint64_t b) {
    std::uint64_t o = 0;
    for (const auto& t : triples)
      if ((a >> t.ab & 1) && (b >> t.bc & 1)) o |= 1ull << t.ac;
    return o;
  };

  std::vector<BinaryNode> nodes;
  std::vector<std::uint64_t> rel;
  std::map<std::uint64_t, int> best;
  auto add = [&](BinaryNode n, std::uint64_t m) {
    if (best.count(m)) return -1;
    nodes.push_back(std::move(n));
    rel.push_back(m);
    best[m] = static_cast<int>(nodes.size()) - 1;
    return static_cast<int>(nodes.size()) - 1;
  };
  auto add_with_converse = [&](BinaryNode n, std::uint64_t m) {
    int id = add(std::move(n), m);
    if (id < 0) return;
    BinaryNode c{BinaryNode::converse, id, -1, {}, nodes[id].atoms};
    add(std::move(c), conv(m));
  };

  // single atoms with arguments drawn from x, y and existential variables
  for (const auto& name : alg.relation_names()) {
    const int ar = alg.relation_arity(name);
    std::vector<int> code(ar, 0);  // 0 = x, 1 = y, 2+j = e(j)
    std::function<void(int, int)> rec = [&](int p, int next_e) {
      if (p == ar) {
        PPFormula f;
        Atom a{name, {}, nullptr};
        for (int c : code) a.args.push_back(c == 0 ? "x" : c == 1 ? "y" : "e" + std::to_string(c - 1));
        f.atoms.push_back(a);
        f.free_vars = {"x", "y"};
        add_with_converse({BinaryNode::base, -1, -1, a, 1}, mask_of(eval_pp(f, alg)));
        return;
      }
      for (int c = 0; c <= next_e; ++c) {
        code[p] = c;
        rec(p + 1, c == next_e ? next_e + 1 : next_e);
      }
    };
    if (ar <= 6) rec(0, 2);
  }
  for (int size = 2; size <= max_atoms && !best.count(eq); ++size) {
    const std::size_t n = nodes.size();
    for (std::size_t i = 0; i < n && !best.count(eq); ++i)
      for (std::size_t j = 0; j < n && !best.count(eq); ++j) {
        if (nodes[i].atoms + nodes[j].atoms != size) continue;
        if (i < j) add_with_converse({BinaryNode::meet, static_cast<int>(i), static_cast<int>(j), {}, size}, rel[i] & rel[j]);
        add_with_converse({BinaryNode::chain, static_cast<int>(i), static_cast<int>(j), {}, size}, chain(rel[i], rel[j]));
      }
  }
  auto it = best.find(eq);
  if (it == best.end()) return std::nullopt;
  EqualityDefinition def;
  int fresh = 0;
  emit(nodes, it->second, "x", "y", fresh, def.formula.atoms);
  def.formula.free_vars = {"x", "y"};
  if (eval_pp(def.formula, alg) != alg.equality_rows()) throw Error("equality search produced a wrong definition");
  return def;
}

std::string flags_to_string(const ImplicationFlags& f) {
  std::ostringstream os;
  os << "implication=" << f.is_implication << " nontrivial=" << f.nontrivial << " stable=" << f.stable
     << " proper=" << f.proper << " balanced=" << f.balanced;
  return os.str();
}

std::string implication_to_string(const Implication& i, const Algebra& alg) {
  std::ostringstream os;
  auto tup = [](const std::vector<std::string>& t) {
    std::string s = "(";
    for (std::size_t a = 0; a < t.size(); ++a) s += (a ? "," : "") + t[a];
    return s + ")";
  };
  os << formula_to_string(i.formula, &alg) << "\n";
  os << "  C=" << rows_text(alg, static_cast<int>(i.u.size()), i.C) << " u=" << tup(i.u)
     << " D=" << rows_text(alg, static_cast<int>(i.v.size()), i.D) << " v=" << tup(i.v) << "\n";
  os << "  " << flags_to_string(i.flags);
  return os.str();
}

}  // namespace cspdual
