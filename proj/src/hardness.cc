#include "cspdual/hardness.hh"

#include <algorithm>
#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/strong_components.hpp>
#include <functional>
#include <set>
#include <sstream>

#include "cspdual/orbits.hh"

namespace cspdual {

FOFormula FOFormula::atom(std::string rel, std::vector<std::string> args) {
  FOFormula f;
  f.kind = Kind::atom;
  f.relation = std::move(rel);
  f.vars = std::move(args);
  return f;
}

FOFormula FOFormula::eq(std::string a, std::string b) {
  FOFormula f;
  f.kind = Kind::equal;
  f.vars = {std::move(a), std::move(b)};
  return f;
}

FOFormula FOFormula::all_of(std::vector<FOFormula> parts) {
  if (parts.empty()) return top();
  if (parts.size() == 1) return std::move(parts[0]);
  FOFormula f;
  f.kind = Kind::conj;
  f.parts = std::move(parts);
  return f;
}

FOFormula FOFormula::any_of(std::vector<FOFormula> parts) {
  if (parts.size() == 1) return std::move(parts[0]);
  FOFormula f;
  f.kind = parts.empty() ? Kind::falsity : Kind::disj;
  f.parts = std::move(parts);
  return f;
}

FOFormula FOFormula::exists(std::vector<std::string> bound, FOFormula body) {
  FOFormula f;
  f.kind = Kind::exists;
  f.vars = std::move(bound);
  f.parts.push_back(std::move(body));
  return f;
}

namespace {

bool eval_exists(const FOFormula& f, const Structure& s, std::map<std::string, int>& env, std::size_t i) {
  if (i == f.vars.size()) return eval_fo(f.parts[0], s, env);
  const std::string& v = f.vars[i];
  auto old = env.find(v);
  std::optional<int> saved;
  if (old != env.end()) saved = old->second;
  bool found = false;
  for (int a = 0; a < s.domain_size && !found; ++a) {
    env[v] = a;
    found = eval_exists(f, s, env, i + 1);
  }
  if (saved)
    env[v] = *saved;
  else
    env.erase(v);
  return found;
}

int lookup(const std::map<std::string, int>& env, const std::string& v) {
  auto it = env.find(v);
  if (it == env.end()) throw Error("formula: unbound variable " + v);
  return it->second;
}

}  // namespace

bool eval_fo(const FOFormula& f, const Structure& s, std::map<std::string, int>& env) {
  switch (f.kind) {
    case FOFormula::Kind::truth:
      return true;
    case FOFormula::Kind::falsity:
      return false;
    case FOFormula::Kind::atom: {
      int r = s.sig.index_of(f.relation);
      if (r < 0) throw Error("formula: unknown relation " + f.relation);
      Tuple t;
      for (const auto& v : f.vars) t.push_back(lookup(env, v));
      return std::binary_search(s.extents[r].begin(), s.extents[r].end(), t);
    }
    case FOFormula::Kind::equal:
      return lookup(env, f.vars[0]) == lookup(env, f.vars[1]);
    case FOFormula::Kind::conj:
      for (const auto& p : f.parts)
        if (!eval_fo(p, s, env)) return false;
      return true;
    case FOFormula::Kind::disj:
      for (const auto& p : f.parts)
        if (eval_fo(p, s, env)) return true;
      return false;
    case FOFormula::Kind::exists:
      return eval_exists(f, s, env, 0);
  }
  return false;
}

std::string fo_to_string(const FOFormula& f) {
  auto join = [](const std::vector<std::string>& v, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
  };
  switch (f.kind) {
    case FOFormula::Kind::truth:
      return "true";
    case FOFormula::Kind::falsity:
      return "false";
    case FOFormula::Kind::atom:
      return f.relation + "(" + join(f.vars, ",") + ")";
    case FOFormula::Kind::equal:
      return f.vars[0] + " = " + f.vars[1];
    case FOFormula::Kind::conj:
    case FOFormula::Kind::disj: {
      std::vector<std::string> ps;
      for (const auto& p : f.parts) ps.push_back(fo_to_string(p));
      return "(" + join(ps, f.kind == FOFormula::Kind::conj ? " & " : " | ") + ")";
    }
    case FOFormula::Kind::exists:
      return "(exists " + join(f.vars, " ") + " . " + fo_to_string(f.parts[0]) + ")";
  }
  return "";
}

Structure apply_interpretation(const Interpretation& in, const Structure& src, const std::vector<int>& params) {
  if (params.size() != in.params.size()) throw Error("apply_interpretation: wrong number of parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i] < 0 || params[i] >= src.domain_size) throw Error("apply_interpretation: parameter out of range");
    for (std::size_t j = 0; j < i; ++j)
      if (params[i] == params[j]) throw Error("apply_interpretation: parameters are not pairwise distinct");
  }
  if (!(src.sig == in.source)) throw Error("apply_interpretation: source signature mismatch");
  const int k = in.dimension;
  std::map<std::string, int> env;
  for (std::size_t i = 0; i < params.size(); ++i) env[in.params[i]] = params[i];
  std::vector<Tuple> universe;
  Tuple t(k, 0);
  const bool any = src.domain_size > 0;
  while (any) {
    for (int j = 0; j < k; ++j) env[in.universe_vars[j]] = t[j];
    if (eval_fo(in.universe, src, env)) universe.push_back(t);
    int j = k - 1;
    for (; j >= 0; --j) {
      if (++t[j] < src.domain_size) break;
      t[j] = 0;
    }
    if (j < 0) break;
  }
  for (const auto& v : in.universe_vars) env.erase(v);
  const int n = static_cast<int>(universe.size());
  Structure out(in.target, n);
  for (std::size_t r = 0; r < in.relations.size(); ++r) {
    const auto& def = in.relations[r];
    const int ar = static_cast<int>(def.vars.size()) / k;
    if (n == 0) continue;
    Tuple idx(ar, 0);
    while (true) {
      for (int a = 0; a < ar; ++a)
        for (int j = 0; j < k; ++j) env[def.vars[a * k + j]] = universe[idx[a]][j];
      if (eval_fo(def.body, src, env)) out.add_tuple(static_cast<int>(r), idx);
      int a = ar - 1;
      for (; a >= 0; --a) {
        if (++idx[a] < n) break;
        idx[a] = 0;
      }
      if (a < 0) break;
    }
    for (const auto& v : def.vars) env.erase(v);
  }
  out.normalize();
  return out;
}

Structure equality_csp_template() {
  Signature sig;
  sig.add("R0", 1);
  sig.add("R1", 1);
  sig.add("Eq", 2);
  Structure s(sig, 2);
  s.add_tuple(0, {0});
  s.add_tuple(1, {1});
  s.add_tuple(2, {0, 0});
  s.add_tuple(2, {1, 1});
  s.normalize();
  return s;
}

namespace {

std::vector<int> strong_components_of(int n, const std::vector<std::pair<int, int>>& arcs, int& count) {
  using G = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS>;
  G g(n);
  for (auto [a, b] : arcs) boost::add_edge(a, b, g);
  std::vector<int> comp(n, 0);
  count = n == 0 ? 0 : boost::strong_components(g, boost::make_iterator_property_map(comp.begin(), boost::get(boost::vertex_index, g)));
  return comp;
}

struct PairRelation {
  int arity_u, arity_v;
  std::set<std::pair<Row, Row>> pairs;
};

// (row over u, row over v) for every satisfying assignment of f.
PairRelation pair_relation(const PPFormula& f, const std::vector<std::string>& u, const std::vector<std::string>& v,
                           const Algebra& alg) {
  PPFormula g = f;
  g.free_vars = u;
  std::vector<int> pu, pv;
  for (std::size_t i = 0; i < u.size(); ++i) pu.push_back(static_cast<int>(i));
  for (const auto& x : v) {
    auto it = std::find(g.free_vars.begin(), g.free_vars.end(), x);
    if (it == g.free_vars.end()) {
      pv.push_back(static_cast<int>(g.free_vars.size()));
      g.free_vars.push_back(x);
    } else {
      pv.push_back(static_cast<int>(it - g.free_vars.begin()));
    }
  }
  const int ar = static_cast<int>(g.free_vars.size());
  PairRelation out{static_cast<int>(u.size()), static_cast<int>(v.size()), {}};
  for (Row r : eval_pp(g, alg)) out.pairs.insert({alg.restrict(ar, r, pu), alg.restrict(ar, r, pv)});
  return out;
}

std::string rows_text(const Algebra& alg, int arity, const std::vector<Row>& rows) {
  Rows sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end());
  auto strs = alg.rows_to_strings(arity, sorted);
  std::string s = "{";
  for (std::size_t i = 0; i < strs.size(); ++i) s += (i ? " " : "") + strs[i];
  return s + "}";
}

}  // namespace

ImplicationDigraph implication_digraph(const Implication& i, const Algebra& alg) {
  ImplicationDigraph g;
  g.arity = static_cast<int>(i.u.size());
  g.vertices.assign(i.proj_u.begin(), i.proj_u.end());
  auto index = [&](Row r) {
    auto it = std::lower_bound(g.vertices.begin(), g.vertices.end(), r);
    if (it == g.vertices.end() || *it != r) return -1;
    return static_cast<int>(it - g.vertices.begin());
  };
  auto rel = pair_relation(i.formula, i.u, i.v, alg);
  for (auto [a, b] : rel.pairs) {
    int x = index(a), y = index(b);
    if (x >= 0 && y >= 0) g.arcs.push_back({x, y});
  }
  g.component = strong_components_of(static_cast<int>(g.vertices.size()), g.arcs, g.components);
  if (!i.flags.balanced) return g;
  const int nc = g.components;
  std::vector<char> in_c(nc, 1), in_rest(nc, 1), sink(nc, 1), source(nc, 1);
  for (std::size_t x = 0; x < g.vertices.size(); ++x) {
    bool c = std::binary_search(i.C.begin(), i.C.end(), g.vertices[x]);
    (c ? in_rest : in_c)[g.component[x]] = 0;
  }
  for (auto [a, b] : g.arcs)
    if (g.component[a] != g.component[b]) {
      sink[g.component[a]] = 0;
      source[g.component[b]] = 0;
    }
  bool sink_in_c = false, source_in_rest = false;
  for (int c = 0; c < nc; ++c) {
    sink_in_c = sink_in_c || (in_c[c] && sink[c]);
    source_in_rest = source_in_rest || (in_rest[c] && source[c]);
  }
  if (!sink_in_c || !source_in_rest)
    throw Error("implication digraph: no sink component inside C or no source component outside it");
  return g;
}

std::string ImplicationDigraph::to_dot(const Algebra& alg) const {
  std::ostringstream os;
  os << "digraph witness {\n";
  const int ar = arity;
  for (std::size_t x = 0; x < vertices.size(); ++x)
    os << "  n" << x << " [label=\"" << alg.row_to_string(ar, vertices[x]) << "\" group=" << component[x] << "];\n";
  for (auto [a, b] : arcs) os << "  n" << a << " -> n" << b << ";\n";
  os << "}\n";
  return os.str();
}

Equivalence build_equivalence(const Implication& i, const Algebra& alg) {
  if (!i.flags.is_implication || !i.flags.balanced || !i.flags.stable || !i.flags.proper)
    throw Error("build_equivalence: witness must be a stable balanced proper implication");
  Equivalence eq;
  const int m = static_cast<int>(i.u.size());
  std::vector<char> shared(m, 0);
  for (auto [a, b] : i.pi) shared[a] = 1;
  for (int p = 0; p < m; ++p)
    if (!shared[p]) eq.order.push_back(p);
  const int r = static_cast<int>(eq.order.size());
  for (int p = 0; p < m; ++p)
    if (shared[p]) eq.order.push_back(p);

  const int n = static_cast<int>(i.proj_u.size());
  eq.power = power(i, n, alg);
  std::vector<std::string> u, v;
  for (int p : eq.order) {
    u.push_back(eq.power.u[p]);
    v.push_back(eq.power.v[p]);
  }
  auto rel = pair_relation(eq.power.formula, u, v, alg);
  std::set<std::pair<Row, Row>> sym;
  for (auto [a, b] : rel.pairs)
    if (rel.pairs.count({b, a})) sym.insert({a, b});
  std::set<Row> support;
  for (auto [a, b] : sym) support.insert(a);
  for (Row a : support)
    if (!sym.count({a, a})) throw Error("build_equivalence: relation is not reflexive on its support");
  for (auto [a, b] : sym)
    for (Row c : support)
      if (sym.count({b, c}) && !sym.count({a, c})) throw Error("build_equivalence: relation is not transitive");
  eq.pairs.assign(sym.begin(), sym.end());
  std::set<Row> done;
  for (Row a : support) {
    if (done.count(a)) continue;
    std::vector<Row> cls;
    for (Row b : support)
      if (sym.count({a, b})) cls.push_back(b), done.insert(b);
    eq.classes.push_back(cls);
  }
  if (eq.classes.size() < 2) throw Error("build_equivalence: fewer than two classes");

  // theta: psi(u, v) & psi(v, u) with the copy's inner variables renamed apart
  std::map<std::string, std::string> ren;
  for (int p = 0; p < r; ++p) {
    ren[u[p]] = v[p];
    ren[v[p]] = u[p];
  }
  for (int p = r; p < m; ++p) ren[u[p]] = u[p];
  std::set<std::string> used;
  for (const auto& x : eq.power.formula.variables()) used.insert(x);
  for (const auto& x : eq.power.formula.variables())
    if (!ren.count(x)) {
      std::string name = x + "_b";
      while (used.count(name)) name += "b";
      used.insert(name);
      ren[x] = name;
    }
  eq.theta.atoms = eq.power.formula.atoms;
  for (const auto& a : eq.power.formula.atoms) {
    Atom b = a;
    for (auto& x : b.args) x = ren.at(x);
    eq.theta.atoms.push_back(std::move(b));
  }
  for (int p = 0; p < r; ++p) eq.theta.free_vars.push_back(u[p]);
  for (int p = 0; p < r; ++p) eq.theta.free_vars.push_back(v[p]);
  for (int p = r; p < m; ++p) eq.theta.free_vars.push_back(u[p]);

  // compare the tuple-level relation with the row-level one
  const int w = r + m;
  std::vector<int> upos, vpos;
  for (int p = 0; p < r; ++p) upos.push_back(p);
  for (int p = 0; p < r; ++p) vpos.push_back(r + p);
  for (int p = r; p < m; ++p) upos.push_back(r + p), vpos.push_back(r + p);
  Rows expected;
  for (Row t : alg.all_rows(w))
    if (sym.count({alg.restrict(w, t, upos), alg.restrict(w, t, vpos)})) expected.push_back(t);
  eq.theta_matches = eval_pp(eq.theta, alg) == expected;
  return eq;
}

namespace {

std::string fresh_name(const Algebra& alg, const std::string& base) {
  std::string n = base;
  while (alg.has_relation(n)) n += "_";
  return n;
}

struct Extra {
  std::string name;
  int arity;
  Rows rows;
};

std::shared_ptr<const Algebra> expand(std::shared_ptr<const Algebra> tmpl, const std::vector<Extra>& extra) {
  if (auto* ot = dynamic_cast<const OrbitTemplate*>(tmpl.get())) {
    auto t = std::make_shared<OrbitTemplate>(ot->name() + "+", ot->space_ptr(), ot->k(), ot->l());
    for (const auto& n : ot->relation_names()) {
      if (ot->is_base_relation(n))
        t->add_base_relation(n);
      else
        t->add_relation(n, ot->relation_arity(n), ot->relation_rows(n));
    }
    for (const auto& e : extra) t->add_relation(e.name, e.arity, e.rows);
    return t;
  }
  auto* fa = dynamic_cast<const FiniteAlgebra*>(tmpl.get());
  if (!fa) throw Error("expand: unsupported template kind");
  Structure s = fa->structure();
  for (const auto& e : extra) {
    s.sig.add(e.name, e.arity);
    s.extents.emplace_back();
    for (Row r : e.rows) s.extents.back().push_back(fa->decode(e.arity, r));
  }
  s.normalize();
  return std::make_shared<FiniteAlgebra>(s);
}

std::string first(int arg) { return "a" + std::to_string(arg) + "_1"; }
std::string second(int arg) { return "a" + std::to_string(arg) + "_2"; }

// Element-and-parameter encoding of args[0..m-1] (1-based argument numbers).
FOFormula encodes(const std::vector<int>& args, int r, const std::vector<std::string>& params) {
  std::vector<FOFormula> parts;
  const int m = static_cast<int>(args.size());
  for (int i = 1; i < r; ++i) parts.push_back(FOFormula::eq(first(args[0]), first(args[i])));
  for (int i = r; i < m; ++i) parts.push_back(FOFormula::eq(first(args[i]), params[i]));
  for (int i = 0; i < m; ++i) parts.push_back(FOFormula::eq(second(args[i]), params[i]));
  return FOFormula::all_of(std::move(parts));
}

Interpretation base_interpretation(int dim, int params) {
  Interpretation in;
  in.dimension = dim;
  for (int i = 1; i <= params; ++i) in.params.push_back("p" + std::to_string(i));
  in.source = equality_csp_template().sig;
  if (dim == 1) {
    in.universe_vars = {"x"};
  } else {
    in.universe_vars = {"x1", "x2"};
    std::vector<FOFormula> any;
    for (const auto& p : in.params) any.push_back(FOFormula::eq("x2", p));
    in.universe = FOFormula::any_of(std::move(any));
  }
  return in;
}

void add_relation(Interpretation& in, const std::string& name, int arity, FOFormula body) {
  RelationDefinition d;
  d.name = name;
  for (int a = 1; a <= arity; ++a) {
    if (in.dimension == 1)
      d.vars.push_back("a" + std::to_string(a));
    else
      d.vars.push_back(first(a)), d.vars.push_back(second(a));
  }
  d.body = std::move(body);
  in.target.add(name, arity);
  in.relations.push_back(std::move(d));
}

Row least_by_key(const Algebra& alg, int arity, const std::vector<Row>& rows) {
  return *std::min_element(rows.begin(), rows.end(),
                           [&](Row a, Row b) { return alg.row_key(arity, a) < alg.row_key(arity, b); });
}

}  // namespace

Reduction emit_reduction(const Implication& witness, std::shared_ptr<const Algebra> tmpl) {
  const Algebra& alg = *tmpl;
  implication_digraph(witness, alg);
  Equivalence eq = build_equivalence(witness, alg);
  Reduction red;
  const std::string equiv = fresh_name(alg, "Equiv"), c0 = fresh_name(alg, "Class0"), c1 = fresh_name(alg, "Class1");
  const int m = static_cast<int>(witness.u.size());
  const int r = m - static_cast<int>(witness.pi.size());
  std::ostringstream note;
  note << "classes:";
  for (const auto& c : eq.classes) note << ' ' << rows_text(alg, m, c);
  red.notes.push_back(note.str());
  if (!eq.theta_matches) red.notes.push_back("tuple-level theta differs from the class relation; the class relation is used");

  if (!alg.orbit_mode()) {
    red.kind = ReductionKind::finite_balanced;
    Row c = eq.classes[0][0], d = eq.classes[1][0];
    Rows pairs;
    for (auto [a, b] : eq.pairs) pairs.push_back(a * static_cast<Row>(alg.all_rows(1).size()) + b);
    std::sort(pairs.begin(), pairs.end());
    red.target = expand(tmpl, {{equiv, 2, pairs}, {c0, 1, {c}}, {c1, 1, {d}}});
    red.notes.push_back("c = " + alg.row_to_string(1, c) + ", d = " + alg.row_to_string(1, d));
    red.interp = base_interpretation(1, 0);
    add_relation(red.interp, equiv, 2, FOFormula::atom("Eq", {"a1", "a2"}));
    add_relation(red.interp, c0, 1, FOFormula::atom("R0", {"a1"}));
    add_relation(red.interp, c1, 1, FOFormula::atom("R1", {"a1"}));
    return red;
  }

  red.kind = ReductionKind::orbit_balanced;
  std::vector<int> zpos;
  for (int p = r; p < m; ++p) zpos.push_back(p);
  // least projection P shared by two classes, then the least orbit of each
  std::map<std::string, std::vector<std::pair<int, Row>>> by_proj;
  for (std::size_t ci = 0; ci < eq.classes.size(); ++ci)
    for (Row o : eq.classes[ci]) {
      Row p = alg.restrict(m, o, zpos);
      by_proj[alg.row_key(m - r, p)].push_back({static_cast<int>(ci), o});
    }
  std::optional<Row> o1, o2;
  for (auto& [key, members] : by_proj) {
    std::set<int> cls;
    for (auto& [ci, o] : members) cls.insert(ci);
    if (cls.size() < 2) continue;
    int a = *cls.begin(), b = *std::next(cls.begin());
    std::vector<Row> in_a, in_b;
    for (auto& [ci, o] : members) {
      if (ci == a) in_a.push_back(o);
      if (ci == b) in_b.push_back(o);
    }
    o1 = least_by_key(alg, m, in_a);
    o2 = least_by_key(alg, m, in_b);
    red.notes.push_back("projection P = " + (m == r ? std::string("(empty)") : alg.row_to_string(m - r, alg.restrict(m, *o1, zpos))));
    break;
  }
  if (!o1) throw Error("emit_reduction: no two classes share a projection");
  red.notes.push_back("O1 = " + alg.row_to_string(m, *o1) + ", O2 = " + alg.row_to_string(m, *o2));

  const int w = r + m;
  std::vector<int> upos, vpos;
  for (int p = 0; p < r; ++p) upos.push_back(p), vpos.push_back(r + p);
  for (int p = r; p < m; ++p) upos.push_back(r + p), vpos.push_back(r + p);
  std::set<std::pair<Row, Row>> rel(eq.pairs.begin(), eq.pairs.end());
  Rows equiv_rows;
  for (Row t : alg.all_rows(w))
    if (rel.count({alg.restrict(w, t, upos), alg.restrict(w, t, vpos)})) equiv_rows.push_back(t);
  red.target = expand(tmpl, {{equiv, w, equiv_rows}, {c0, m, {*o1}}, {c1, m, {*o2}}});

  red.interp = base_interpretation(2, m);
  const auto& params = red.interp.params;
  std::vector<int> xs, ys;
  for (int a = 1; a <= m; ++a) xs.push_back(a);
  add_relation(red.interp, c0, m, FOFormula::all_of({encodes(xs, r, params), FOFormula::atom("R0", {first(1)})}));
  add_relation(red.interp, c1, m, FOFormula::all_of({encodes(xs, r, params), FOFormula::atom("R1", {first(1)})}));
  // arguments 1..r are X, r+1..r+m are Y; X followed by the shared tail of Y
  std::vector<int> xargs, yargs;
  for (int a = 1; a <= r; ++a) xargs.push_back(a);
  for (int a = 1; a <= m; ++a) yargs.push_back(r + a);
  for (int p = r; p < m; ++p) xargs.push_back(yargs[p]);
  add_relation(red.interp, equiv, w,
               FOFormula::all_of({encodes(xargs, r, params), encodes(yargs, r, params),
                                  FOFormula::atom("Eq", {first(1), first(r + 1)})}));
  return red;
}

Reduction emit_equality_reduction(const EqualityDefinition& def, std::shared_ptr<const Algebra> tmpl) {
  const Algebra& alg = *tmpl;
  if (eval_pp(def.formula, alg) != alg.equality_rows()) throw Error("emit_equality_reduction: formula does not define equality");
  Reduction red;
  red.kind = ReductionKind::equality;
  Rows injective;
  for (Row r : alg.all_rows(2))
    if (alg.injective(2, r)) injective.push_back(r);
  if (injective.empty()) throw Error("emit_equality_reduction: template has no injective pair");
  Row o = least_by_key(alg, 2, injective);
  const std::string orbit = fresh_name(alg, "Orbit"), same = fresh_name(alg, "Same");
  red.target = expand(tmpl, {{orbit, 2, {o}}, {same, 2, alg.equality_rows()}});
  red.notes.push_back("injective pair " + alg.row_to_string(2, o));
  red.interp = base_interpretation(1, 0);
  add_relation(red.interp, orbit, 2, FOFormula::all_of({FOFormula::atom("R0", {"a1"}), FOFormula::atom("R1", {"a2"})}));
  add_relation(red.interp, same, 2, FOFormula::atom("Eq", {"a1", "a2"}));
  return red;
}

bool target_solvable(const Algebra& target, const Structure& s) {
  if (auto* ot = dynamic_cast<const OrbitTemplate*>(&target)) {
    Instance inst = orbit_structure_to_instance(s, *ot);
    if (inst.variables.empty()) return true;
    return solve_orbit(inst, *ot, SolveMode::search).verdict == Verdict::sat;
  }
  auto* fa = dynamic_cast<const FiniteAlgebra*>(&target);
  if (!fa) throw Error("target_solvable: unsupported template kind");
  const Structure& t = fa->structure();
  Structure wide(t.sig, s.domain_size);
  for (std::size_t r = 0; r < s.sig.relations.size(); ++r) {
    int at = t.sig.index_of(s.sig.relations[r].name);
    if (at < 0) throw Error("target_solvable: relation " + s.sig.relations[r].name + " missing from target");
    wide.extents[at] = s.extents[r];
  }
  return find_homomorphism(wide, t).has_value();
}

namespace {

std::string describe(const Structure& s) {
  std::ostringstream os;
  os << "size " << s.domain_size << ":";
  for (std::size_t r = 0; r < s.extents.size(); ++r)
    for (const auto& t : s.extents[r]) os << ' ' << s.sig.relations[r].name << tuple_to_string(t);
  return os.str();
}

}  // namespace

ReductionReport verify_reduction(const Interpretation& in, const Structure& src_template, const Algebra& target,
                                 int n) {
  ReductionReport rep;
  rep.n = n;
  const int p = static_cast<int>(in.params.size());
  if (n <= 0) return rep;
  for_each_structure(in.source, n, [&](const Structure& s) {
    if (!rep.pass) return;
    if (s.domain_size < p) {
      ++rep.skipped_small;
      return;
    }
    ++rep.structures;
    const bool src_sat = find_homomorphism(s, src_template).has_value();
    std::vector<int> params(p, 0);
    std::function<void(int)> rec = [&](int i) {
      if (!rep.pass) return;
      if (i == p) {
        ++rep.parameter_tuples;
        bool tgt = target_solvable(target, apply_interpretation(in, s, params));
        if (tgt != src_sat) {
          rep.pass = false;
          std::ostringstream os;
          os << describe(s) << " params";
          for (int x : params) os << ' ' << x;
          os << ": source " << (src_sat ? "solvable" : "unsolvable") << ", image " << (tgt ? "solvable" : "unsolvable");
          rep.counterexample = os.str();
        }
        return;
      }
      for (int a = 0; a < s.domain_size; ++a) {
        if (std::find(params.begin(), params.begin() + i, a) != params.begin() + i) continue;
        params[i] = a;
        rec(i + 1);
      }
    };
    rec(0);
  });
  return rep;
}

Structure unreachability_instance(int vertices, const std::vector<std::pair<int, int>>& edges, int s, int t) {
  Structure src(equality_csp_template().sig, vertices);
  src.add_tuple(0, {s});
  src.add_tuple(1, {t});
  for (auto [a, b] : edges) src.add_tuple(2, {a, b});
  src.normalize();
  return src;
}

ChainReport verify_reduction_chain(const Reduction& red, int max_vertices) {
  ChainReport rep;
  const Structure eqt = equality_csp_template();
  const int p = static_cast<int>(red.interp.params.size());
  for (int n = 2; n <= max_vertices && rep.pass; ++n) {
    if (n < p) continue;
    std::vector<std::pair<int, int>> all;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) all.push_back({a, b});
    std::vector<int> params(p);
    for (int i = 0; i < p; ++i) params[i] = i;
    for (std::uint32_t mask = 0; mask < (1u << all.size()) && rep.pass; ++mask) {
      std::vector<std::pair<int, int>> edges;
      std::vector<int> parent(n);
      for (int i = 0; i < n; ++i) parent[i] = i;
      std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
      for (std::size_t e = 0; e < all.size(); ++e)
        if (mask >> e & 1) {
          edges.push_back(all[e]);
          parent[find(all[e].first)] = find(all[e].second);
        }
      for (int s = 0; s < n && rep.pass; ++s)
        for (int t = 0; t < n && rep.pass; ++t) {
          if (s == t) continue;
          ++rep.cases;
          const bool unreachable = find(s) != find(t);
          Structure src = unreachability_instance(n, edges, s, t);
          const bool src_sat = find_homomorphism(src, eqt).has_value();
          const bool tgt_sat = target_solvable(*red.target, apply_interpretation(red.interp, src, params));
          if (unreachable != src_sat || src_sat != tgt_sat) {
            rep.pass = false;
            std::ostringstream os;
            os << n << " vertices, edges";
            for (auto [a, b] : edges) os << ' ' << a << '-' << b;
            os << ", s=" << s << " t=" << t;
            rep.counterexample = os.str();
          }
        }
    }
  }
  return rep;
}

}  // namespace cspdual
