#include "cspdual/textio.hh"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace cspdual {

ParseError::ParseError(int l, int c, const std::string& what)
    : Error(std::to_string(l) + ":" + std::to_string(c) + ": " + what), line(l), column(c) {}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '#'; }

struct Cursor {
  std::string s;
  int line = 0;
  std::size_t i = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line, static_cast<int>(i) + 1, msg); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& msg) const {
    throw ParseError(line, static_cast<int>(at) + 1, msg);
  }
  void ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool done() {
    ws();
    return i >= s.size();
  }
  char peek() {
    ws();
    return i < s.size() ? s[i] : '\0';
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++i;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  bool at_ident() { return ident_char(peek()); }
  std::string ident() {
    ws();
    std::size_t b = i;
    while (i < s.size() && ident_char(s[i])) ++i;
    if (b == i) fail("expected a name");
    return s.substr(b, i - b);
  }
  int number() {
    ws();
    std::size_t b = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (b == i) fail("expected a number");
    if (i - b > 9) fail_at(b, "number too large");
    return std::stoi(s.substr(b, i - b));
  }
  // Peeks the next name without consuming it.
  std::string peek_ident() {
    ws();
    std::size_t j = i;
    while (j < s.size() && ident_char(s[j])) ++j;
    return s.substr(i, j - i);
  }
  void end() {
    if (!done()) fail("unexpected text");
  }
  // Text from '[' to the matching ']'.
  std::string bracketed() {
    ws();
    if (i >= s.size() || s[i] != '[') fail("expected '['");
    std::size_t b = i;
    while (i < s.size() && s[i] != ']') ++i;
    if (i >= s.size()) fail("unterminated '['");
    ++i;
    return s.substr(b, i - b);
  }
};

std::vector<Cursor> lines_of(const std::string& text) {
  std::vector<Cursor> out;
  std::istringstream in(text);
  std::string l;
  int n = 0;
  while (std::getline(in, l)) {
    ++n;
    if (!l.empty() && l.back() == '\r') l.pop_back();
    Cursor c{l, n, 0};
    if (c.done() || c.peek() == '#') continue;
    c.i = 0;
    out.push_back(std::move(c));
  }
  return out;
}

struct FieldHead {
  std::string name;
  std::size_t at;
};

FieldHead field(Cursor& c) {
  c.ws();
  std::size_t at = c.i;
  return {c.ident(), at};
}

// NAME/ARITY [symmetric]
RelationSymbol relation_symbol(Cursor& c) {
  RelationSymbol r;
  r.name = c.ident();
  c.expect('/');
  std::size_t at = c.i;
  r.arity = c.number();
  if (r.arity < 1) c.fail_at(at, "arity must be positive");
  if (c.peek_ident() == "symmetric") {
    c.ident();
    if (r.arity != 2) c.fail_at(at, "only binary relations can be symmetric");
    r.symmetric = true;
  }
  return r;
}

std::string symbol_text(const RelationSymbol& r) {
  return r.name + "/" + std::to_string(r.arity) + (r.symmetric ? " symmetric" : "");
}

Tuple paren_tuple(Cursor& c, int arity, int domain) {
  c.expect('(');
  Tuple t;
  while (true) {
    std::size_t at = c.i;
    int v = c.number();
    if (domain >= 0 && v >= domain) c.fail_at(at, "element out of range");
    t.push_back(v);
    if (c.accept(')')) break;
    c.expect(',');
  }
  if (static_cast<int>(t.size()) != arity) c.fail("tuple has the wrong length");
  return t;
}

void add_symbol(Signature& sig, const RelationSymbol& r, Cursor& c, std::size_t at) {
  if (sig.index_of(r.name) >= 0) c.fail_at(at, "duplicate relation " + r.name);
  sig.add(r.name, r.arity, r.symmetric);
}

struct StructureBuilder {
  Signature sig;
  int n = -1;
  std::vector<std::vector<Tuple>> ext;
  int first_line = 0;

  // False when the field is not a structure field.
  bool feed(Cursor& c, const FieldHead& f) {
    if (f.name == "domain_size") {
      if (n >= 0) c.fail_at(f.at, "duplicate domain_size");
      c.expect(':');
      n = c.number();
      c.end();
      return true;
    }
    if (f.name == "relation") {
      if (n < 0) c.fail_at(f.at, "domain_size must come first");
      c.ws();
      std::size_t at = c.i;
      RelationSymbol r = relation_symbol(c);
      add_symbol(sig, r, c, at);
      c.expect(':');
      ext.emplace_back();
      while (!c.done()) ext.back().push_back(paren_tuple(c, r.arity, n));
      return true;
    }
    return false;
  }

  Structure finish(int line) const {
    if (n < 0) throw ParseError(line, 1, "missing domain_size");
    Structure s(sig, n);
    s.extents = ext;
    s.normalize();
    return s;
  }
};

std::string tuples_text(const std::vector<Tuple>& ts) {
  std::string s;
  for (const auto& t : ts) s += " " + tuple_to_string(t);
  return s;
}

}  // namespace

Structure parse_structure(const std::string& text) {
  StructureBuilder b;
  int last = 1;
  for (auto& c : lines_of(text)) {
    last = c.line;
    FieldHead f = field(c);
    if (f.name == "structure" && b.n < 0 && b.sig.relations.empty()) {
      c.end();
      continue;
    }
    if (!b.feed(c, f)) c.fail_at(f.at, "unknown field '" + f.name + "'");
  }
  return b.finish(last);
}

std::string print_structure(const Structure& s) {
  std::ostringstream os;
  os << "domain_size: " << s.domain_size << "\n";
  for (std::size_t r = 0; r < s.sig.relations.size(); ++r)
    os << "relation " << symbol_text(s.sig.relations[r]) << ":" << tuples_text(s.extents[r]) << "\n";
  return os.str();
}

ObstructionSet parse_obstruction_set(const std::string& text) {
  ObstructionSet out;
  bool have_sig = false;
  std::optional<StructureBuilder> cur;
  int cur_line = 0;
  auto close = [&] {
    if (!cur) return;
    Structure s = cur->finish(cur_line);
    if (!(s.sig == out.sig)) throw ParseError(cur->first_line, 1, "member signature differs from the declared signature");
    out.structures.push_back(std::move(s));
    cur.reset();
  };
  for (auto& c : lines_of(text)) {
    FieldHead f = field(c);
    if (f.name == "signature") {
      if (have_sig) c.fail_at(f.at, "duplicate signature");
      c.expect(':');
      while (!c.done()) {
        c.ws();
        std::size_t at = c.i;
        add_symbol(out.sig, relation_symbol(c), c, at);
        if (!c.done()) c.expect(',');
      }
      have_sig = true;
      continue;
    }
    if (f.name == "structure") {
      if (!have_sig) c.fail_at(f.at, "signature must come first");
      close();
      c.ws();
      std::string prov = c.s.substr(c.i);
      while (!prov.empty() && std::isspace(static_cast<unsigned char>(prov.back()))) prov.pop_back();
      c.i = c.s.size();
      if (prov != kDerivationHarvest && prov != kCriticalEnumeration)
        c.fail_at(f.at, "provenance must be derivation-harvest or critical-enumeration");
      c.end();
      cur.emplace();
      cur->first_line = c.line;
      out.provenance.push_back(prov);
      cur_line = c.line;
      continue;
    }
    if (!cur) c.fail_at(f.at, "expected 'structure'");
    cur_line = c.line;
    if (!cur->feed(c, f)) c.fail_at(f.at, "unknown field '" + f.name + "'");
  }
  close();
  if (!have_sig) throw ParseError(1, 1, "missing signature");
  return out;
}

std::string print_obstruction_set(const ObstructionSet& obs) {
  std::ostringstream os;
  os << "signature:";
  for (std::size_t r = 0; r < obs.sig.relations.size(); ++r)
    os << (r ? ", " : " ") << symbol_text(obs.sig.relations[r]);
  os << "\n";
  for (std::size_t i = 0; i < obs.structures.size(); ++i)
    os << "structure " << obs.provenance[i] << "\n" << print_structure(obs.structures[i]);
  return os.str();
}

namespace {

Row parse_row(Cursor& c, int arity, const Algebra& alg) {
  if (auto* fa = dynamic_cast<const FiniteAlgebra*>(&alg)) return fa->encode(paren_tuple(c, arity, fa->domain_size()));
  auto& ot = dynamic_cast<const OrbitTemplate&>(alg);
  c.ws();
  std::size_t at = c.i;
  std::string text = c.bracketed();
  try {
    AtomicType t = ot.space().parse_descriptor(text);
    if (t.arity != arity) c.fail_at(at, "atomic type has the wrong arity");
    return ot.space().intern(t);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    c.fail_at(at, e.what());
  }
}

std::string rows_text(const Algebra& alg, int arity, const Rows& rows) {
  std::string s;
  for (const auto& r : alg.rows_to_strings(arity, rows)) s += " " + r;
  return s;
}

}  // namespace

Instance parse_instance(const std::string& text, const Algebra& alg) {
  Instance inst;
  bool have_vars = false;
  for (auto& c : lines_of(text)) {
    FieldHead f = field(c);
    if (f.name == "instance" && !have_vars) {
      c.end();
      continue;
    }
    if (f.name == "variables") {
      if (have_vars) c.fail_at(f.at, "duplicate variables");
      c.expect(':');
      while (!c.done()) {
        c.ws();
        std::size_t at = c.i;
        std::string v = c.ident();
        if (inst.var_index(v) >= 0) c.fail_at(at, "duplicate variable " + v);
        inst.add_variable(v);
      }
      have_vars = true;
      continue;
    }
    if (f.name == "constraint") {
      if (!have_vars) c.fail_at(f.at, "variables must come first");
      c.ws();
      std::size_t name_at = c.i;
      Constraint k;
      k.provenance = c.ident();
      c.expect('(');
      while (true) {
        c.ws();
        std::size_t at = c.i;
        int v = inst.var_index(c.ident());
        if (v < 0) c.fail_at(at, "undeclared variable");
        k.scope.push_back(v);
        if (c.accept(')')) break;
        c.expect(',');
      }
      const int ar = static_cast<int>(k.scope.size());
      if (c.accept(':')) {
        while (!c.done()) k.extent.push_back(parse_row(c, ar, alg));
        std::sort(k.extent.begin(), k.extent.end());
        k.extent.erase(std::unique(k.extent.begin(), k.extent.end()), k.extent.end());
      } else {
        if (alg.relation_arity(k.provenance) < 0) c.fail_at(name_at, "unknown relation " + k.provenance);
        if (alg.relation_arity(k.provenance) != ar) c.fail_at(name_at, "wrong number of arguments");
        k.extent = alg.relation_rows(k.provenance);
        c.end();
      }
      inst.constraints.push_back(std::move(k));
      continue;
    }
    c.fail_at(f.at, "unknown field '" + f.name + "'");
  }
  return inst;
}

std::string print_instance(const Instance& inst, const Algebra& alg) {
  std::ostringstream os;
  os << "variables:";
  for (const auto& v : inst.variables) os << ' ' << v;
  os << "\n";
  for (const auto& k : inst.constraints) {
    const int ar = static_cast<int>(k.scope.size());
    os << "constraint " << k.provenance << "(";
    for (int j = 0; j < ar; ++j) os << (j ? "," : "") << inst.variables[k.scope[j]];
    os << ")";
    if (alg.relation_arity(k.provenance) != ar || alg.relation_rows(k.provenance) != k.extent)
      os << ":" << rows_text(alg, ar, k.extent);
    os << "\n";
  }
  return os.str();
}

std::shared_ptr<OrbitTemplate> parse_orbit_template(const std::string& text) {
  std::string name;
  Signature base;
  std::vector<Structure> bounds;
  int k = -1, l = -1;
  std::shared_ptr<OrbitTemplate> t;
  for (auto& c : lines_of(text)) {
    FieldHead f = field(c);
    auto not_after_relations = [&] {
      if (t) c.fail_at(f.at, f.name + " must come before relation lines");
    };
    if (f.name == "orbit_template") {
      if (!name.empty()) c.fail_at(f.at, "duplicate orbit_template");
      name = c.ident();
      c.end();
    } else if (f.name == "base") {
      not_after_relations();
      c.ws();
      std::size_t at = c.i;
      RelationSymbol r = relation_symbol(c);
      if (r.arity > 2) c.fail_at(at, "base relations must be unary or binary");
      add_symbol(base, r, c, at);
      c.end();
    } else if (f.name == "k" || f.name == "l") {
      not_after_relations();
      c.expect(':');
      std::size_t at = c.i;
      int v = c.number();
      if (v < 1) c.fail_at(at, "must be positive");
      (f.name == "k" ? k : l) = v;
      c.end();
    } else if (f.name == "bound") {
      not_after_relations();
      std::size_t at = c.i;
      int size = c.number();
      if (size < 1) c.fail_at(at, "bound size must be positive");
      c.expect(':');
      Structure b(base, size);
      while (!c.done()) {
        c.ws();
        std::size_t rat = c.i;
        int r = base.index_of(c.ident());
        if (r < 0) c.fail_at(rat, "unknown base relation");
        b.add_tuple(r, paren_tuple(c, base.relations[r].arity, size));
      }
      b.normalize();
      bounds.push_back(std::move(b));
    } else if (f.name == "relation") {
      if (name.empty() || k < 0 || l < 0) c.fail_at(f.at, "orbit_template, k and l must come first");
      if (!t) t = std::make_shared<OrbitTemplate>(name, std::make_shared<TypeSpace>(base, bounds), k, l);
      c.ws();
      std::size_t at = c.i;
      std::string rel = c.ident();
      if (t->has_relation(rel)) c.fail_at(at, "duplicate relation " + rel);
      c.expect('/');
      int ar = c.number();
      if (ar < 1) c.fail_at(at, "arity must be positive");
      if (ar > std::max(k, l)) c.fail_at(at, "arity above max(k, l)");
      if (c.peek_ident() == "base") {
        c.ident();
        c.end();
        int bi = base.index_of(rel);
        if (bi < 0 || base.relations[bi].arity != ar) c.fail_at(at, "not a base relation of that arity");
        t->add_base_relation(rel);
      } else {
        c.expect(':');
        Rows rows;
        while (!c.done()) rows.push_back(parse_row(c, ar, *t));
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        t->add_relation(rel, ar, std::move(rows));
      }
    } else {
      c.fail_at(f.at, "unknown field '" + f.name + "'");
    }
  }
  if (name.empty() || k < 0 || l < 0) throw ParseError(1, 1, "orbit_template, k and l are required");
  if (!t) t = std::make_shared<OrbitTemplate>(name, std::make_shared<TypeSpace>(base, bounds), k, l);
  return t;
}

std::string print_orbit_template(const OrbitTemplate& t) {
  std::ostringstream os;
  os << "orbit_template " << t.name() << "\n";
  for (const auto& r : t.base().relations) os << "base " << symbol_text(r) << "\n";
  os << "k: " << t.k() << "\nl: " << t.l() << "\n";
  for (const auto& b : t.bounds()) {
    os << "bound " << b.domain_size << ":";
    for (std::size_t r = 0; r < b.extents.size(); ++r)
      for (const auto& tp : b.extents[r]) os << ' ' << b.sig.relations[r].name << tuple_to_string(tp);
    os << "\n";
  }
  for (const auto& n : t.relation_names()) {
    const int ar = t.relation_arity(n);
    os << "relation " << n << "/" << ar;
    if (t.is_base_relation(n))
      os << " base";
    else
      os << ":" << rows_text(t, ar, t.relation_rows(n));
    os << "\n";
  }
  return os.str();
}

namespace {

FOFormula fo_disj(Cursor& c);

FOFormula fo_unary(Cursor& c) {
  if (c.accept('(')) {
    if (c.peek_ident() == "exists") {
      c.ident();
      std::vector<std::string> bound;
      while (c.at_ident()) bound.push_back(c.ident());
      if (bound.empty()) c.fail("expected bound variables");
      c.expect('.');
      FOFormula body = fo_disj(c);
      c.expect(')');
      FOFormula f;
      f.kind = FOFormula::Kind::exists;
      f.vars = std::move(bound);
      f.parts.push_back(std::move(body));
      return f;
    }
    FOFormula f = fo_disj(c);
    c.expect(')');
    return f;
  }
  std::string a = c.ident();
  if (a == "true") return FOFormula::top();
  if (a == "false") {
    FOFormula f;
    f.kind = FOFormula::Kind::falsity;
    return f;
  }
  if (c.accept('=')) return FOFormula::eq(a, c.ident());
  c.expect('(');
  std::vector<std::string> args;
  while (true) {
    args.push_back(c.ident());
    if (c.accept(')')) break;
    c.expect(',');
  }
  return FOFormula::atom(a, std::move(args));
}

FOFormula fo_chain(Cursor& c, char op, FOFormula::Kind kind, FOFormula (*next)(Cursor&)) {
  FOFormula first = next(c);
  if (c.peek() != op) return first;
  FOFormula f;
  f.kind = kind;
  f.parts.push_back(std::move(first));
  while (c.accept(op)) f.parts.push_back(next(c));
  return f;
}

FOFormula fo_conj(Cursor& c) { return fo_chain(c, '&', FOFormula::Kind::conj, fo_unary); }
FOFormula fo_disj(Cursor& c) { return fo_chain(c, '|', FOFormula::Kind::disj, fo_conj); }

std::vector<std::string> var_list(Cursor& c) {
  std::vector<std::string> vs;
  c.expect('(');
  if (c.accept(')')) return vs;
  while (true) {
    vs.push_back(c.ident());
    if (c.accept(')')) break;
    c.expect(',');
  }
  return vs;
}

std::string join_vars(const std::vector<std::string>& vs) {
  std::string s;
  for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? "," : "") + vs[i];
  return s;
}

}  // namespace

FOFormula parse_fo(const std::string& text) {
  Cursor c{text, 1, 0};
  FOFormula f = fo_disj(c);
  c.end();
  return f;
}

Interpretation parse_interpretation(const std::string& text) {
  Interpretation in;
  std::set<std::string> seen;
  std::size_t defined = 0;
  int last = 1;
  auto once = [&](Cursor& c, const FieldHead& f) {
    if (!seen.insert(f.name).second) c.fail_at(f.at, "duplicate " + f.name);
  };
  auto sig_list = [](Cursor& c, Signature& sig) {
    c.expect(':');
    while (!c.done()) {
      c.ws();
      std::size_t at = c.i;
      add_symbol(sig, relation_symbol(c), c, at);
      if (!c.done()) c.expect(',');
    }
  };
  for (auto& c : lines_of(text)) {
    last = c.line;
    FieldHead f = field(c);
    if (f.name == "interpretation" && seen.empty()) {
      c.end();
      seen.insert(f.name);
    } else if (f.name == "dimension") {
      once(c, f);
      c.expect(':');
      std::size_t at = c.i;
      in.dimension = c.number();
      if (in.dimension < 1) c.fail_at(at, "dimension must be positive");
      c.end();
    } else if (f.name == "parameters") {
      once(c, f);
      c.expect(':');
      while (!c.done()) in.params.push_back(c.ident());
    } else if (f.name == "source") {
      once(c, f);
      sig_list(c, in.source);
    } else if (f.name == "target") {
      once(c, f);
      sig_list(c, in.target);
    } else if (f.name == "universe") {
      once(c, f);
      if (!seen.count("dimension")) c.fail_at(f.at, "dimension must come first");
      std::size_t at = c.i;
      in.universe_vars = var_list(c);
      if (static_cast<int>(in.universe_vars.size()) != in.dimension) c.fail_at(at, "expected dimension variables");
      c.expect(':');
      in.universe = fo_disj(c);
      c.end();
    } else if (f.name == "define") {
      if (!seen.count("target") || !seen.count("dimension")) c.fail_at(f.at, "dimension and target must come first");
      c.ws();
      std::size_t at = c.i;
      RelationDefinition d;
      d.name = c.ident();
      if (defined >= in.target.relations.size() || in.target.relations[defined].name != d.name)
        c.fail_at(at, "definitions must follow the target order");
      std::size_t vat = c.i;
      d.vars = var_list(c);
      if (static_cast<int>(d.vars.size()) != in.target.relations[defined].arity * in.dimension)
        c.fail_at(vat, "expected arity * dimension variables");
      c.expect(':');
      d.body = fo_disj(c);
      c.end();
      in.relations.push_back(std::move(d));
      ++defined;
    } else {
      c.fail_at(f.at, "unknown field '" + f.name + "'");
    }
  }
  if (defined != in.target.relations.size()) throw ParseError(last, 1, "some target relations have no definition");
  if (static_cast<int>(in.universe_vars.size()) != in.dimension) throw ParseError(last, 1, "missing universe");
  return in;
}

std::string print_interpretation(const Interpretation& in) {
  std::ostringstream os;
  os << "interpretation\ndimension: " << in.dimension << "\nparameters:";
  for (const auto& p : in.params) os << ' ' << p;
  auto sig = [&](const Signature& s) {
    for (std::size_t r = 0; r < s.relations.size(); ++r) os << (r ? ", " : " ") << symbol_text(s.relations[r]);
    os << "\n";
  };
  os << "\nsource:";
  sig(in.source);
  os << "target:";
  sig(in.target);
  os << "universe(" << join_vars(in.universe_vars) << "): " << fo_to_string(in.universe) << "\n";
  for (const auto& d : in.relations)
    os << "define " << d.name << "(" << join_vars(d.vars) << "): " << fo_to_string(d.body) << "\n";
  return os.str();
}

std::string print_domain_map(const DomainMap& dm, const Instance& inst, const Algebra& alg) {
  std::ostringstream os;
  for (std::size_t s = 0; s < dm.sets.size(); ++s) {
    std::vector<std::string> names;
    for (int v : dm.sets[s]) names.push_back(inst.variables[v]);
    const int ar = static_cast<int>(dm.sets[s].size());
    os << "D(" << join_vars(names) << ") = {" << rows_text(alg, ar, dm.extents[s]) << (dm.extents[s].empty() ? "}" : " }")
       << "\n";
  }
  return os.str();
}

}  // namespace cspdual
