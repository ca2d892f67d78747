#include "cspdual/relcore.hh"

#include <algorithm>
#include <bit>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace cspdual {

int Signature::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < relations.size(); ++i)
    if (relations[i].name == name) return static_cast<int>(i);
  return -1;
}

void Signature::add(const std::string& name, int arity, bool symmetric) {
  if (index_of(name) >= 0) throw Error("duplicate relation " + name);
  if (arity < 1) throw Error("relation " + name + " needs positive arity");
  if (symmetric && arity != 2) throw Error("only binary relations can be symmetric");
  relations.push_back({name, arity, symmetric});
}

Structure::Structure(Signature s, int n) : sig(std::move(s)), domain_size(n) {
  extents.resize(sig.relations.size());
}

std::vector<Tuple>& Structure::extent(const std::string& name) {
  int i = sig.index_of(name);
  if (i < 0) throw Error("unknown relation " + name);
  return extents[i];
}

const std::vector<Tuple>& Structure::extent(const std::string& name) const {
  int i = sig.index_of(name);
  if (i < 0) throw Error("unknown relation " + name);
  return extents[i];
}

void Structure::add_tuple(int rel, Tuple t) { extents[rel].push_back(std::move(t)); }

void Structure::normalize() {
  extents.resize(sig.relations.size());
  for (std::size_t r = 0; r < extents.size(); ++r) {
    auto& ext = extents[r];
    const auto& sym = sig.relations[r];
    for (const auto& t : ext) {
      if (static_cast<int>(t.size()) != sym.arity)
        throw Error("tuple of wrong length in relation " + sym.name);
      for (int e : t)
        if (e < 0 || e >= domain_size)
          throw Error("element out of range in relation " + sym.name);
    }
    if (sym.symmetric) {
      std::size_t n = ext.size();
      for (std::size_t i = 0; i < n; ++i) ext.push_back({ext[i][1], ext[i][0]});
    }
    std::sort(ext.begin(), ext.end());
    ext.erase(std::unique(ext.begin(), ext.end()), ext.end());
  }
}

std::size_t Structure::tuple_count() const {
  std::size_t n = 0;
  for (const auto& e : extents) n += e.size();
  return n;
}

int Instance::var_index(const std::string& v) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i] == v) return static_cast<int>(i);
  return -1;
}

int Instance::add_variable(const std::string& v) {
  int i = var_index(v);
  if (i >= 0) return i;
  variables.push_back(v);
  return static_cast<int>(variables.size()) - 1;
}

Row row_count(int arity, int d) {
  std::uint64_t n = 1;
  for (int i = 0; i < arity; ++i) {
    n *= static_cast<std::uint64_t>(d);
    if (n > (1ull << 31)) throw Error("row space too large for arity " + std::to_string(arity));
  }
  return static_cast<Row>(n);
}

Row encode_tuple(const Tuple& t, int d) {
  std::uint64_t r = 0;
  for (int e : t) r = r * d + e;
  return static_cast<Row>(r);
}

Tuple decode_row(Row r, int arity, int d) {
  Tuple t(arity);
  for (int i = arity - 1; i >= 0; --i) {
    t[i] = static_cast<int>(r % d);
    r /= d;
  }
  return t;
}

Rows rows_of(const std::vector<Tuple>& ts, int d) {
  Rows out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(encode_tuple(t, d));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::uint64_t key_of(const Tuple& t, int d) {
  std::uint64_t k = 0;
  for (int e : t) k = k * static_cast<std::uint64_t>(d + 1) + static_cast<std::uint64_t>(e);
  return k;
}

}  // namespace

std::optional<std::vector<int>> find_homomorphism(const Structure& src, const Structure& dst) {
  if (!(src.sig == dst.sig)) throw Error("find_homomorphism: signature mismatch");
  const int n = src.domain_size, d = dst.domain_size;
  std::vector<std::unordered_set<std::uint64_t>> lookup(dst.extents.size());
  for (std::size_t r = 0; r < dst.extents.size(); ++r)
    for (const auto& t : dst.extents[r]) lookup[r].insert(key_of(t, d));
  // tuples are checked at the element where they become fully assigned
  std::vector<std::vector<std::pair<int, const Tuple*>>> due(n);
  for (std::size_t r = 0; r < src.extents.size(); ++r)
    for (const auto& t : src.extents[r]) {
      if (t.empty()) continue;
      int last = *std::max_element(t.begin(), t.end());
      due[last].push_back({static_cast<int>(r), &t});
    }
  std::vector<int> h(n, -1);
  if (n == 0) return h;
  if (d == 0) return std::nullopt;
  Tuple img;
  int i = 0;
  while (i >= 0) {
    if (i == n) return h;
    ++h[i];
    if (h[i] >= d) {
      h[i] = -1;
      --i;
      continue;
    }
    bool ok = true;
    for (const auto& [r, t] : due[i]) {
      img.resize(t->size());
      for (std::size_t j = 0; j < t->size(); ++j) img[j] = h[(*t)[j]];
      if (!lookup[r].count(key_of(img, d))) {
        ok = false;
        break;
      }
    }
    if (ok) ++i;
  }
  return std::nullopt;
}

std::optional<Assignment> solve_brute(const Instance& inst, const Structure& tmpl) {
  const int n = static_cast<int>(inst.variables.size()), d = tmpl.domain_size;
  std::vector<std::vector<const Constraint*>> due(n);
  for (const auto& c : inst.constraints) {
    for (int v : c.scope)
      if (v < 0 || v >= n) throw Error("solve_brute: constraint references undeclared variable");
    if (c.scope.empty()) {
      if (c.extent.empty()) return std::nullopt;
      continue;
    }
    due[*std::max_element(c.scope.begin(), c.scope.end())].push_back(&c);
  }
  Assignment a(n, -1);
  if (n == 0) return a;
  if (d == 0) return std::nullopt;
  int i = 0;
  while (i >= 0) {
    if (i == n) return a;
    ++a[i];
    if (a[i] >= d) {
      a[i] = -1;
      --i;
      continue;
    }
    bool ok = true;
    for (const Constraint* c : due[i]) {
      std::uint64_t r = 0;
      for (int v : c->scope) r = r * d + a[v];
      if (!std::binary_search(c->extent.begin(), c->extent.end(), static_cast<Row>(r))) {
        ok = false;
        break;
      }
    }
    if (ok) ++i;
  }
  return std::nullopt;
}

Structure instance_to_structure(const Instance& inst, const Structure& tmpl) {
  Structure s(tmpl.sig, static_cast<int>(inst.variables.size()));
  const int d = tmpl.domain_size;
  std::vector<Rows> rel_rows;
  for (const auto& e : tmpl.extents) rel_rows.push_back(rows_of(e, d));
  for (const auto& c : inst.constraints) {
    if (c.provenance == "full") continue;
    int match = -1;
    int named = tmpl.sig.index_of(c.provenance);
    if (named >= 0 && tmpl.sig.relations[named].arity == static_cast<int>(c.scope.size()) &&
        rel_rows[named] == c.extent)
      match = named;
    for (std::size_t r = 0; match < 0 && r < rel_rows.size(); ++r)
      if (tmpl.sig.relations[r].arity == static_cast<int>(c.scope.size()) && rel_rows[r] == c.extent)
        match = static_cast<int>(r);
    if (match < 0) {
      if (c.extent.size() == row_count(static_cast<int>(c.scope.size()), d)) continue;
      throw Error("instance_to_structure: constraint extent matches no named relation");
    }
    s.add_tuple(match, Tuple(c.scope.begin(), c.scope.end()));
  }
  s.normalize();
  return s;
}

Instance structure_to_instance(const Structure& s, const Structure& tmpl) {
  if (!(s.sig == tmpl.sig)) throw Error("structure_to_instance: signature mismatch");
  Instance inst;
  for (int i = 0; i < s.domain_size; ++i) inst.variables.push_back("v" + std::to_string(i));
  for (std::size_t r = 0; r < s.extents.size(); ++r) {
    Rows ext = rows_of(tmpl.extents[r], tmpl.domain_size);
    for (const auto& t : s.extents[r])
      inst.constraints.push_back({std::vector<int>(t.begin(), t.end()), ext, tmpl.sig.relations[r].name});
  }
  return inst;
}

Structure induced_substructure(const Structure& s, const std::vector<int>& keep) {
  std::vector<int> pos(s.domain_size, -1);
  for (std::size_t i = 0; i < keep.size(); ++i) pos[keep[i]] = static_cast<int>(i);
  Structure out(s.sig, static_cast<int>(keep.size()));
  for (std::size_t r = 0; r < s.extents.size(); ++r)
    for (const auto& t : s.extents[r]) {
      Tuple m;
      bool in = true;
      for (int e : t) {
        if (pos[e] < 0) {
          in = false;
          break;
        }
        m.push_back(pos[e]);
      }
      if (in) out.add_tuple(static_cast<int>(r), std::move(m));
    }
  out.normalize();
  return out;
}

bool is_core_with_constants(const Structure& tmpl) {
  const int n = tmpl.domain_size;
  for (int a = 0; a < n; ++a) {
    bool named = false;
    for (std::size_t r = 0; r < tmpl.extents.size() && !named; ++r)
      named = tmpl.sig.relations[r].arity == 1 && tmpl.extents[r] == std::vector<Tuple>{{a}};
    if (!named) return false;
  }
  // a finite structure is a core iff no endomorphism misses an element
  for (int a = 0; a < n; ++a) {
    std::vector<int> keep;
    for (int b = 0; b < n; ++b)
      if (b != a) keep.push_back(b);
    if (find_homomorphism(tmpl, induced_substructure(tmpl, keep))) return false;
  }
  return true;
}

Structure drop_isolated(const Structure& s) {
  std::vector<char> used(s.domain_size, 0);
  for (const auto& e : s.extents)
    for (const auto& t : e)
      for (int x : t) used[x] = 1;
  std::vector<int> keep;
  for (int i = 0; i < s.domain_size; ++i)
    if (used[i]) keep.push_back(i);
  return induced_substructure(s, keep);
}

bool is_connected(const Structure& s) {
  if (s.domain_size <= 1) return true;
  std::vector<int> parent(s.domain_size);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : s.extents)
    for (const auto& t : e)
      for (std::size_t j = 1; j < t.size(); ++j) parent[find(t[j])] = find(t[0]);
  for (int i = 1; i < s.domain_size; ++i)
    if (find(i) != find(0)) return false;
  return true;
}

namespace {

std::vector<std::vector<Tuple>> relabel(const Structure& s, const std::vector<int>& perm) {
  std::vector<std::vector<Tuple>> out(s.extents.size());
  for (std::size_t r = 0; r < s.extents.size(); ++r) {
    out[r].reserve(s.extents[r].size());
    for (const auto& t : s.extents[r]) {
      Tuple m(t.size());
      for (std::size_t j = 0; j < t.size(); ++j) m[j] = perm[t[j]];
      out[r].push_back(std::move(m));
    }
    std::sort(out[r].begin(), out[r].end());
  }
  return out;
}

// Elements are first grouped by a labelling-invariant profile; only
// permutations that keep the profile order are tried.
std::vector<std::vector<int>> profiles(const Structure& s) {
  std::vector<std::vector<int>> prof(s.domain_size, std::vector<int>(s.extents.size() * 3, 0));
  for (std::size_t r = 0; r < s.extents.size(); ++r)
    for (const auto& t : s.extents[r])
      for (std::size_t j = 0; j < t.size(); ++j) {
        bool rep = std::count(t.begin(), t.end(), t[j]) > 1;
        prof[t[j]][r * 3 + (rep ? 2 : (j == 0 ? 0 : 1))]++;
      }
  return prof;
}

}  // namespace

Structure canonical_form(const Structure& s) {
  const int n = s.domain_size;
  auto prof = profiles(s);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return prof[a] < prof[b]; });
  // groups of equal profile
  std::vector<std::pair<int, int>> groups;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && prof[order[j]] == prof[order[i]]) ++j;
    groups.push_back({i, j});
    i = j;
  }
  std::vector<std::vector<Tuple>> best;
  bool have = false;
  std::vector<int> cur = order;  // cur[position] = element
  for (auto& g : groups) std::sort(cur.begin() + g.first, cur.begin() + g.second);
  while (true) {
    std::vector<int> perm(n);
    for (int p = 0; p < n; ++p) perm[cur[p]] = p;
    auto cand = relabel(s, perm);
    if (!have || cand < best) {
      best = std::move(cand);
      have = true;
    }
    // advance the product of per-group permutations
    int gi = static_cast<int>(groups.size()) - 1;
    for (; gi >= 0; --gi) {
      auto [a, b] = groups[gi];
      if (std::next_permutation(cur.begin() + a, cur.begin() + b)) break;
    }
    if (gi < 0) break;
  }
  Structure out(s.sig, n);
  out.extents = have ? best : s.extents;
  return out;
}

bool isomorphic(const Structure& a, const Structure& b) {
  if (!(a.sig == b.sig) || a.domain_size != b.domain_size || a.tuple_count() != b.tuple_count())
    return false;
  return canonical_form(a) == canonical_form(b);
}

namespace {

struct Candidate {
  int rel;
  Tuple t;
};

// Tuples whose largest element is `top`, for every relation.
void candidates_with_top(const Signature& sig, int top, bool loops, std::vector<Candidate>& out) {
  for (std::size_t r = 0; r < sig.relations.size(); ++r) {
    const auto& rel = sig.relations[r];
    Tuple t(rel.arity, 0);
    while (true) {
      int mx = *std::max_element(t.begin(), t.end());
      bool ok = mx == top;
      if (ok && rel.symmetric && t[0] > t[1]) ok = false;
      if (ok && !loops) {
        Tuple s = t;
        std::sort(s.begin(), s.end());
        ok = std::adjacent_find(s.begin(), s.end()) == s.end();
      }
      if (ok) out.push_back({static_cast<int>(r), t});
      int j = rel.arity - 1;
      for (; j >= 0; --j) {
        if (++t[j] <= top) break;
        t[j] = 0;
      }
      if (j < 0) break;
    }
  }
}

}  // namespace

void for_each_structure(const Signature& sig, int max_size, const std::function<void(const Structure&)>& fn,
                        bool loops) {
  std::vector<Candidate> cand;
  std::map<std::pair<int, Tuple>, int> index;
  std::vector<std::uint64_t> level{0};
  for (int s = 0; s <= max_size; ++s) {
    std::size_t first_new = cand.size();
    if (s > 0) candidates_with_top(sig, s - 1, loops, cand);
    if (cand.size() > 64) throw Error("for_each_structure: too many candidate tuples");
    for (std::size_t i = first_new; i < cand.size(); ++i) index[{cand[i].rel, cand[i].t}] = static_cast<int>(i);
    // bit images under every permutation of 0..s-1
    std::vector<std::vector<int>> maps;
    std::vector<int> perm(s);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::vector<int> m(cand.size());
      for (std::size_t i = 0; i < cand.size(); ++i) {
        Tuple t = cand[i].t;
        for (auto& e : t) e = perm[e];
        if (sig.relations[cand[i].rel].symmetric && t[0] > t[1]) std::swap(t[0], t[1]);
        m[i] = index.at({cand[i].rel, t});
      }
      maps.push_back(std::move(m));
    } while (std::next_permutation(perm.begin(), perm.end()));
    auto canonical = [&](std::uint64_t mask) {
      std::uint64_t best = ~0ull;
      for (const auto& m : maps) {
        std::uint64_t img = 0;
        for (std::uint64_t x = mask; x; x &= x - 1) img |= 1ull << m[std::countr_zero(x)];
        best = std::min(best, img);
      }
      return best;
    };
    std::vector<std::uint64_t> next;
    if (s == 0) {
      next = level;
    } else {
      const std::size_t fresh = cand.size() - first_new;
      if (fresh > 30) throw Error("for_each_structure: too many tuples per new element");
      std::unordered_set<std::uint64_t> seen;
      for (std::uint64_t rep : level)
        for (std::uint64_t sub = 0; sub < (1ull << fresh); ++sub) {
          std::uint64_t c = canonical(rep | (sub << first_new));
          if (seen.insert(c).second) next.push_back(c);
        }
      std::sort(next.begin(), next.end());
    }
    for (std::uint64_t mask : next) {
      Structure st(sig, s);
      for (std::uint64_t x = mask; x; x &= x - 1) st.add_tuple(cand[std::countr_zero(x)].rel, cand[std::countr_zero(x)].t);
      st.normalize();
      fn(st);
    }
    level = std::move(next);
  }
}

std::string tuple_to_string(const Tuple& t) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < t.size(); ++i) os << (i ? "," : "") << t[i];
  os << ')';
  return os.str();
}

}  // namespace cspdual
