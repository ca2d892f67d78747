#include "cspdual/orbits.hh"

#include <algorithm>
#include <cctype>
#include <functional>
#include <numeric>
#include <sstream>

#include "cspdual/minimality.hh"

namespace cspdual {

std::string AtomicType::key() const {
  std::string k;
  k.push_back(static_cast<char>(arity));
  for (auto b : block) k.push_back(static_cast<char>(b));
  k.push_back(static_cast<char>(diagram.nb));
  for (auto p : diagram.point) k.push_back(static_cast<char>(p));
  for (auto l : diagram.link) k.push_back(static_cast<char>(l));
  return k;
}

TypeSpace::TypeSpace(Signature base, std::vector<Structure> bounds, int eager_arity)
    : base_(std::move(base)), bounds_(std::move(bounds)), eager_(eager_arity) {
  int pb = 0, lb = 0;
  for (std::size_t r = 0; r < base_.relations.size(); ++r) {
    const auto& rel = base_.relations[r];
    if (rel.arity > 2) throw Error("base relation " + rel.name + " has arity above 2");
    point_bit_.push_back(pb++);
    if (rel.arity == 2) {
      if (rel.symmetric) sym_mask_ |= static_cast<std::uint8_t>(1u << lb);
      link_bit_.push_back(lb++);
    } else {
      link_bit_.push_back(-1);
    }
  }
  if (pb > 8 || lb > 8) throw Error("base signature too large for atomic types");
  for (auto& b : bounds_) {
    if (!(b.sig == base_)) throw Error("bound over a different signature");
    b.normalize();
    BoundShape s;
    s.size = b.domain_size;
    s.point.assign(s.size, 0);
    s.link.assign(s.size * s.size, 0);
    for (std::size_t r = 0; r < b.extents.size(); ++r)
      for (const auto& t : b.extents[r]) {
        if (t.size() == 1 || t[0] == t[1])
          s.point[t[0]] |= static_cast<std::uint8_t>(1u << point_bit_[r]);
        else
          s.link[t[0] * s.size + t[1]] |= static_cast<std::uint8_t>(1u << link_bit_[r]);
      }
    shapes_.push_back(std::move(s));
  }
  for (int p = 0; p < (1 << pb); ++p) {
    BlockStructure d{1, {static_cast<std::uint8_t>(p)}, {0}};
    if (!embeds_bound(d)) ok1_.push_back(static_cast<std::uint8_t>(p));
  }
  for (auto p : ok1_)
    for (auto q : ok1_)
      for (int a = 0; a < (1 << lb); ++a)
        for (int b = 0; b < (1 << lb); ++b) {
          if ((a & sym_mask_) != (b & sym_mask_)) continue;
          BlockStructure d{2, {p, q}, {0, static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), 0}};
          if (!embeds_bound(d)) ok2_.push_back({p, q, static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)});
        }
  std::lock_guard<std::recursive_mutex> lock(mu_);
  AtomicType empty;
  intern_locked(empty);
  for (int m = 0; m < eager_; ++m) {
    ensure_arity(m + 1);
    std::size_t n = types_[m].size();
    if (children_.size() <= static_cast<std::size_t>(m)) children_.resize(m + 1);
    children_[m].resize(n);
    for (std::size_t r = 0; r < n; ++r) compute_children(m, static_cast<Row>(r), children_[m][r]);
    all_[m] = std::make_unique<Rows>(n);
    std::iota(all_[m]->begin(), all_[m]->end(), 0);
    if (types_[m + 1].size() > 20000) {
      eager_ = m + 1;
      break;
    }
  }
  if (!all_[eager_]) {
    all_[eager_] = std::make_unique<Rows>(types_[eager_].size());
    std::iota(all_[eager_]->begin(), all_[eager_]->end(), 0);
  }
}

void TypeSpace::ensure_arity(int arity) {
  if (static_cast<int>(types_.size()) <= arity) {
    types_.resize(arity + 1);
    index_.resize(arity + 1);
  }
  if (static_cast<int>(all_.size()) <= arity) all_.resize(arity + 1);
  if (static_cast<int>(children_.size()) <= arity) children_.resize(arity + 1);
}

Row TypeSpace::intern_locked(const AtomicType& t) {
  ensure_arity(t.arity);
  std::string k = t.key();
  auto it = index_[t.arity].find(k);
  if (it != index_[t.arity].end()) return it->second;
  Row id = static_cast<Row>(types_[t.arity].size());
  types_[t.arity].push_back(t);
  index_[t.arity].emplace(std::move(k), id);
  return id;
}

Row TypeSpace::intern(const AtomicType& t) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  if (auto r = find(t)) return *r;
  for (int a = 0; a < t.diagram.nb; ++a)
    for (int b = 0; b < t.diagram.nb; ++b)
      if (a != b && (t.diagram.at(a, b) & sym_mask_) != (t.diagram.at(b, a) & sym_mask_))
        throw Error("atomic type breaks a symmetric relation");
  if (embeds_bound(t.diagram)) throw Error("atomic type is not realizable: a bound embeds");
  return intern_locked(t);
}

std::optional<Row> TypeSpace::find(const AtomicType& t) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  ensure_arity(t.arity);
  auto it = index_[t.arity].find(t.key());
  if (it == index_[t.arity].end()) return std::nullopt;
  return it->second;
}

std::size_t TypeSpace::interned(int arity) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  ensure_arity(arity);
  return types_[arity].size();
}

const AtomicType& TypeSpace::type(int arity, Row r) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  ensure_arity(arity);
  if (r >= types_[arity].size()) throw Error("unknown atomic type id");
  return types_[arity][r];
}

bool TypeSpace::shape_embeds(const BoundShape& s, const BlockStructure& d, int must) const {
  if (s.size > d.nb) return false;
  std::vector<int> img(s.size, -1);
  std::vector<char> used(d.nb, 0);
  std::function<bool(int)> rec = [&](int i) {
    if (i == s.size) {
      if (must < 0) return true;
      return static_cast<bool>(used[must]);
    }
    for (int b = 0; b < d.nb; ++b) {
      if (used[b] || d.point[b] != s.point[i]) continue;
      bool ok = true;
      for (int j = 0; j < i && ok; ++j)
        ok = d.at(img[j], b) == s.link[j * s.size + i] && d.at(b, img[j]) == s.link[i * s.size + j];
      if (!ok) continue;
      img[i] = b;
      used[b] = 1;
      if (rec(i + 1)) return true;
      used[b] = 0;
    }
    return false;
  };
  return rec(0);
}

bool TypeSpace::embeds_bound(const BlockStructure& d) const {
  for (const auto& s : shapes_)
    if (shape_embeds(s, d, -1)) return true;
  return false;
}

bool TypeSpace::new_block_ok(const BlockStructure& d, int fresh) const {
  for (const auto& s : shapes_)
    if (s.size >= 3 && shape_embeds(s, d, fresh)) return false;
  return true;
}

void TypeSpace::compute_children(int arity, Row r, Rows& out) {
  out.clear();
  const AtomicType base_t = types_[arity][r];
  const BlockStructure& d = base_t.diagram;
  for (int b = 0; b < d.nb; ++b) {
    AtomicType c = base_t;
    c.arity = arity + 1;
    c.block.push_back(static_cast<std::uint8_t>(b));
    out.push_back(intern_locked(c));
  }
  const int nb = d.nb;
  for (auto p : ok1_) {
    // link options (old->new, new->old) per old block
    std::vector<std::vector<std::pair<std::uint8_t, std::uint8_t>>> opts(nb);
    for (int j = 0; j < nb; ++j)
      for (const auto& o : ok2_)
        if (o[0] == d.point[j] && o[1] == p) opts[j].push_back({o[2], o[3]});
    bool dead = false;
    for (int j = 0; j < nb; ++j) dead = dead || opts[j].empty();
    if (dead) continue;
    std::vector<std::size_t> choice(nb, 0);
    while (true) {
      BlockStructure nd;
      nd.nb = nb + 1;
      nd.point = d.point;
      nd.point.push_back(p);
      nd.link.assign(nd.nb * nd.nb, 0);
      for (int a = 0; a < nb; ++a)
        for (int c = 0; c < nb; ++c)
          if (a != c) nd.link[a * nd.nb + c] = d.at(a, c);
      for (int j = 0; j < nb; ++j) {
        nd.link[j * nd.nb + nb] = opts[j][choice[j]].first;
        nd.link[nb * nd.nb + j] = opts[j][choice[j]].second;
      }
      if (new_block_ok(nd, nb)) {
        AtomicType c;
        c.arity = arity + 1;
        c.block = base_t.block;
        c.block.push_back(static_cast<std::uint8_t>(nb));
        c.diagram = std::move(nd);
        out.push_back(intern_locked(c));
      }
      int j = nb - 1;
      for (; j >= 0; --j) {
        if (++choice[j] < opts[j].size()) break;
        choice[j] = 0;
      }
      if (j < 0) break;
    }
  }
}

const Rows& TypeSpace::all(int arity) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  ensure_arity(arity);
  if (!all_[arity]) {
    const Rows& prev = all(arity - 1);
    auto rows = std::make_unique<Rows>();
    Rows kids;
    for (Row r : prev) {
      extend(arity - 1, r, kids);
      rows->insert(rows->end(), kids.begin(), kids.end());
    }
    std::sort(rows->begin(), rows->end());
    all_[arity] = std::move(rows);
  }
  return *all_[arity];
}

void TypeSpace::extend(int arity, Row r, std::vector<Row>& out) {
  std::lock_guard<std::recursive_mutex> lock(mu_);
  ensure_arity(arity + 1);
  auto& ch = children_[arity];
  if (ch.size() <= r) ch.resize(types_[arity].size());
  if (ch[r].empty()) compute_children(arity, r, ch[r]);
  out = ch[r];
}

Row TypeSpace::restrict(int arity, Row r, std::span<const int> pos) {
  const bool cacheable = arity < 16 && pos.size() <= 6;
  std::uint64_t key = 0;
  if (cacheable) {
    key = static_cast<std::uint64_t>(r) << 32 | static_cast<std::uint64_t>(arity) << 28 |
          static_cast<std::uint64_t>(pos.size()) << 24;
    for (std::size_t i = 0; i < pos.size(); ++i) key |= static_cast<std::uint64_t>(pos[i]) << (4 * i);
  }
  std::lock_guard<std::recursive_mutex> lock(mu_);
  if (cacheable) {
    auto it = restrict_cache_.find(key);
    if (it != restrict_cache_.end()) return it->second;
  }
  const AtomicType& t = types_[arity][r];
  std::vector<int> map(t.diagram.nb, -1), back;
  AtomicType out;
  out.arity = static_cast<int>(pos.size());
  for (int p : pos) {
    int b = t.block[p];
    if (map[b] < 0) {
      map[b] = static_cast<int>(back.size());
      back.push_back(b);
    }
    out.block.push_back(static_cast<std::uint8_t>(map[b]));
  }
  const int nb = static_cast<int>(back.size());
  out.diagram.nb = nb;
  for (int b : back) out.diagram.point.push_back(t.diagram.point[b]);
  out.diagram.link.assign(nb * nb, 0);
  for (int a = 0; a < nb; ++a)
    for (int c = 0; c < nb; ++c)
      if (a != c) out.diagram.link[a * nb + c] = t.diagram.at(back[a], back[c]);
  Row id = intern_locked(out);
  if (cacheable) restrict_cache_.emplace(key, id);
  return id;
}

std::string TypeSpace::describe(const AtomicType& t) const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < t.block.size(); ++i) os << (i ? " " : "") << static_cast<int>(t.block[i]);
  os << " :";
  const auto& d = t.diagram;
  for (int a = 0; a < d.nb; ++a)
    for (std::size_t r = 0; r < base_.relations.size(); ++r) {
      const auto& rel = base_.relations[r];
      if (d.point[a] >> point_bit_[r] & 1) {
        if (rel.arity == 1)
          os << ' ' << rel.name << '(' << a << ')';
        else
          os << ' ' << rel.name << '(' << a << ',' << a << ')';
      }
    }
  for (int a = 0; a < d.nb; ++a)
    for (int b = 0; b < d.nb; ++b) {
      if (a == b) continue;
      for (std::size_t r = 0; r < base_.relations.size(); ++r)
        if (link_bit_[r] >= 0 && (d.at(a, b) >> link_bit_[r] & 1))
          os << ' ' << base_.relations[r].name << '(' << a << ',' << b << ')';
    }
  os << ']';
  return os.str();
}

AtomicType TypeSpace::parse_descriptor(const std::string& text) const {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto expect = [&](char c) {
    skip();
    if (i >= text.size() || text[i] != c) throw Error(std::string("atomic type: expected '") + c + "'");
    ++i;
  };
  auto number = [&] {
    skip();
    std::size_t s = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (s == i) throw Error("atomic type: expected a number");
    return std::stoi(text.substr(s, i - s));
  };
  expect('[');
  std::vector<int> raw;
  skip();
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    raw.push_back(number());
    skip();
  }
  expect(':');
  std::vector<int> renum;
  std::vector<int> map;
  AtomicType t;
  t.arity = static_cast<int>(raw.size());
  for (int b : raw) {
    if (b < 0 || b > 64) throw Error("atomic type: block index out of range");
    if (static_cast<int>(map.size()) <= b) map.resize(b + 1, -1);
    if (map[b] < 0) map[b] = static_cast<int>(renum.size()), renum.push_back(b);
    t.block.push_back(static_cast<std::uint8_t>(map[b]));
  }
  const int nb = static_cast<int>(renum.size());
  for (std::size_t b = 0; b < map.size(); ++b)
    if (map[b] < 0) throw Error("atomic type: blocks must be used by some position");
  t.diagram.nb = nb;
  t.diagram.point.assign(nb, 0);
  t.diagram.link.assign(nb * nb, 0);
  skip();
  while (i < text.size() && text[i] != ']') {
    std::size_t s = i;
    while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
    std::string name = text.substr(s, i - s);
    int r = base_.index_of(name);
    if (r < 0) throw Error("atomic type: unknown base relation '" + name + "'");
    expect('(');
    int a = number();
    int b = a;
    if (base_.relations[r].arity == 2) {
      expect(',');
      b = number();
    }
    expect(')');
    if (a >= static_cast<int>(map.size()) || b >= static_cast<int>(map.size()))
      throw Error("atomic type: block index out of range");
    a = map[a];
    b = map[b];
    if (a == b) {
      t.diagram.point[a] |= static_cast<std::uint8_t>(1u << point_bit_[r]);
    } else {
      t.diagram.link[a * nb + b] |= static_cast<std::uint8_t>(1u << link_bit_[r]);
      if (base_.relations[r].symmetric) t.diagram.link[b * nb + a] |= static_cast<std::uint8_t>(1u << link_bit_[r]);
    }
    skip();
  }
  expect(']');
  skip();
  if (i != text.size()) throw Error("atomic type: trailing text");
  return t;
}

OrbitTemplate::OrbitTemplate(std::string name, std::shared_ptr<TypeSpace> space, int k, int l)
    : name_(std::move(name)), space_(std::move(space)), k_(k), l_(l) {
  if (k < 1 || l < 1) throw Error("k and l must be positive");
}

void OrbitTemplate::add_base_relation(const std::string& base_name) {
  int r = base().index_of(base_name);
  if (r < 0) throw Error("unknown base relation " + base_name);
  const int ar = base().relations[r].arity;
  Rows rows;
  for (Row x : all_rows(ar)) {
    const AtomicType& t = space_->type(ar, x);
    bool in;
    if (ar == 1 || t.block[0] == t.block[1])
      in = t.diagram.point[t.block[0]] >> space_->point_bit(r) & 1;
    else
      in = t.diagram.at(t.block[0], t.block[1]) >> space_->link_bit(r) & 1;
    if (in) rows.push_back(x);
  }
  add_relation(base_name, ar, std::move(rows));
  base_defined_.push_back(base_name);
}

void OrbitTemplate::add_relation(const std::string& name, int arity, Rows rows) {
  if (relations_.count(name)) throw Error("duplicate relation " + name);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  order_.push_back(name);
  relations_[name] = {arity, std::move(rows)};
}

bool OrbitTemplate::is_base_relation(const std::string& name) const {
  return std::find(base_defined_.begin(), base_defined_.end(), name) != base_defined_.end();
}

bool OrbitTemplate::same_point(int arity, Row r, int i, int j) const {
  const AtomicType& t = space_->type(arity, r);
  return t.block[i] == t.block[j];
}

bool OrbitTemplate::injective(int arity, Row r) const { return space_->type(arity, r).diagram.nb == arity; }

std::vector<std::string> OrbitTemplate::relation_names() const { return order_; }

int OrbitTemplate::relation_arity(const std::string& name) const {
  auto it = relations_.find(name);
  return it == relations_.end() ? -1 : it->second.first;
}

const Rows& OrbitTemplate::relation_rows(const std::string& name) const {
  auto it = relations_.find(name);
  if (it == relations_.end()) throw Error("unknown relation " + name);
  return it->second.second;
}

std::string OrbitTemplate::row_to_string(int arity, Row r) const { return space_->describe(space_->type(arity, r)); }

Signature OrbitTemplate::relation_signature() const {
  Signature s;
  for (const auto& n : order_) {
    bool sym = false;
    if (is_base_relation(n)) sym = base().relations[base().index_of(n)].symmetric;
    s.add(n, relations_.at(n).first, sym);
  }
  return s;
}

std::vector<AtomicType> enumerate_atomic_types(const Signature& base, const std::vector<Structure>& bounds, int m) {
  TypeSpace sp(base, bounds, std::min(m, 5));
  std::vector<AtomicType> out;
  for (Row r : sp.all(m)) out.push_back(sp.type(m, r));
  return out;
}

Rows orbit_project(const OrbitTemplate& t, int arity, const Rows& s, std::span<const int> positions) {
  return t.project(arity, s, positions);
}

Rows orbit_join(const OrbitTemplate& t, int arity, const Rows& s1, std::span<const int> pos1, const Rows& s2,
                std::span<const int> pos2) {
  Rows out;
  for (Row r : t.all_rows(arity)) {
    if (!std::binary_search(s1.begin(), s1.end(), t.restrict(arity, r, pos1))) continue;
    if (!std::binary_search(s2.begin(), s2.end(), t.restrict(arity, r, pos2))) continue;
    out.push_back(r);
  }
  return out;
}

namespace {

// Induced type of a scope under a point assignment with diagram d.
std::optional<Row> induced_type(TypeSpace& sp, const BlockStructure& d, const std::vector<int>& points) {
  AtomicType t;
  t.arity = static_cast<int>(points.size());
  std::vector<int> map(d.nb, -1), back;
  for (int p : points) {
    if (map[p] < 0) {
      map[p] = static_cast<int>(back.size());
      back.push_back(p);
    }
    t.block.push_back(static_cast<std::uint8_t>(map[p]));
  }
  const int nb = static_cast<int>(back.size());
  t.diagram.nb = nb;
  for (int b : back) t.diagram.point.push_back(d.point[b]);
  t.diagram.link.assign(nb * nb, 0);
  for (int a = 0; a < nb; ++a)
    for (int c = 0; c < nb; ++c)
      if (a != c) t.diagram.link[a * nb + c] = d.at(back[a], back[c]);
  return sp.find(t);
}

bool constraints_hold(const Instance& inst, const OrbitTemplate& t, const BlockStructure& d,
                      const std::vector<int>& point_of) {
  for (const auto& c : inst.constraints) {
    std::vector<int> pts;
    for (int v : c.scope) pts.push_back(point_of[v]);
    auto r = induced_type(t.space(), d, pts);
    if (!r || !std::binary_search(c.extent.begin(), c.extent.end(), *r)) return false;
  }
  return true;
}

// Builds the point structure from singleton extents of all 1- and 2-sets.
// Returns false when the merged diagram is inconsistent.
bool assemble(const Instance& inst, const OrbitTemplate& t, const DomainMap& dm, std::vector<int>& point_of,
              BlockStructure& d) {
  const int n = static_cast<int>(inst.variables.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  auto pair_type = [&](int a, int b) -> const AtomicType& {
    int s = dm.find({std::min(a, b), std::max(a, b)});
    return t.space().type(2, dm.extents[s][0]);
  };
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (pair_type(a, b).diagram.nb == 1) parent[find(b)] = find(a);
  std::vector<int> cls(n, -1);
  int nb = 0;
  point_of.assign(n, -1);
  for (int a = 0; a < n; ++a) {
    int r = find(a);
    if (cls[r] < 0) cls[r] = nb++;
    point_of[a] = cls[r];
  }
  d.nb = nb;
  d.point.assign(nb, 0);
  d.link.assign(nb * nb, 0);
  std::vector<char> pset(nb, 0);
  std::vector<char> lset(nb * nb, 0);
  for (int a = 0; a < n; ++a) {
    const AtomicType& one = t.space().type(1, dm.extents[dm.find({a})][0]);
    int p = point_of[a];
    if (pset[p] && d.point[p] != one.diagram.point[0]) return false;
    d.point[p] = one.diagram.point[0];
    pset[p] = 1;
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const AtomicType& tp = pair_type(a, b);
      int pa = point_of[a], pb = point_of[b];
      if (tp.diagram.nb == 1) {
        if (pa != pb || tp.diagram.point[0] != d.point[pa]) return false;
        continue;
      }
      if (pa == pb) return false;
      if (tp.diagram.point[0] != d.point[pa] || tp.diagram.point[1] != d.point[pb]) return false;
      std::uint8_t ab = tp.diagram.at(0, 1), ba = tp.diagram.at(1, 0);
      if (lset[pa * nb + pb] && (d.link[pa * nb + pb] != ab || d.link[pb * nb + pa] != ba)) return false;
      d.link[pa * nb + pb] = ab;
      d.link[pb * nb + pa] = ba;
      lset[pa * nb + pb] = lset[pb * nb + pa] = 1;
    }
  return true;
}

bool search(const Instance& imax, const OrbitTemplate& t, DomainMap& dm, OrbitSolution& sol) {
  Schedule quiet;
  quiet.record = false;
  propagate(imax, t, dm, quiet);
  if (dm.trivial()) return false;
  int branch = -1;
  for (std::size_t s = 0; s < dm.sets.size(); ++s)
    if (dm.extents[s].size() > 1 && (branch < 0 || dm.sets[s].size() > dm.sets[branch].size()))
      branch = static_cast<int>(s);
  if (branch < 0) {
    std::vector<int> point_of;
    BlockStructure d;
    if (!assemble(imax, t, dm, point_of, d)) return false;
    if (t.space().embeds_bound(d)) return false;
    if (!constraints_hold(imax, t, d, point_of)) return false;
    sol.verdict = Verdict::sat;
    sol.point_of = point_of;
    sol.diagram = d;
    return true;
  }
  const int ar = static_cast<int>(dm.sets[branch].size());
  Rows values = dm.extents[branch];
  std::stable_partition(values.begin(), values.end(), [&](Row r) { return t.injective(ar, r); });
  for (Row v : values) {
    DomainMap next = dm;
    next.extents[branch] = {v};
    if (search(imax, t, next, sol)) return true;
  }
  return false;
}

}  // namespace

Verdict solve_injective(const Instance& inst, const OrbitTemplate& t) {
  const int n = static_cast<int>(inst.variables.size());
  const int k = std::min(t.k(), 2);
  // projection of the instance onto each set of at most k variables
  DomainMap dm;
  std::vector<std::vector<int>> sets;
  for (int a = 0; a < n; ++a) {
    sets.push_back({a});
    if (k >= 2)
      for (int b = a + 1; b < n; ++b) sets.push_back({a, b});
  }
  std::sort(sets.begin(), sets.end());
  dm.k = k;
  dm.sets = sets;
  dm.extents.assign(sets.size(), {});
  std::vector<char> covered(sets.size(), 0);
  for (const auto& c : inst.constraints) {
    const int ar = static_cast<int>(c.scope.size());
    for (std::size_t s = 0; s < sets.size(); ++s) {
      std::vector<int> pos;
      for (int v : sets[s]) {
        auto it = std::find(c.scope.begin(), c.scope.end(), v);
        if (it == c.scope.end()) break;
        pos.push_back(static_cast<int>(it - c.scope.begin()));
      }
      if (pos.size() != sets[s].size()) continue;
      Rows pr = t.project(ar, c.extent, pos);
      if (!covered[s]) {
        dm.extents[s] = pr;
        covered[s] = 1;
      } else {
        Rows both;
        std::set_intersection(dm.extents[s].begin(), dm.extents[s].end(), pr.begin(), pr.end(),
                              std::back_inserter(both));
        dm.extents[s] = both;
      }
    }
  }
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (!covered[s]) throw Error("solve_injective: a variable set lies in no constraint scope");
    const int ar = static_cast<int>(sets[s].size());
    Rows inj;
    for (Row r : dm.extents[s])
      if (t.injective(ar, r)) inj.push_back(r);
    if (inj.size() != 1) throw Error("solve_injective: projection does not hold exactly one injective type");
    dm.extents[s] = inj;
  }
  std::vector<int> point_of;
  BlockStructure d;
  if (!assemble(inst, t, dm, point_of, d)) return Verdict::unsat;
  if (t.space().embeds_bound(d)) return Verdict::unsat;
  if (!constraints_hold(inst, t, d, point_of)) return Verdict::unsat;
  return Verdict::sat;
}

OrbitSolution solve_orbit(const Instance& inst, const OrbitTemplate& t, SolveMode mode) {
  OrbitSolution sol;
  Instance imax = build_imax(inst, t, t.k(), t.l());
  Schedule quiet;
  quiet.record = false;
  DomainMap dm = kl_minimality(imax, t, t.k(), t.l(), quiet);
  if (dm.trivial()) return sol;
  if (mode == SolveMode::theorem) {
    sol.verdict = Verdict::sat;
    return sol;
  }
  if (t.k() < 2) throw Error("solve_orbit: search mode needs k >= 2");
  search(imax, t, dm, sol);
  return sol;
}

Structure orbit_instance_to_structure(const Instance& inst, const OrbitTemplate& t) {
  Structure s(t.relation_signature(), static_cast<int>(inst.variables.size()));
  for (const auto& c : inst.constraints) {
    if (c.provenance == "full") continue;
    const int ar = static_cast<int>(c.scope.size());
    int match = -1;
    int named = s.sig.index_of(c.provenance);
    if (named >= 0 && t.relation_arity(c.provenance) == ar && t.relation_rows(c.provenance) == c.extent)
      match = named;
    for (std::size_t r = 0; match < 0 && r < s.sig.relations.size(); ++r)
      if (s.sig.relations[r].arity == ar && t.relation_rows(s.sig.relations[r].name) == c.extent)
        match = static_cast<int>(r);
    if (match < 0) {
      if (c.extent == t.all_rows(ar)) continue;
      throw Error("instance_to_structure: constraint extent matches no named relation");
    }
    s.add_tuple(match, Tuple(c.scope.begin(), c.scope.end()));
  }
  s.normalize();
  return s;
}

Instance orbit_structure_to_instance(const Structure& s, const OrbitTemplate& t) {
  Instance inst;
  for (int i = 0; i < s.domain_size; ++i) inst.variables.push_back("v" + std::to_string(i));
  for (std::size_t r = 0; r < s.extents.size(); ++r) {
    const auto& name = s.sig.relations[r].name;
    const Rows& rows = t.relation_rows(name);
    for (const auto& tp : s.extents[r]) inst.constraints.push_back({std::vector<int>(tp.begin(), tp.end()), rows, name});
  }
  return inst;
}

namespace {

// All structures on at most `size` elements over `base` that do not embed
// into the intended structure, as judged by `allowed`; only minimal ones kept.
std::vector<Structure> forbidden_shapes(const Signature& base, int size,
                                        const std::function<bool(const Structure&)>& allowed) {
  std::vector<Structure> out;
  for (int n = 1; n <= size; ++n) {
    // candidate tuples: unary on each element, binary on each ordered pair
    std::vector<std::pair<int, Tuple>> cand;
    for (std::size_t r = 0; r < base.relations.size(); ++r) {
      const auto& rel = base.relations[r];
      if (rel.arity == 1)
        for (int a = 0; a < n; ++a) cand.push_back({static_cast<int>(r), {a}});
      else
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            if (rel.symmetric && b < a) continue;
            cand.push_back({static_cast<int>(r), {a, b}});
          }
    }
    std::vector<Structure> seen;
    for (std::uint64_t mask = 0; mask < (1ull << cand.size()); ++mask) {
      Structure s(base, n);
      for (std::size_t i = 0; i < cand.size(); ++i)
        if (mask >> i & 1) s.add_tuple(cand[i].first, cand[i].second);
      s.normalize();
      if (allowed(s)) continue;
      // minimal: every proper induced substructure is allowed
      bool minimal = true;
      for (int drop = 0; drop < n && minimal && n > 1; ++drop) {
        std::vector<int> keep;
        for (int a = 0; a < n; ++a)
          if (a != drop) keep.push_back(a);
        minimal = allowed(induced_substructure(s, keep));
      }
      if (!minimal) continue;
      Structure c = canonical_form(s);
      if (std::find(seen.begin(), seen.end(), c) != seen.end()) continue;
      seen.push_back(c);
      out.push_back(c);
    }
  }
  return out;
}

bool is_strict_linear_order(const Structure& s) {
  const auto& lt = s.extents[0];
  auto has = [&](int a, int b) { return std::binary_search(lt.begin(), lt.end(), Tuple{a, b}); };
  const int n = s.domain_size;
  for (int a = 0; a < n; ++a) {
    if (has(a, a)) return false;
    for (int b = 0; b < n; ++b)
      if (a != b && has(a, b) == has(b, a)) return false;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (has(a, b) && has(b, c) && !has(a, c)) return false;
  }
  return true;
}

// E and N complementary on distinct pairs, no loops; optionally triangle-free.
bool is_graph_with_complement(const Structure& s, bool triangle_free) {
  const auto& e = s.extents[0];
  const auto& nn = s.extents[1];
  auto has = [](const std::vector<Tuple>& x, int a, int b) { return std::binary_search(x.begin(), x.end(), Tuple{a, b}); };
  const int n = s.domain_size;
  for (int a = 0; a < n; ++a) {
    if (has(e, a, a) || has(nn, a, a)) return false;
    for (int b = a + 1; b < n; ++b)
      if (has(e, a, b) == has(nn, a, b)) return false;
  }
  if (triangle_free)
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c)
          if (has(e, a, b) && has(e, b, c) && has(e, a, c)) return false;
  return true;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"QLT", "RGEN", "RGEN_PHI", "TFG"}; }

std::shared_ptr<OrbitTemplate> builtin(const std::string& name) {
  if (name == "QLT") {
    Signature base;
    base.add("Lt", 2);
    auto bounds = forbidden_shapes(base, 3, is_strict_linear_order);
    auto t = std::make_shared<OrbitTemplate>("QLT", std::make_shared<TypeSpace>(base, bounds), 2, 3);
    t->add_base_relation("Lt");
    return t;
  }
  if (name == "RGEN" || name == "RGEN_PHI" || name == "TFG") {
    Signature base;
    base.add("E", 2, true);
    base.add("N", 2, true);
    const bool tf = name == "TFG";
    auto bounds = forbidden_shapes(base, tf ? 3 : 2, [tf](const Structure& s) { return is_graph_with_complement(s, tf); });
    auto t = std::make_shared<OrbitTemplate>(name, std::make_shared<TypeSpace>(base, bounds), 2, tf ? 3 : 2);
    t->add_base_relation("E");
    t->add_base_relation("N");
    if (name == "RGEN_PHI") {
      Rows phi;
      const int e = t->space().link_bit(0), nn = t->space().link_bit(1);
      for (Row r : t->all_rows(4)) {
        const AtomicType& ty = t->space().type(4, r);
        if (ty.block[0] == ty.block[1] || ty.block[2] == ty.block[3]) continue;
        auto l1 = ty.diagram.at(ty.block[0], ty.block[1]);
        auto l2 = ty.diagram.at(ty.block[2], ty.block[3]);
        bool both_e = (l1 >> e & 1) && (l2 >> e & 1);
        bool both_n = (l1 >> nn & 1) && (l2 >> nn & 1);
        if (both_e || both_n) phi.push_back(r);
      }
      t->add_relation("Phi", 4, phi);
    }
    return t;
  }
  throw Error("unknown built-in template " + name);
}

}  // namespace cspdual
