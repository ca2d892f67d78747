#include "cspdual/algebra.hh"

#include <algorithm>
#include <sstream>

namespace cspdual {

Rows Algebra::equality_rows() const {
  Rows out;
  const int pos[2] = {0, 0};
  for (Row r : all_rows(1)) out.push_back(restrict(1, r, pos));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Rows Algebra::project(int arity, const Rows& rows, std::span<const int> pos) const {
  for (int p : pos)
    if (p < 0 || p >= arity) throw Error("project: position out of range");
  Rows out;
  out.reserve(rows.size());
  for (Row r : rows) out.push_back(restrict(arity, r, pos));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> Algebra::rows_to_strings(int arity, const Rows& rows) const {
  std::vector<std::pair<std::string, std::string>> keyed;
  for (Row r : rows) keyed.push_back({row_key(arity, r), row_to_string(arity, r)});
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (auto& [k, s] : keyed) out.push_back(s);
  return out;
}

FiniteAlgebra::FiniteAlgebra(Structure tmpl) : tmpl_(std::move(tmpl)) {
  tmpl_.normalize();
  for (const auto& e : tmpl_.extents) rel_rows_.push_back(rows_of(e, tmpl_.domain_size));
}

const Rows& FiniteAlgebra::all_rows(int arity) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (static_cast<int>(all_.size()) <= arity) all_.resize(arity + 1);
  if (!all_[arity]) {
    Row n = row_count(arity, tmpl_.domain_size);
    auto rows = std::make_unique<Rows>(n);
    for (Row i = 0; i < n; ++i) (*rows)[i] = i;
    all_[arity] = std::move(rows);
  }
  return *all_[arity];
}

void FiniteAlgebra::extend(int arity, Row r, std::vector<Row>& out) const {
  const int d = tmpl_.domain_size;
  row_count(arity + 1, d);
  out.clear();
  for (int a = 0; a < d; ++a) out.push_back(r * d + a);
}

Row FiniteAlgebra::restrict(int arity, Row r, std::span<const int> pos) const {
  const int d = tmpl_.domain_size;
  int digits[32];
  Row x = r;
  for (int i = arity - 1; i >= 0; --i) {
    digits[i] = static_cast<int>(x % d);
    x /= d;
  }
  Row out = 0;
  for (int p : pos) out = out * d + digits[p];
  return out;
}

bool FiniteAlgebra::same_point(int arity, Row r, int i, int j) const {
  Tuple t = decode(arity, r);
  return t[i] == t[j];
}

bool FiniteAlgebra::injective(int arity, Row r) const {
  Tuple t = decode(arity, r);
  std::sort(t.begin(), t.end());
  return std::adjacent_find(t.begin(), t.end()) == t.end();
}

std::vector<std::string> FiniteAlgebra::relation_names() const {
  std::vector<std::string> out;
  for (const auto& r : tmpl_.sig.relations) out.push_back(r.name);
  return out;
}

int FiniteAlgebra::relation_arity(const std::string& name) const {
  int i = tmpl_.sig.index_of(name);
  return i < 0 ? -1 : tmpl_.sig.relations[i].arity;
}

const Rows& FiniteAlgebra::relation_rows(const std::string& name) const {
  int i = tmpl_.sig.index_of(name);
  if (i < 0) throw Error("unknown relation " + name);
  return rel_rows_[i];
}

std::string FiniteAlgebra::row_to_string(int arity, Row r) const {
  return tuple_to_string(decode(arity, r));
}

std::string FiniteAlgebra::row_key(int arity, Row r) const {
  std::string s = std::to_string(r);
  std::string w = std::to_string(row_count(arity, tmpl_.domain_size));
  return std::string(w.size() > s.size() ? w.size() - s.size() : 0, '0') + s;
}

}  // namespace cspdual
