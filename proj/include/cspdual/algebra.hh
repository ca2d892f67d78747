#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "cspdual/relcore.hh"

namespace cspdual {

// Row space shared by the propagation engines and the formula evaluator.
// A row of arity m is a finite tuple (finite mode) or an atomic type of
// m-tuples (orbit mode).
class Algebra {
 public:
  virtual ~Algebra() = default;

  virtual bool orbit_mode() const = 0;
  virtual int k() const = 0;
  virtual int l() const = 0;

  virtual const Rows& all_rows(int arity) const = 0;
  // Rows of arity+1 whose restriction to the first arity positions is r.
  virtual void extend(int arity, Row r, std::vector<Row>& out) const = 0;
  // Row of arity pos.size(); positions may repeat.
  virtual Row restrict(int arity, Row r, std::span<const int> pos) const = 0;
  virtual bool same_point(int arity, Row r, int i, int j) const = 0;
  // Every position of r names a different point.
  virtual bool injective(int arity, Row r) const = 0;

  virtual std::vector<std::string> relation_names() const = 0;
  virtual int relation_arity(const std::string& name) const = 0;  // -1 when absent
  virtual const Rows& relation_rows(const std::string& name) const = 0;

  virtual std::string row_to_string(int arity, Row r) const = 0;
  // Canonical text used for ordering printed rows.
  virtual std::string row_key(int arity, Row r) const { return row_to_string(arity, r); }

  // Rows of arity 2 where both positions name the same point.
  Rows equality_rows() const;
  Rows project(int arity, const Rows& rows, std::span<const int> pos) const;
  bool has_relation(const std::string& name) const { return relation_arity(name) >= 0; }
  // Sorted by row_key.
  std::vector<std::string> rows_to_strings(int arity, const Rows& rows) const;
};

class FiniteAlgebra : public Algebra {
 public:
  explicit FiniteAlgebra(Structure tmpl);

  const Structure& structure() const { return tmpl_; }
  int domain_size() const { return tmpl_.domain_size; }

  bool orbit_mode() const override { return false; }
  int k() const override { return 1; }
  int l() const override { return 1; }
  const Rows& all_rows(int arity) const override;
  void extend(int arity, Row r, std::vector<Row>& out) const override;
  Row restrict(int arity, Row r, std::span<const int> pos) const override;
  bool same_point(int arity, Row r, int i, int j) const override;
  bool injective(int arity, Row r) const override;
  std::vector<std::string> relation_names() const override;
  int relation_arity(const std::string& name) const override;
  const Rows& relation_rows(const std::string& name) const override;
  std::string row_to_string(int arity, Row r) const override;
  std::string row_key(int arity, Row r) const override;

  Tuple decode(int arity, Row r) const { return decode_row(r, arity, tmpl_.domain_size); }
  Row encode(const Tuple& t) const { return encode_tuple(t, tmpl_.domain_size); }

 private:
  Structure tmpl_;
  std::vector<Rows> rel_rows_;
  mutable std::mutex mu_;
  mutable std::vector<std::unique_ptr<Rows>> all_;
};

}  // namespace cspdual
