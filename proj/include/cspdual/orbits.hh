#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cspdual/algebra.hh"
#include "cspdual/relcore.hh"

namespace cspdual {

// Finite diagram on the distinct points of a tuple.
struct BlockStructure {
  int nb = 0;
  std::vector<std::uint8_t> point;  // unary relations and loops of binary relations
  std::vector<std::uint8_t> link;   // nb*nb, binary relations between distinct points

  std::uint8_t at(int a, int b) const { return link[a * nb + b]; }
};

struct AtomicType {
  int arity = 0;
  std::vector<std::uint8_t> block;  // per position, numbered by first occurrence
  BlockStructure diagram;

  std::string key() const;
  bool operator==(const AtomicType& o) const { return key() == o.key(); }
};

// Atomic types over a base signature of unary and binary relations,
// filtered by a list of forbidden bounds.
class TypeSpace {
 public:
  TypeSpace(Signature base, std::vector<Structure> bounds, int eager_arity = 5);

  const Signature& base() const { return base_; }
  const std::vector<Structure>& bounds() const { return bounds_; }
  int point_bit(int rel) const { return point_bit_[rel]; }
  int link_bit(int rel) const { return link_bit_[rel]; }

  const Rows& all(int arity);
  void extend(int arity, Row r, std::vector<Row>& out);
  Row restrict(int arity, Row r, std::span<const int> pos);
  const AtomicType& type(int arity, Row r);
  Row intern(const AtomicType& t);  // throws when t is not realizable
  std::optional<Row> find(const AtomicType& t);
  // True when some bound embeds into d.
  bool embeds_bound(const BlockStructure& d) const;
  std::string describe(const AtomicType& t) const;
  AtomicType parse_descriptor(const std::string& text) const;
  std::size_t interned(int arity);

 private:
  struct BoundShape {
    int size;
    std::vector<std::uint8_t> point;
    std::vector<std::uint8_t> link;
  };

  Signature base_;
  std::vector<Structure> bounds_;
  std::vector<BoundShape> shapes_;
  std::vector<int> point_bit_, link_bit_;
  std::uint8_t sym_mask_ = 0;
  int eager_;
  std::vector<std::uint8_t> ok1_;                                   // realizable point masks
  std::vector<std::array<std::uint8_t, 4>> ok2_;                    // (p, q, link p->q, link q->p)
  std::recursive_mutex mu_;
  std::vector<std::deque<AtomicType>> types_;
  std::vector<std::unordered_map<std::string, Row>> index_;
  std::vector<std::unique_ptr<Rows>> all_;
  std::vector<std::vector<Rows>> children_;
  std::unordered_map<std::uint64_t, Row> restrict_cache_;

  void ensure_arity(int arity);
  Row intern_locked(const AtomicType& t);
  void compute_children(int arity, Row r, Rows& out);
  bool new_block_ok(const BlockStructure& d, int fresh) const;
  bool shape_embeds(const BoundShape& s, const BlockStructure& d, int must) const;
};

// Finite encoding of a k-homogeneous l-bounded template through atomic types.
class OrbitTemplate : public Algebra {
 public:
  OrbitTemplate(std::string name, std::shared_ptr<TypeSpace> space, int k, int l);

  const std::string& name() const { return name_; }
  TypeSpace& space() const { return *space_; }
  std::shared_ptr<TypeSpace> space_ptr() const { return space_; }
  const Signature& base() const { return space_->base(); }
  const std::vector<Structure>& bounds() const { return space_->bounds(); }

  // Relation defined by a base symbol: every type satisfying it at (0..arity-1).
  void add_base_relation(const std::string& base_name);
  void add_relation(const std::string& name, int arity, Rows rows);
  // Structures over the base signature are read with these names.
  bool is_base_relation(const std::string& name) const;

  bool orbit_mode() const override { return true; }
  int k() const override { return k_; }
  int l() const override { return l_; }
  const Rows& all_rows(int arity) const override { return space_->all(arity); }
  void extend(int arity, Row r, std::vector<Row>& out) const override { space_->extend(arity, r, out); }
  Row restrict(int arity, Row r, std::span<const int> pos) const override {
    return space_->restrict(arity, r, pos);
  }
  bool same_point(int arity, Row r, int i, int j) const override;
  bool injective(int arity, Row r) const override;
  std::vector<std::string> relation_names() const override;
  int relation_arity(const std::string& name) const override;
  const Rows& relation_rows(const std::string& name) const override;
  std::string row_to_string(int arity, Row r) const override;

  // Relation signature used when instances are read as structures.
  Signature relation_signature() const;

 private:
  std::string name_;
  std::shared_ptr<TypeSpace> space_;
  int k_, l_;
  std::vector<std::string> order_;
  std::map<std::string, std::pair<int, Rows>> relations_;
  std::vector<std::string> base_defined_;
};

std::vector<AtomicType> enumerate_atomic_types(const Signature& base, const std::vector<Structure>& bounds,
                                               int m);
Rows orbit_project(const OrbitTemplate& t, int arity, const Rows& s, std::span<const int> positions);
// Rows of the given arity whose restriction to pos1 lies in s1 and to pos2 in s2.
Rows orbit_join(const OrbitTemplate& t, int arity, const Rows& s1, std::span<const int> pos1, const Rows& s2,
                std::span<const int> pos2);

enum class SolveMode { theorem, search };
enum class Verdict { sat, unsat };

struct OrbitSolution {
  Verdict verdict = Verdict::unsat;
  // For search mode: the point (class) assigned to every variable and the
  // diagram on those points.
  std::vector<int> point_of;
  BlockStructure diagram;
};

// Per k-subset projection must hold exactly one injective type.
Verdict solve_injective(const Instance& inst, const OrbitTemplate& t);
OrbitSolution solve_orbit(const Instance& inst, const OrbitTemplate& t, SolveMode mode);

std::shared_ptr<OrbitTemplate> builtin(const std::string& name);
std::vector<std::string> builtin_names();

// Instances over an orbit template read as structures over its relations.
Structure orbit_instance_to_structure(const Instance& inst, const OrbitTemplate& t);
Instance orbit_structure_to_instance(const Structure& s, const OrbitTemplate& t);

}  // namespace cspdual
