#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lattice.hpp"
#include "rational.hpp"

namespace tphi {

enum class Kind : uint8_t { boson, fermion };

// Every species here is a conjugate pair over the torus: phi/phibar for bosons,
// psi/psibar for fermions. Primed copies (integration variables) are separate
// species sitting immediately after their base species.
struct Species {
  std::string name;
  Kind kind = Kind::boson;
  int primed_of = -1;  // position of the base species in this layout, or -1
};

struct Layout {
  Torus torus;
  std::vector<Species> species;

  int nspecies() const { return (int)species.size(); }
  bool has_primes() const {
    for (auto& s : species)
      if (s.primed_of >= 0) return true;
    return false;
  }
  bool same_as(const Layout& o) const {
    if (!(torus == o.torus) || species.size() != o.species.size()) return false;
    for (size_t i = 0; i < species.size(); ++i)
      if (species[i].name != o.species[i].name || species[i].kind != o.species[i].kind ||
          species[i].primed_of != o.species[i].primed_of)
        return false;
    return true;
  }
};

using LayoutPtr = std::shared_ptr<const Layout>;

inline LayoutPtr make_layout(const Torus& t, std::vector<Species> sp) {
  auto l = std::make_shared<Layout>();
  l->torus = t;
  l->species = std::move(sp);
  return l;
}

// Base species at position p goes to 2p, its primed twin to 2p+1, so every
// primed species immediately follows its counterpart in sequence order.
inline LayoutPtr doubled_layout(const LayoutPtr& base) {
  if (base->has_primes()) throw std::runtime_error("layout already doubled");
  std::vector<Species> sp;
  for (int p = 0; p < base->nspecies(); ++p) {
    Species s = base->species[p];
    s.primed_of = -1;
    sp.push_back(s);
    Species q = base->species[p];
    q.name += "'";
    q.primed_of = 2 * p;
    sp.push_back(q);
  }
  return make_layout(base->torus, std::move(sp));
}

// Field index packed as (species position, conjugation flag, site), whose natural
// integer order is the canonical total order on generators.
using Key = uint64_t;

struct FieldIndex {
  uint16_t species;
  uint8_t conj;
  uint32_t site;
};

inline Key pack(uint16_t species, uint8_t conj, uint32_t site) {
  return (Key(species) << 40) | (Key(conj) << 32) | Key(site);
}
inline Key pack(const FieldIndex& f) { return pack(f.species, f.conj, f.site); }
inline FieldIndex unpack(Key k) {
  return FieldIndex{uint16_t(k >> 40), uint8_t((k >> 32) & 0xff), uint32_t(k & 0xffffffff)};
}
inline uint16_t key_species(Key k) { return uint16_t(k >> 40); }
inline uint8_t key_conj(Key k) { return uint8_t((k >> 32) & 0xff); }
inline uint32_t key_site(Key k) { return uint32_t(k & 0xffffffff); }

inline bool is_fermion(const Layout& l, Key k) {
  return l.species.at(key_species(k)).kind == Kind::fermion;
}

inline Key to_doubled(Key k, bool primed) {
  auto f = unpack(k);
  return pack(uint16_t(2 * f.species + (primed ? 1 : 0)), f.conj, f.site);
}
inline Key from_doubled(Key k) {
  auto f = unpack(k);
  if (f.species % 2 != 0) throw std::runtime_error("primed index survives undoubling");
  return pack(uint16_t(f.species / 2), f.conj, f.site);
}

// A point of the species-ordered sequence space: species positions non-decreasing.
using IndexSeq = std::vector<Key>;

inline bool seq_species_ordered(const IndexSeq& z) {
  for (size_t i = 1; i < z.size(); ++i)
    if (key_species(z[i - 1]) > key_species(z[i])) return false;
  return true;
}

// z! = product over species of (length of the species block)!
inline Int seq_factorial(const IndexSeq& z) {
  Int f = 1;
  size_t i = 0;
  while (i < z.size()) {
    size_t j = i;
    while (j < z.size() && key_species(z[j]) == key_species(z[i])) ++j;
    f *= factorial(unsigned(j - i));
    i = j;
  }
  return f;
}

// Sorts keys into species-ordered form, stably per species block; fermion entries
// keep their given relative order (the sequence is a point of the space, not a set).
inline IndexSeq seq_sorted_by_species(IndexSeq z) {
  std::stable_sort(z.begin(), z.end(),
                   [](Key a, Key b) { return key_species(a) < key_species(b); });
  return z;
}

struct FieldAssign {
  std::map<Key, RC> v;

  RC at(Key k) const {
    auto it = v.find(k);
    return it == v.end() ? RC() : it->second;
  }
  void set(Key k, RC val) { v[k] = std::move(val); }
};

// phi on unprimed species, xi on primed twins (both given over the base layout).
inline FieldAssign assign_union(const FieldAssign& phi, const FieldAssign& xi) {
  FieldAssign out;
  for (auto& [k, c] : phi.v) out.v[to_doubled(k, false)] = c;
  for (auto& [k, c] : xi.v) out.v[to_doubled(k, true)] = c;
  return out;
}

inline FieldAssign assign_sum(const FieldAssign& phi, const FieldAssign& xi) {
  FieldAssign out = phi;
  for (auto& [k, c] : xi.v) out.v[k] += c;
  return out;
}

inline FieldAssign assign_scale(const FieldAssign& phi, const Rat& t) {
  FieldAssign out;
  for (auto& [k, c] : phi.v) out.v[k] = t * c;
  return out;
}

}  // namespace tphi
