#pragma once

#include "poly.hpp"

namespace tphi {

// Canonical fermion monomial: strictly increasing generator keys.
using Mono = std::vector<Key>;

struct SortResult {
  Mono mono;
  int sign = 1;
  bool zero = false;
};

// Sorts a generator word into canonical order, tracking the permutation parity;
// a repeated generator kills the word.
SortResult mono_canonicalize(Mono word);

// Concatenation sign for two canonical monomials (number of descents across the
// merge); zero on overlap.
SortResult mono_merge(const Mono& a, const Mono& b);

// Element of the algebra: sum over canonical fermion monomials of boson-polynomial
// coefficients. The stored polynomial at monomial m equals the antisymmetric
// coefficient function evaluated at the sorted sequence m.
struct Element {
  LayoutPtr layout;
  std::map<Mono, Poly> terms;
  int truncation_degree = -1;  // >= 0 when a series tail was dropped at that boson degree

  static Element zero(LayoutPtr l) { return Element{std::move(l), {}, -1}; }
  static Element constant(LayoutPtr l, RC c) {
    Element e = zero(std::move(l));
    e.add(Mono{}, Poly::constant(std::move(c)));
    return e;
  }
  static Element boson(LayoutPtr l, Key k) {
    Element e = zero(std::move(l));
    e.add(Mono{}, Poly::var(k));
    return e;
  }
  static Element fermion(LayoutPtr l, Key k) {
    Element e = zero(std::move(l));
    e.add(Mono{k}, Poly::constant(RC(1)));
    return e;
  }

  bool is_zero() const { return terms.empty(); }

  void add(const Mono& m, const Poly& p) {
    if (p.is_zero()) return;
    auto [it, fresh] = terms.emplace(m, p);
    if (!fresh) {
      it->second += p;
      if (it->second.is_zero()) terms.erase(it);
    }
  }

  Element& operator+=(const Element& o);
  Element& operator-=(const Element& o);
  friend Element operator+(Element a, const Element& b) { return a += b; }
  friend Element operator-(Element a, const Element& b) { return a -= b; }
  Element scaled(const RC& s) const;
  friend Element operator*(const Element& a, const Element& b);

  Element boson_derivative(Key x) const;
  // Left interior derivative i_u: anti-derivation with i_u(psi_v) = delta_{u,v}.
  Element fermion_derivative(Key u) const;

  // Total degree: boson degree plus fermion length, maximized over terms.
  int degree() const;
  int max_fermion_length() const;

  // Pure-boson part (coefficient of the empty monomial).
  Poly boson_part() const {
    auto it = terms.find(Mono{});
    return it == terms.end() ? Poly::zero() : it->second;
  }

  // Coefficient function F_z(phi): z an arbitrary species-ordered sequence,
  // boson entries differentiated, fermion entries looked up antisymmetrically.
  RC coefficient(const IndexSeq& z, const FieldAssign& phi) const;

  // Largest absolute value among all polynomial coefficients (exact square).
  Rat max_coeff_abs2() const;

  bool operator==(const Element& o) const { return terms == o.terms; }
};

// exp(F) for F with even fermion degree in every term and vanishing boson constant
// term. The fermion-nilpotent part exponentiates exactly; powers of the pure-boson
// part are truncated at boson_cap (recorded in truncation_degree when it bites).
Element taylor_exponential(const Element& f, int boson_cap);

}  // namespace tphi
