#pragma once

#include "covariance.hpp"
#include "element.hpp"
#include "rng.hpp"
#include "testfn.hpp"

namespace tphi {

// Random symmetric matrix with nonzero determinant, small exact entries.
inline RatMat random_symmetric_invertible(Rng& rng, int M) {
  for (;;) {
    RatMat a = rat_zeros(M);
    for (int i = 0; i < M; ++i)
      for (int j = i; j < M; ++j) a[i][j] = a[j][i] = rng.rat(3, 3);
    if (rat_det(a) != 0) return a;
  }
}

// R^T R + I: symmetric positive definite by construction.
inline RatMat random_spd(Rng& rng, int M) {
  RatMat r = rat_zeros(M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) r[i][j] = rng.rat(2, 3);
  RatMat s = rat_identity(M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      for (int k = 0; k < M; ++k) s[i][j] += r[k][i] * r[k][j];
  return s;
}

// Random polynomial in the boson variables of the given species positions.
inline Poly random_poly(Rng& rng, const Layout& l, const std::vector<int>& boson_pos, int maxdeg,
                        int nterms, bool real_coeffs = false) {
  std::vector<Key> vars;
  for (int p : boson_pos)
    for (int conj = 0; conj < 2; ++conj)
      for (int x = 0; x < l.torus.nsites(); ++x) vars.push_back(pack(uint16_t(p), uint8_t(conj), uint32_t(x)));
  Poly out;
  for (int t = 0; t < nterms; ++t) {
    int deg = (int)rng.below(uint64_t(maxdeg + 1));
    MultiDeg d;
    for (int r = 0; r < deg; ++r) {
      Key k = vars[rng.below(vars.size())];
      bool merged = false;
      for (auto& [kk, e] : d)
        if (kk == k) {
          ++e;
          merged = true;
          break;
        }
      if (!merged) d.emplace_back(k, 1);
    }
    std::sort(d.begin(), d.end());
    out.add_term(d, real_coeffs ? RC(rng.rat(2, 2)) : rng.rc(2, 2));
  }
  return out;
}

// Random element: nterms summands, each a random fermion word over the fermion
// species positions times a random boson polynomial.
inline Element random_element(Rng& rng, LayoutPtr l, const std::vector<int>& boson_pos,
                              const std::vector<int>& fermion_pos, int maxdeg, int max_fermi,
                              int nterms, bool real_coeffs = false) {
  std::vector<Key> fvars;
  for (int p : fermion_pos)
    for (int conj = 0; conj < 2; ++conj)
      for (int x = 0; x < l->torus.nsites(); ++x)
        fvars.push_back(pack(uint16_t(p), uint8_t(conj), uint32_t(x)));
  Element out = Element::zero(l);
  for (int t = 0; t < nterms; ++t) {
    Mono word;
    int len = fvars.empty() ? 0 : (int)rng.below(uint64_t(max_fermi + 1));
    for (int r = 0; r < len; ++r) word.push_back(fvars[rng.below(fvars.size())]);
    SortResult sr = mono_canonicalize(std::move(word));
    if (sr.zero) continue;
    Poly p = boson_pos.empty() ? Poly::constant(real_coeffs ? RC(rng.rat(2, 2)) : rng.rc(2, 2))
                               : random_poly(rng, *l, boson_pos, maxdeg, 2, real_coeffs);
    out.add(sr.mono, p.scaled(RC(Rat(sr.sign))));
  }
  return out;
}

// Real boson field: conjugate components carry the same real rational value, so that
// complex-conjugation symmetry of weights and coefficients is exact.
inline FieldAssign random_real_field(Rng& rng, const Layout& l, const std::vector<int>& boson_pos) {
  FieldAssign phi;
  for (int s : boson_pos)
    for (uint32_t x = 0; x < uint32_t(l.torus.nsites()); ++x) {
      RC val(rng.rat(2, 2));
      phi.set(pack(uint16_t(s), 0, x), val);
      phi.set(pack(uint16_t(s), 1, x), val);
    }
  return phi;
}

inline TestFunction random_testfn(Rng& rng, LayoutPtr l, const std::vector<int>& boson_pos,
                                  const std::vector<int>& fermion_pos, int pn_cap, int len_cap,
                                  int nterms, bool real_coeffs = false) {
  TestFunction g{l, pn_cap, len_cap, {}};
  std::vector<Key> bvars, fvars;
  for (int s : boson_pos)
    for (uint32_t x = 0; x < uint32_t(l->torus.nsites()); ++x)
      for (uint8_t c : {0, 1}) bvars.push_back(pack(uint16_t(s), c, x));
  for (int s : fermion_pos)
    for (uint32_t x = 0; x < uint32_t(l->torus.nsites()); ++x)
      for (uint8_t c : {0, 1}) fvars.push_back(pack(uint16_t(s), c, x));
  for (int t = 0; t < nterms; ++t) {
    IndexSeq z;
    int nb = bvars.empty() ? 0 : (int)rng.below(uint64_t(pn_cap + 1));
    int room = len_cap - nb;
    int nf = fvars.empty() || room <= 0 ? 0 : (int)rng.below(uint64_t(room + 1));
    for (int r = 0; r < nb; ++r) z.push_back(bvars[rng.below(bvars.size())]);
    for (int r = 0; r < nf; ++r) z.push_back(fvars[rng.below(fvars.size())]);
    z = seq_sorted_by_species(std::move(z));
    g.add(z, real_coeffs ? RC(rng.rat(2, 2)) : rng.rc(2, 2));
  }
  return g;
}

}  // namespace tphi
