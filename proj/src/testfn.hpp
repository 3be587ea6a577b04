#pragma once

#include <functional>

#include "element.hpp"
#include "lattice.hpp"
#include "weight.hpp"

namespace tphi {

// Test function: finitely supported map from species-ordered sequences to scalars.
// Values are implicitly zero off the stored support, beyond pn_cap boson
// components, and beyond len_cap total components.
struct TestFunction {
  LayoutPtr layout;
  int pn_cap = 4;
  int len_cap = 8;
  std::map<IndexSeq, RC> v;

  RC at(const IndexSeq& z) const {
    auto it = v.find(z);
    return it == v.end() ? RC() : it->second;
  }
  void set(const IndexSeq& z, RC val);
  void add(const IndexSeq& z, const RC& val);
  bool admissible(const IndexSeq& z) const;  // species-ordered and within caps
};

int boson_count(const Layout& l, const IndexSeq& z);

// (nabla^alpha g)_z with one multi-index per component of z; finite differences
// act on the site argument of each component, with torus wraparound.
RC nabla_value(const TestFunction& g, const IndexSeq& z, const std::vector<MultiIndex>& alpha);

// Expansion of nabla^alpha at z into (sequence, integer coefficient) pairs.
std::vector<std::pair<IndexSeq, long>> nabla_stencil(const Torus& t, const IndexSeq& z,
                                                     const std::vector<MultiIndex>& alpha);

// sup over (alpha, z) of w^{-2} |nabla^alpha g_z|^2, exactly.
Rat phi_norm_sq(const TestFunction& g, const Weight& w);
// Same, restricted to sequences accepted by the filter (used for localized norms).
Rat phi_norm_sq_filtered(const TestFunction& g, const Weight& w,
                         const std::function<bool(const IndexSeq&)>& zfilter);
// Per-length restrictions ||g^(r)||^2.
std::map<int, Rat> phi_norm_sq_by_length(const TestFunction& g, const Weight& w);

// Visits every species-order-preserving permutation sigma of z as (sigma z,
// sign of the fermion part of sigma).
void for_each_block_perm(const Layout& l, const IndexSeq& z,
                         const std::function<void(const IndexSeq&, int)>& fn);

// Symmetrisation (Sg)_z = (1/z!) sum over species-order-preserving permutations
// of sgn(sigma_f) g_{sigma z}.
TestFunction symmetrise(const TestFunction& g);

// Pairing <F, g>_phi = sum_z (1/z!) F_z(phi) g_z.
RC pairing(const Element& f, const TestFunction& g, const FieldAssign& phi);

// sigma*_xi(s): boson-suffix resummation realizing a field shift in the pairing,
// <P, g>_{t phi + s xi} = <P, sigma*_xi(s) g>_{t phi}; entries of total length
// beyond pn_cap are dropped.
TestFunction sigma_star(const TestFunction& g, const FieldAssign& xi, const Rat& s);
// m-th derivative in s at s = 0.
TestFunction sigma_star_deriv(const TestFunction& g, const FieldAssign& xi, int m);

// theta*: pushforward along the forget map from the doubled layout,
// (theta* g)_z = sum_{v : forget(v) = z} (z!/v!) g_v.
TestFunction theta_star(const TestFunction& g_doubled);

// The boson field of one species as a length-1 test function (all labels stored,
// including zero values, so that derivative sups see the full lattice).
TestFunction field_test_function(LayoutPtr l, int species_pos, const FieldAssign& phi,
                                 int pn_cap = 4, int len_cap = 8);

// The covariance pair as a length-2 test function: assembled boson moments on
// boson pairs, assembled fermion moments on fermion pairs, zero on mixed pairs.
TestFunction covariance_test_function(LayoutPtr l, const CovariancePair& c, int boson_pos,
                                      int fermion_pos, int pn_cap = 4, int len_cap = 8);

}  // namespace tphi
