#pragma once

#include "covariance.hpp"
#include "layout.hpp"

namespace tphi {

// Weight family on (derivative multi-index, field label) pairs: per-species scale
// h > 0 and smoothness scale R >= 1, with w^{-1} = h^{-1} R^{|alpha|_1} up to
// derivative order p_phi and w = infinity above (the norm then ignores those
// derivatives; we encode the unconstrained case as weight_inv == 0).
struct Weight {
  LayoutPtr layout;
  std::vector<Rat> h;  // one scale per species position
  int p_phi = 0;
  long Rscale = 1;
};

inline Weight make_weight(LayoutPtr l, const Rat& h_all, int p_phi, long Rscale) {
  Weight w{l, std::vector<Rat>(l->nspecies(), h_all), p_phi, Rscale};
  return w;
}

inline Weight make_weight(LayoutPtr l, std::vector<Rat> h, int p_phi, long Rscale) {
  if ((int)h.size() != l->nspecies()) throw std::runtime_error("weight: species count mismatch");
  return Weight{l, std::move(h), p_phi, Rscale};
}

// w^{-1} for one component; 0 means the pair is unconstrained (w = infinity).
inline Rat weight_inv(const Weight& w, int alpha_order, Key label) {
  if (alpha_order > w.p_phi) return Rat(0);
  return rat_pow(Rat(w.Rscale), alpha_order) / w.h.at(key_species(label));
}

// w at alpha = 0, i.e. the species scale of the label.
inline Rat weight_of_key(const Weight& w, Key label) { return w.h.at(key_species(label)); }

// Weight on the doubled layout: base species keep h, primed twins take h'.
inline Weight weight_union(const Weight& w, const Weight& wprime) {
  if (!w.layout->same_as(*wprime.layout) || w.p_phi != wprime.p_phi || w.Rscale != wprime.Rscale)
    throw std::runtime_error("weight_union: incompatible weights");
  LayoutPtr dl = doubled_layout(w.layout);
  std::vector<Rat> h(dl->nspecies());
  for (int p = 0; p < w.layout->nspecies(); ++p) {
    h[2 * p] = w.h[p];
    h[2 * p + 1] = wprime.h[p];
  }
  return Weight{dl, std::move(h), w.p_phi, w.Rscale};
}

// Componentwise sum (w + w')(a, z) = w(a, z) + w'(a, z'): for the h-family this
// is the family with scales h + h'.
inline Weight weight_sum(const Weight& w, const Weight& wprime) {
  if (!w.layout->same_as(*wprime.layout) || w.p_phi != wprime.p_phi || w.Rscale != wprime.Rscale)
    throw std::runtime_error("weight_sum: incompatible weights");
  std::vector<Rat> h(w.h.size());
  for (size_t i = 0; i < h.size(); ++i) h[i] = w.h[i] + wprime.h[i];
  return Weight{w.layout, std::move(h), w.p_phi, w.Rscale};
}

// Norm-change ratio rho^(n) = 2 sup_{r >= n} sup_{g in B(Phi'^(r))} ||g||_{Phi^(r)}.
// For two h-families sharing R and with p_phi <= p_phi', the inner sup equals the
// best species ratio to the r-th power (attained by constant test functions), so
// the whole expression is a finite maximum once sequence lengths are capped.
inline Rat rho_ratio(const Weight& wprime, const Weight& w, int n, int length_cap) {
  if (w.Rscale != wprime.Rscale || w.p_phi > wprime.p_phi)
    throw std::runtime_error("rho_ratio: closed form needs shared R and p_phi <= p_phi'");
  Rat best(0);
  for (size_t i = 0; i < w.h.size(); ++i) {
    Rat q = wprime.h[i] / w.h[i];
    if (q > best) best = q;
  }
  Rat sup(0);
  for (int r = n; r <= length_cap; ++r) {
    Rat p = rat_pow(best, r);
    if (p > sup) sup = p;
  }
  return 2 * sup;
}

}  // namespace tphi
