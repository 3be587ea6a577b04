#include "gaussian.hpp"

#include <set>

namespace tphi {

LayoutPtr susy_layout(const Torus& t) {
  return make_layout(t, {Species{"phi", Kind::boson, -1}, Species{"psi", Kind::fermion, -1}});
}
LayoutPtr boson_layout(const Torus& t) {
  return make_layout(t, {Species{"phi", Kind::boson, -1}});
}
LayoutPtr fermion_layout(const Torus& t) {
  return make_layout(t, {Species{"psi", Kind::fermion, -1}});
}

static int find_species(const Layout& l, Kind k, bool primed) {
  for (int p = 0; p < l.nspecies(); ++p)
    if (l.species[p].kind == k && (l.species[p].primed_of >= 0) == primed) return p;
  return -1;
}

Element theta(const Element& f, const Rat& t) {
  LayoutPtr dl = doubled_layout(f.layout);
  Element out = Element::zero(dl);
  auto renamed = [](Key k) { return to_doubled(k, false); };
  auto twin = [](Key k) { return to_doubled(k, true); };
  for (auto& [m, p] : f.terms) {
    Poly shifted = p.shifted(renamed, twin, t);
    size_t q = m.size();
    for (uint64_t mask = 0; mask < (1ULL << q); ++mask) {
      Mono word(q);
      int primes = 0;
      for (size_t i = 0; i < q; ++i) {
        bool pr = (mask >> i) & 1;
        word[i] = to_doubled(m[i], pr);
        primes += pr;
      }
      SortResult sr = mono_canonicalize(std::move(word));
      if (sr.zero) continue;
      RC fac = RC(rat_pow(t, primes) * sr.sign);
      out.add(sr.mono, shifted.scaled(fac));
    }
  }
  return out;
}

// Parity of the permutation rearranging `from` into `to` (same distinct keys).
static int rearrangement_sign(const std::vector<Key>& from, const std::vector<Key>& to) {
  std::map<Key, int> pos;
  for (int i = 0; i < (int)to.size(); ++i) pos[to[i]] = i;
  std::vector<int> perm(from.size());
  for (size_t i = 0; i < from.size(); ++i) perm[i] = pos.at(from[i]);
  int inv = 0;
  for (size_t i = 0; i < perm.size(); ++i)
    for (size_t j = i + 1; j < perm.size(); ++j)
      if (perm[i] > perm[j]) ++inv;
  return inv % 2 == 0 ? 1 : -1;
}

Element grassmann_integral(const Element& f, const std::vector<Key>& ordered_generators) {
  std::set<Key> gens(ordered_generators.begin(), ordered_generators.end());
  Element out = Element::zero(f.layout);
  for (auto& [m, p] : f.terms) {
    size_t found = 0;
    for (Key k : m)
      if (gens.count(k)) ++found;
    if (found != gens.size()) continue;  // not a full enumeration: integral is zero
    Mono kept;
    for (Key k : m)
      if (!gens.count(k)) kept.push_back(k);
    std::vector<Key> target = kept;
    target.insert(target.end(), ordered_generators.begin(), ordered_generators.end());
    int s = rearrangement_sign(m, target);
    out.add(kept, s < 0 ? p.scaled(RC(Rat(-1))) : p);
  }
  return out;
}

std::vector<Key> conj_pair_integration_order(const Layout& l, int species_pos) {
  std::vector<Key> order;
  for (int site = 0; site < l.torus.nsites(); ++site) {
    order.push_back(pack(uint16_t(species_pos), 1, uint32_t(site)));
    order.push_back(pack(uint16_t(species_pos), 0, uint32_t(site)));
  }
  return order;
}

static Element fermion_expectation_det(const Element& f, const RatMat& Cf, int pos) {
  Element out = Element::zero(f.layout);
  for (auto& [m, p] : f.terms) {
    Mono ext, ints;
    for (Key k : m)
      (key_species(k) == pos ? ints : ext).push_back(k);
    std::vector<Key> unb, bar;
    for (Key k : ints)
      (key_conj(k) == 0 ? unb : bar).push_back(k);
    if (unb.size() != bar.size()) continue;  // unbalanced monomials integrate to zero

    int sign = 1;
    if (!ints.empty()) {
      std::vector<Key> target = ext;
      target.insert(target.end(), ints.begin(), ints.end());
      sign *= rearrangement_sign(m, target);
      // ints (sorted: all psi then all psibar) -> psibar_k1 psi_l1 psibar_k2 psi_l2 ...
      std::vector<Key> pairs;
      for (size_t r = 0; r < bar.size(); ++r) {
        pairs.push_back(bar[r]);
        pairs.push_back(unb[r]);
      }
      sign *= rearrangement_sign(ints, pairs);
    }
    size_t n = bar.size();
    RatMat minor(n, std::vector<Rat>(n));
    for (size_t r = 0; r < n; ++r)
      for (size_t s = 0; s < n; ++s) minor[r][s] = Cf[key_site(bar[r])][key_site(unb[s])];
    Rat det = n ? rat_det(std::move(minor)) : Rat(1);
    if (det == 0) continue;
    out.add(ext, p.scaled(RC(det * sign)));
  }
  return out;
}

static Element fermion_expectation_brute(const Element& f, const RatMat& Cf, int pos) {
  RatMat A = rat_inv(Cf);
  int M = (int)Cf.size();
  Element s = Element::zero(f.layout);
  for (int k = 0; k < M; ++k)
    for (int l = 0; l < M; ++l) {
      if (A[k][l] == 0) continue;
      Mono m{pack(uint16_t(pos), 0, uint32_t(k)), pack(uint16_t(pos), 1, uint32_t(l))};
      s.add(m, Poly::constant(RC(A[k][l])));
    }
  Element integrand = taylor_exponential(s.scaled(RC(Rat(-1))), 0) * f;
  Element integral = grassmann_integral(integrand, conj_pair_integration_order(*f.layout, pos));
  return integral.scaled(RC(rat_det(Cf)));
}

Element fermion_expectation(const Element& f, const RatMat& Cf, int species_pos,
                            FermionRoute route) {
  return route == FermionRoute::determinant ? fermion_expectation_det(f, Cf, species_pos)
                                            : fermion_expectation_brute(f, Cf, species_pos);
}

static Element half_laplacian(const Element& f, const RatMat* Cb, int bpos, const RatMat* Cf,
                              int fpos) {
  Element out = Element::zero(f.layout);
  if (Cb)
    for (size_t k = 0; k < Cb->size(); ++k)
      for (size_t l = 0; l < Cb->size(); ++l) {
        if ((*Cb)[k][l] == 0) continue;
        Element d = f.boson_derivative(pack(uint16_t(bpos), 1, uint32_t(l)))
                        .boson_derivative(pack(uint16_t(bpos), 0, uint32_t(k)));
        out += d.scaled(RC((*Cb)[k][l]));
      }
  if (Cf)
    for (size_t k = 0; k < Cf->size(); ++k)
      for (size_t l = 0; l < Cf->size(); ++l) {
        if ((*Cf)[k][l] == 0) continue;
        // d/dpsi_k d/dpsibar_l, the bar derivative acting first.
        Element d = f.fermion_derivative(pack(uint16_t(fpos), 1, uint32_t(l)))
                        .fermion_derivative(pack(uint16_t(fpos), 0, uint32_t(k)));
        out += d.scaled(RC((*Cf)[k][l]));
      }
  return out;
}

Element laplacian(const Element& f, const RatMat* Cb, int boson_pos, const RatMat* Cf,
                  int fermion_pos) {
  return half_laplacian(f, Cb, boson_pos, Cf, fermion_pos).scaled(RC(Rat(2)));
}

Element heat_semigroup(const Element& f, const RatMat* Cb, int boson_pos, const RatMat* Cf,
                       int fermion_pos, const Rat& t) {
  Element acc = f;
  Element cur = f;
  for (long n = 1; !cur.is_zero(); ++n) {
    cur = half_laplacian(cur, Cb, boson_pos, Cf, fermion_pos).scaled(RC(t / n));
    acc += cur;
  }
  return acc;
}

Element boson_expectation(const Element& f, const RatMat& Cb, int species_pos) {
  Element g = heat_semigroup(f, &Cb, species_pos, nullptr, -1);
  Element out = Element::zero(f.layout);
  auto kill = [&](Key k) { return key_species(k) == species_pos; };
  for (auto& [m, p] : g.terms) out.add(m, p.dropped_vars(kill));
  return out;
}

LayoutPtr base_of_doubled(const Layout& dl) {
  std::vector<Species> sp;
  for (int p = 0; p < dl.nspecies(); p += 2) {
    Species s = dl.species[p];
    s.primed_of = -1;
    if (!s.name.empty() && s.name.back() == '\'') s.name.pop_back();
    sp.push_back(s);
  }
  return make_layout(dl.torus, std::move(sp));
}

Element expectation_primed(const Element& f_doubled, const CovariancePair& c, FermionRoute route) {
  const Layout& dl = *f_doubled.layout;
  Element g = f_doubled;
  int fpos = find_species(dl, Kind::fermion, true);
  if (fpos >= 0 && c.Mf() > 0) g = fermion_expectation(g, c.Cf, fpos, route);
  int bpos = find_species(dl, Kind::boson, true);
  if (bpos >= 0 && c.Mb() > 0) g = boson_expectation(g, c.Cb, bpos);

  LayoutPtr base = base_of_doubled(dl);
  Element out = Element::zero(base);
  for (auto& [m, p] : g.terms) {
    Mono nm;
    for (Key k : m) nm.push_back(from_doubled(k));
    out.add(nm, p.renamed_vars(from_doubled));
  }
  return out;
}

Element expectation_theta(const Element& f, const CovariancePair& c, FermionRoute route) {
  return expectation_primed(theta(f), c, route);
}

Rat convolution_residual(const Element& f, const CovariancePair& c1, const CovariancePair& c2) {
  Element step = expectation_theta(expectation_theta(f, c1), c2);
  CovariancePair sum;
  if (c1.Mb() > 0) sum.Cb = rat_add(c1.Cb, c2.Cb);
  if (c1.Mf() > 0) sum.Cf = rat_add(c1.Cf, c2.Cf);
  Element direct = expectation_theta(f, sum);
  return (step - direct).max_coeff_abs2();
}

Rat wick_residual(const Element& f, const CovariancePair& c) {
  Element lhs = expectation_theta(f, c);
  int bpos = find_species(*f.layout, Kind::boson, false);
  int fpos = find_species(*f.layout, Kind::fermion, false);
  Element rhs = heat_semigroup(f, c.Mb() > 0 && bpos >= 0 ? &c.Cb : nullptr, bpos,
                               c.Mf() > 0 && fpos >= 0 ? &c.Cf : nullptr, fpos);
  return (lhs - rhs).max_coeff_abs2();
}

Rat factorisation_residual(const Element& f1, const Element& f2, const CovariancePair& c) {
  Element lhs = expectation_theta(f1 * f2, c);
  Element rhs = expectation_theta(f1, c) * expectation_theta(f2, c);
  return (lhs - rhs).max_coeff_abs2();
}

}  // namespace tphi
