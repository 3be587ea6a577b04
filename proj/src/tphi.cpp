#include "tphi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

namespace tphi {

namespace {

// Canonical orbit representative under species-order-preserving permutations:
// per-species blocks sorted, fermion blocks tracking the sort sign. Sign 0 when
// the sequence dies (repeated fermion label).
std::pair<IndexSeq, int> orbit_rep(const Layout& l, IndexSeq z) {
  int sign = 1;
  size_t i = 0;
  while (i < z.size()) {
    size_t j = i;
    while (j < z.size() && key_species(z[j]) == key_species(z[i])) ++j;
    if (l.species[key_species(z[i])].kind == Kind::fermion) {
      for (size_t a = i + 1; a < j; ++a)
        for (size_t b = a; b > i && z[b] < z[b - 1]; --b) {
          std::swap(z[b], z[b - 1]);
          sign = -sign;
        }
      for (size_t a = i + 1; a < j; ++a)
        if (z[a] == z[a - 1]) return {z, 0};
    } else {
      std::sort(z.begin() + i, z.begin() + j);
    }
    i = j;
  }
  return {z, sign};
}

// Sequence shape: per species, how many components of each conjugation.
using Shape = std::vector<std::array<int, 3>>;  // (species, n_conj0, n_conj1)

Shape to_shape(const std::map<int, std::pair<int, int>>& cnt) {
  Shape s;
  for (auto& [sp, nn] : cnt)
    if (nn.first + nn.second > 0) s.push_back({sp, nn.first, nn.second});
  return s;
}

// Shapes on which the coefficient function of f can be nonzero: the fermion
// pattern of each monomial, extended by any boson derivative pattern reachable
// from the attached polynomial, within the caps.
std::set<Shape> shapes_of(const Element& f, int pn_cap, int len_cap) {
  std::set<Shape> shapes;
  for (auto& [mono, poly] : f.terms) {
    std::map<int, std::pair<int, int>> fc;
    for (Key u : mono) {
      auto& nn = fc[key_species(u)];
      (key_conj(u) ? nn.second : nn.first)++;
    }
    for (auto& [mu, coeff] : poly.t) {
      (void)coeff;
      std::vector<uint32_t> sub(mu.size(), 0);
      for (;;) {
        auto cnt = fc;
        int btot = 0;
        for (size_t i = 0; i < mu.size(); ++i) {
          if (sub[i] == 0) continue;
          btot += (int)sub[i];
          auto& nn = cnt[key_species(mu[i].first)];
          (key_conj(mu[i].first) ? nn.second : nn.first) += (int)sub[i];
        }
        if (btot <= pn_cap && btot + (int)mono.size() <= len_cap) shapes.insert(to_shape(cnt));
        size_t i = 0;
        while (i < sub.size() && ++sub[i] > mu[i].second) sub[i++] = 0;
        if (i == sub.size()) break;
      }
    }
  }
  return shapes;
}

void multisets_rec(int n, int len, int lo, std::vector<int>& cur,
                   const std::function<void(const std::vector<int>&)>& fn) {
  if ((int)cur.size() == len) {
    fn(cur);
    return;
  }
  for (int v = lo; v < n; ++v) {
    cur.push_back(v);
    multisets_rec(n, len, v, cur, fn);
    cur.pop_back();
  }
}

void subsets_rec(int n, int len, int lo, std::vector<int>& cur,
                 const std::function<void(const std::vector<int>&)>& fn) {
  if ((int)cur.size() == len) {
    fn(cur);
    return;
  }
  for (int v = lo; v < n; ++v) {
    cur.push_back(v);
    subsets_rec(n, len, v + 1, cur, fn);
    cur.pop_back();
  }
}

// Cartesian product over per-position choice counts.
void odometer(const std::vector<size_t>& radix, const std::function<void(const std::vector<size_t>&)>& fn) {
  for (auto r : radix)
    if (r == 0) return;
  std::vector<size_t> ix(radix.size(), 0);
  for (;;) {
    fn(ix);
    size_t k = 0;
    while (k < radix.size() && ++ix[k] == radix[k]) ix[k++] = 0;
    if (k == radix.size()) break;
  }
}

struct BallLp {
  std::vector<IndexSeq> reps;      // variable -> orbit representative
  std::map<IndexSeq, int> index;
  std::vector<Rat> mult;           // orbit multiplicity factor in the pairing
  std::vector<RC> fval;            // coefficient function at the representative
  LpProblem prob;                  // A, b shared by all rotations; c set per run
};

Rat orbit_multiplicity(const Layout& l, const IndexSeq& rep) {
  Rat m(1);
  size_t i = 0;
  while (i < rep.size()) {
    size_t j = i;
    while (j < rep.size() && key_species(rep[j]) == key_species(rep[i])) ++j;
    if (l.species[key_species(rep[i])].kind == Kind::boson) {
      size_t a = i;
      while (a < j) {
        size_t b = a;
        while (b < j && rep[b] == rep[a]) ++b;
        m /= Rat(factorial(unsigned(b - a)));
        a = b;
      }
    }
    i = j;
  }
  return m;
}

BallLp build_ball_lp(const Element& f, const FieldAssign& phi, const Weight& w, int pn_cap,
                     int len_cap) {
  const Layout& l = *f.layout;
  const Torus& torus = l.torus;
  int nsites = torus.nsites();
  BallLp lp;

  std::set<Shape> shapes = shapes_of(f, pn_cap, len_cap);

  // Label universe per (species, conjugation).  At derivative order zero the
  // ball constraints do not couple distinct sequences, so an optimizer may be
  // taken to vanish off the element's own labels and the universe shrinks to
  // those.  Positive order needs the whole torus: buffer labels with zero
  // objective weight keep the stencil constraints the true ones.
  std::vector<std::vector<int>> univ(l.species.size() * 2);
  if (w.p_phi == 0) {
    std::vector<std::set<int>> seen(univ.size());
    for (auto& [mono, poly] : f.terms) {
      for (Key k : mono) seen[key_species(k) * 2 + key_conj(k)].insert((int)key_site(k));
      for (auto& [mu, coeff] : poly.t) {
        (void)coeff;
        for (auto& [k, e] : mu) {
          (void)e;
          seen[key_species(k) * 2 + key_conj(k)].insert((int)key_site(k));
        }
      }
    }
    for (size_t i = 0; i < univ.size(); ++i) univ[i].assign(seen[i].begin(), seen[i].end());
  } else {
    for (auto& u : univ) {
      u.resize(size_t(nsites));
      for (int x = 0; x < nsites; ++x) u[size_t(x)] = x;
    }
  }

  // Variables: for every shape, all species-block-sorted label choices over the
  // universe.
  for (const Shape& sh : shapes) {
    std::vector<std::vector<IndexSeq>> blocks;  // per shape entry, possible blocks
    for (auto& [sp, n0, n1] : sh) {
      std::vector<IndexSeq> bl;
      bool fermi = l.species[sp].kind == Kind::fermion;
      const std::vector<int>& u0 = univ[size_t(sp) * 2];
      const std::vector<int>& u1 = univ[size_t(sp) * 2 + 1];
      std::vector<std::vector<int>> c0s, c1s;
      std::vector<int> cur;
      auto gen = [&](int len, const std::vector<int>& u, std::vector<std::vector<int>>& out) {
        cur.clear();
        auto put = [&](const std::vector<int>& v) { out.push_back(v); };
        if (fermi)
          subsets_rec((int)u.size(), len, 0, cur, put);
        else
          multisets_rec((int)u.size(), len, 0, cur, put);
      };
      gen(n0, u0, c0s);
      gen(n1, u1, c1s);
      for (auto& a : c0s)
        for (auto& b : c1s) {
          IndexSeq blk;
          for (int i : a) blk.push_back(pack(uint16_t(sp), 0, uint32_t(u0[size_t(i)])));
          for (int i : b) blk.push_back(pack(uint16_t(sp), 1, uint32_t(u1[size_t(i)])));
          bl.push_back(blk);
        }
      blocks.push_back(std::move(bl));
    }
    std::vector<size_t> radix;
    for (auto& bl : blocks) radix.push_back(bl.size());
    odometer(radix, [&](const std::vector<size_t>& ix) {
      IndexSeq rep;
      for (size_t e = 0; e < ix.size(); ++e)
        rep.insert(rep.end(), blocks[e][ix[e]].begin(), blocks[e][ix[e]].end());
      if (lp.index.count(rep)) return;
      lp.index.emplace(rep, (int)lp.reps.size());
      lp.reps.push_back(rep);
    });
  }

  for (const IndexSeq& rep : lp.reps) {
    lp.mult.push_back(orbit_multiplicity(l, rep));
    lp.fval.push_back(f.coefficient(rep, phi));
  }

  // Constraints: one pair of rows per joint (labels, derivative) orbit
  // representative, blockwise sorted over (label, multi-index) items.
  std::vector<MultiIndex> alphas = multiindices_up_to(torus.d, w.p_phi);
  size_t nA = alphas.size();
  for (const Shape& sh : shapes) {
    std::vector<std::vector<std::vector<std::pair<int, size_t>>>> blocks;  // (site, alpha)
    for (auto& [sp, n0, n1] : sh) {
      bool fermi = l.species[sp].kind == Kind::fermion;
      const std::vector<int>& u0 = univ[size_t(sp) * 2];
      const std::vector<int>& u1 = univ[size_t(sp) * 2 + 1];
      std::vector<std::vector<std::pair<int, size_t>>> bl;
      std::vector<int> cur;
      auto emit = [&](const std::vector<int>& v0, const std::vector<int>& v1) {
        std::vector<std::pair<int, size_t>> items;
        for (int it : v0) items.emplace_back(u0[size_t(it / (int)nA)], size_t(it % (int)nA));
        for (int it : v1) items.emplace_back(u1[size_t(it / (int)nA)], size_t(it % (int)nA));
        bl.push_back(std::move(items));  // first n0 entries conj 0, rest conj 1
      };
      std::vector<std::vector<int>> i0s, i1s;
      auto put0 = [&](const std::vector<int>& v) { i0s.push_back(v); };
      auto put1 = [&](const std::vector<int>& v) { i1s.push_back(v); };
      cur.clear();
      if (fermi)
        subsets_rec((int)u0.size() * (int)nA, n0, 0, cur, put0);
      else
        multisets_rec((int)u0.size() * (int)nA, n0, 0, cur, put0);
      cur.clear();
      if (fermi)
        subsets_rec((int)u1.size() * (int)nA, n1, 0, cur, put1);
      else
        multisets_rec((int)u1.size() * (int)nA, n1, 0, cur, put1);
      for (auto& a : i0s)
        for (auto& b : i1s) emit(a, b);
      blocks.push_back(std::move(bl));
    }
    std::vector<size_t> radix;
    for (auto& bl : blocks) radix.push_back(bl.size());
    odometer(radix, [&](const std::vector<size_t>& ix) {
      IndexSeq z;
      std::vector<MultiIndex> av;
      Rat winv(1);
      for (size_t e = 0; e < ix.size(); ++e) {
        auto& [sp, n0, n1] = sh[e];
        (void)n1;
        auto& items = blocks[e][ix[e]];
        for (size_t r = 0; r < items.size(); ++r) {
          uint8_t conj = r < size_t(n0) ? 0 : 1;
          Key k = pack(uint16_t(sp), conj, uint32_t(items[r].first));
          z.push_back(k);
          av.push_back(alphas[items[r].second]);
          winv *= weight_inv(w, alphas[items[r].second].order(), k);
        }
      }
      if (winv == 0) return;
      std::map<int, Rat> row;
      for (auto& [zs, coeff] : nabla_stencil(torus, z, av)) {
        auto [rep, sgn] = orbit_rep(l, zs);
        if (sgn == 0) continue;
        auto it = lp.index.find(rep);
        if (it == lp.index.end()) throw std::logic_error("ball lp: stencil left the variable set");
        row[it->second] += Rat(coeff * sgn);
      }
      std::vector<Rat> dense(lp.reps.size(), Rat(0));
      bool any = false;
      for (auto& [j, c] : row)
        if (c != 0) {
          dense[j] = winv * c;
          any = true;
        }
      if (!any) return;
      lp.prob.A.push_back(dense);
      lp.prob.b.push_back(Rat(1));
      for (auto& c : dense) c = -c;
      lp.prob.A.push_back(dense);
      lp.prob.b.push_back(Rat(1));
    });
  }
  lp.prob.c.assign(lp.reps.size(), Rat(0));
  return lp;
}

std::map<IndexSeq, RC> expand_optimizer(const Layout& l, const BallLp& lp,
                                        const std::vector<Rat>& x) {
  std::map<IndexSeq, RC> g;
  for (size_t j = 0; j < lp.reps.size(); ++j) {
    if (x[j] == 0) continue;
    for_each_block_perm(l, lp.reps[j], [&](const IndexSeq& zz, int sgn) {
      g[zz] = RC(Rat(sgn) * x[j]);
    });
  }
  return g;
}

NormCertificate exact_p0_norm(const Element& f, const FieldAssign& phi, const NormParams& par,
                              int len_cap) {
  if (par.w.p_phi != 0)
    throw std::runtime_error("exact-p0 mode needs derivative order zero weights");
  bool all_real = true;
  double total = 0;
  Rat total_exact(0);
  for (auto& [mono, poly] : f.terms) {
    int deg = poly.total_degree();
    if (deg > par.pn_cap || deg + (int)mono.size() > len_cap)
      throw std::runtime_error("exact-p0: caps truncate the element; raise pn_cap/len_cap");
    Rat hf(1);
    for (Key u : mono) hf *= weight_of_key(par.w, u);
    std::map<Key, uint32_t> vmax;
    for (auto& [mu, c] : poly.t) {
      (void)c;
      for (auto& [k, e] : mu)
        if (e > vmax[k]) vmax[k] = e;
    }
    std::vector<Key> vars;
    std::vector<uint32_t> cap;
    for (auto& [k, e] : vmax) {
      vars.push_back(k);
      cap.push_back(e);
    }
    std::vector<uint32_t> nu(vars.size(), 0);
    for (;;) {
      Poly p = poly;
      Rat fac(1);
      for (size_t i = 0; i < vars.size(); ++i) {
        for (uint32_t r = 0; r < nu[i]; ++r) p = p.derivative(vars[i]);
        fac *= rat_pow(weight_of_key(par.w, vars[i]), long(nu[i])) / Rat(factorial(nu[i]));
      }
      RC val = p.eval(phi);
      if (!val.is_zero()) {
        Rat scale = hf * fac;
        if (val.im != 0) {
          all_real = false;
          total += to_double(scale) * std::sqrt(to_double(val.abs2()));
        } else {
          Rat a = val.re < 0 ? Rat(-val.re) : val.re;
          total_exact += scale * a;
          total += to_double(scale * a);
        }
      }
      size_t i = 0;
      while (i < nu.size() && ++nu[i] > cap[i]) nu[i++] = 0;
      if (i >= nu.size()) break;
    }
  }
  NormCertificate cert;
  cert.mode = "exact-p0";
  cert.p_phi = 0;
  cert.pn_cap = par.pn_cap;
  cert.len_cap = len_cap;
  cert.exact = all_real;
  if (all_real) {
    cert.exact_value = total_exact;
    cert.value = to_double(total_exact);
  } else {
    cert.value = total;
  }
  return cert;
}

}  // namespace

NormCertificate tphi_seminorm(const Element& f, const FieldAssign& phi, const NormParams& par) {
  if (!par.w.layout || !par.w.layout->same_as(*f.layout))
    throw std::runtime_error("seminorm: weight layout mismatch");
  int len_cap = par.len_cap;
  if (len_cap < 0) {
    len_cap = 0;
    for (auto& [mono, poly] : f.terms)
      len_cap = std::max(len_cap, (int)mono.size() + poly.total_degree());
  }
  if (par.mode == NormMode::exact_p0) return exact_p0_norm(f, phi, par, len_cap);

  BallLp lp = build_ball_lp(f, phi, par.w, par.pn_cap, len_cap);

  std::vector<std::pair<Rat, Rat>> rots;
  if (par.mode == NormMode::lp_real) {
    for (const RC& v : lp.fval)
      if (v.im != 0)
        throw std::runtime_error(
            "lp-exact-real needs real coefficient data; use the phase-grid mode");
    rots.emplace_back(Rat(1), Rat(0));
  } else {
    if (par.rotations < 2 || par.rotations % 2 != 0)
      throw std::runtime_error("phase grid needs an even rotation count >= 2");
    int half = par.rotations / 2;
    for (int k = 0; k < half; ++k) {
      Rat ts(k, half);
      Rat t2 = ts * ts, den = 1 + t2;
      rots.emplace_back((1 - t2) / den, 2 * ts / den);
    }
    for (int k = 0; k < half; ++k) {
      auto [a, b] = rots[size_t(k)];
      rots.emplace_back(-b, a);
    }
  }

  Rat best(0);
  int best_rot = -1;
  std::vector<Rat> best_x(lp.reps.size(), Rat(0));
  for (size_t r = 0; r < rots.size(); ++r) {
    auto& [a, b] = rots[r];
    for (size_t j = 0; j < lp.reps.size(); ++j)
      lp.prob.c[j] = lp.mult[j] * (a * lp.fval[j].re - b * lp.fval[j].im);
    LpResult res = lp_maximize(lp.prob);
    if (!res.feasible || !res.bounded)
      throw std::logic_error("ball lp: must be feasible and bounded");
    if (best_rot < 0 || res.value > best) {
      best = res.value;
      best_rot = (int)r;
      best_x = res.x;
    }
  }

  NormCertificate cert;
  cert.mode = par.mode == NormMode::lp_real ? "lp-exact-real" : "theta-grid-complex";
  cert.p_phi = par.w.p_phi;
  cert.pn_cap = par.pn_cap;
  cert.len_cap = len_cap;
  cert.rotations = (int)rots.size();
  cert.best_rotation = best_rot;
  cert.nvars = (int)lp.reps.size();
  cert.nrows = (int)lp.prob.A.size();
  cert.exact_value = best;
  cert.value = to_double(best);
  cert.exact = par.mode == NormMode::lp_real;
  cert.rigor_factor = par.mode == NormMode::lp_real
                          ? 1.0
                          : std::cos(std::numbers::pi / double(cert.rotations));
  cert.optimizer = expand_optimizer(*f.layout, lp, best_x);
  return cert;
}

ReplayReport certificate_replay(const Element& f, const FieldAssign& phi, const NormParams& par,
                                const NormCertificate& cert) {
  TestFunction g{f.layout, cert.pn_cap, cert.len_cap, {}};
  for (auto& [z, val] : cert.optimizer) g.set(z, val);
  ReplayReport rep;
  RC pr = pairing(f, g, phi);
  rep.pairing_abs = std::sqrt(to_double(pr.abs2()));
  rep.ball_sq = phi_norm_sq(g, par.w);
  rep.exact_match = cert.exact && pr.im == 0 && pr.re == cert.exact_value;
  return rep;
}

namespace {

struct CorrectionFamily {
  std::map<int, std::vector<Rat>> rows;  // site -> coefficient row; absent = fixed zero
  int ncoef = 0;
};

// min over the correction family of the sup over (site, derivative, phase) rows,
// as a two-sided bracket: the phase grid under-estimates each modulus by at most
// a factor cos(1/quarter_points).  Real data takes an exact two-phase program:
// dropping the imaginary part of a correction leaves the real part of every row
// unchanged while it can only shrink each modulus, so the optimum is real and
// the modulus is the larger of the two signs.
Interval minimax_modulus(const FieldAssign& phi, const Layout& l, int species_pos,
                         const Weight& w, const CorrectionFamily& fam, int quarter_points) {
  const Torus& t = l.torus;
  if (quarter_points < 2) throw std::runtime_error("local norm: need quarter_points >= 2");
  std::vector<MultiIndex> alphas = multiindices_up_to(t.d, w.p_phi);

  struct RowData {
    Rat winv;
    RC aval;
    std::vector<Rat> lin;
    bool has_lin = false;
  };
  std::vector<RowData> rows;
  bool all_real = true;
  for (int x = 0; x < t.nsites(); ++x) {
    for (auto& al : alphas) {
      Key label = pack(uint16_t(species_pos), 0, uint32_t(x));
      Rat winv = weight_inv(w, al.order(), label);
      if (winv == 0) continue;
      RowData r{winv, RC(), std::vector<Rat>(size_t(fam.ncoef), Rat(0)), false};
      IndexSeq z{label};
      std::vector<MultiIndex> av{al};
      for (auto& [zs, coeff] : nabla_stencil(t, z, av)) {
        int xs = (int)key_site(zs[0]);
        r.aval += Rat(coeff) * phi.at(zs[0]);
        auto it = fam.rows.find(xs);
        if (it != fam.rows.end()) {
          for (int j = 0; j < fam.ncoef; ++j)
            if (it->second[j] != 0) {
              r.lin[size_t(j)] += Rat(coeff) * it->second[j];
              r.has_lin = true;
            }
        }
      }
      if (r.aval.is_zero() && !r.has_lin) continue;
      if (r.aval.im != 0) all_real = false;
      rows.push_back(std::move(r));
    }
  }

  Rat const_bound(0);
  LpProblem prob;
  if (all_real) {
    int nv = 1 + fam.ncoef;  // t, real coefficients
    prob.c.assign(size_t(nv), Rat(0));
    prob.c[0] = Rat(-1);  // minimize t
    for (auto& r : rows) {
      if (!r.has_lin) {
        // No correction reaches this row: it is a fixed lower bound on t, and
        // min_c max(rows(c), t0) = max(min_c rows(c), t0), so fold it out.
        Rat bound = r.winv * (r.aval.re < 0 ? Rat(-r.aval.re) : r.aval.re);
        if (bound > const_bound) const_bound = bound;
        continue;
      }
      for (int sgn : {1, -1}) {
        std::vector<Rat> row(size_t(nv), Rat(0));
        row[0] = Rat(-1);
        for (int j = 0; j < fam.ncoef; ++j)
          if (r.lin[size_t(j)] != 0) row[size_t(1 + j)] = Rat(sgn) * r.winv * r.lin[size_t(j)];
        prob.A.push_back(std::move(row));
        prob.b.push_back(Rat(-sgn) * r.winv * r.aval.re);
      }
    }
  } else {
    std::vector<std::pair<Rat, Rat>> ph;
    for (int k = 0; k < quarter_points; ++k) {
      Rat s(k, quarter_points);
      Rat s2 = s * s, den = 1 + s2;
      Rat a = (1 - s2) / den, b = 2 * s / den;
      ph.emplace_back(a, b);
      ph.emplace_back(-b, a);
      ph.emplace_back(-a, -b);
      ph.emplace_back(b, -a);
    }
    int nv = 1 + 2 * fam.ncoef;  // t, Re coef, Im coef
    prob.c.assign(size_t(nv), Rat(0));
    prob.c[0] = Rat(-1);  // minimize t
    for (auto& r : rows) {
      if (!r.has_lin) {
        for (auto& [p, q] : ph) {
          Rat bound = r.winv * (p * r.aval.re - q * r.aval.im);
          if (bound > const_bound) const_bound = bound;
        }
        continue;
      }
      for (auto& [p, q] : ph) {
        std::vector<Rat> row(size_t(nv), Rat(0));
        row[0] = Rat(-1);
        for (int j = 0; j < fam.ncoef; ++j) {
          if (r.lin[size_t(j)] == 0) continue;
          row[size_t(1 + j)] = -r.winv * p * r.lin[size_t(j)];
          row[size_t(1 + fam.ncoef + j)] = r.winv * q * r.lin[size_t(j)];
        }
        prob.A.push_back(std::move(row));
        prob.b.push_back(-(r.winv * (p * r.aval.re - q * r.aval.im)));
      }
    }
  }
  Rat tstar = const_bound;
  if (!prob.A.empty()) {
    LpResult res = lp_maximize(prob);
    if (!res.feasible || !res.bounded) throw std::logic_error("local norm lp failed");
    Rat tlp(-res.value);
    if (tlp > tstar) tstar = tlp;
  }
  Interval out;
  out.lo = to_double(tstar);
  out.hi = all_real ? out.lo : out.lo / std::cos(1.0 / double(quarter_points));
  return out;
}

}  // namespace

Interval field_local_norm(const FieldAssign& phi, LayoutPtr l, int species_pos, const Weight& w,
                          const std::vector<int>& x_sites, int quarter_points) {
  if (w.p_phi == 0) {
    Rat best(0);
    for (int x : x_sites)
      for (int c = 0; c <= 1; ++c) {
        Key k = pack(uint16_t(species_pos), uint8_t(c), uint32_t(x));
        Rat wi = weight_inv(w, 0, k);
        Rat v = wi * wi * phi.at(k).abs2();
        if (v > best) best = v;
      }
    double val = std::sqrt(to_double(best));
    return {val, val};
  }
  std::set<int> X(x_sites.begin(), x_sites.end());
  CorrectionFamily fam;
  for (int x = 0; x < l->torus.nsites(); ++x)
    if (!X.count(x)) {
      fam.rows.emplace(x, std::vector<Rat>{});
      ++fam.ncoef;
    }
  int j = 0;
  for (auto& [x, row] : fam.rows) {
    (void)x;
    row.assign(size_t(fam.ncoef), Rat(0));
    row[size_t(j++)] = Rat(1);
  }
  return minimax_modulus(phi, *l, species_pos, w, fam, quarter_points);
}

Interval field_poly_local_norm(const FieldAssign& phi, LayoutPtr l, int species_pos,
                               const Weight& w, const std::vector<int>& box_sites,
                               int poly_degree, int quarter_points) {
  const Torus& t = l->torus;
  int side = t.side();
  if (box_sites.empty()) throw std::runtime_error("poly local norm: empty box");

  // Unwrap the box: per axis, anchor at the far end of the largest empty cyclic
  // gap; demand at least one block of slack so the unwrap is unambiguous.
  std::vector<int> origin(t.d, 0);
  for (int ax = 0; ax < t.d; ++ax) {
    std::set<int> vals;
    for (int s : box_sites) vals.insert(t.coords(s)[ax]);
    std::vector<int> u(vals.begin(), vals.end());
    int bestgap = -1, bestat = 0;
    for (size_t i = 0; i < u.size(); ++i) {
      int next = u[(i + 1) % u.size()] + (i + 1 == u.size() ? side : 0);
      int gap = next - u[i] - 1;
      if (gap > bestgap) {
        bestgap = gap;
        bestat = (int)((i + 1) % u.size());
      }
    }
    if (bestgap < t.R)
      throw std::runtime_error("poly local norm: box wraps around the torus");
    origin[ax] = u[size_t(bestat)];
  }
  auto rel_coords = [&](int s) {
    std::vector<int> c = t.coords(s);
    for (int ax = 0; ax < t.d; ++ax) c[ax] = ((c[ax] - origin[ax]) % side + side) % side;
    return c;
  };

  // Monomial basis of total degree <= poly_degree in the unwrapped coordinates.
  std::vector<std::vector<int>> monos;
  std::vector<int> mono(t.d, 0);
  std::function<void(int, int)> build = [&](int ax, int rem) {
    if (ax == t.d) {
      monos.push_back(mono);
      return;
    }
    for (int e = 0; e <= rem; ++e) {
      mono[size_t(ax)] = e;
      build(ax + 1, rem - e);
    }
    mono[size_t(ax)] = 0;
  };
  if (poly_degree >= 0) build(0, poly_degree);

  std::set<int> box(box_sites.begin(), box_sites.end());
  int nfree = 0;
  for (int x = 0; x < t.nsites(); ++x)
    if (!box.count(x)) ++nfree;
  CorrectionFamily fam;
  fam.ncoef = (int)monos.size() + nfree;
  int jf = 0;
  for (int x = 0; x < t.nsites(); ++x) {
    std::vector<Rat> row(size_t(fam.ncoef), Rat(0));
    if (box.count(x)) {
      std::vector<int> c = rel_coords(x);
      for (size_t mj = 0; mj < monos.size(); ++mj) {
        Rat v(1);
        for (int ax = 0; ax < t.d; ++ax)
          for (int e = 0; e < monos[mj][size_t(ax)]; ++e) v *= Rat(c[size_t(ax)]);
        row[mj] = v;
      }
    } else {
      row[monos.size() + size_t(jf++)] = Rat(1);
    }
    fam.rows.emplace(x, std::move(row));
  }
  return minimax_modulus(phi, *l, species_pos, w, fam, quarter_points);
}

}  // namespace tphi
