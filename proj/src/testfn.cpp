#include "testfn.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "gaussian.hpp"

namespace tphi {

int boson_count(const Layout& l, const IndexSeq& z) {
  int n = 0;
  for (Key k : z)
    if (l.species[key_species(k)].kind == Kind::boson) ++n;
  return n;
}

bool TestFunction::admissible(const IndexSeq& z) const {
  return seq_species_ordered(z) && (int)z.size() <= len_cap &&
         boson_count(*layout, z) <= pn_cap;
}

void TestFunction::set(const IndexSeq& z, RC val) {
  if (!admissible(z)) throw std::runtime_error("test function: inadmissible sequence");
  v[z] = std::move(val);
}

void TestFunction::add(const IndexSeq& z, const RC& val) {
  if (val.is_zero()) return;
  if (!admissible(z)) throw std::runtime_error("test function: inadmissible sequence");
  auto it = v.find(z);
  if (it == v.end()) {
    v.emplace(z, val);
  } else {
    it->second += val;
    if (it->second.is_zero()) v.erase(it);
  }
}

std::vector<std::pair<IndexSeq, long>> nabla_stencil(const Torus& t, const IndexSeq& z,
                                                     const std::vector<MultiIndex>& alpha) {
  if (alpha.size() != z.size())
    throw std::runtime_error("nabla_stencil: one multi-index per component required");
  std::vector<std::pair<IndexSeq, long>> cur{{z, 1}};
  for (size_t k = 0; k < z.size(); ++k) {
    for (size_t j = 0; j < alpha[k].c.size(); ++j) {
      int axis = int(j) / 2, step = (j % 2 == 0) ? 1 : -1;
      for (int r = 0; r < (int)alpha[k].c[j]; ++r) {
        std::vector<std::pair<IndexSeq, long>> next;
        next.reserve(2 * cur.size());
        for (auto& [s, c] : cur) {
          FieldIndex f = unpack(s[k]);
          IndexSeq sh = s;
          sh[k] = pack(f.species, f.conj, uint32_t(t.shift(int(f.site), axis, step)));
          next.emplace_back(std::move(sh), c);
          next.emplace_back(s, -c);
        }
        cur = std::move(next);
      }
    }
  }
  return cur;  // duplicates possible; callers accumulate
}

RC nabla_value(const TestFunction& g, const IndexSeq& z, const std::vector<MultiIndex>& alpha) {
  RC acc;
  for (auto& [s, c] : nabla_stencil(g.layout->torus, z, alpha)) acc += Rat(c) * g.at(s);
  return acc;
}

namespace {

// A difference stencil of per-component order <= reach can only connect z to the
// stored support if every component site stays within L1 distance reach of the
// corresponding support component, with the species/conjugation pattern equal.
std::set<IndexSeq> reachable_sequences(const TestFunction& g, int reach) {
  const Torus& t = g.layout->torus;
  std::set<IndexSeq> out;
  for (auto& [s, val] : g.v) {
    (void)val;
    if (s.empty() || reach == 0) {
      out.insert(s);
      continue;
    }
    std::vector<std::vector<uint32_t>> ball(s.size());
    for (size_t k = 0; k < s.size(); ++k) {
      int base = (int)key_site(s[k]);
      for (int x = 0; x < t.nsites(); ++x)
        if (t.l1_dist(x, base) <= reach) ball[k].push_back((uint32_t)x);
    }
    std::vector<size_t> idx(s.size(), 0);
    for (;;) {
      IndexSeq z = s;
      for (size_t k = 0; k < s.size(); ++k) {
        FieldIndex f = unpack(s[k]);
        z[k] = pack(f.species, f.conj, ball[k][idx[k]]);
      }
      out.insert(std::move(z));
      size_t k = 0;
      while (k < s.size() && ++idx[k] == ball[k].size()) idx[k++] = 0;
      if (k == s.size()) break;
    }
  }
  return out;
}

// Visits every (z, alpha) pair that can contribute to the norm sup and reports
// its squared contribution w^{-2} |nabla^alpha g_z|^2.
void scan_norm(const TestFunction& g, const Weight& w,
               const std::function<bool(const IndexSeq&)>* filter,
               const std::function<void(const IndexSeq&, const Rat&)>& fn) {
  if (w.layout && !w.layout->same_as(*g.layout))
    throw std::runtime_error("phi norm: weight layout mismatch");
  const Torus& t = g.layout->torus;
  std::vector<MultiIndex> alphas = multiindices_up_to(t.d, w.p_phi);
  for (const IndexSeq& z : reachable_sequences(g, w.p_phi)) {
    if (filter && !(*filter)(z)) continue;
    size_t n = z.size();
    if (n == 0) {
      Rat c = g.at(z).abs2();  // empty weight is 1
      if (c != 0) fn(z, c);
      continue;
    }
    std::vector<size_t> ai(n, 0);
    std::vector<MultiIndex> av(n, MultiIndex(t.d));
    for (;;) {
      Rat winv(1);
      bool live = true;
      for (size_t k = 0; k < n; ++k) {
        av[k] = alphas[ai[k]];
        Rat wk = weight_inv(w, av[k].order(), z[k]);
        if (wk == 0) {  // infinite weight: this derivative is unconstrained
          live = false;
          break;
        }
        winv *= wk;
      }
      if (live) {
        RC val = nabla_value(g, z, av);
        if (!val.is_zero()) fn(z, winv * winv * val.abs2());
      }
      size_t k = 0;
      while (k < n && ++ai[k] == alphas.size()) ai[k++] = 0;
      if (k == n) break;
    }
  }
}

}  // namespace

Rat phi_norm_sq(const TestFunction& g, const Weight& w) {
  Rat best(0);
  scan_norm(g, w, nullptr, [&](const IndexSeq&, const Rat& c) {
    if (c > best) best = c;
  });
  return best;
}

Rat phi_norm_sq_filtered(const TestFunction& g, const Weight& w,
                         const std::function<bool(const IndexSeq&)>& zfilter) {
  Rat best(0);
  scan_norm(g, w, &zfilter, [&](const IndexSeq&, const Rat& c) {
    if (c > best) best = c;
  });
  return best;
}

std::map<int, Rat> phi_norm_sq_by_length(const TestFunction& g, const Weight& w) {
  std::map<int, Rat> best;
  scan_norm(g, w, nullptr, [&](const IndexSeq& z, const Rat& c) {
    Rat& b = best[(int)z.size()];
    if (c > b) b = c;
  });
  return best;
}

namespace {

std::vector<std::pair<size_t, size_t>> species_blocks(const IndexSeq& z) {
  std::vector<std::pair<size_t, size_t>> b;
  size_t i = 0;
  while (i < z.size()) {
    size_t j = i;
    while (j < z.size() && key_species(z[j]) == key_species(z[i])) ++j;
    b.emplace_back(i, j - i);
    i = j;
  }
  return b;
}

int perm_parity(const std::vector<int>& p) {
  int inv = 0;
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) ++inv;
  return inv % 2 == 0 ? 1 : -1;
}

}  // namespace

void for_each_block_perm(const Layout& l, const IndexSeq& z,
                         const std::function<void(const IndexSeq&, int)>& fn) {
  auto blocks = species_blocks(z);
  IndexSeq out = z;
  std::function<void(size_t, int)> rec = [&](size_t bi, int sign) {
    if (bi == blocks.size()) {
      fn(out, sign);
      return;
    }
    auto [st, len] = blocks[bi];
    bool fermi = l.species[key_species(z[st])].kind == Kind::fermion;
    std::vector<int> idx(len);
    std::iota(idx.begin(), idx.end(), 0);
    do {
      for (size_t r = 0; r < len; ++r) out[st + r] = z[st + size_t(idx[r])];
      rec(bi + 1, fermi ? sign * perm_parity(idx) : sign);
    } while (std::next_permutation(idx.begin(), idx.end()));
    for (size_t r = 0; r < len; ++r) out[st + r] = z[st + r];
  };
  rec(0, 1);
}

TestFunction symmetrise(const TestFunction& g) {
  TestFunction out{g.layout, g.pn_cap, g.len_cap, {}};
  std::set<IndexSeq> orbit;
  for (auto& [z, val] : g.v) {
    if (val.is_zero()) continue;
    for_each_block_perm(*g.layout, z, [&](const IndexSeq& zz, int) { orbit.insert(zz); });
  }
  for (const IndexSeq& z : orbit) {
    RC sum;
    for_each_block_perm(*g.layout, z,
                        [&](const IndexSeq& zz, int sgn) { sum += Rat(sgn) * g.at(zz); });
    if (!sum.is_zero()) out.v[z] = sum / Rat(seq_factorial(z));
  }
  return out;
}

RC pairing(const Element& f, const TestFunction& g, const FieldAssign& phi) {
  RC acc;
  for (auto& [z, gz] : g.v) {
    if (gz.is_zero()) continue;
    RC fz = f.coefficient(z, phi);
    if (fz.is_zero()) continue;
    acc += (fz * gz) / Rat(seq_factorial(z));
  }
  return acc;
}

namespace {

// Shared core of sigma* and its s-derivatives: appends ordered boson suffixes
// drawn from the labels xi charges, weighted by the per-species block multinomial.
// With s set, sums s^m over all suffix lengths; with mfix set, keeps length mfix
// and multiplies by mfix! (the m-th derivative at s = 0). Entries whose total
// length would exceed pn_cap are dropped.
TestFunction sigma_star_impl(const TestFunction& g, const FieldAssign& xi, const Rat* s,
                             int mfix) {
  std::vector<Key> labels;
  for (auto& [k, val] : xi.v) {
    if (val.is_zero()) continue;
    if (g.layout->species[key_species(k)].kind != Kind::boson)
      throw std::runtime_error("sigma*: shift field must live on boson labels");
    labels.push_back(k);
  }
  TestFunction out{g.layout, g.pn_cap, g.len_cap, {}};
  for (auto& [zp, gz] : g.v) {
    if (gz.is_zero()) continue;
    int room = g.pn_cap - (int)zp.size();
    int mlo = mfix >= 0 ? mfix : 0;
    int mhi = mfix >= 0 ? mfix : std::max(room, 0);
    std::map<uint16_t, std::vector<Key>> base_blocks;
    for (Key k : zp) base_blocks[key_species(k)].push_back(k);
    for (int m = mlo; m <= mhi; ++m) {
      if (m > room) break;
      if (m > 0 && labels.empty()) break;
      std::vector<int> ti(m, 0);
      for (;;) {
        std::map<uint16_t, std::vector<Key>> suff;
        RC xipow(1);
        for (int r = 0; r < m; ++r) {
          Key k = labels[size_t(ti[r])];
          suff[key_species(k)].push_back(k);
          xipow *= xi.at(k);
        }
        // The flat tuple visits each (sequence, split) pair once per interleaving
        // of the per-species tails, so the block coefficient z!/(z'! z''!) must be
        // divided by the interleaving count m!/prod(ns!).
        auto all = base_blocks;
        Rat mult(1), tails(1);
        for (auto& [sp, tail] : suff) {
          auto& blk = all[sp];
          size_t np = blk.size(), ns = tail.size();
          blk.insert(blk.end(), tail.begin(), tail.end());
          mult *= Rat(factorial(unsigned(np + ns))) /
                  (Rat(factorial(unsigned(np))) * Rat(factorial(unsigned(ns))));
          tails *= Rat(factorial(unsigned(ns)));
        }
        IndexSeq z;
        for (auto& [sp, blk] : all) {
          (void)sp;
          z.insert(z.end(), blk.begin(), blk.end());
        }
        Rat scale = s ? rat_pow(*s, m) * mult * tails / Rat(factorial(unsigned(m)))
                      : mult * tails;
        out.add(z, scale * (xipow * gz));
        int r = 0;
        while (r < m && ++ti[r] == (int)labels.size()) ti[r++] = 0;
        if (r == m) break;
      }
    }
  }
  return out;
}

}  // namespace

TestFunction sigma_star(const TestFunction& g, const FieldAssign& xi, const Rat& s) {
  return sigma_star_impl(g, xi, &s, -1);
}

TestFunction sigma_star_deriv(const TestFunction& g, const FieldAssign& xi, int m) {
  if (m < 0) throw std::runtime_error("sigma*: derivative order must be nonnegative");
  return sigma_star_impl(g, xi, nullptr, m);
}

TestFunction theta_star(const TestFunction& gd) {
  LayoutPtr base = base_of_doubled(*gd.layout);
  TestFunction out{base, gd.pn_cap, gd.len_cap, {}};
  for (auto& [vseq, val] : gd.v) {
    if (val.is_zero()) continue;
    IndexSeq z;
    z.reserve(vseq.size());
    for (Key k : vseq) {
      FieldIndex f = unpack(k);  // forget map: both of 2p, 2p+1 return to p
      z.push_back(pack(uint16_t(f.species / 2), f.conj, f.site));
    }
    Rat factor = Rat(seq_factorial(z)) / Rat(seq_factorial(vseq));
    out.add(z, factor * val);
  }
  return out;
}

TestFunction field_test_function(LayoutPtr l, int species_pos, const FieldAssign& phi,
                                 int pn_cap, int len_cap) {
  TestFunction g{l, pn_cap, len_cap, {}};
  int n = l->torus.nsites();
  for (int c = 0; c <= 1; ++c)
    for (int x = 0; x < n; ++x) {
      Key k = pack(uint16_t(species_pos), uint8_t(c), uint32_t(x));
      g.v[{k}] = phi.at(k);  // zeros stored so derivative sups see the whole lattice
    }
  return g;
}

TestFunction covariance_test_function(LayoutPtr l, const CovariancePair& c, int boson_pos,
                                      int fermion_pos, int pn_cap, int len_cap) {
  TestFunction g{l, pn_cap, len_cap, {}};
  auto put = [&](int pos, const RatMat& a, int m) {
    for (int u = 0; u < 2 * m; ++u)
      for (int w = 0; w < 2 * m; ++w) {
        Key ku = pack(uint16_t(pos), uint8_t(u / m), uint32_t(u % m));
        Key kw = pack(uint16_t(pos), uint8_t(w / m), uint32_t(w % m));
        g.v[{ku, kw}] = RC(a[u][w]);  // zeros stored for the same reason as above
      }
  };
  if (boson_pos >= 0 && c.Mb() > 0) put(boson_pos, c.assembled_boson_moment(), c.Mb());
  if (fermion_pos >= 0 && c.Mf() > 0) put(fermion_pos, c.assembled_fermion_moment(), c.Mf());
  return g;
}

}  // namespace tphi
