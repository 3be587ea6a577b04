#include "verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <thread>

namespace tphi {

// ===========================================================================
// Instance generation
// ===========================================================================

LayoutPtr instance_layout(const InstanceSpec& spec) {
  switch (spec.family) {
    case LayoutFamily::boson: return boson_layout(spec.torus);
    case LayoutFamily::fermion: return fermion_layout(spec.torus);
    default: return susy_layout(spec.torus);
  }
}

std::vector<int> instance_boson_positions(const InstanceSpec& spec) {
  return spec.family == LayoutFamily::fermion ? std::vector<int>{} : std::vector<int>{0};
}

std::vector<int> instance_fermion_positions(const InstanceSpec& spec) {
  switch (spec.family) {
    case LayoutFamily::boson: return {};
    case LayoutFamily::fermion: return {0};
    default: return {1};
  }
}

namespace {

RC draw_coeff(const InstanceSpec& spec, Rng& rng, bool real_coeffs) {
  if (real_coeffs || spec.dist == CoeffDist::rational_grid) return RC(rng.rat(2, 2));
  // Complex draws stay inside the unit disk: |re|, |im| <= 1/2.
  return RC(rng.rat(2, 2) / Rat(4), rng.rat(2, 2) / Rat(4));
}

std::vector<Key> species_keys(const Layout& l, const std::vector<int>& positions) {
  std::vector<Key> keys;
  for (int p : positions)
    for (uint8_t conj : {0, 1})
      for (uint32_t x = 0; x < uint32_t(l.torus.nsites()); ++x)
        keys.push_back(pack(uint16_t(p), conj, x));
  return keys;
}

double rc_abs(const RC& c) { return std::sqrt(to_double(c.abs2())); }

Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

// Keeps only the terms of the requested fermion-length parity; drop_constant
// also removes the boson constant so taylor_exponential accepts the result.
Element parity_part(const Element& f, int parity, bool drop_constant) {
  Element out = Element::zero(f.layout);
  for (const auto& [mono, poly] : f.terms) {
    if ((int)mono.size() % 2 != parity) continue;
    Poly p = poly;
    if (drop_constant && mono.empty()) {
      RC c0 = p.constant_term();
      if (!c0.is_zero()) p += Poly::constant(RC() - c0);
    }
    if (!p.is_zero()) out.add(Mono(mono), std::move(p));
  }
  return out;
}

// Max_k |phi_k| / h: the order-0 Phi(h) norm of a real field.
Rat field_sup_norm(const FieldAssign& phi, const Rat& h) {
  Rat best(0);
  for (const auto& [k, c] : phi.v) {
    (void)k;
    if (!c.im.is_zero()) throw std::runtime_error("field_sup_norm: real fields only");
    Rat a = rat_abs(c.re);
    if (a > best) best = a;
  }
  return best / h;
}

}  // namespace

Poly instance_poly(const InstanceSpec& spec, Rng& rng, bool real_coeffs) {
  LayoutPtr l = instance_layout(spec);
  std::vector<Key> vars = species_keys(*l, instance_boson_positions(spec));
  Poly out;
  for (int t = 0; t < spec.nterms; ++t) {
    int deg = vars.empty() ? 0 : (int)rng.below(uint64_t(spec.max_degree + 1));
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
    out.add_term(d, draw_coeff(spec, rng, real_coeffs));
  }
  return out;
}

Element instance_element(const InstanceSpec& spec, Rng& rng, bool real_coeffs) {
  LayoutPtr l = instance_layout(spec);
  std::vector<Key> fvars = species_keys(*l, instance_fermion_positions(spec));
  std::vector<int> bpos = instance_boson_positions(spec);
  Element out = Element::zero(l);
  for (int t = 0; t < spec.nterms; ++t) {
    Mono word;
    int len = fvars.empty() ? 0 : (int)rng.below(uint64_t(spec.max_fermions + 1));
    for (int r = 0; r < len; ++r) word.push_back(fvars[rng.below(fvars.size())]);
    SortResult sr = mono_canonicalize(std::move(word));
    if (sr.zero) continue;
    Poly p = bpos.empty() ? Poly::constant(draw_coeff(spec, rng, real_coeffs))
                          : instance_poly(spec, rng, real_coeffs);
    out.add(sr.mono, p.scaled(RC(Rat(sr.sign))));
  }
  return out;
}

FieldAssign instance_field(const InstanceSpec& spec, Rng& rng, bool real_valued) {
  LayoutPtr l = instance_layout(spec);
  FieldAssign phi;
  for (int s : instance_boson_positions(spec))
    for (uint32_t x = 0; x < uint32_t(l->torus.nsites()); ++x) {
      if (real_valued) {
        RC val(rng.rat(2, 2));
        phi.set(pack(uint16_t(s), 0, x), val);
        phi.set(pack(uint16_t(s), 1, x), val);
      } else {
        phi.set(pack(uint16_t(s), 0, x), rng.rc(2, 2));
        phi.set(pack(uint16_t(s), 1, x), rng.rc(2, 2));
      }
    }
  return phi;
}

RatMat instance_spd(Rng& rng, int n) {
  RatMat r = rat_zeros(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r[i][j] = rng.rat(2, 3);
  RatMat s = rat_identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) s[i][j] += r[k][i] * r[k][j];
  return s;
}

RatMat instance_symmetric_invertible(Rng& rng, int n) {
  for (;;) {
    RatMat a = rat_zeros(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) a[i][j] = a[j][i] = rng.rat(3, 3);
    if (rat_det(a) != 0) return a;
  }
}

Json json_of_spec(const InstanceSpec& spec) {
  const char* fam = spec.family == LayoutFamily::boson    ? "boson"
                    : spec.family == LayoutFamily::fermion ? "fermion"
                                                           : "susy";
  return Json{{"torus", Json{{"d", spec.torus.d}, {"R", spec.torus.R}, {"m", spec.torus.m}}},
              {"family", fam},
              {"max_degree", spec.max_degree},
              {"max_fermions", spec.max_fermions},
              {"nterms", spec.nterms},
              {"dist", spec.dist == CoeffDist::rational_grid ? "rational" : "complex"},
              {"seed", spec.seed}};
}

InstanceSpec spec_of_json(const Json& j) {
  InstanceSpec spec;
  const Json& t = j.at("torus");
  spec.torus = Torus{t.at("d").get<int>(), t.at("R").get<int>(), t.at("m").get<int>()};
  std::string fam = j.at("family").get<std::string>();
  if (fam == "boson")
    spec.family = LayoutFamily::boson;
  else if (fam == "fermion")
    spec.family = LayoutFamily::fermion;
  else if (fam == "susy")
    spec.family = LayoutFamily::susy;
  else
    throw std::runtime_error("family: expected boson|fermion|susy");
  spec.max_degree = j.at("max_degree").get<int>();
  spec.max_fermions = j.at("max_fermions").get<int>();
  spec.nterms = j.at("nterms").get<int>();
  std::string dist = j.at("dist").get<std::string>();
  if (dist == "rational")
    spec.dist = CoeffDist::rational_grid;
  else if (dist == "complex")
    spec.dist = CoeffDist::complex_unit;
  else
    throw std::runtime_error("dist: expected rational|complex");
  spec.seed = j.at("seed").get<uint64_t>();
  return spec;
}

// ===========================================================================
// Oracles
// ===========================================================================

namespace {

// Sign of multiplying two exterior monomials given as generator-position masks:
// (-1)^{inversions}, counting the generators of `a` that must jump over each
// generator of `b` below them.
int exterior_sign(uint32_t a, uint32_t b) {
  int inv = 0;
  for (int j = 0; j < 32; ++j)
    if ((b >> j) & 1) inv += __builtin_popcount(a & ~((2u << j) - 1u));
  return inv % 2 ? -1 : 1;
}

using MaskElem = std::map<uint32_t, Poly>;

MaskElem mask_mul(const MaskElem& x, const MaskElem& y) {
  MaskElem out;
  for (const auto& [ma, pa] : x)
    for (const auto& [mb, pb] : y) {
      if (ma & mb) continue;
      Poly prod = pa * pb;
      if (exterior_sign(ma, mb) < 0) prod = prod.scaled(RC(Rat(-1)));
      auto it = out.find(ma | mb);
      if (it == out.end())
        out.emplace(ma | mb, std::move(prod));
      else
        it->second += prod;
    }
  for (auto it = out.begin(); it != out.end();)
    it = it->second.is_zero() ? out.erase(it) : std::next(it);
  return out;
}

// Translates an element into the positional exterior algebra of `order`.
// Throws when a fermion generator is not listed.
MaskElem mask_of_element(const Element& f, const std::map<Key, int>& pos_of) {
  MaskElem out;
  for (const auto& [mono, poly] : f.terms) {
    uint32_t mask = 0;
    std::vector<int> positions;
    for (Key k : mono) {
      auto it = pos_of.find(k);
      if (it == pos_of.end())
        throw std::runtime_error("oracle: fermion generator outside the integration order");
      positions.push_back(it->second);
      mask |= 1u << it->second;
    }
    if (positions.size() != (size_t)__builtin_popcount(mask))
      throw std::runtime_error("oracle: repeated generator");
    // Parity of the permutation sorting the listed positions ascending.
    int inv = 0;
    for (size_t i = 0; i < positions.size(); ++i)
      for (size_t j = i + 1; j < positions.size(); ++j)
        if (positions[i] > positions[j]) ++inv;
    Poly p = inv % 2 ? poly.scaled(RC(Rat(-1))) : poly;
    auto it = out.find(mask);
    if (it == out.end())
      out.emplace(mask, std::move(p));
    else
      it->second += p;
  }
  return out;
}

std::map<Key, int> order_positions(const IndexSeq& order) {
  if (order.size() > 8) throw std::runtime_error("oracle: more than 8 generators");
  std::map<Key, int> pos_of;
  for (size_t i = 0; i < order.size(); ++i)
    if (!pos_of.emplace(order[i], (int)i).second)
      throw std::runtime_error("oracle: duplicate generator in the order");
  return pos_of;
}

}  // namespace

Element oracle_grassmann_integral(const Element& f, const IndexSeq& order) {
  std::map<Key, int> pos_of = order_positions(order);
  MaskElem m = mask_of_element(f, pos_of);
  uint32_t full = order.empty() ? 0 : (uint32_t(1) << order.size()) - 1;
  Element out = Element::zero(f.layout);
  auto it = m.find(full);
  if (it != m.end()) out.add(Mono{}, Poly(it->second));
  return out;
}

Element oracle_grassmann_expectation(const Element& f, const RatMat& cf, int fermion_pos) {
  IndexSeq order = conj_pair_integration_order(*f.layout, fermion_pos);
  std::map<Key, int> pos_of = order_positions(order);
  int M = (int)cf.size();
  RatMat a = rat_inv(cf);

  // S = sum_{k,l} psi_k A_{kl} psibar_l in the positional algebra.
  MaskElem s;
  for (int k = 0; k < M; ++k)
    for (int l = 0; l < M; ++l) {
      if (a[k][l] == 0) continue;
      int pu = pos_of.at(pack(uint16_t(fermion_pos), 0, uint32_t(k)));
      int pb = pos_of.at(pack(uint16_t(fermion_pos), 1, uint32_t(l)));
      Rat c = pu < pb ? a[k][l] : Rat(-a[k][l]);
      uint32_t mask = (1u << pu) | (1u << pb);
      auto it = s.find(mask);
      if (it == s.end())
        s.emplace(mask, Poly::constant(RC(c)));
      else
        it->second += Poly::constant(RC(c));
    }

  // exp(-S) terminates: S is even and nilpotent beyond M factors.
  MaskElem exps{{0u, Poly::constant(RC(Rat(1)))}};
  MaskElem power{{0u, Poly::constant(RC(Rat(1)))}};
  for (int n = 1; n <= M; ++n) {
    power = mask_mul(power, s);
    MaskElem scaled;
    Rat c = rat_pow(Rat(-1), n) / Rat(factorial(unsigned(n)));
    for (const auto& [mask, poly] : power) scaled.emplace(mask, poly.scaled(RC(c)));
    for (auto& [mask, poly] : scaled) {
      auto it = exps.find(mask);
      if (it == exps.end())
        exps.emplace(mask, std::move(poly));
      else
        it->second += poly;
    }
  }

  uint32_t full = (uint32_t(1) << order.size()) - 1;
  auto zit = exps.find(full);
  if (zit == exps.end()) throw std::runtime_error("oracle: degenerate quadratic form");
  RC z = zit->second.constant_term();
  if (z.is_zero() || !z.im.is_zero()) throw std::runtime_error("oracle: degenerate quadratic form");

  MaskElem prod = mask_mul(exps, mask_of_element(f, pos_of));
  Element out = Element::zero(f.layout);
  auto tit = prod.find(full);
  if (tit != prod.end()) out.add(Mono{}, tit->second.scaled(RC(Rat(1) / z.re)));
  return out;
}

RC oracle_isserlis(const std::vector<Key>& word, const RatMat& cb) {
  if (word.size() > 10) throw std::runtime_error("oracle: more than 10 boson factors");
  std::vector<uint32_t> unbarred, barred;
  for (Key k : word) (key_conj(k) ? barred : unbarred).push_back(key_site(k));
  if (unbarred.size() != barred.size()) return RC();
  size_t n = unbarred.size();
  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  RC total;
  do {
    Rat term(1);
    for (size_t i = 0; i < n; ++i) term *= cb[barred[perm[i]]][unbarred[i]];
    total += RC(term);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

// ===========================================================================
// Shared numerics
// ===========================================================================

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  nodes.resize(n);
  weights.resize(n);
  const double sqrt_pi = 1.7724538509055160273;
  for (int k = 0; k < n; ++k) {
    nodes[k] = es.eigenvalues()(k);
    double v0 = es.eigenvectors()(0, k);
    weights[k] = sqrt_pi * v0 * v0;
  }
}

namespace {

// Exact determinant of a complex rational matrix by expansion over column
// subsets (no division).
RC det_rc(const std::vector<std::vector<RC>>& m) {
  size_t n = m.size();
  std::vector<RC> dp(size_t(1) << n);
  dp[0] = RC(Rat(1));
  for (uint32_t mask = 1; mask < (1u << n); ++mask) {
    size_t row = size_t(__builtin_popcount(mask)) - 1;
    RC acc;
    int seen = 0;
    for (size_t col = 0; col < n; ++col) {
      if (!((mask >> col) & 1)) continue;
      RC term = dp[mask & ~(1u << col)] * m[row][col];
      acc += (seen % 2) ? RC() - term : term;
      ++seen;
    }
    dp[mask] = acc;
  }
  return dp[(size_t(1) << n) - 1];
}

}  // namespace

GramCheck gram_inequality_check(const std::vector<std::vector<RC>>& u,
                                const std::vector<std::vector<RC>>& v) {
  size_t n = u.size();
  if (v.size() != n || n == 0 || n > 6) throw std::runtime_error("gram: need 1..6 vector pairs");
  size_t dim = u[0].size();
  for (const auto& w : u)
    if (w.size() != dim) throw std::runtime_error("gram: ragged vectors");
  for (const auto& w : v)
    if (w.size() != dim) throw std::runtime_error("gram: ragged vectors");
  std::vector<std::vector<RC>> m(n, std::vector<RC>(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      RC acc;
      for (size_t k = 0; k < dim; ++k) acc += u[i][k].conj() * v[j][k];
      m[i][j] = acc;
    }
  GramCheck out;
  out.det_sq = det_rc(m).abs2();
  out.bound_sq = Rat(1);
  for (size_t i = 0; i < n; ++i) {
    Rat uu(0), vv(0);
    for (size_t k = 0; k < dim; ++k) {
      uu += u[i][k].abs2();
      vv += v[i][k].abs2();
    }
    out.bound_sq *= uu * vv;
  }
  out.holds = out.det_sq <= out.bound_sq;
  return out;
}

namespace {

// Derivative classes of an element: fermion word + boson sub-multidegree, with
// the evaluated class value as a polynomial in the field scaling t.
// kappa_c = h^{|class|} / prod_k nu_k!.
struct ClassPoly {
  Rat kappa;
  std::map<int, Rat> tpoly;  // t-degree -> real value
};

std::map<std::pair<Mono, MultiDeg>, ClassPoly> element_classes(const Element& f,
                                                               const FieldAssign& phi,
                                                               const Rat& h) {
  std::map<std::pair<Mono, MultiDeg>, ClassPoly> classes;
  for (const auto& [mono, poly] : f.terms) {
    for (const auto& [mu, coeff] : poly.t) {
      if (!coeff.im.is_zero()) throw std::runtime_error("element_classes: real data only");
      // Enumerate nu <= mu componentwise.
      std::vector<uint32_t> nu(mu.size(), 0);
      for (;;) {
        MultiDeg nukey;
        Rat fall(1);
        RC rest(Rat(1));
        int restdeg = 0;
        for (size_t i = 0; i < mu.size(); ++i) {
          const auto& [k, e] = mu[i];
          if (nu[i]) nukey.emplace_back(k, nu[i]);
          for (uint32_t r = 0; r < nu[i]; ++r) fall *= Rat(long(e - r));
          for (uint32_t r = nu[i]; r < e; ++r) rest = rest * phi.at(k);
          restdeg += int(e - nu[i]);
        }
        if (!rest.im.is_zero()) throw std::runtime_error("element_classes: real data only");
        Rat val = coeff.re * fall * rest.re;
        if (val != 0) {
          auto& cl = classes[{mono, nukey}];
          int total = (int)mono.size();
          Rat nufact(1);
          for (const auto& [k, e] : nukey) {
            (void)k;
            total += (int)e;
            nufact *= Rat(factorial(e));
          }
          cl.kappa = rat_pow(h, total) / nufact;
          cl.tpoly[restdeg] += val;
        }
        // Next sub-multidegree.
        size_t i = 0;
        while (i < mu.size() && ++nu[i] > mu[i].second) nu[i++] = 0;
        if (i == mu.size()) break;
      }
    }
  }
  return classes;
}

Rat binom_rat(int n, int k) {
  if (k < 0 || k > n) return Rat(0);
  return Rat(factorial(unsigned(n))) / (Rat(factorial(unsigned(k))) * Rat(factorial(unsigned(n - k))));
}

}  // namespace

Rat class_sum_seminorm(const Element& f, const FieldAssign& phi, const Rat& h) {
  Rat total(0);
  for (const auto& [key, cl] : element_classes(f, phi, h)) {
    (void)key;
    Rat val(0);
    for (const auto& [d, c] : cl.tpoly) {
      (void)d;
      val += c;  // evaluated at t = 1
    }
    total += cl.kappa * rat_abs(val);
  }
  return total;
}

Rat sup_seminorm_upper(const Element& f, const FieldAssign& phi, const Rat& h) {
  Rat total(0);
  for (const auto& [key, cl] : element_classes(f, phi, h)) {
    (void)key;
    int deg = cl.tpoly.empty() ? 0 : cl.tpoly.rbegin()->first;
    // Bernstein enclosure on [0,1]: sup |p| <= max_k |b_k|,
    // b_k = sum_j a_j C(k,j)/C(deg,j).
    Rat best(0);
    for (int k = 0; k <= deg; ++k) {
      Rat b(0);
      for (const auto& [j, a] : cl.tpoly) b += a * binom_rat(k, j) / binom_rat(deg, j);
      Rat ab = rat_abs(b);
      if (ab > best) best = ab;
    }
    total += cl.kappa * best;
  }
  return total;
}

// ===========================================================================
// Suite machinery
// ===========================================================================

namespace {

struct TrialResult {
  long violations = 0;
  double slack = std::numeric_limits<double>::infinity();

  void margin(double m) {
    if (m < 0) ++violations;
    if (m < slack) slack = m;
  }
  void require(bool ok) { margin(ok ? 0.0 : -1.0); }
};

using TrialFn = TrialResult (*)(const InstanceSpec&, uint64_t);

struct SuiteDef {
  const char* id;
  const char* summary;
  TrialFn fn;
};

InstanceSpec with_seed(InstanceSpec spec, uint64_t seed) {
  spec.seed = seed;
  return spec;
}

// ---------------------------------------------------------------------------
// lattice
// ---------------------------------------------------------------------------

TrialResult trial_lattice_translation(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t = spec.torus;
  int n = t.nsites();
  std::vector<Rat> f(size_t(n));
  for (auto& v : f) v = rng.rat(5, 3);
  int axis = (int)rng.below(uint64_t(t.d));
  int step = (int)rng.below(uint64_t(t.side()));
  auto translate = [&](const std::vector<Rat>& g) {
    std::vector<Rat> out(g.size());
    for (int x = 0; x < n; ++x) {
      int y = x;
      for (int r = 0; r < step; ++r) y = t.shift(y, axis, 1);
      out[size_t(x)] = g[size_t(y)];
    }
    return out;
  };
  for (int dir = 0; dir < 2 * t.d; ++dir)
    res.require(forward_difference(t, translate(f), dir) == translate(forward_difference(t, f, dir)));
  int x = (int)rng.below(uint64_t(n)), y = (int)rng.below(uint64_t(n));
  int xs = x, ys = y;
  for (int r = 0; r < step; ++r) {
    xs = t.shift(xs, axis, 1);
    ys = t.shift(ys, axis, 1);
  }
  res.require(t.l1_dist(x, y) == t.l1_dist(xs, ys));
  res.require(t.shift(t.shift(x, axis, 1), axis, -1) == x);
  return res;
}

TrialResult trial_lattice_paving(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  (void)trial;
  Torus t = spec.torus;
  std::vector<int> owner(size_t(t.nsites()), -1);
  int cube = 1;
  for (int k = 0; k < t.d; ++k) cube *= t.R;
  for (int b = 0; b < t.nblocks(); ++b) {
    std::vector<int> sites = t.block_sites(b);
    res.require((int)sites.size() == cube);
    for (int x : sites) {
      res.require(owner[size_t(x)] == -1);
      owner[size_t(x)] = b;
      res.require(t.block_of(x) == b);
    }
  }
  for (int o : owner) res.require(o >= 0);
  BlockGeometry geo(t);
  res.require(geo.nblocks == t.nblocks());
  for (int b = 0; b < geo.nblocks && b < 8; ++b) {
    uint64_t box = geo.block_box[size_t(b)];
    res.require((box >> b) & 1);  // closure contains the block
  }
  return res;
}

TrialResult trial_lattice_small_sets(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  // Cycle a family of small geometries; the spec torus is included first.
  Torus menu[] = {spec.torus, {1, 2, 2}, {1, 2, 3}, {1, 2, 4}, {2, 2, 2}, {2, 2, 3}};
  Torus t = menu[trial % 6];
  BlockGeometry geo(t);
  int nb = geo.nblocks;
  if (nb > 20) return res;  // enumeration guard; other menu entries cover this trial

  // Independent block adjacency: sup-metric distance one with wraparound.
  auto bcoords = [&](int b) {
    std::vector<int> c(size_t(t.d));
    for (int k = t.d - 1; k >= 0; --k) {
      c[size_t(k)] = b % t.m;
      b /= t.m;
    }
    return c;
  };
  auto adjacent = [&](int a, int b) {
    if (a == b) return false;
    auto ca = bcoords(a), cb = bcoords(b);
    for (int k = 0; k < t.d; ++k) {
      int delta = std::abs(ca[size_t(k)] - cb[size_t(k)]);
      if (std::min(delta, t.m - delta) > 1) return false;
    }
    return true;
  };
  auto connected = [&](uint64_t mask) {
    if (!mask) return false;
    int start = __builtin_ctzll(mask);
    uint64_t seen = 1ULL << start;
    std::vector<int> stack{start};
    while (!stack.empty()) {
      int b = stack.back();
      stack.pop_back();
      for (int o = 0; o < nb; ++o)
        if (((mask >> o) & 1) && !((seen >> o) & 1) && adjacent(b, o)) {
          seen |= 1ULL << o;
          stack.push_back(o);
        }
    }
    return seen == mask;
  };

  std::set<uint64_t> expected;
  int cap = geo.small_set_size_cap();
  for (uint64_t mask = 1; mask < (1ULL << nb); ++mask) {
    if (__builtin_popcountll(mask) > cap) continue;
    if (connected(mask)) expected.insert(mask);
  }
  std::set<uint64_t> got(geo.small_sets.begin(), geo.small_sets.end());
  res.require(got == expected);
  for (uint64_t mask : expected) res.require(geo.is_small_set(mask));
  for (int b = 0; b < nb; ++b) {
    uint64_t box = 0;
    for (uint64_t s : expected)
      if ((s >> b) & 1) box |= s;
    res.require(geo.block_box[size_t(b)] == box);
  }
  return res;
}

// ---------------------------------------------------------------------------
// algebra
// ---------------------------------------------------------------------------

TrialResult trial_algebra_ring(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Element f = instance_element(spec, rng, false);
  Element g = instance_element(spec, rng, false);
  Element h = instance_element(spec, rng, false);
  res.require((f * g) * h == f * (g * h));
  res.require(f * (g + h) == f * g + f * h);
  res.require((f + g) * h == f * h + g * h);
  RC c = rng.rc(2, 2);
  res.require((f * g).scaled(c) == f.scaled(c) * g);
  res.require(f + g == g + f);
  res.require(f - f == Element::zero(f.layout));
  return res;
}

TrialResult trial_algebra_star_product(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);
  Element f = instance_element(spec, rng, false);
  Element g = instance_element(spec, rng, false);
  FieldAssign phi = instance_field(spec, rng, false);
  std::vector<Key> fvars = species_keys(*l, instance_fermion_positions(spec));
  std::vector<Key> bvars = species_keys(*l, instance_boson_positions(spec));

  Element fg = f * g;
  for (int rep = 0; rep < 4; ++rep) {
    // Random species-ordered sequence: distinct fermions, repeatable bosons.
    IndexSeq z;
    if (!fvars.empty()) {
      std::vector<Key> pool = fvars;
      int nf = (int)rng.below(3);
      for (int r = 0; r < nf && !pool.empty(); ++r) {
        size_t i = rng.below(pool.size());
        z.push_back(pool[i]);
        pool.erase(pool.begin() + (long)i);
      }
    }
    if (!bvars.empty()) {
      int nbos = (int)rng.below(3);
      for (int r = 0; r < nbos; ++r) z.push_back(bvars[rng.below(bvars.size())]);
    }
    z = seq_sorted_by_species(std::move(z));
    size_t n = z.size();

    // Coefficient of the product as the signed sum over complementary
    // position selections, fermion entries acquiring the unshuffle sign.
    RC sum;
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
      IndexSeq z1, z2;
      int inv = 0, picked_fermions_right = 0;
      for (size_t i = 0; i < n; ++i) {
        bool fermionic = l->species[key_species(z[i])].kind == Kind::fermion;
        if ((mask >> i) & 1) {
          z1.push_back(z[i]);
          if (fermionic) inv += picked_fermions_right;
        } else {
          z2.push_back(z[i]);
          if (fermionic) ++picked_fermions_right;
        }
      }
      RC term = f.coefficient(z1, phi) * g.coefficient(z2, phi);
      sum += (inv % 2) ? RC() - term : term;
    }
    res.require((fg.coefficient(z, phi) - sum).is_zero());
  }
  return res;
}

TrialResult trial_algebra_coefficient_symmetry(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);
  Element f = instance_element(spec, rng, false);
  FieldAssign phi = instance_field(spec, rng, false);
  std::vector<Key> fvars = species_keys(*l, instance_fermion_positions(spec));
  std::vector<Key> bvars = species_keys(*l, instance_boson_positions(spec));

  if (fvars.size() >= 2) {
    Key a = fvars[rng.below(fvars.size())];
    Key b = fvars[rng.below(fvars.size())];
    while (b == a) b = fvars[rng.below(fvars.size())];
    IndexSeq z{std::min(a, b), std::max(a, b)};
    IndexSeq zswap{std::max(a, b), std::min(a, b)};
    res.require((f.coefficient(z, phi) + f.coefficient(zswap, phi)).is_zero());
    res.require(f.coefficient(IndexSeq{a, a}, phi).is_zero());
  }
  if (!bvars.empty()) {
    Key a = bvars[rng.below(bvars.size())];
    Key b = bvars[rng.below(bvars.size())];
    IndexSeq z = seq_sorted_by_species(IndexSeq{a, b});
    IndexSeq zswap = seq_sorted_by_species(IndexSeq{b, a});
    res.require((f.coefficient(z, phi) - f.coefficient(zswap, phi)).is_zero());
  }
  return res;
}

TrialResult trial_algebra_derivations(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);
  Element f = instance_element(spec, rng, false);
  Element g = instance_element(spec, rng, false);
  std::vector<Key> fvars = species_keys(*l, instance_fermion_positions(spec));
  std::vector<Key> bvars = species_keys(*l, instance_boson_positions(spec));

  if (!bvars.empty()) {
    Key x = bvars[rng.below(bvars.size())];
    Key y = bvars[rng.below(bvars.size())];
    res.require((f * g).boson_derivative(x) ==
                f.boson_derivative(x) * g + f * g.boson_derivative(x));
    res.require(f.boson_derivative(x).boson_derivative(y) ==
                f.boson_derivative(y).boson_derivative(x));
  }
  if (!fvars.empty()) {
    Key u = fvars[rng.below(fvars.size())];
    Key v = fvars[rng.below(fvars.size())];
    Element fe = parity_part(f, 0, false);
    Element fo = parity_part(f, 1, false);
    res.require((fe * g).fermion_derivative(u) ==
                fe.fermion_derivative(u) * g + fe * g.fermion_derivative(u));
    res.require((fo * g).fermion_derivative(u) ==
                fo.fermion_derivative(u) * g - fo * g.fermion_derivative(u));
    res.require(f.fermion_derivative(u).fermion_derivative(u).is_zero());
    Element uv = f.fermion_derivative(v).fermion_derivative(u);
    Element vu = f.fermion_derivative(u).fermion_derivative(v);
    res.require(u == v || uv == vu.scaled(RC(Rat(-1))));
    if (!bvars.empty()) {
      Key x = bvars[rng.below(bvars.size())];
      res.require(f.boson_derivative(x).fermion_derivative(u) ==
                  f.fermion_derivative(u).boson_derivative(x));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// gaussian
// ---------------------------------------------------------------------------

Key assembled_key(int pos, int M, int u) {
  return u < M ? pack(uint16_t(pos), 0, uint32_t(u)) : pack(uint16_t(pos), 1, uint32_t(u - M));
}

TrialResult trial_gaussian_parts(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 1, 2};
  LayoutPtr l = fermion_layout(t);
  InstanceSpec local = with_seed(spec, spec.seed);
  local.torus = t;
  local.family = LayoutFamily::fermion;
  RatMat c = instance_symmetric_invertible(rng, 2);
  RatMat moment = CovariancePair{{}, c}.assembled_fermion_moment();
  Element f = instance_element(local, rng, false);
  for (int x = 0; x < 4; ++x) {
    Element lhs = fermion_expectation(Element::fermion(l, assembled_key(0, 2, x)) * f, c, 0);
    Element rhs = Element::zero(l);
    for (int y = 0; y < 4; ++y)
      rhs += fermion_expectation(f.fermion_derivative(assembled_key(0, 2, y)), c, 0)
                 .scaled(RC(moment[y][x]));
    res.require(lhs == rhs);
  }
  return res;
}

TrialResult trial_gaussian_heat(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 1, 2};
  InstanceSpec local = with_seed(spec, spec.seed);
  local.torus = t;
  local.family = LayoutFamily::susy;
  Element f = instance_element(local, rng, false);
  RatMat cb = instance_spd(rng, 2);
  RatMat cf = instance_symmetric_invertible(rng, 2);

  int deg = f.degree();
  int d = deg / 2 + 1;  // strict polynomial degree bound in t, plus a sentinel slot
  std::vector<Element> samples;
  for (int j = 0; j <= d; ++j)
    samples.push_back(
        expectation_theta(f, CovariancePair{rat_scale(cb, Rat(j)), rat_scale(cf, Rat(j))}));

  // Exact monomial coefficients from the Vandermonde inverse.
  RatMat v = rat_zeros(d + 1);
  for (int j = 0; j <= d; ++j)
    for (int m = 0; m <= d; ++m) v[size_t(j)][size_t(m)] = rat_pow(Rat(j), m);
  RatMat w = rat_inv(v);
  std::vector<Element> coeff;
  for (int m = 0; m <= d; ++m) {
    Element e = Element::zero(f.layout);
    for (int j = 0; j <= d; ++j) e += samples[size_t(j)].scaled(RC(w[size_t(m)][size_t(j)]));
    coeff.push_back(e);
  }

  // Fit sanity at a point outside the sample set.
  Element extra = expectation_theta(
      f, CovariancePair{rat_scale(cb, Rat(d + 1)), rat_scale(cf, Rat(d + 1))});
  Element fitval = Element::zero(f.layout);
  for (int m = 0; m <= d; ++m) fitval += coeff[size_t(m)].scaled(RC(rat_pow(Rat(d + 1), m)));
  res.require(fitval == extra);

  // d/dt E_{tC} theta F = (1/2) Delta E_{tC} theta F, coefficient by coefficient.
  for (int m = 0; m <= d; ++m) {
    Element lhs = m + 1 <= d ? coeff[size_t(m + 1)].scaled(RC(Rat(m + 1)))
                             : Element::zero(f.layout);
    Element rhs = laplacian(coeff[size_t(m)], &cb, 0, &cf, 1).scaled(RC(Rat(1, 2)));
    res.require(lhs == rhs);
  }
  return res;
}

TrialResult trial_gaussian_fermion_routes(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  int M = 1 + int(trial % 3);
  Torus t{1, 1, M};
  LayoutPtr l = fermion_layout(t);
  RatMat c = instance_symmetric_invertible(rng, M);
  std::vector<Key> gens;
  for (uint8_t conj : {0, 1})
    for (uint32_t x = 0; x < uint32_t(M); ++x) gens.push_back(pack(0, conj, x));
  for (uint64_t mask = 0; mask < (1ULL << gens.size()); ++mask) {
    Mono m;
    for (size_t i = 0; i < gens.size(); ++i)
      if ((mask >> i) & 1) m.push_back(gens[i]);
    Element f = Element::zero(l);
    f.add(std::move(m), Poly::constant(RC(Rat(1))));
    res.require(fermion_expectation(f, c, 0, FermionRoute::determinant) ==
                fermion_expectation(f, c, 0, FermionRoute::brute_force));
  }
  return res;
}

TrialResult trial_gaussian_moment_parity(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 1, 2};
  LayoutPtr l = susy_layout(t);
  CovariancePair c{instance_spd(rng, 2), instance_symmetric_invertible(rng, 2)};

  // Odd fermion words vanish in expectation.
  std::vector<Key> fvars = species_keys(*l, {1});
  Mono word;
  int len = 1 + 2 * int(rng.below(2));
  for (int r = 0; r < len; ++r) word.push_back(fvars[rng.below(fvars.size())]);
  SortResult sr = mono_canonicalize(std::move(word));
  if (!sr.zero) {
    Element f = Element::zero(l);
    f.add(sr.mono, Poly::constant(RC(Rat(sr.sign))));
    Element e = expectation_theta(f, c);
    // theta introduces no constant part: the fully integrated component is zero.
    res.require(e.coefficient(IndexSeq{}, FieldAssign{}).is_zero());
  }

  // Boson words with unequal phi / phibar counts have zero moment.
  for (int rep = 0; rep < 2; ++rep) {
    uint32_t k = uint32_t(rng.below(2)), m = uint32_t(rng.below(2));
    Element uu = Element::boson(l, pack(0, 0, k)) * Element::boson(l, pack(0, 0, m));
    res.require(expectation_theta(uu, c) == uu);
    Element dd = Element::boson(l, pack(0, 1, k)) * Element::boson(l, pack(0, 1, m));
    res.require(expectation_theta(dd, c) == dd);
  }
  return res;
}

TrialResult trial_expectation_wick_heat(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 1, 2};
  InstanceSpec local = with_seed(spec, spec.seed);
  local.torus = t;
  local.family = LayoutFamily::susy;
  local.max_degree = std::min(spec.max_degree + 3, 6);
  Element f = instance_element(local, rng, false);
  CovariancePair c{instance_spd(rng, 2), instance_symmetric_invertible(rng, 2)};
  res.require(wick_residual(f, c) == 0);
  return res;
}

TrialResult trial_expectation_convolution(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  int M = 1 + int(trial % 3);
  Torus t{1, 1, M};
  InstanceSpec local = with_seed(spec, spec.seed);
  local.torus = t;
  local.family = LayoutFamily::susy;
  Element f = instance_element(local, rng, false);
  CovariancePair c1{instance_spd(rng, M), instance_symmetric_invertible(rng, M)};
  CovariancePair c2{instance_spd(rng, M), instance_symmetric_invertible(rng, M)};
  res.require(convolution_residual(f, c1, c2) == 0);
  return res;
}

TrialResult trial_expectation_factorisation(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 1, 2};
  LayoutPtr l = susy_layout(t);
  (void)spec;
  RatMat cb = rat_identity(2), cf = rat_identity(2);
  cb[0][0] = rng.rat_positive(3, 2);
  cb[1][1] = rng.rat_positive(3, 2);
  cf[0][0] = rng.rat_nonzero(3, 2);
  cf[1][1] = rng.rat_nonzero(3, 2);
  CovariancePair c{cb, cf};
  // f1 lives on site 0, f2 on site 1: decoupled under a diagonal covariance.
  Element f1 = Element::zero(l), f2 = Element::zero(l);
  f1.add(Mono{}, Poly::var(pack(0, 0, 0)).scaled(rng.rc(2, 2)) + Poly::constant(rng.rc(2, 2)));
  f1.add(Mono{pack(1, 0, 0), pack(1, 1, 0)}, Poly::constant(rng.rc(2, 2)));
  f2.add(Mono{}, Poly::var(pack(0, 1, 1)).scaled(rng.rc(2, 2)));
  f2.add(Mono{pack(1, 0, 1), pack(1, 1, 1)}, Poly::constant(rng.rc(2, 2)));
  res.require(factorisation_residual(f1, f2, c) == 0);
  return res;
}

TrialResult trial_moment_identities(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 1, 2};
  LayoutPtr l = susy_layout(t);
  CovariancePair c{instance_spd(rng, 2), instance_symmetric_invertible(rng, 2)};
  RatMat moment = c.assembled_fermion_moment();
  for (uint32_t k = 0; k < 2; ++k)
    for (uint32_t m = 0; m < 2; ++m) {
      Element bb = Element::boson(l, pack(0, 1, k)) * Element::boson(l, pack(0, 0, m));
      res.require(expectation_theta(bb, c) == bb + Element::constant(l, RC(c.Cb[k][m])));
      Element fb = Element::fermion(l, pack(1, 1, k)) * Element::fermion(l, pack(1, 0, m));
      res.require(expectation_theta(fb, c) == fb + Element::constant(l, RC(c.Cf[k][m])));
    }
  for (int u = 0; u < 4; ++u)
    for (int v = 0; v < 4; ++v) {
      Key ku = assembled_key(1, 2, u), kv = assembled_key(1, 2, v);
      if (ku == kv) continue;
      Element f = Element::fermion(l, ku) * Element::fermion(l, kv);
      res.require(expectation_theta(f, c) == f + Element::constant(l, RC(-moment[u][v])));
    }
  return res;
}

TrialResult trial_oracle_agreement(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);

  // Fermionic: every monomial over M conjugate pairs, both production routes
  // against the positional-algebra oracle.
  int M = 1 + int(trial % 2);
  Torus t{1, 1, M};
  LayoutPtr l = fermion_layout(t);
  RatMat c = instance_symmetric_invertible(rng, M);
  IndexSeq order = conj_pair_integration_order(*l, 0);
  std::vector<Key> gens(order.begin(), order.end());
  for (uint64_t mask = 0; mask < (1ULL << gens.size()); ++mask) {
    Mono m;
    for (size_t i = 0; i < gens.size(); ++i)
      if ((mask >> i) & 1) m.push_back(gens[i]);
    SortResult sr = mono_canonicalize(std::move(m));
    Element f = Element::zero(l);
    f.add(sr.mono, Poly::constant(RC(Rat(sr.sign))));
    res.require(oracle_grassmann_integral(f, order) == grassmann_integral(f, order));
    res.require(oracle_grassmann_expectation(f, c, 0) ==
                fermion_expectation(f, c, 0, FermionRoute::determinant));
    res.require(oracle_grassmann_expectation(f, c, 0) ==
                fermion_expectation(f, c, 0, FermionRoute::brute_force));
  }
  // Random combination with boson-free polynomial coefficients.
  InstanceSpec local = with_seed(spec, spec.seed);
  local.torus = t;
  local.family = LayoutFamily::fermion;
  Element f = instance_element(local, rng, false);
  res.require(oracle_grassmann_integral(f, order) == grassmann_integral(f, order));
  res.require(oracle_grassmann_expectation(f, c, 0) == fermion_expectation(f, c, 0));

  // Bosonic: random balanced and unbalanced words against the matching sum.
  Torus tb{1, 1, 3};
  LayoutPtr lb = boson_layout(tb);
  RatMat cb = instance_spd(rng, 3);
  for (int rep = 0; rep < 3; ++rep) {
    int npairs = (int)rng.below(4);
    std::vector<Key> word;
    for (int r = 0; r < npairs; ++r) word.push_back(pack(0, 0, uint32_t(rng.below(3))));
    for (int r = 0; r < npairs; ++r) word.push_back(pack(0, 1, uint32_t(rng.below(3))));
    if (rng.coin()) word.push_back(pack(0, rng.coin() ? 1 : 0, uint32_t(rng.below(3))));
    Element f2 = Element::constant(lb, RC(Rat(1)));
    for (Key k : word) f2 = f2 * Element::boson(lb, k);
    Element got = boson_expectation(f2, cb, 0);
    RC want = oracle_isserlis(word, cb);
    res.require(got == Element::constant(lb, want));
  }
  return res;
}

// ---------------------------------------------------------------------------
// norms
// ---------------------------------------------------------------------------

Weight spec_weight(const InstanceSpec& spec, LayoutPtr l, Rng& rng) {
  (void)spec;
  return make_weight(l, rng.rat_positive(2, 2), 0, 1);
}

TrialResult trial_norm_product(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);
  Weight w = spec_weight(spec, l, rng);
  Element f = instance_element(spec, rng, true);
  Element g = instance_element(spec, rng, true);
  FieldAssign phi = instance_field(spec, rng, true);
  NormMode mode = trial % 5 == 4 ? NormMode::lp_real : NormMode::exact_p0;
  NormParams par{w, mode, 4, -1, 8};
  NormCertificate nf = tphi_seminorm(f, phi, par);
  NormCertificate ng = tphi_seminorm(g, phi, par);
  NormCertificate nfg = tphi_seminorm(f * g, phi, par);
  if (nf.exact && ng.exact && nfg.exact) {
    res.require(nfg.exact_value <= nf.exact_value * ng.exact_value);
    res.margin(to_double(nf.exact_value * ng.exact_value - nfg.exact_value));
  } else {
    double rhs = nf.value * ng.value;
    res.margin(rhs * (1 + 1e-12) - nfg.value);
  }
  return res;
}

TrialResult trial_norm_exponential(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);
  if (instance_fermion_positions(spec).empty()) return res;
  Weight w = spec_weight(spec, l, rng);
  Element f = parity_part(instance_element(spec, rng, true), 0, true);
  if (f.is_zero()) return res;
  NormParams par{w, NormMode::exact_p0, 4, -1, 8};

  if (trial % 2 == 0) {
    // At phi = 0 a boson-degree-4 expansion carries every class the capped
    // norm can see, so the computed norm is the capped norm of the true exp.
    Element e = taylor_exponential(f.scaled(RC(Rat(-1))), 4);
    NormCertificate ne = tphi_seminorm(e, FieldAssign{}, par);
    NormCertificate nf = tphi_seminorm(f, FieldAssign{}, par);
    double rhs = std::exp(to_double(nf.exact_value));
    res.margin(rhs * (1 + 1e-12) - to_double(ne.exact_value));
  } else {
    // Purely fermionic part: the exponential terminates exactly, any field.
    Element nil = Element::zero(l);
    for (const auto& [mono, poly] : f.terms)
      if (mono.size() >= 2) nil.add(Mono(mono), Poly(poly));
    if (nil.is_zero()) return res;
    Element e = taylor_exponential(nil.scaled(RC(Rat(-1))), 64);
    res.require(e.truncation_degree == -1);
    FieldAssign phi = instance_field(spec, rng, true);
    NormCertificate ne = tphi_seminorm(e, phi, par);
    NormCertificate nf = tphi_seminorm(nil, phi, par);
    double rhs = std::exp(to_double(nf.exact_value));  // F_empty vanishes here
    res.margin(rhs * (1 + 1e-12) - to_double(ne.exact_value));
  }
  return res;
}

TrialResult trial_norm_polynomial(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);
  Rat h = rng.rat_positive(2, 2);
  Weight w = make_weight(l, h, 0, 1);
  InstanceSpec local = spec;
  local.max_degree = std::min(spec.max_degree, 2);
  local.max_fermions = std::min(spec.max_fermions, 2);
  Element f = instance_element(local, rng, true);
  if (f.is_zero()) return res;
  FieldAssign phi = instance_field(spec, rng, true);
  NormParams par{w, NormMode::exact_p0, 4, -1, 8};
  Rat lhs = tphi_seminorm(f, phi, par).exact_value;
  Rat t0 = tphi_seminorm(f, FieldAssign{}, par).exact_value;
  int a = f.degree();
  Rat grow = rat_pow(Rat(1) + field_sup_norm(phi, h), a);
  res.require(lhs <= t0 * grow);
  res.margin(to_double(t0 * grow - lhs));

  if (a >= 1) {
    // Exponential corollary with kappa^2 = 1/2.
    double nphi = to_double(field_sup_norm(phi, h));
    double rhs = to_double(t0) * std::pow(double(a), a / 2.0) * std::pow(std::sqrt(0.5), -a) *
                 std::exp(0.5 * nphi * nphi);
    res.margin(rhs * (1 + 1e-12) - to_double(lhs));
  }
  return res;
}

TrialResult trial_norm_rescale(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);
  Rat h = rng.rat_positive(2, 2);
  Rat hp = h / Rat(rng.range(1, 3));
  Weight w = make_weight(l, h, 0, 1);
  Weight wp = make_weight(l, hp, 0, 1);
  InstanceSpec local = spec;
  local.max_degree = std::min(spec.max_degree, 2);
  local.max_fermions = std::min(spec.max_fermions, 2);
  Element f = instance_element(local, rng, true);
  if (f.is_zero()) return res;
  FieldAssign phi = instance_field(spec, rng, true);
  int a = f.degree();

  NormParams parp{wp, NormMode::exact_p0, 4, -1, 8};
  Rat lhs = tphi_seminorm(f, phi, parp).exact_value;
  Rat t0p = tphi_seminorm(f, FieldAssign{}, parp).exact_value;
  Rat rho = rho_ratio(wp, w, a + 1, a + 1);
  Rat sup_ub = sup_seminorm_upper(f, phi, h);
  Rat grow = rat_pow(Rat(1) + field_sup_norm(phi, hp), a + 1);
  Rat rhs = grow * (t0p + rho * sup_ub);
  res.require(lhs <= rhs);
  res.margin(to_double(rhs - lhs));
  return res;
}

TrialResult trial_theta_contraction(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  InstanceSpec local = spec;
  local.family = LayoutFamily::susy;
  LayoutPtr l = instance_layout(local);
  Weight w = make_weight(l, rng.rat_positive(2, 2), 0, 1);
  Weight wp = make_weight(l, rng.rat_positive(2, 2), 0, 1);
  Element f = instance_element(local, rng, true);
  FieldAssign phi = instance_field(local, rng, true);
  FieldAssign xi = instance_field(local, rng, true);

  NormParams join{weight_union(w, wp), NormMode::exact_p0, 4, -1, 8};
  NormParams sum{weight_sum(w, wp), NormMode::exact_p0, 4, -1, 8};
  Rat lhs = tphi_seminorm(theta(f), assign_union(phi, xi), join).exact_value;
  Rat rhs = tphi_seminorm(f, assign_sum(phi, xi), sum).exact_value;
  res.require(lhs <= rhs);
  res.margin(to_double(rhs - lhs));
  return res;
}

TrialResult trial_theta_adjoint(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  InstanceSpec local = spec;
  local.family = LayoutFamily::susy;
  LayoutPtr base = instance_layout(local);
  LayoutPtr dl = doubled_layout(base);
  Element f = instance_element(local, rng, false);
  FieldAssign phi = instance_field(local, rng, false);
  FieldAssign xi = instance_field(local, rng, false);
  TestFunction g{dl, 4, 8, {}};
  std::vector<Key> keys = species_keys(*dl, {0, 1, 2, 3});
  for (int rep = 0; rep < 8; ++rep) {
    IndexSeq z;
    int len = (int)rng.below(4);
    for (int r = 0; r < len; ++r) z.push_back(keys[rng.below(keys.size())]);
    g.add(seq_sorted_by_species(std::move(z)), rng.rc(2, 2));
  }
  RC lhs = pairing(theta(f), g, assign_union(phi, xi));
  RC rhs = pairing(f, theta_star(g), assign_sum(phi, xi));
  res.require((lhs - rhs).is_zero());

  Weight w = make_weight(base, rng.rat_positive(2, 2), 0, 1);
  Weight wp = make_weight(base, rng.rat_positive(2, 2), 0, 1);
  res.require(phi_norm_sq(theta_star(g), weight_sum(w, wp)) <=
              phi_norm_sq(g, weight_union(w, wp)));
  return res;
}

TrialResult trial_sigma_shift(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  InstanceSpec local = spec;
  local.family = LayoutFamily::susy;
  local.max_degree = std::min(spec.max_degree, 2);
  local.max_fermions = std::min(spec.max_fermions, 2);
  LayoutPtr l = instance_layout(local);
  Element f = instance_element(local, rng, false);
  FieldAssign phi = instance_field(local, rng, false);
  FieldAssign xi = instance_field(local, rng, false);

  TestFunction g{l, 4, 6, {}};
  std::vector<Key> keys = species_keys(*l, {0, 1});
  for (int rep = 0; rep < 6; ++rep) {
    IndexSeq z;
    int len = (int)rng.below(4);
    for (int r = 0; r < len; ++r) z.push_back(keys[rng.below(keys.size())]);
    g.add(seq_sorted_by_species(std::move(z)), rng.rc(2, 2));
  }

  // Shifted pairing identity.
  Rat s = rng.rat(2, 3);
  RC lhs = pairing(f, g, assign_sum(phi, assign_scale(xi, s)));
  RC rhs = pairing(f, sigma_star(g, xi, s), phi);
  res.require((lhs - rhs).is_zero());

  // Series expansion of the shift in powers of s.
  TestFunction acc{l, g.pn_cap, g.len_cap, {}};
  for (int m = 0; m <= g.pn_cap; ++m) {
    TestFunction dm = sigma_star_deriv(g, xi, m);
    Rat c = rat_pow(s, m) / Rat(factorial(unsigned(m)));
    for (const auto& [z, val] : dm.v) acc.add(z, c * val);
  }
  TestFunction direct = sigma_star(g, xi, s);
  bool equal = true;
  for (const auto& [z, val] : acc.v)
    if (!(val - direct.at(z)).is_zero()) equal = false;
  for (const auto& [z, val] : direct.v)
    if (!(val - acc.at(z)).is_zero()) equal = false;
  res.require(equal);

  // m-th t-derivative of t -> <F, g>_{t phi} equals the pairing against the
  // m-fold shift operator in direction phi, as polynomials in t.
  int d = f.degree() + 1;
  RatMat v = rat_zeros(d + 1);
  for (int j = 0; j <= d; ++j)
    for (int m = 0; m <= d; ++m) v[size_t(j)][size_t(m)] = rat_pow(Rat(j), m);
  RatMat w = rat_inv(v);
  std::vector<RC> samples;
  for (int j = 0; j <= d; ++j) samples.push_back(pairing(f, g, assign_scale(phi, Rat(j))));
  std::vector<RC> a(size_t(d) + 1);
  for (int m = 0; m <= d; ++m)
    for (int j = 0; j <= d; ++j) a[size_t(m)] += RC(w[size_t(m)][size_t(j)]) * samples[size_t(j)];
  for (int m = 1; m <= 2; ++m) {
    // Formal m-th derivative coefficients.
    std::vector<RC> deriv(size_t(d) + 1);
    for (int k = m; k <= d; ++k) {
      Rat fall(1);
      for (int r = 0; r < m; ++r) fall *= Rat(k - r);
      deriv[size_t(k - m)] = RC(fall) * a[size_t(k)];
    }
    TestFunction gm = sigma_star_deriv(g, phi, m);
    for (int j = 0; j <= d; ++j) {
      RC val;
      Rat tj(j);
      for (int k = d; k >= 0; --k) val = val * RC(tj) + deriv[size_t(k)];
      RC want = pairing(f, gm, assign_scale(phi, tj));
      res.require((val - want).is_zero());
    }
  }
  return res;
}

TrialResult trial_laplacian_bound(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 1, 2};
  InstanceSpec local = with_seed(spec, spec.seed);
  local.torus = t;
  local.family = LayoutFamily::susy;
  LayoutPtr l = instance_layout(local);
  Element f = instance_element(local, rng, true);
  if (f.is_zero()) return res;
  FieldAssign phi = instance_field(local, rng, true);
  Rat h = rng.rat_positive(2, 2);
  Weight w = make_weight(l, h, 0, 1);
  // Supersymmetric pair: one matrix serves as boson and fermion covariance.
  RatMat c = instance_spd(rng, 2);

  Element lap = laplacian(f, &c, 0, &c, 1);
  NormParams par{w, NormMode::exact_p0, 4, -1, 8};
  Rat nl = tphi_seminorm(lap, phi, par).exact_value;
  Rat nf = tphi_seminorm(f, phi, par).exact_value;
  Rat csq = phi_norm_sq(covariance_test_function(l, c, 0, 1), w);
  int a = f.degree();
  Rat chooses = binom_rat(a, 2);
  // (1/2) ||Delta F|| <= C(A,2) ||covariance||_Phi ||F||, compared squared.
  Rat lhs_sq = nl * nl / Rat(4);
  Rat rhs_sq = chooses * chooses * csq * nf * nf;
  res.require(lhs_sq <= rhs_sq);
  res.margin(to_double(rhs_sq - lhs_sq));
  return res;
}

TrialResult trial_integration_bound(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 1, 1};
  InstanceSpec local = with_seed(spec, spec.seed);
  local.torus = t;
  local.family = LayoutFamily::susy;
  LayoutPtr l = instance_layout(local);
  Element f = instance_element(local, rng, true);
  FieldAssign phi = instance_field(local, rng, true);
  Rat h = rng.rat_positive(2, 2);
  Rat hp = rng.rat_positive(2, 2);
  Weight w = make_weight(l, h, 0, 1);
  Weight wp = make_weight(l, hp, 0, 1);

  Rat cb = rng.rat_positive(2, 2);
  Rat cf = hp * hp * rng.rat_nonzero(1, 2);  // ||C_f||_{Phi(w')} = |cf| / hp^2 <= 1
  CovariancePair c{RatMat{{cb}}, RatMat{{cf}}};

  Element ef = expectation_theta(f, c);
  NormParams par{w, NormMode::exact_p0, 4, -1, 8};
  double lhs = tphi_seminorm(ef, phi, par).value;

  static thread_local std::vector<double> nodes, weights;
  if (nodes.size() != 51) gauss_hermite(51, nodes, weights);
  double scale = std::sqrt(to_double(cb));
  NormParams spar{weight_sum(w, wp), NormMode::exact_p0, 4, -1, 8};
  double rhs = 0.0, second = 0.0;
  const double inv_pi = 0.31830988618379067154;
  for (int ia = 0; ia < 51; ++ia)
    for (int ib = 0; ib < 51; ++ib) {
      double xr = scale * nodes[size_t(ia)], xi = scale * nodes[size_t(ib)];
      // Rationalized quadrature node (dyadic, 2^-40 grid).
      Rat qr = Rat((long long)std::llround(xr * 1099511627776.0), 1099511627776LL);
      Rat qi = Rat((long long)std::llround(xi * 1099511627776.0), 1099511627776LL);
      FieldAssign xif;
      xif.set(pack(0, 0, 0), RC(qr, qi));
      xif.set(pack(0, 1, 0), RC(qr, Rat(-qi)));
      double val = tphi_seminorm(f, assign_sum(phi, xif), spar).value;
      double cell = weights[size_t(ia)] * weights[size_t(ib)] * inv_pi;
      rhs += cell * val;
      second += cell * (xr * xr + xi * xi);
    }
  // Quadrature self-check: the rule integrates |xi|^2 to the covariance.
  res.require(std::abs(second - to_double(cb)) <= 1e-9 * std::max(1.0, to_double(cb)));
  res.margin(rhs * (1 + 1e-6) + 1e-6 - lhs);
  return res;
}

TrialResult trial_gram_inequality(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  int n = 2 + int(trial % 5);
  size_t dim = size_t(n) + 1;
  std::vector<std::vector<RC>> u(size_t(n), std::vector<RC>(dim));
  std::vector<std::vector<RC>> v(size_t(n), std::vector<RC>(dim));
  for (auto& row : u)
    for (auto& val : row) val = rng.rc(2, 2);
  for (auto& row : v)
    for (auto& val : row) val = rng.rc(2, 2);
  GramCheck g = gram_inequality_check(u, v);
  res.require(g.holds);
  res.margin(to_double(g.bound_sq - g.det_sq));
  (void)spec;
  return res;
}

TrialResult trial_dual_norm_consistency(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);
  Rat h = rng.rat_positive(2, 2);
  Weight w = make_weight(l, h, 0, 1);
  Element f = instance_element(spec, rng, true);
  if (f.is_zero()) return res;
  FieldAssign phi = instance_field(spec, rng, true);
  NormParams p0{w, NormMode::exact_p0, 4, -1, 8};
  NormParams lp{w, NormMode::lp_real, 4, -1, 8};
  NormCertificate c0 = tphi_seminorm(f, phi, p0);
  NormCertificate cl = tphi_seminorm(f, phi, lp);
  res.require(c0.exact && cl.exact);
  res.require(c0.exact_value == cl.exact_value);
  // Third, independent evaluation of the same closed form.
  res.require(class_sum_seminorm(f, phi, h) == c0.exact_value);
  // The certificate witness replays.
  ReplayReport rep = certificate_replay(f, phi, lp, cl);
  res.require(rep.exact_match);
  res.require(rep.ball_sq <= Rat(1));
  return res;
}

TrialResult trial_pairing_floor(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);
  Weight w = make_weight(l, rng.rat_positive(2, 2), 0, 1);
  Element f = instance_element(spec, rng, true);
  FieldAssign phi = instance_field(spec, rng, true);
  NormParams par{w, NormMode::exact_p0, 4, -1, 8};
  NormCertificate c = tphi_seminorm(f, phi, par);
  RC f0 = f.coefficient(IndexSeq{}, phi);
  res.require(c.exact);
  res.require(c.exact_value >= rat_abs(f0.re));
  res.margin(to_double(c.exact_value - rat_abs(f0.re)));
  return res;
}

TrialResult trial_tau_norm_identity(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  InstanceSpec local = spec;
  local.family = LayoutFamily::susy;
  LayoutPtr l = instance_layout(local);
  uint32_t x = uint32_t(rng.below(uint64_t(l->torus.nsites())));
  Element tau = Element::boson(l, pack(0, 0, x)) * Element::boson(l, pack(0, 1, x)) +
                Element::fermion(l, pack(1, 0, x)) * Element::fermion(l, pack(1, 1, x));
  Rat h = rng.rat_positive(3, 3);
  Weight w = make_weight(l, h, 0, 1);
  FieldAssign phi = instance_field(local, rng, true);
  Rat want = rat_pow(rat_abs(phi.at(pack(0, 0, x)).re) + h, 2) + h * h;
  NormParams p0{w, NormMode::exact_p0, 4, -1, 8};
  NormParams lp{w, NormMode::lp_real, 4, -1, 8};
  res.require(tphi_seminorm(tau, phi, p0).exact_value == want);
  res.require(tphi_seminorm(tau, phi, lp).exact_value == want);
  NormParams gr{w, NormMode::grid_complex, 4, -1, 8};
  double gv = tphi_seminorm(tau, phi, gr).value;
  res.margin(1e-12 * std::max(1.0, to_double(want)) -
             std::abs(gv - to_double(want)) + 1e-15);
  return res;
}

double exp_quadratic_q1(double q2) {
  // sup_t [-2 t^4 + 1.5 ((t+1)^2 + 1)^2 + q2 t^2] over t >= 0: the quartic
  // coefficient is -1/2, so the sup lies left of any T with g'(T) < 0; a dense
  // grid plus a derivative-based pad gives a certified upper bound.
  double best = -1e300;
  const double step = 1e-5, tmax = 8.0;
  for (double t = 0.0; t <= tmax; t += step) {
    double p = (t + 1) * (t + 1) + 1;
    double g = -2 * t * t * t * t + 1.5 * p * p + q2 * t * t;
    if (g > best) best = g;
  }
  // |g'| <= 8 t^3 + 6 p (t+1) + 2 q2 t <= 8*512 + 6*82*9 + 2 q2 * 8 on [0,8].
  double lip = 8 * 512 + 6 * 82 * 9 + 2 * q2 * 8;
  return best + lip * step / 2;
}

TrialResult trial_exp_quadratic_bound(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  (void)spec;
  // Grid point and coefficient choice are determined by the trial index:
  // t = (trial mod 100)/25 in [0, 4), a = 1 for even blocks, 1 + 2i/5 for odd.
  Rat tgrid(long(trial % 100), 25);
  bool complex_a = (trial / 100) % 2 == 1;
  RC a = complex_a ? RC(Rat(1), Rat(2, 5)) : RC(Rat(1));
  const Rat h(1);
  const double q2 = 4.0;
  static const double q1 = exp_quadratic_q1(q2);

  Torus t{1, 1, 1};
  LayoutPtr l = susy_layout(t);
  Rat phi0 = tgrid * h;
  // Shifted representation: u = phi - phi0. The exponent splits into the
  // scalar S0 = -a phi0^4 and G(u) with G(0) = 0; a boson-degree-4 expansion
  // of e^G carries every class the capped T_0 norm pairs against.
  Element b = (Element::boson(l, pack(0, 0, 0)) + Element::constant(l, RC(phi0))) *
              (Element::boson(l, pack(0, 1, 0)) + Element::constant(l, RC(phi0)));
  Element g = (b * b - Element::constant(l, RC(rat_pow(phi0, 4)))).scaled(RC() - a);
  Element core = taylor_exponential(g, 4);
  Element fermion_part =
      (Element::fermion(l, pack(1, 0, 0)) * Element::fermion(l, pack(1, 1, 0))).scaled(RC() - a) *
      b.scaled(RC(Rat(2)));
  Element shifted = core * (Element::constant(l, RC(Rat(1))) + fermion_part);

  Weight w = make_weight(l, h, 0, 1);
  NormParams par{w, complex_a ? NormMode::grid_complex : NormMode::exact_p0, 4, -1, 16};
  // In grid mode the reported value is a certified lower bound within
  // rigor_factor; inflate to an upper bound before testing the inequality.
  NormCertificate cert = tphi_seminorm(shifted, FieldAssign{}, par);
  double norm_upper = cert.exact ? cert.value : cert.value / cert.rigor_factor;

  double alpha = to_double(a.re);
  double tt = to_double(tgrid);
  double log_lhs = -alpha * std::pow(to_double(phi0), 4) + std::log(norm_upper);
  double log_rhs = alpha * to_double(rat_pow(h, 4)) * (q1 - q2 * tt * tt);
  res.margin(log_rhs - log_lhs + 1e-9);
  return res;
}

// ---------------------------------------------------------------------------
// regulators
// ---------------------------------------------------------------------------

RegulatorParams regulator_params(LayoutPtr l, Rng& rng) {
  RegulatorParams par;
  par.layout = l;
  par.ell = Rat(1, 1 + long(rng.below(2)));
  par.hh = par.ell * Rat(1 + long(rng.below(2)) + 1);
  par.p_phi = 0;
  par.Rscale = 1;
  par.poly_dim_cap = 1;
  return par;
}

std::vector<int> block_union_sites(const Torus& t, const std::vector<int>& blocks) {
  std::vector<int> out;
  for (int b : blocks)
    for (int x : t.block_sites(b)) out.push_back(x);
  std::sort(out.begin(), out.end());
  return out;
}

TrialResult trial_regulator_monotone(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 2, 4};
  LayoutPtr l = boson_layout(t);
  BlockGeometry geo(t);
  RegulatorParams par = regulator_params(l, rng);
  InstanceSpec local = with_seed(spec, spec.seed);
  local.torus = t;
  local.family = LayoutFamily::boson;
  FieldAssign phi = instance_field(local, rng, true);
  std::vector<int> small = block_union_sites(t, {1});
  std::vector<int> big = block_union_sites(t, {1, 2});
  RegulatorValue fs = fluctuation_regulator(geo, par, small, phi);
  RegulatorValue fb = fluctuation_regulator(geo, par, big, phi);
  res.require(fs.exp_lo <= fb.exp_lo);
  res.require(fs.lo <= fb.lo * (1 + 1e-12));
  RegulatorValue ls = large_field_regulator(geo, par, small, phi);
  RegulatorValue lb = large_field_regulator(geo, par, big, phi);
  res.require(ls.exp_lo <= lb.exp_lo);
  res.require(Rat(1) <= Rat(1) + fs.exp_lo);  // exponents are nonnegative
  return res;
}

TrialResult trial_regulator_multiplicative(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 2, 4};
  LayoutPtr l = boson_layout(t);
  BlockGeometry geo(t);
  RegulatorParams par = regulator_params(l, rng);
  InstanceSpec local = with_seed(spec, spec.seed);
  local.torus = t;
  local.family = LayoutFamily::boson;
  FieldAssign phi = instance_field(local, rng, true);
  std::vector<int> x = block_union_sites(t, {0});
  std::vector<int> y = block_union_sites(t, {2});
  std::vector<int> xy = block_union_sites(t, {0, 2});
  for (int kind = 0; kind < 2; ++kind) {
    auto reg = [&](const std::vector<int>& sites) {
      return kind == 0 ? fluctuation_regulator(geo, par, sites, phi)
                       : large_field_regulator(geo, par, sites, phi);
    };
    RegulatorValue gx = reg(x), gy = reg(y), gxy = reg(xy);
    res.require(gxy.exp_lo == gx.exp_lo + gy.exp_lo);
    res.require(gxy.exp_hi == gx.exp_hi + gy.exp_hi);
  }
  return res;
}

TrialResult trial_regulator_growth_chain(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 2, 4};
  LayoutPtr l = boson_layout(t);
  BlockGeometry geo(t);
  RegulatorParams par = regulator_params(l, rng);
  par.ell = Rat(1, 2);
  par.hh = Rat(3, 2);
  par.quarter_points = 3;
  std::vector<int> x = block_union_sites(t, {1});
  // A localized quadratic with a constant: lives on the closure of X.
  Element f = Element::boson(l, pack(0, 0, 2)) * Element::boson(l, pack(0, 1, 2)) +
              Element::constant(l, RC(rng.rat_positive(2, 2)));
  std::vector<FieldAssign> probes = standard_probes(par, spec.seed + trial, 1);
  probes.resize(std::min(probes.size(), size_t(8)));
  KkkReport rep = kkk_check(f, 2, x, par, geo, probes);
  res.require(rep.holds);
  res.margin(rep.worst_margin);
  if (rep.single_block) res.require(rep.c_a_realized <= rep.c_a_single_block * (1 + 1e-12));
  res.require(rep.rho == rho_ratio(hh_weight(par), ell_weight(par), 3, 3));
  return res;
}

TrialResult trial_regulator_mc_determinism(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  Torus t{1, 2, 2};
  LayoutPtr l = boson_layout(t);
  RegulatorParams par;
  par.layout = l;
  par.ell = Rat(1);
  par.t = Rat(1);
  par.alpha_g = 1.5;
  RatMat cb = rat_scale(decaying_covariance(t, Rat(1, 8)), Rat(1, 16));
  std::vector<int> x = block_union_sites(t, {0, 1});
  uint64_t seed = spec.seed * 1000003u + trial;
  McReport a = regulator_expectation_mc(par, x, cb, 300, seed, 1);
  McReport b = regulator_expectation_mc(par, x, cb, 300, seed, 1);
  res.require(a.estimate == b.estimate && a.ci_halfwidth == b.ci_halfwidth);
  McReport w2 = regulator_expectation_mc(par, x, cb, 300, seed, 2);
  res.require(w2.samples == a.samples);

  McReport c = regulator_expectation_mc(par, x, cb, 200, seed + 1, 1);
  McReport m = mc_merge(a, c);
  res.require(m.samples == 500);
  double want = (a.sum + c.sum) / 500.0;
  res.require(std::abs(m.estimate - want) <= 1e-15 * std::max(1.0, std::abs(want)));

  RegulatorParams zero = par;
  zero.t = Rat(0);
  McReport z = regulator_expectation_mc(zero, x, cb, 50, seed, 1);
  res.require(z.estimate == 1.0 && z.ci_halfwidth == 0.0);
  (void)rng;
  return res;
}

TrialResult trial_exponential_moment(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  int n = 2 + int(trial % 3);
  // Random SPD scaled under the lambda_max < 1/2 gate.
  std::vector<std::vector<double>> c(size_t(n), std::vector<double>(size_t(n), 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = rng.unit() - 0.5;
      c[size_t(i)][size_t(j)] = c[size_t(j)][size_t(i)] = v;
    }
  double rowmax = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::abs(c[size_t(i)][size_t(j)]);
    rowmax = std::max(rowmax, s);
  }
  double scale = 0.4 / std::max(1.0, rowmax);
  for (auto& row : c)
    for (auto& v : row) v *= scale;
  for (int i = 0; i < n; ++i) c[size_t(i)][size_t(i)] += 0.05;  // keep it positive

  IntegrabilityReport rep = gaussian_integrability_check(c);
  res.require(rep.applicable);
  res.require(rep.moment <= rep.trace_bound * (1 + 1e-12));
  res.margin(rep.trace_bound * (1 + 1e-12) - rep.moment);
  (void)spec;
  return res;
}

TrialResult trial_lattice_sobolev(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  int d = 1 + int(trial % 2);
  int r = trial % 4 < 2 ? 2 : 4;
  int n = 1;
  for (int k = 0; k < d; ++k) n *= r;
  std::vector<std::complex<double>> f(size_t(n));
  for (auto& v : f) v = {2 * rng.unit() - 1, 2 * rng.unit() - 1};
  SobolevReport rep = lattice_sobolev_check(d, r, f);
  res.require(rep.holds);
  res.margin(1.0 - rep.worst_ratio);
  (void)spec;
  return res;
}

TrialResult trial_regulator_expectation(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Torus t{1, 2, 2};
  LayoutPtr l = boson_layout(t);
  RegulatorParams par;
  par.layout = l;
  par.ell = Rat(1);
  par.t = Rat(1);
  par.alpha_g = 1.1;
  RatMat cb = rat_scale(decaying_covariance(t, Rat(1, 8)), Rat(1, 64));
  std::vector<int> x = block_union_sites(t, {0, 1});
  McReport rep = regulator_expectation_mc(par, x, cb, 2000, spec.seed * 7919u + trial, 1);
  res.require(rep.hypothesis_ok);
  double rhs = rep.bound + 3 * rep.ci_halfwidth;
  res.margin((rhs - rep.estimate) / rep.bound);
  return res;
}

// ---------------------------------------------------------------------------
// meta
// ---------------------------------------------------------------------------

TrialResult trial_serialization_roundtrip(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  Rng rng = Rng::substream(spec.seed, trial);
  LayoutPtr l = instance_layout(spec);

  Element f = instance_element(spec, rng, false);
  Element f2 = element_of_json(parse_json_text(json_line(json_of_element(f))));
  res.require(f2 == f && f2.layout->same_as(*f.layout));

  FieldAssign phi = instance_field(spec, rng, false);
  FieldAssign phi2 = field_of_json(parse_json_text(json_line(json_of_field(phi))));
  res.require(phi2.v == phi.v);

  TestFunction g{l, 4, 8, {}};
  std::vector<Key> keys = species_keys(*l, instance_boson_positions(spec));
  for (Key k : species_keys(*l, instance_fermion_positions(spec))) keys.push_back(k);
  for (int rep = 0; rep < 5 && !keys.empty(); ++rep) {
    IndexSeq z;
    int len = (int)rng.below(4);
    for (int r = 0; r < len; ++r) z.push_back(keys[rng.below(keys.size())]);
    g.add(seq_sorted_by_species(std::move(z)), rng.rc(2, 2));
  }
  TestFunction g2 = testfn_of_json(parse_json_text(json_line(json_of_testfn(g))));
  res.require(g2.v == g.v && g2.pn_cap == g.pn_cap && g2.len_cap == g.len_cap);

  RatMat m = instance_symmetric_invertible(rng, 2);
  res.require(matrix_of_json(parse_json_text(json_line(json_of_matrix(m)))) == m);

  if (!f.is_zero() && spec.dist == CoeffDist::rational_grid) {
    Weight w = make_weight(l, rng.rat_positive(2, 2), 0, 1);
    NormParams par{w, NormMode::lp_real, 4, -1, 8};
    Element fr = instance_element(spec, rng, true);
    if (!fr.is_zero()) {
      FieldAssign phir = instance_field(spec, rng, true);
      NormCertificate cert = tphi_seminorm(fr, phir, par);
      NormCertificate cert2 = certificate_of_json(parse_json_text(json_line(json_of_certificate(cert))));
      res.require(cert2.mode == cert.mode && cert2.value == cert.value &&
                  cert2.exact == cert.exact && cert2.exact_value == cert.exact_value &&
                  cert2.optimizer == cert.optimizer);
      ReplayReport rr = certificate_replay(fr, phir, par, cert2);
      res.require(rr.exact_match);
    }
  }

  InstanceSpec s2 = spec_of_json(json_of_spec(spec));
  res.require(s2.torus == spec.torus && s2.family == spec.family &&
              s2.max_degree == spec.max_degree && s2.max_fermions == spec.max_fermions &&
              s2.nterms == spec.nterms && s2.dist == spec.dist && s2.seed == spec.seed);

  PropertyReport pr;
  pr.id = "sample";
  pr.trials = 3;
  pr.violations = 1;
  pr.worst_slack = -0.25;
  pr.runtime_ms = 1.5;
  pr.fingerprint = environment_fingerprint();
  PropertyReport pr2 = report_of_json(parse_json_text(json_line(json_of_report(pr))));
  res.require(pr2.id == pr.id && pr2.trials == pr.trials && pr2.violations == pr.violations &&
              pr2.worst_slack == pr.worst_slack && pr2.fingerprint == pr.fingerprint);
  return res;
}

TrialResult trial_seed_determinism(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  const char* ids[] = {"algebra-ring", "norm-product", "regulator-multiplicative",
                       "gram-inequality"};
  const char* id = ids[trial % 4];
  InstanceSpec local = with_seed(spec, spec.seed + trial);
  PropertyReport a = run_suite(id, local, 3, 1);
  PropertyReport b = run_suite(id, local, 3, 2);  // different worker count
  res.require(a.trials == b.trials && a.violations == b.violations &&
              a.worst_slack == b.worst_slack && a.fingerprint == b.fingerprint);
  return res;
}

TrialResult trial_registry_coverage(const InstanceSpec& spec, uint64_t trial);

const SuiteDef kSuites[] = {
    {"algebra-coefficient-symmetry", "coefficient functions are (anti)symmetric in the sequence",
     trial_algebra_coefficient_symmetry},
    {"algebra-derivations", "field derivatives are graded derivations and commute",
     trial_algebra_derivations},
    {"algebra-ring", "associativity and distributivity of the product, exact",
     trial_algebra_ring},
    {"algebra-star-product", "sequence-space product formula matches the ring product",
     trial_algebra_star_product},
    {"dual-norm-consistency", "closed form, simplex optimum and class sum agree on real data",
     trial_dual_norm_consistency},
    {"exp-quadratic-bound", "exp(-a tau^2) norm within the quadratic exponent budget",
     trial_exp_quadratic_bound},
    {"expectation-convolution", "expectations compose along covariance sums",
     trial_expectation_convolution},
    {"expectation-factorisation", "decoupled supports factorize under the expectation",
     trial_expectation_factorisation},
    {"expectation-wick-heat", "doubled expectation equals the half-Laplacian semigroup",
     trial_expectation_wick_heat},
    {"exponential-moment", "exact Gaussian moment within the trace bound when gated",
     trial_exponential_moment},
    {"gaussian-fermion-routes", "determinant and literal-expansion routes agree on monomials",
     trial_gaussian_fermion_routes},
    {"gaussian-heat", "time derivative of the expectation is the half-Laplacian, exactly",
     trial_gaussian_heat},
    {"gaussian-moment-parity", "unbalanced words carry no expectation",
     trial_gaussian_moment_parity},
    {"gaussian-parts", "fermionic integration by parts with the assembled covariance",
     trial_gaussian_parts},
    {"gram-inequality", "determinants of inner products within the norm product",
     trial_gram_inequality},
    {"integration-bound", "expectation norm within the quadrature of shifted norms",
     trial_integration_bound},
    {"laplacian-bound", "half-Laplacian norm within binom(A,2) covariance growth",
     trial_laplacian_bound},
    {"lattice-paving", "blocks tile the torus and agree with block lookup",
     trial_lattice_paving},
    {"lattice-small-sets", "small-set catalog matches an independent enumeration",
     trial_lattice_small_sets},
    {"lattice-sobolev", "pointwise control by block-averaged discrete gradients",
     trial_lattice_sobolev},
    {"lattice-translation", "differences and distances are translation covariant",
     trial_lattice_translation},
    {"moment-identities", "two-point functions reproduce covariance entries",
     trial_moment_identities},
    {"norm-exponential", "exponential norm bound with the doubled bosonic counterterm",
     trial_norm_exponential},
    {"norm-polynomial", "degree-A growth bound and its exponential corollary",
     trial_norm_polynomial},
    {"norm-product", "submultiplicativity of the seminorm",
     trial_norm_product},
    {"norm-rescale", "two-weight comparison with the interpolation ratio",
     trial_norm_rescale},
    {"oracle-agreement", "production expectations match the independent oracles",
     trial_oracle_agreement},
    {"pairing-floor", "the seminorm dominates the empty-sequence coefficient",
     trial_pairing_floor},
    {"regulator-expectation", "sampled regulator mean within the growth budget",
     trial_regulator_expectation},
    {"regulator-growth-chain", "localized growth chain with the realized constant",
     trial_regulator_growth_chain},
    {"regulator-mc-determinism", "seeded sampling is bitwise reproducible and merges linearly",
     trial_regulator_mc_determinism},
    {"regulator-monotone", "regulators grow with the site set",
     trial_regulator_monotone},
    {"regulator-multiplicative", "exact exponent additivity over disjoint site sets",
     trial_regulator_multiplicative},
    {"registry-coverage", "catalog integrity: ids sorted, unique, fully registered",
     trial_registry_coverage},
    {"seed-determinism", "identical (spec, seed) reproduces reports for any worker count",
     trial_seed_determinism},
    {"serialization-roundtrip", "JSON round trips reproduce objects exactly",
     trial_serialization_roundtrip},
    {"sigma-shift", "boson shift: pairing identity, series and derivative laws",
     trial_sigma_shift},
    {"tau-norm-identity", "single-site closed form (|phi|+h)^2 + h^2",
     trial_tau_norm_identity},
    {"theta-adjoint", "pairing adjoint of the doubling map, exact",
     trial_theta_adjoint},
    {"theta-contraction", "doubling contracts the union norm into the sum norm",
     trial_theta_contraction},
};

TrialResult trial_registry_coverage(const InstanceSpec& spec, uint64_t trial) {
  TrialResult res;
  (void)spec;
  (void)trial;
  const std::vector<SuiteInfo>& reg = suite_registry();
  res.require(reg.size() == sizeof(kSuites) / sizeof(kSuites[0]));
  std::set<std::string> ids;
  for (const SuiteInfo& s : reg) {
    res.require(!s.id.empty() && !s.summary.empty());
    res.require(ids.insert(s.id).second);
    res.require(suite_known(s.id));
  }
  for (size_t i = 1; i < reg.size(); ++i) res.require(reg[i - 1].id < reg[i].id);
  // One registered check per tracked obligation: the fixed expected catalog.
  const char* expected[] = {
      "algebra-coefficient-symmetry", "algebra-derivations", "algebra-ring",
      "algebra-star-product", "dual-norm-consistency", "exp-quadratic-bound",
      "expectation-convolution", "expectation-factorisation", "expectation-wick-heat",
      "exponential-moment", "gaussian-fermion-routes", "gaussian-heat",
      "gaussian-moment-parity", "gaussian-parts", "gram-inequality", "integration-bound",
      "laplacian-bound", "lattice-paving", "lattice-small-sets", "lattice-sobolev",
      "lattice-translation", "moment-identities", "norm-exponential", "norm-polynomial",
      "norm-product", "norm-rescale", "oracle-agreement", "pairing-floor",
      "regulator-expectation", "regulator-growth-chain", "regulator-mc-determinism",
      "regulator-monotone", "regulator-multiplicative", "registry-coverage",
      "seed-determinism", "serialization-roundtrip", "sigma-shift", "tau-norm-identity",
      "theta-adjoint", "theta-contraction"};
  res.require(sizeof(expected) / sizeof(expected[0]) == reg.size());
  for (const char* id : expected) res.require(ids.count(id) == 1);
  bool threw = false;
  try {
    run_suite("no-such-suite", InstanceSpec{}, 1, 1);
  } catch (const std::invalid_argument&) {
    threw = true;
  }
  res.require(threw);
  return res;
}

}  // namespace

// ===========================================================================
// Registry and runner
// ===========================================================================

const std::vector<SuiteInfo>& suite_registry() {
  static const std::vector<SuiteInfo> reg = [] {
    std::vector<SuiteInfo> out;
    for (const SuiteDef& s : kSuites) out.push_back(SuiteInfo{s.id, s.summary});
    return out;
  }();
  return reg;
}

bool suite_known(const std::string& id) {
  for (const SuiteDef& s : kSuites)
    if (id == s.id) return true;
  return false;
}

std::string environment_fingerprint() {
  std::string out = "cxx=";
#ifdef __VERSION__
  out += __VERSION__;
#else
  out += "unknown";
#endif
#ifdef __linux__
  out += " os=linux";
#else
  out += " os=other";
#endif
  out += " ptr=" + std::to_string(sizeof(void*) * 8);
  out += " rational=boost-cpp_rational";
  return out;
}

PropertyReport run_suite(const std::string& id, const InstanceSpec& spec, long trials,
                         int workers) {
  const SuiteDef* def = nullptr;
  for (const SuiteDef& s : kSuites)
    if (id == s.id) def = &s;
  if (!def) throw std::invalid_argument("unknown suite id: " + id);
  if (trials < 0) throw std::invalid_argument("trials must be nonnegative");
  if (workers < 1) workers = 1;

  auto t0 = std::chrono::steady_clock::now();
  std::vector<TrialResult> results(size_t(trials));
  auto work = [&](int wk) {
    for (long i = wk; i < trials; i += workers) {
      try {
        results[size_t(i)] = def->fn(spec, uint64_t(i));
      } catch (const std::exception& e) {
        std::fprintf(stderr, "[%s] trial %ld raised: %s\n", def->id, i, e.what());
        results[size_t(i)].violations = 1;
        results[size_t(i)].slack = -1e300;
      }
    }
  };
  if (workers == 1 || trials <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int wk = 0; wk < workers; ++wk) pool.emplace_back(work, wk);
    for (auto& th : pool) th.join();
  }

  PropertyReport rep;
  rep.id = id;
  rep.trials = trials;
  rep.fingerprint = environment_fingerprint();
  double worst = std::numeric_limits<double>::infinity();
  for (const TrialResult& r : results) {
    rep.violations += r.violations;
    if (r.slack < worst) worst = r.slack;
  }
  rep.worst_slack = std::isfinite(worst) ? worst : 0.0;
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

Json json_of_report(const PropertyReport& r) {
  return Json{{"id", r.id},
              {"trials", r.trials},
              {"violations", r.violations},
              {"worst_slack", r.worst_slack},
              {"runtime_ms", r.runtime_ms},
              {"fingerprint", r.fingerprint}};
}

PropertyReport report_of_json(const Json& j) {
  PropertyReport r;
  r.id = j.at("id").get<std::string>();
  r.trials = j.at("trials").get<long>();
  r.violations = j.at("violations").get<long>();
  r.worst_slack = j.at("worst_slack").get<double>();
  r.runtime_ms = j.at("runtime_ms").get<double>();
  r.fingerprint = j.at("fingerprint").get<std::string>();
  return r;
}

}  // namespace tphi
