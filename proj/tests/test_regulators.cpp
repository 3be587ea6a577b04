#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "regulator.hpp"
#include "test_support.hpp"

using namespace tphi;

namespace {

Key lab(int sp, int conj, int x) { return pack(uint16_t(sp), uint8_t(conj), uint32_t(x)); }

FieldAssign const_field(const Layout& l, int sp, const Rat& c) {
  FieldAssign phi;
  for (int x = 0; x < l.torus.nsites(); ++x) {
    phi.set(pack(uint16_t(sp), 0, uint32_t(x)), RC(c));
    phi.set(pack(uint16_t(sp), 1, uint32_t(x)), RC(c));
  }
  return phi;
}

FieldAssign ramp_field(const Layout& l, int sp, long denom) {
  FieldAssign phi;
  for (int x = 0; x < l.torus.nsites(); ++x) {
    RC v{Rat(x, denom)};
    phi.set(pack(uint16_t(sp), 0, uint32_t(x)), v);
    phi.set(pack(uint16_t(sp), 1, uint32_t(x)), v);
  }
  return phi;
}

std::vector<int> sites_union(const Torus& t, std::initializer_list<int> blocks) {
  std::vector<int> out;
  for (int b : blocks) {
    std::vector<int> s = t.block_sites(b);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

// The supersymmetric quadratic phi_x phibar_x + psi_x psibar_x.
Element tau_element(LayoutPtr l, int x) {
  Element tau = Element::boson(l, lab(0, 0, x)) * Element::boson(l, lab(0, 1, x));
  tau += Element::fermion(l, lab(1, 0, x)) * Element::fermion(l, lab(1, 1, x));
  return tau;
}

}  // namespace

TEST_CASE("fluctuation regulator: zero field, constants, exact multiplicativity") {
  Torus t{1, 2, 4};
  LayoutPtr l = susy_layout(t);
  BlockGeometry geo(t);
  RegulatorParams par{.layout = l, .ell = Rat(1, 2)};
  std::vector<int> block1 = t.block_sites(1);

  RegulatorValue g0 = fluctuation_regulator(geo, par, block1, FieldAssign{});
  CHECK(g0.exp_lo == Rat(0));
  CHECK(g0.exp_hi == Rat(0));
  CHECK(g0.lo == 1.0);
  CHECK(g0.hi == 1.0);

  // Constant field 3/4 at scale 1/2: each block norm is 3/2, and the two sites
  // of the block contribute 2 * (1/2) * 9/4 to the exponent.
  FieldAssign c34 = const_field(*l, 0, Rat(3, 4));
  RegulatorValue gc = fluctuation_regulator(geo, par, block1, c34);
  CHECK(gc.exp_lo == Rat(9, 4));
  CHECK(gc.exp_hi == Rat(9, 4));
  CHECK(gc.lo == doctest::Approx(std::exp(2.25)));
  CHECK(gc.hi == gc.lo);

  // Derivative order 1: the bracket widens but the lower end stays the exact
  // value, attained by the zero correction (all derivatives of a constant vanish).
  RegulatorParams par1 = par;
  par1.p_phi = 1;
  RegulatorValue gc1 = fluctuation_regulator(geo, par1, block1, c34);
  CHECK(to_double(gc1.exp_lo) == doctest::Approx(2.25));
  CHECK(gc1.exp_hi >= gc1.exp_lo);

  // Exact multiplicativity of the exponent over a disjoint union.
  Rng rng(401);
  FieldAssign phi = random_real_field(rng, *l, {0});
  std::vector<int> x = t.block_sites(0);
  std::vector<int> y = sites_union(t, {2, 3});
  std::vector<int> xy = x;
  xy.insert(xy.end(), y.begin(), y.end());
  RegulatorValue gx = fluctuation_regulator(geo, par, x, phi);
  RegulatorValue gy = fluctuation_regulator(geo, par, y, phi);
  RegulatorValue gxy = fluctuation_regulator(geo, par, xy, phi);
  CHECK(gxy.exp_lo == Rat(gx.exp_lo + gy.exp_lo));
  CHECK(gxy.exp_hi == Rat(gx.exp_hi + gy.exp_hi));
  CHECK(gxy.hi == doctest::Approx(gx.hi * gy.hi).epsilon(1e-12));

  // Monotone in the site set.
  std::vector<int> b12 = sites_union(t, {1, 2});
  CHECK(fluctuation_regulator(geo, par, b12, phi).exp_lo >=
        fluctuation_regulator(geo, par, block1, phi).exp_lo);
  CHECK(fluctuation_regulator(geo, par, b12, phi).exp_hi >=
        fluctuation_regulator(geo, par, block1, phi).exp_hi);
}

TEST_CASE("large-field regulator: polynomial quotient, half-power domination, wrap rejection") {
  CHECK(poly_degree_cap(1, 1) == 1);
  CHECK(poly_degree_cap(2, 1) == 1);
  CHECK(poly_degree_cap(3, 1) == 0);
  CHECK(poly_degree_cap(3, 0) == -1);

  Torus t{1, 2, 4};
  LayoutPtr l = susy_layout(t);
  BlockGeometry geo(t);
  RegulatorParams par{.layout = l, .ell = Rat(1, 2), .hh = Rat(1), .poly_dim_cap = 1};
  std::vector<int> block1 = t.block_sites(1);
  std::vector<int> all(size_t(t.nsites()));
  for (int i = 0; i < t.nsites(); ++i) all[size_t(i)] = i;

  CHECK(large_field_regulator(geo, par, all, FieldAssign{}).hi == 1.0);

  // Degree-0 and degree-1 polynomials have dimension within the cap, so the
  // quotient norm vanishes and the regulator is exactly one.
  RegulatorValue gc = large_field_regulator(geo, par, all, const_field(*l, 0, Rat(5, 3)));
  CHECK(gc.exp_lo == Rat(0));
  CHECK(gc.exp_hi == Rat(0));
  CHECK(gc.lo == 1.0);
  CHECK(gc.hi == 1.0);

  // A ramp is linear on the seam-free closure of block 1 (sites 0..5).
  RegulatorValue gr = large_field_regulator(geo, par, block1, ramp_field(*l, 0, 3));
  CHECK(gr.exp_lo == Rat(0));
  CHECK(gr.exp_hi == Rat(0));

  // Half-power domination at every interpolation step: the quotient can only
  // shrink the block norms and the half in the exponent does the rest.
  Rng rng(702);
  FieldAssign phi = random_real_field(rng, *l, {0});
  RegulatorValue g = fluctuation_regulator(geo, par, block1, phi);
  for (long num = 0; num <= 4; ++num) {
    RegulatorValue gt = large_field_regulator(geo, par, block1, assign_scale(phi, Rat(num, 4)));
    CHECK(gt.lo <= std::sqrt(g.hi) * (1 + 1e-12));
    // sharp form: the programs are exact on real data at any phase count
    CHECK(gt.lo <= std::sqrt(g.lo) * (1 + 1e-9));
    CHECK(2 * to_double(gt.exp_lo) <= to_double(g.exp_lo) + 1e-9);
  }

  // Blocks whose closure is the whole ring cannot host the polynomial class.
  Torus t2{1, 2, 2};
  LayoutPtr l2 = susy_layout(t2);
  BlockGeometry geo2(t2);
  RegulatorParams par2{.layout = l2, .ell = Rat(1, 2), .poly_dim_cap = 1};
  CHECK_THROWS(large_field_regulator(geo2, par2, t2.block_sites(0), const_field(*l2, 0, Rat(1))));
}

TEST_CASE("standard probes: deterministic, real, zero field first") {
  Torus t{1, 2, 4};
  LayoutPtr l = susy_layout(t);
  RegulatorParams par{.layout = l, .ell = Rat(1, 2)};
  std::vector<FieldAssign> p1 = standard_probes(par, 99, 2);
  std::vector<FieldAssign> p2 = standard_probes(par, 99, 2);
  CHECK(p1.size() == 33);  // 9 base probes plus three multiples of each nonzero one
  CHECK(p1[0].v.empty());
  REQUIRE(p1.size() == p2.size());
  for (size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].v.size() == p2[i].v.size());
    for (auto& [k, val] : p1[i].v) {
      CHECK((val - p2[i].at(k)).is_zero());
      CHECK(val.im == Rat(0));
      Key mirror = pack(key_species(k), uint8_t(1 - key_conj(k)), key_site(k));
      CHECK((val - p1[i].at(mirror)).is_zero());
    }
  }
}

TEST_CASE("regulator norms: unit element, zero-probe domination, sandwich, products, support") {
  Torus t{1, 2, 4};
  LayoutPtr l = susy_layout(t);
  BlockGeometry geo(t);
  RegulatorParams par{.layout = l,
                      .ell = Rat(1, 2),
                      .hh = Rat(1),
                      .poly_dim_cap = 1,
                      .pn_cap = 3,
                      .len_cap = 4};
  std::vector<FieldAssign> probes = standard_probes(par, 17, 1);
  std::vector<int> x01 = sites_union(t, {0, 1});

  Element one = Element::constant(l, RC(Rat(1)));
  RegulatorNormReport repg = regulator_norm(one, x01, RegulatorKind::fluctuation, par, geo, probes);
  CHECK(repg.lower == 1.0);
  CHECK(repg.t0 == 1.0);
  CHECK(repg.upper_valid);
  CHECK(repg.upper == 1.0);
  RegulatorNormReport rept =
      regulator_norm(one, x01, RegulatorKind::large_field, par, geo, probes);
  CHECK(rept.lower == 1.0);
  CHECK_FALSE(rept.upper_valid);

  // Zero-field probe gives ||F||_{T_0} <= ||F||_{G}; the analytic polynomial
  // chain caps the probe bound from above.
  Rng rng(919);
  for (int trial = 0; trial < 4; ++trial) {
    Element f = random_element(rng, l, {0}, {1}, 2, 2, 2, true);
    if (f.is_zero()) continue;
    RegulatorNormReport rep =
        regulator_norm(f, x01, RegulatorKind::fluctuation, par, geo, probes);
    CHECK(rep.lower >= rep.t0 * (1 - 1e-12));
    CHECK(rep.upper_valid);
    CHECK(rep.lower <= rep.upper * (1 + 1e-12));
    RegulatorNormReport repl =
        regulator_norm(f, x01, RegulatorKind::large_field, par, geo, probes);
    CHECK(repl.lower >= repl.t0 * (1 - 1e-12));
  }

  // Product bound over disjoint site sets, with the shared probe family.
  std::vector<int> x = t.block_sites(0), y = t.block_sites(2);
  std::vector<int> xy = x;
  xy.insert(xy.end(), y.begin(), y.end());
  Element f = Element::boson(l, lab(0, 0, 0)) * Element::boson(l, lab(0, 1, 0)) +
              Element::constant(l, RC(Rat(3, 2)));
  Element k = tau_element(l, 4);
  Element fk = f * k;
  for (RegulatorKind kind : {RegulatorKind::fluctuation, RegulatorKind::large_field}) {
    RegulatorNormReport rf = regulator_norm(f, x, kind, par, geo, probes);
    RegulatorNormReport rk = regulator_norm(k, y, kind, par, geo, probes);
    RegulatorNormReport rfk = regulator_norm(fk, xy, kind, par, geo, probes);
    CHECK(rfk.lower <= rf.lower * rk.lower * (1 + 1e-12));
  }

  // Support must stay inside the closure of X.
  Element bad = Element::boson(l, lab(0, 0, 4));
  CHECK_THROWS(regulator_norm(bad, t.block_sites(0), RegulatorKind::fluctuation, par, geo,
                              probes));
}

TEST_CASE("growth-constant check: constants and the supersymmetric quadratic") {
  Torus t{1, 2, 4};
  LayoutPtr l = susy_layout(t);
  BlockGeometry geo(t);
  RegulatorParams par{.layout = l,
                      .ell = Rat(1, 2),
                      .hh = Rat(1),
                      .poly_dim_cap = 1,
                      .pn_cap = 4,
                      .len_cap = 4};
  std::vector<int> x = t.block_sites(1);
  std::vector<FieldAssign> probes = standard_probes(par, 23, 1);

  Element c = Element::constant(l, RC(Rat(-7, 5)));
  KkkReport r0 = kkk_check(c, 0, x, par, geo, probes);
  CHECK(r0.holds);
  CHECK(r0.worst_margin >= 0);

  Element tau = tau_element(l, 2);
  KkkReport r2 = kkk_check(tau, 2, x, par, geo, probes);
  CHECK(r2.holds);
  CHECK(r2.worst_margin >= 0);
  CHECK(r2.t0 > 0);
  CHECK(r2.gtilde_lower > 0);
  CHECK(r2.single_block);
  CHECK(r2.c_a_realized <= r2.c_a_single_block * (1 + 1e-12));
  CHECK(r2.rho == doctest::Approx(2.0 * std::pow(0.5, 3)));

  // The analytic growth constant agrees with a direct grid maximisation.
  double best = 0;
  for (double s = 0; s <= 6.0; s += 1e-4)
    best = std::max(best, std::pow(1 + s, 3) * std::exp(-0.5 * s * s));
  CHECK(polynomial_growth_constant(2) == doctest::Approx(best).epsilon(1e-6));
  CHECK(polynomial_growth_constant(2) >= best - 1e-9);

  CHECK_THROWS(kkk_check(tau, 4, x, par, geo, probes));  // degree cap reaches the sequence cap
  CHECK_THROWS(kkk_check(tau, 1, x, par, geo, probes));  // element degree exceeds A
  RegulatorParams bad = par;
  bad.hh = Rat(1, 4);
  CHECK_THROWS(kkk_check(tau, 2, x, bad, geo, probes));  // needs ell <= hh
  Element off = Element::boson(l, lab(0, 0, 0));
  CHECK_THROWS(kkk_check(off, 2, x, par, geo, probes));  // support off X
}

TEST_CASE("growth-constant sweep: random polynomial elements stay within the chain") {
  Torus t{1, 2, 4};
  LayoutPtr l = susy_layout(t);
  BlockGeometry geo(t);
  RegulatorParams par{.layout = l,
                      .ell = Rat(1, 2),
                      .hh = Rat(3, 2),
                      .poly_dim_cap = 1,
                      .pn_cap = 3,
                      .len_cap = 4,
                      .quarter_points = 3};
  std::vector<int> all(size_t(t.nsites()));
  for (int i = 0; i < t.nsites(); ++i) all[size_t(i)] = i;
  std::vector<FieldAssign> full = standard_probes(par, 31, 1);
  std::vector<FieldAssign> probes(full.begin(), full.begin() + 8);  // the base family

  Rng rng(1234);
  int violations = 0, ran = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Element f = random_element(rng, l, {0}, {1}, 2, 1, 2, true);
    if (f.is_zero()) continue;
    KkkReport rep = kkk_check(f, 3, all, par, geo, probes);
    ++ran;
    if (!rep.holds) ++violations;
    CHECK(rep.worst_margin >= -1e-9);
  }
  CHECK(violations == 0);
  CHECK(ran > 150);
}

TEST_CASE("regulator expectation: power zero, determinism, merging, growth bound") {
  Torus t{1, 2, 2};
  LayoutPtr l = boson_layout(t);
  RegulatorParams par{.layout = l, .ell = Rat(1), .alpha_g = 2.0, .pn_cap = 2, .len_cap = 2};
  RatMat cb = rat_scale(decaying_covariance(t, Rat(1, 8)), Rat(1, 16));
  std::vector<int> all{0, 1, 2, 3};

  McReport rep = regulator_expectation_mc(par, all, cb, 2000, 7, 1);
  CHECK(rep.hypothesis_ok);
  CHECK(rep.lambda_max < 0.5);
  CHECK(rep.trace_q <= rep.trace_budget);
  CHECK(rep.bound == doctest::Approx(4.0));  // alpha^{|X| / R} = 2^2
  CHECK(rep.estimate >= 1.0);
  CHECK(rep.estimate <= rep.bound);
  CHECK(rep.estimate <= std::exp(rep.trace_q) + 3 * rep.ci_halfwidth);
  CHECK(rep.ci_halfwidth > 0);
  CHECK(rep.cb_phiplus_norm > 0);

  McReport again = regulator_expectation_mc(par, all, cb, 2000, 7, 1);
  CHECK(again.estimate == rep.estimate);
  CHECK(again.ci_halfwidth == rep.ci_halfwidth);
  McReport w2a = regulator_expectation_mc(par, all, cb, 2000, 7, 2);
  McReport w2b = regulator_expectation_mc(par, all, cb, 2000, 7, 2);
  CHECK(w2a.estimate == w2b.estimate);

  RegulatorParams zero = par;
  zero.t = Rat(0);
  McReport r0 = regulator_expectation_mc(zero, all, cb, 500, 3, 1);
  CHECK(r0.estimate == 1.0);
  CHECK(r0.ci_halfwidth == 0.0);

  McReport ra = regulator_expectation_mc(par, all, cb, 500, 11, 1);
  McReport rb = regulator_expectation_mc(par, all, cb, 700, 12, 1);
  McReport merged = mc_merge(ra, rb);
  CHECK(merged.samples == 1200);
  CHECK(merged.estimate == doctest::Approx((ra.sum + rb.sum) / 1200.0));
  CHECK(merged.estimate * 1200.0 ==
        doctest::Approx(ra.estimate * 500.0 + rb.estimate * 700.0));

  // Out-of-hypothesis covariance: flagged, but the estimate is still produced.
  McReport loud = regulator_expectation_mc(par, all, decaying_covariance(t, Rat(1, 8)), 200, 5, 1);
  CHECK_FALSE(loud.hypothesis_ok);
  CHECK(loud.estimate > 0);

  RegulatorParams deriv = par;
  deriv.p_phi = 1;
  CHECK_THROWS(regulator_expectation_mc(deriv, all, cb, 100, 1, 1));
}

TEST_CASE("sampler second moment matches the covariance") {
  Rng rng(2024);
  RatMat cb = random_spd(rng, 3);
  const int n = 3, N = 20000;
  double csum[3][3] = {}, csum2[3][3] = {};  // Re(phibar_i phi_j)
  double isum[3][3] = {}, isum2[3][3] = {};  // Im(phibar_i phi_j)
  double psum[3][3] = {}, psum2[3][3] = {};  // Re(phi_i phi_j): should vanish
  for (int s = 0; s < N; ++s) {
    std::vector<std::complex<double>> phi = sample_boson_field(cb, rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::complex<double> m = std::conj(phi[i]) * phi[j];
        std::complex<double> p = phi[i] * phi[j];
        csum[i][j] += m.real();
        csum2[i][j] += m.real() * m.real();
        isum[i][j] += m.imag();
        isum2[i][j] += m.imag() * m.imag();
        psum[i][j] += p.real();
        psum2[i][j] += p.real() * p.real();
      }
  }
  auto within = [&](double sum, double sumsq, double target) {
    double mean = sum / N;
    double var = (sumsq - sum * sum / N) / (N - 1);
    double se = std::sqrt(var / N);
    return std::abs(mean - target) <= 3 * se + 1e-9;
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      CHECK(within(csum[i][j], csum2[i][j], to_double(cb[i][j])));
      CHECK(within(isum[i][j], isum2[i][j], 0.0));
      CHECK(within(psum[i][j], psum2[i][j], 0.0));
    }
}

TEST_CASE("gaussian integrability: exact product formula against the trace bound") {
  IntegrabilityReport one = gaussian_integrability_check({{1.0 / 3.0}});
  CHECK(one.applicable);
  CHECK(one.moment == doctest::Approx(std::sqrt(1.5)));
  CHECK(one.trace_bound == doctest::Approx(std::exp(1.0 / 3.0)));
  CHECK(one.moment <= one.trace_bound);

  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + int(trial % 3);
    std::vector<std::vector<double>> b(size_t(n), std::vector<double>(size_t(n), 0.0));
    for (auto& row : b)
      for (auto& v : row) v = rng.unit() - 0.5;
    std::vector<std::vector<double>> c(size_t(n), std::vector<double>(size_t(n), 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) c[size_t(i)][size_t(j)] += b[size_t(i)][size_t(k)] * b[size_t(j)][size_t(k)];
    IntegrabilityReport pre = gaussian_integrability_check(c);
    double scale = pre.lambda_max > 0 ? 0.45 / pre.lambda_max : 1.0;
    for (auto& row : c)
      for (auto& v : row) v *= scale;
    IntegrabilityReport rep = gaussian_integrability_check(c);
    CHECK(rep.applicable);
    CHECK(rep.moment <= rep.trace_bound * (1 + 1e-12));
  }

  CHECK_FALSE(gaussian_integrability_check({{0.75}}).applicable);
}

TEST_CASE("lattice sobolev inequality: constants, corner delta, random sweep") {
  std::vector<std::complex<double>> cf(4, {2.5, -1.0});
  SobolevReport rc = lattice_sobolev_check(1, 4, cf);
  CHECK(rc.holds);
  CHECK(rc.worst_ratio == doctest::Approx(1.0 / 32.0));

  // Corner delta, d = 1, R = 4: the defined stencil values are one first
  // difference on each side and one second difference, so the right side is
  // 2^5 / 4 * (1 + 16 + 16 + 256) = 2312.
  std::vector<std::complex<double>> df(4, 0.0);
  df[0] = 1.0;
  SobolevReport rd = lattice_sobolev_check(1, 4, df);
  CHECK(rd.holds);
  CHECK(rd.rhs == doctest::Approx(2312.0));
  CHECK(rd.worst_ratio == doctest::Approx(1.0 / 2312.0));
  CHECK(rd.worst_site == 0);

  Rng rng(5150);
  int viol = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::complex<double>> f(4);
    for (auto& v : f) v = {rng.normal(), rng.normal()};
    if (!lattice_sobolev_check(1, 4, f).holds) ++viol;
  }
  CHECK(viol == 0);

  for (int i = 0; i < 3; ++i) {
    std::vector<std::complex<double>> f(4);
    for (auto& v : f) v = {rng.normal(), rng.normal()};
    CHECK(lattice_sobolev_check(2, 2, f).holds);
  }

  CHECK_THROWS(lattice_sobolev_check(1, 4, std::vector<std::complex<double>>(3)));
}
