#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "tphi.hpp"

using namespace tphi;

namespace {

Key lab(int sp, int conj, int x) { return pack(uint16_t(sp), uint8_t(conj), uint32_t(x)); }

double dsqrt(const Rat& r) { return std::sqrt(to_double(r)); }

bool testfn_equal(const TestFunction& a, const TestFunction& b) {
  for (auto& [z, val] : a.v)
    if (!(val - b.at(z)).is_zero()) return false;
  for (auto& [z, val] : b.v)
    if (!(val - a.at(z)).is_zero()) return false;
  return true;
}

FieldAssign random_complex_field(Rng& rng, const Layout& l, const std::vector<int>& boson_pos) {
  FieldAssign phi;
  for (int s : boson_pos)
    for (uint32_t x = 0; x < uint32_t(l.torus.nsites()); ++x) {
      phi.set(pack(uint16_t(s), 0, x), rng.rc(2, 2));
      phi.set(pack(uint16_t(s), 1, x), rng.rc(2, 2));
    }
  return phi;
}

}  // namespace

TEST_CASE("weight family: inverse weights and the norm-change ratio") {
  Torus t{1, 2, 1};
  LayoutPtr l = boson_layout(t);
  Weight w = make_weight(l, Rat(1, 2), 2, 3);
  Key k = lab(0, 0, 0);
  CHECK(weight_inv(w, 0, k) == Rat(2));       // 1/h
  CHECK(weight_inv(w, 1, k) == Rat(6));       // R/h
  CHECK(weight_inv(w, 2, k) == Rat(18));      // R^2/h
  CHECK(weight_inv(w, 3, k) == Rat(0));       // beyond p_phi: unconstrained
  CHECK(weight_of_key(w, k) == Rat(1, 2));

  Weight whalf = make_weight(l, Rat(1, 4), 2, 3);
  CHECK(rho_ratio(whalf, w, 2, 4) == Rat(1, 2));  // 2 * (1/2)^2
  CHECK(rho_ratio(w, w, 0, 4) == Rat(2));
  CHECK(weight_sum(w, whalf).h[0] == Rat(3, 4));
  Weight wu = weight_union(w, whalf);
  CHECK(wu.layout->nspecies() == 2);
  CHECK(wu.h[0] == Rat(1, 2));
  CHECK(wu.h[1] == Rat(1, 4));
  CHECK_THROWS(rho_ratio(make_weight(l, Rat(1), 2, 2), w, 0, 4));  // R mismatch
}

TEST_CASE("forward differences: hand stencil and commutation") {
  // Side-2 circle: the second forward difference at 0 is 2 f(0) - 2 f(1).
  Torus t{1, 2, 1};
  LayoutPtr l = boson_layout(t);
  TestFunction g{l, 4, 8, {}};
  g.set({lab(0, 0, 0)}, RC(Rat(5)));
  g.set({lab(0, 0, 1)}, RC(Rat(2)));
  MultiIndex a(1);
  a.c = {2, 0};
  CHECK(nabla_value(g, {lab(0, 0, 0)}, {a}) == RC(Rat(6)));
  MultiIndex back(1);
  back.c = {0, 1};  // backward direction: f(x-1) - f(x)
  CHECK(nabla_value(g, {lab(0, 0, 0)}, {back}) == RC(Rat(-3)));

  // Mixed differences commute on site arrays.
  Torus t2{2, 3, 1};
  Rng rng(77);
  std::vector<Rat> f(size_t(t2.nsites()));
  for (auto& v : f) v = rng.rat(5, 3);
  auto ab = forward_difference(t2, forward_difference(t2, f, 0), 2);
  auto ba = forward_difference(t2, forward_difference(t2, f, 2), 0);
  CHECK(ab == ba);
  MultiIndex m2(2);
  m2.c = {1, 0, 1, 0};
  CHECK(apply_multiindex(t2, f, m2) == ab);
}

TEST_CASE("nabla stencil expansion reproduces nabla values") {
  Torus t{1, 3, 1};
  LayoutPtr l = susy_layout(t);
  Rng rng(101);
  TestFunction g = random_testfn(rng, l, {0}, {1}, 3, 4, 10);
  auto alphas = multiindices_up_to(t.d, 2);
  for (int trial = 0; trial < 20; ++trial) {
    // Random admissible sequence near the support with random per-component alphas.
    if (g.v.empty()) break;
    auto it = g.v.begin();
    std::advance(it, (long)rng.below(g.v.size()));
    IndexSeq z = it->first;
    std::vector<MultiIndex> av;
    for (size_t k = 0; k < z.size(); ++k) av.push_back(alphas[rng.below(alphas.size())]);
    RC direct = nabla_value(g, z, av);
    RC acc;
    for (auto& [s, c] : nabla_stencil(t, z, av)) acc += Rat(c) * g.at(s);
    CHECK(direct == acc);
  }
}

TEST_CASE("symmetrisation: hand values, idempotence, pairing invariance, contraction") {
  Torus t{1, 2, 1};

  SUBCASE("boson pair averages without signs") {
    LayoutPtr l = boson_layout(t);
    TestFunction g{l, 4, 8, {}};
    g.set({lab(0, 0, 0), lab(0, 0, 1)}, RC(Rat(5)));
    TestFunction s = symmetrise(g);
    CHECK(s.at({lab(0, 0, 0), lab(0, 0, 1)}) == RC(Rat(5, 2)));
    CHECK(s.at({lab(0, 0, 1), lab(0, 0, 0)}) == RC(Rat(5, 2)));
  }

  SUBCASE("fermion pair antisymmetrises and repeated labels vanish") {
    LayoutPtr l = fermion_layout(t);
    TestFunction g{l, 4, 8, {}};
    g.set({lab(0, 0, 0), lab(0, 0, 1)}, RC(Rat(4)));
    TestFunction s = symmetrise(g);
    CHECK(s.at({lab(0, 0, 0), lab(0, 0, 1)}) == RC(Rat(2)));
    CHECK(s.at({lab(0, 0, 1), lab(0, 0, 0)}) == RC(Rat(-2)));
    TestFunction rep{l, 4, 8, {}};
    rep.set({lab(0, 0, 0), lab(0, 0, 0)}, RC(Rat(7)));
    CHECK(symmetrise(rep).v.empty());
  }

  SUBCASE("random susy data") {
    LayoutPtr l = susy_layout(t);
    Rng rng(202);
    Weight w = make_weight(l, Rat(2, 3), 1, 2);
    for (int trial = 0; trial < 4; ++trial) {
      TestFunction g = random_testfn(rng, l, {0}, {1}, 3, 4, 8);
      TestFunction s = symmetrise(g);
      CHECK(testfn_equal(symmetrise(s), s));
      Element f = random_element(rng, l, {0}, {1}, 2, 2, 3);
      FieldAssign phi = random_complex_field(rng, *l, {0});
      CHECK((pairing(f, g, phi) - pairing(f, s, phi)).is_zero());
      CHECK(phi_norm_sq(s, w) <= phi_norm_sq(g, w));
    }
  }
}

TEST_CASE("test-function norm: closed hand values") {
  Torus t{1, 2, 1};
  LayoutPtr l = boson_layout(t);

  SUBCASE("empty sequence carries weight one") {
    TestFunction g{l, 4, 8, {}};
    g.set({}, RC(Rat(3, 2)));
    CHECK(phi_norm_sq(g, make_weight(l, Rat(1, 7), 0, 1)) == Rat(9, 4));
  }

  SUBCASE("single label: the first difference dominates when R > 1") {
    TestFunction g{l, 4, 8, {}};
    g.set({lab(0, 0, 0)}, RC(Rat(3)));
    Weight w = make_weight(l, Rat(1, 2), 1, 2);
    // order 0: (1/h)^2 * 9 = 36; first difference: (R/h)^2 * 9 = 144.
    CHECK(phi_norm_sq(g, w) == Rat(144));
    CHECK(phi_norm_sq_by_length(g, w).at(1) == Rat(144));
    // With derivatives unconstrained only the value survives.
    CHECK(phi_norm_sq(g, make_weight(l, Rat(1, 2), 0, 2)) == Rat(36));
  }

  SUBCASE("filter restricts the sup") {
    TestFunction g{l, 4, 8, {}};
    g.set({lab(0, 0, 0)}, RC(Rat(3)));
    g.set({lab(0, 1, 0)}, RC(Rat(5)));
    Weight w = make_weight(l, Rat(1), 0, 1);
    auto only_unbarred = [](const IndexSeq& z) {
      for (Key k : z)
        if (key_conj(k)) return false;
      return true;
    };
    CHECK(phi_norm_sq(g, w) == Rat(25));
    CHECK(phi_norm_sq_filtered(g, w, only_unbarred) == Rat(9));
  }
}

TEST_CASE("pairing: hand value and constant-term lower bound") {
  Torus t{1, 2, 1};
  LayoutPtr l = boson_layout(t);
  Key k0 = lab(0, 0, 0), k1 = lab(0, 0, 1);
  Element f = Element::boson(l, k0);
  FieldAssign phi;
  phi.set(k0, RC(Rat(5, 3)));
  TestFunction g{l, 4, 8, {}};
  g.set({}, RC(Rat(2)));
  g.set({k0}, RC(Rat(7)));
  g.set({k1}, RC(Rat(11)));
  CHECK(pairing(f, g, phi) == RC(Rat(5, 3) * Rat(2) + Rat(7)));

  // ||F|| >= |F_empty(phi)|: the unit-ball witness g = delta_empty is feasible.
  Rng rng(303);
  LayoutPtr ls = susy_layout(t);
  for (int trial = 0; trial < 3; ++trial) {
    Element fr = random_element(rng, ls, {0}, {1}, 2, 2, 3, true);
    FieldAssign ph = random_real_field(rng, *ls, {0});
    NormParams par{make_weight(ls, Rat(1, 2), 0, 1), NormMode::lp_real, 4, -1, 8};
    NormCertificate cert = tphi_seminorm(fr, ph, par);
    RC f0 = fr.coefficient({}, ph);
    Rat absf0 = f0.re < 0 ? -f0.re : f0.re;
    CHECK(cert.exact);
    CHECK(cert.exact_value >= absf0);
  }
}

TEST_CASE("seminorm closed forms agree across modes") {
  Torus t{1, 2, 1};
  LayoutPtr l = susy_layout(t);
  Rat h(1, 2);
  Weight w = make_weight(l, h, 0, 1);
  FieldAssign phi;
  phi.set(lab(0, 0, 0), RC(Rat(3, 2)));
  phi.set(lab(0, 1, 0), RC(Rat(3, 2)));

  Element fld = Element::boson(l, lab(0, 0, 0));
  Element tau = Element::boson(l, lab(0, 0, 0)) * Element::boson(l, lab(0, 1, 0)) +
                Element::fermion(l, lab(1, 0, 0)) * Element::fermion(l, lab(1, 1, 0));
  Element fpair = Element::fermion(l, lab(1, 0, 0)) * Element::fermion(l, lab(1, 1, 0));
  Element cst = Element::constant(l, RC(Rat(-7, 5)));

  struct Case {
    const Element* f;
    Rat want;
  };
  Case cases[] = {
      {&fld, Rat(3, 2) + h},                            // |phi_x| + h
      {&tau, rat_pow(Rat(3, 2) + h, 2) + h * h},        // (|phi_x| + h)^2 + h^2
      {&fpair, h * h},                                  // h^2
      {&cst, Rat(7, 5)},                                // |c|
  };
  for (auto& c : cases) {
    NormParams p0{w, NormMode::exact_p0, 4, -1, 8};
    NormParams lp{w, NormMode::lp_real, 4, -1, 8};
    NormParams gr{w, NormMode::grid_complex, 4, -1, 8};
    NormCertificate c0 = tphi_seminorm(*c.f, phi, p0);
    NormCertificate cl = tphi_seminorm(*c.f, phi, lp);
    NormCertificate cg = tphi_seminorm(*c.f, phi, gr);
    CHECK(c0.exact);
    CHECK(cl.exact);
    CHECK(c0.exact_value == c.want);
    CHECK(cl.exact_value == c.want);
    CHECK(cg.value == doctest::Approx(to_double(c.want)).epsilon(1e-12));
  }

  // The fermion-pair norm ignores the boson field entirely.
  NormParams p0{w, NormMode::exact_p0, 4, -1, 8};
  CHECK(tphi_seminorm(fpair, FieldAssign{}, p0).exact_value == h * h);
}

TEST_CASE("exact simplex equals the closed form on random real data") {
  Torus t{1, 2, 1};
  LayoutPtr l = susy_layout(t);
  Weight w = make_weight(l, Rat(3, 4), 0, 1);
  Rng rng(404);
  for (int trial = 0; trial < 3; ++trial) {
    Element f = random_element(rng, l, {0}, {1}, 2, 2, 3, true);
    if (f.is_zero()) continue;
    FieldAssign phi = random_real_field(rng, *l, {0});
    NormParams p0{w, NormMode::exact_p0, 4, -1, 8};
    NormParams lp{w, NormMode::lp_real, 4, -1, 8};
    NormParams gr{w, NormMode::grid_complex, 4, -1, 4};
    NormCertificate c0 = tphi_seminorm(f, phi, p0);
    NormCertificate cl = tphi_seminorm(f, phi, lp);
    REQUIRE(c0.exact);
    REQUIRE(cl.exact);
    CHECK(c0.exact_value == cl.exact_value);
    // The phase grid contains the identity rotation, so on real data it
    // reproduces the simplex value exactly and first.
    NormCertificate cg = tphi_seminorm(f, phi, gr);
    CHECK(cg.value == cl.value);
    CHECK(cg.best_rotation == 0);
  }
}

TEST_CASE("seminorm is submultiplicative") {
  Torus t{1, 2, 1};
  LayoutPtr l = susy_layout(t);
  Weight w = make_weight(l, Rat(1, 2), 0, 1);
  Rng rng(505);
  for (int trial = 0; trial < 4; ++trial) {
    Element f = random_element(rng, l, {0}, {1}, 1, 1, 2, true);
    Element g = random_element(rng, l, {0}, {1}, 1, 1, 2, true);
    FieldAssign phi = random_real_field(rng, *l, {0});
    NormParams par{w, NormMode::exact_p0, 4, 8, 8};
    Rat nf = tphi_seminorm(f, phi, par).exact_value;
    Rat ng = tphi_seminorm(g, phi, par).exact_value;
    Rat nfg = tphi_seminorm(f * g, phi, par).exact_value;
    CHECK(nfg <= nf * ng);
  }
}

TEST_CASE("boson shift: the resummed test function reproduces the shifted pairing") {
  Torus t{1, 2, 1};
  Rng rng(606);

  SUBCASE("boson-only, complex data") {
    LayoutPtr l = boson_layout(t);
    for (int trial = 0; trial < 4; ++trial) {
      Element p = random_element(rng, l, {0}, {}, 3, 0, 3);
      TestFunction g = random_testfn(rng, l, {0}, {}, 3, 3, 6);
      FieldAssign phi = random_complex_field(rng, *l, {0});
      FieldAssign xi = random_complex_field(rng, *l, {0});
      Rat tt(1, 3), ss(2, 5);
      FieldAssign shifted = assign_sum(assign_scale(phi, tt), assign_scale(xi, ss));
      RC lhs = pairing(p, g, shifted);
      RC rhs = pairing(p, sigma_star(g, xi, ss), assign_scale(phi, tt));
      CHECK((lhs - rhs).is_zero());
    }
  }

  SUBCASE("fermions ride along untouched") {
    LayoutPtr l = susy_layout(t);
    for (int trial = 0; trial < 4; ++trial) {
      Element p = random_element(rng, l, {0}, {1}, 2, 1, 3);
      TestFunction g = random_testfn(rng, l, {0}, {1}, 3, 3, 6);
      FieldAssign phi = random_complex_field(rng, *l, {0});
      FieldAssign xi = random_complex_field(rng, *l, {0});
      Rat ss(1, 2);
      RC lhs = pairing(p, g, assign_sum(phi, assign_scale(xi, ss)));
      RC rhs = pairing(p, sigma_star(g, xi, ss), phi);
      CHECK((lhs - rhs).is_zero());
    }
  }

  SUBCASE("series in the shift parameter") {
    LayoutPtr l = boson_layout(t);
    for (int trial = 0; trial < 3; ++trial) {
      TestFunction g = random_testfn(rng, l, {0}, {}, 3, 3, 5);
      FieldAssign xi = random_complex_field(rng, *l, {0});
      Rat ss(3, 7);
      TestFunction acc{l, g.pn_cap, g.len_cap, {}};
      for (int m = 0; m <= g.pn_cap; ++m) {
        TestFunction dm = sigma_star_deriv(g, xi, m);
        Rat c = rat_pow(ss, m) / Rat(factorial(unsigned(m)));
        for (auto& [z, val] : dm.v) acc.add(z, c * val);
      }
      CHECK(testfn_equal(acc, sigma_star(g, xi, ss)));
    }
  }
}

TEST_CASE("boson shift: norm bounds") {
  Torus t{1, 2, 1};
  LayoutPtr l = boson_layout(t);
  Weight w = make_weight(l, Rat(2, 3), 1, 2);
  Rng rng(707);
  for (int trial = 0; trial < 3; ++trial) {
    int pn = 3, len = 3;
    TestFunction g = random_testfn(rng, l, {0}, {}, pn, len, 6);
    FieldAssign xi = random_real_field(rng, *l, {0});
    double nxi = dsqrt(phi_norm_sq(field_test_function(l, 0, xi, pn, len), w));
    double ng = dsqrt(phi_norm_sq(g, w));

    // ||sigma*(1) g||^(p) <= (1 + ||xi||)^p ||g|| for every length p.
    TestFunction sh = sigma_star(g, xi, Rat(1));
    for (auto& [p, sq] : phi_norm_sq_by_length(sh, w))
      CHECK(dsqrt(sq) <= std::pow(1.0 + nxi, p) * ng * (1 + 1e-12) + 1e-12);

    // ||sigma*(m) g||^(m+p) <= ((m+p)!/p!) ||xi||^m ||g|| for length-p input.
    for (int p = 1; p <= 2; ++p) {
      TestFunction gp{l, pn, len, {}};
      for (auto& [z, val] : g.v)
        if ((int)z.size() == p) gp.v[z] = val;
      double ngp = dsqrt(phi_norm_sq(gp, w));
      for (int m = 1; m + p <= pn; ++m) {
        TestFunction dm = sigma_star_deriv(gp, xi, m);
        auto by_len = phi_norm_sq_by_length(dm, w);
        for (auto& [r, sq] : by_len) CHECK(r == m + p);
        double bound = to_double(Rat(factorial(unsigned(m + p))) / Rat(factorial(unsigned(p)))) *
                       std::pow(nxi, m) * ngp;
        if (by_len.count(m + p)) CHECK(dsqrt(by_len.at(m + p)) <= bound * (1 + 1e-12) + 1e-12);
      }
    }
  }
}

TEST_CASE("doubling pushforward: adjoint identity and weight contraction") {
  Torus t{1, 2, 1};
  LayoutPtr base = susy_layout(t);
  LayoutPtr dl = doubled_layout(base);
  Rng rng(808);

  SUBCASE("adjoint against the doubling homomorphism") {
    for (int trial = 0; trial < 4; ++trial) {
      Element f = random_element(rng, base, {0}, {1}, 2, 2, 3);
      TestFunction g = random_testfn(rng, dl, {0, 1}, {2, 3}, 3, 4, 8);
      FieldAssign phi = random_complex_field(rng, *base, {0});
      FieldAssign xi = random_complex_field(rng, *base, {0});
      RC lhs = pairing(theta(f), g, assign_union(phi, xi));
      RC rhs = pairing(f, theta_star(g), assign_sum(phi, xi));
      CHECK((lhs - rhs).is_zero());
    }
  }

  SUBCASE("contraction from the union weight to the sum weight") {
    Weight w = make_weight(base, Rat(1, 2), 1, 2);
    Weight wp = make_weight(base, Rat(1, 3), 1, 2);
    Weight join = weight_union(w, wp);
    Weight sum = weight_sum(w, wp);
    for (int trial = 0; trial < 4; ++trial) {
      TestFunction g = random_testfn(rng, dl, {0, 1}, {2, 3}, 3, 4, 8);
      CHECK(phi_norm_sq(theta_star(g), sum) <= phi_norm_sq(g, join));
    }
  }
}

TEST_CASE("localized field norm") {
  Rng rng(909);

  SUBCASE("all sites constrained equals the global norm") {
    Torus t{1, 2, 1};
    LayoutPtr l = boson_layout(t);
    FieldAssign phi = random_real_field(rng, *l, {0});
    Weight w0 = make_weight(l, Rat(1, 2), 0, 1);
    Interval i0 = field_local_norm(phi, l, 0, w0, {0, 1});
    CHECK(i0.lo == i0.hi);
    CHECK(i0.lo == doctest::Approx(dsqrt(phi_norm_sq(field_test_function(l, 0, phi), w0))));
    Weight w1 = make_weight(l, Rat(1, 2), 1, 1);
    Interval i1 = field_local_norm(phi, l, 0, w1, {0, 1}, 8);
    CHECK(i1.lo ==
          doctest::Approx(dsqrt(phi_norm_sq(field_test_function(l, 0, phi), w1))).epsilon(1e-12));
  }

  SUBCASE("a field supported off the window costs nothing") {
    Torus t{1, 1, 4};
    LayoutPtr l = boson_layout(t);
    FieldAssign phi;
    phi.set(lab(0, 0, 3), RC(Rat(9, 2)));
    phi.set(lab(0, 1, 3), RC(Rat(9, 2)));
    Weight w0 = make_weight(l, Rat(1, 2), 0, 1);
    CHECK(field_local_norm(phi, l, 0, w0, {0, 1}).lo == 0.0);
    Weight w1 = make_weight(l, Rat(1, 2), 1, 1);
    Interval i1 = field_local_norm(phi, l, 0, w1, {0, 1}, 3);
    CHECK(i1.lo == 0.0);
    CHECK(i1.hi == 0.0);
  }

  SUBCASE("monotone in the window") {
    Torus t{1, 1, 4};
    LayoutPtr l = boson_layout(t);
    Weight w = make_weight(l, Rat(1, 2), 1, 1);
    for (int trial = 0; trial < 3; ++trial) {
      FieldAssign phi = random_real_field(rng, *l, {0});
      double a = field_local_norm(phi, l, 0, w, {1}, 3).lo;
      double b = field_local_norm(phi, l, 0, w, {1, 2}, 3).lo;
      CHECK(a <= b + 1e-12);
    }
  }
}

TEST_CASE("polynomial-corrected local norm") {
  Torus t{1, 1, 4};
  LayoutPtr l = boson_layout(t);
  Rat h(1, 2);
  // A field linear in the unwrapped coordinate of the box {3,0,1}.
  FieldAssign lin;
  lin.set(lab(0, 0, 3), RC(Rat(0)));
  lin.set(lab(0, 1, 3), RC(Rat(0)));
  lin.set(lab(0, 0, 0), RC(Rat(1)));
  lin.set(lab(0, 1, 0), RC(Rat(1)));
  lin.set(lab(0, 0, 1), RC(Rat(2)));
  lin.set(lab(0, 1, 1), RC(Rat(2)));
  lin.set(lab(0, 0, 2), RC(Rat(5)));
  lin.set(lab(0, 1, 2), RC(Rat(5)));
  std::vector<int> box{3, 0, 1};

  SUBCASE("degree one absorbs a linear field across the wrap") {
    Weight w = make_weight(l, h, 1, 1);
    Interval i = field_poly_local_norm(lin, l, 0, w, box, 1, 3);
    CHECK(i.lo == 0.0);
    CHECK(i.hi == 0.0);
  }

  SUBCASE("degree zero leaves the slope") {
    Weight w = make_weight(l, h, 1, 1);
    Interval i = field_poly_local_norm(lin, l, 0, w, box, 0, 4);
    CHECK(i.lo == doctest::Approx(2.0).epsilon(1e-12));  // (1/h) * minimax 1
    CHECK(i.hi >= 2.0 - 1e-12);
  }

  SUBCASE("polynomial corrections only help") {
    Rng rng(1010);
    Weight w = make_weight(l, h, 1, 1);
    for (int trial = 0; trial < 3; ++trial) {
      FieldAssign phi = random_real_field(rng, *l, {0});
      double with_poly = field_poly_local_norm(phi, l, 0, w, {0, 1}, 0, 3).lo;
      double plain = field_local_norm(phi, l, 0, w, {0, 1}, 3).lo;
      CHECK(with_poly <= plain + 1e-12);
    }
  }

  SUBCASE("a box covering a full axis cannot be unwrapped") {
    Weight w = make_weight(l, h, 1, 1);
    CHECK_THROWS(field_poly_local_norm(lin, l, 0, w, {0, 1, 2, 3}, 1, 3));
  }
}

TEST_CASE("phase grid certifies complex data") {
  Torus t{1, 2, 1};
  LayoutPtr l = susy_layout(t);
  Rat h(1, 2);
  Weight w = make_weight(l, h, 0, 1);
  FieldAssign phi;
  phi.set(lab(0, 0, 0), RC(Rat(3, 2)));
  phi.set(lab(0, 1, 0), RC(Rat(3, 2)));
  Element f = Element::boson(l, lab(0, 0, 0)).scaled(RC(Rat(1), Rat(1)));

  NormParams lp{w, NormMode::lp_real, 4, -1, 8};
  CHECK_THROWS(tphi_seminorm(f, phi, lp));  // complex data rejected by the simplex mode

  NormParams gr{w, NormMode::grid_complex, 4, -1, 8};
  NormCertificate cert = tphi_seminorm(f, phi, gr);
  double target = std::sqrt(2.0) * 2.0;  // |1+i| (|phi_x| + h)
  CHECK(cert.value <= target + 1e-12);
  CHECK(cert.value >= cert.rigor_factor * target - 1e-12);
  CHECK(cert.rigor_factor == doctest::Approx(std::cos(std::numbers::pi / 8)));
  CHECK(!cert.exact);

  ReplayReport rep = certificate_replay(f, phi, gr, cert);
  CHECK(rep.ball_sq <= Rat(1));
  CHECK(rep.pairing_abs >= cert.value - 1e-12);
}

TEST_CASE("certificates replay exactly in simplex mode") {
  Torus t{1, 2, 1};
  LayoutPtr l = susy_layout(t);
  Weight w = make_weight(l, Rat(1, 2), 0, 1);
  Rng rng(1111);
  for (int trial = 0; trial < 3; ++trial) {
    Element f = random_element(rng, l, {0}, {1}, 2, 2, 3, true);
    if (f.is_zero()) continue;
    FieldAssign phi = random_real_field(rng, *l, {0});
    NormParams lp{w, NormMode::lp_real, 4, -1, 8};
    NormCertificate cert = tphi_seminorm(f, phi, lp);
    ReplayReport rep = certificate_replay(f, phi, lp, cert);
    CHECK(rep.exact_match);
    CHECK(rep.ball_sq <= Rat(1));
    CHECK(rep.pairing_abs == doctest::Approx(cert.value));
  }
}
