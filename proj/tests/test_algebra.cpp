#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gaussian.hpp"
#include "test_support.hpp"

using namespace tphi;

namespace {
Torus t1{1, 1, 2};  // two sites
LayoutPtr L = susy_layout(t1);
Key phi0 = pack(0, 0, 0), phib0 = pack(0, 1, 0), phi1 = pack(0, 0, 1);
Key psi0 = pack(1, 0, 0), psib0 = pack(1, 1, 0), psi1 = pack(1, 0, 1), psib1 = pack(1, 1, 1);

Element el_f(Key k) { return Element::fermion(L, k); }
Element el_b(Key k) { return Element::boson(L, k); }
}  // namespace

TEST_CASE("monomial canonicalization tracks parity and kills repeats") {
  SortResult r = mono_canonicalize({psi1, psi0});
  CHECK(r.sign == -1);
  CHECK(r.mono == Mono{psi0, psi1});
  CHECK_FALSE(r.zero);
  CHECK(mono_canonicalize({psi0, psi0}).zero);
  r = mono_canonicalize({psib0, psi0, psi1});
  // two transpositions: even
  CHECK(r.sign == 1);
  CHECK(r.mono == Mono{psi0, psi1, psib0});
  SortResult m = mono_merge({psi0, psib0}, {psi1, psib1});
  CHECK(m.sign == -1);  // psi1 crosses psib0: one transposition
  CHECK(m.mono == Mono{psi0, psi1, psib0, psib1});
  CHECK(mono_merge({psi0}, {psi0}).zero);
}

TEST_CASE("fermion generators anticommute and square to zero") {
  CHECK((el_f(psi0) * el_f(psi1) + el_f(psi1) * el_f(psi0)).is_zero());
  CHECK((el_f(psi0) * el_f(psi0)).is_zero());
  CHECK((el_f(psi0) * el_f(psib0) + el_f(psib0) * el_f(psi0)).is_zero());
}

TEST_CASE("bosons commute with everything") {
  Element a = el_b(phi0) * el_f(psi0);
  Element b = el_f(psi0) * el_b(phi0);
  CHECK(a == b);
  CHECK(el_b(phi0) * el_b(phib0) == el_b(phib0) * el_b(phi0));
}

TEST_CASE("product is associative and distributive on random elements") {
  Rng rng(20);
  for (int trial = 0; trial < 25; ++trial) {
    Element a = random_element(rng, L, {0}, {1}, 2, 3, 3);
    Element b = random_element(rng, L, {0}, {1}, 2, 3, 3);
    Element c = random_element(rng, L, {0}, {1}, 2, 3, 3);
    CHECK((a * b) * c == a * (b * c));
    CHECK((a + b) * c == a * c + b * c);
    CHECK(c * (a + b) == c * a + c * b);
  }
}

TEST_CASE("interior derivative on hand-checked words") {
  Element f = el_f(psi0) * el_f(psi1);
  CHECK(f.fermion_derivative(psi0) == el_f(psi1));
  CHECK(f.fermion_derivative(psi1) == el_f(psi0).scaled(RC(Rat(-1))));
  CHECK(f.fermion_derivative(psib0).is_zero());
}

TEST_CASE("interior derivatives anticommute") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    Element a = random_element(rng, L, {0}, {1}, 2, 4, 4);
    for (Key u : {psi0, psib0, psi1}) {
      CHECK(a.fermion_derivative(u).fermion_derivative(u).is_zero());
      for (Key v : {psib1, psi1}) {
        Element uv = a.fermion_derivative(v).fermion_derivative(u);
        Element vu = a.fermion_derivative(u).fermion_derivative(v);
        CHECK(uv == vu.scaled(RC(Rat(-1))));
      }
    }
  }
}

TEST_CASE("interior derivative is an anti-derivation") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    // Build parity-homogeneous left factors: a single word times a polynomial.
    Mono word{psi0, psib1};
    Element f = Element::zero(L);
    f.add(word, random_poly(rng, *L, {0}, 2, 2));
    Element g = random_element(rng, L, {0}, {1}, 2, 3, 3);
    for (Key u : {psi0, psib0, psi1, psib1}) {
      Element lhs = (f * g).fermion_derivative(u);
      // |f| = 2 (even), so no sign flip on the second term.
      Element rhs = f.fermion_derivative(u) * g + f * g.fermion_derivative(u);
      CHECK(lhs == rhs);
    }
    Element fo = Element::zero(L);
    fo.add(Mono{psib0}, random_poly(rng, *L, {0}, 2, 2));
    for (Key u : {psi0, psib0, psi1, psib1}) {
      Element lhs = (fo * g).fermion_derivative(u);
      Element rhs = fo.fermion_derivative(u) * g - fo * g.fermion_derivative(u);
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("boson derivative satisfies Leibniz") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Element f = random_element(rng, L, {0}, {1}, 3, 2, 3);
    Element g = random_element(rng, L, {0}, {1}, 3, 2, 3);
    for (Key x : {phi0, phib0, phi1}) {
      CHECK((f * g).boson_derivative(x) ==
            f.boson_derivative(x) * g + f * g.boson_derivative(x));
    }
  }
}

TEST_CASE("coefficient function is the antisymmetric extension of stored data") {
  Element f = el_f(psi1) * el_f(psi0);  // stored as -psi0 psi1
  FieldAssign phi;
  CHECK(f.coefficient(IndexSeq{psi0, psi1}, phi) == RC(Rat(-1)));
  CHECK(f.coefficient(IndexSeq{psi1, psi0}, phi) == RC(Rat(1)));
  CHECK(f.coefficient(IndexSeq{psi0, psi0}, phi).is_zero());

  // Mixed boson/fermion: F = phi0^2 psi0, z = (phi0, psi0) gives d/dphi0 at phi.
  Element g = el_b(phi0) * el_b(phi0) * el_f(psi0);
  FieldAssign a;
  a.set(phi0, RC(Rat(3)));
  CHECK(g.coefficient(IndexSeq{phi0, psi0}, a) == RC(Rat(6)));
  CHECK(g.coefficient(IndexSeq{phi0, phi0, psi0}, a) == RC(Rat(2)));
}

TEST_CASE("species-ordered sequences and factorials") {
  IndexSeq z{phi0, phi1, psi0};
  CHECK(seq_species_ordered(z));
  CHECK_FALSE(seq_species_ordered(IndexSeq{psi0, phi0}));
  CHECK(seq_factorial(z) == Int(2));
  CHECK(seq_factorial(IndexSeq{phi0, phi1, phi0, psi0, psi1}) == Int(12));
  IndexSeq shuffled{psi0, phi1, phi0};
  IndexSeq sorted = seq_sorted_by_species(shuffled);
  CHECK(sorted == IndexSeq{phi1, phi0, psi0});
}

TEST_CASE("exponential of a nilpotent element terminates exactly") {
  // N = c psi0 psib0: exp(N) = 1 + N.
  Element n = Element::zero(L);
  n.add(Mono{psi0, psib0}, Poly::constant(RC(Rat(2, 3))));
  Element e = taylor_exponential(n, 10);
  Element expect = Element::constant(L, RC(Rat(1))) + n;
  CHECK(e == expect);
  CHECK(e.truncation_degree == -1);

  // Two commuting even words: exp(a+b) = 1 + a + b + ab.
  Element b = Element::zero(L);
  b.add(Mono{psi1, psib1}, Poly::constant(RC(Rat(1), Rat(1))));
  Element s = n + b;
  Element es = taylor_exponential(s, 10);
  CHECK(es == taylor_exponential(n, 10) * taylor_exponential(b, 10));
}

TEST_CASE("exponential truncates pure boson parts at the requested degree") {
  Element f = el_b(phi0);
  Element e = taylor_exponential(f, 3);
  CHECK(e.truncation_degree == 3);
  // 1 + x + x^2/2 + x^3/6
  Element expect = Element::constant(L, RC(Rat(1))) + f + (f * f).scaled(RC(Rat(1, 2))) +
                   (f * f * f).scaled(RC(Rat(1, 6)));
  CHECK(e == expect);
  CHECK_THROWS(taylor_exponential(Element::constant(L, RC(Rat(1))), 3));
  CHECK_THROWS(taylor_exponential(el_f(psi0), 3));  // odd fermion degree
}

TEST_CASE("element degree bookkeeping") {
  Element f = el_b(phi0) * el_b(phi0) * el_f(psi0) * el_f(psib1);
  CHECK(f.degree() == 4);
  CHECK(f.max_fermion_length() == 2);
  CHECK(f.boson_part().is_zero());
  CHECK((f + Element::constant(L, RC(Rat(5)))).boson_part().constant_term() == RC(Rat(5)));
}
