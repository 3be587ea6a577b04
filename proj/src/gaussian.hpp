#pragma once

#include "covariance.hpp"
#include "element.hpp"

namespace tphi {

// Standard layouts: one complex boson pair and/or one conjugate fermion pair.
LayoutPtr susy_layout(const Torus& t);     // species 0 = boson, 1 = fermion
LayoutPtr boson_layout(const Torus& t);    // species 0 = boson
LayoutPtr fermion_layout(const Torus& t);  // species 0 = fermion

// Halves a doubled layout: keeps the even species positions, drops the primes.
LayoutPtr base_of_doubled(const Layout& dl);

// theta_t: homomorphism into the doubled layout, psi -> psi + t psi',
// f(phi) -> f(phi + t xi'). theta = theta_1.
Element theta(const Element& f, const Rat& t = Rat(1));

// Literal Grassmann integral: kills monomials that are not full enumerations of
// the generator list; the generator product in the given order integrates to 1.
Element grassmann_integral(const Element& f, const std::vector<Key>& ordered_generators);

// Integration order for a conjugate-pair species: site-ascending, bar first.
std::vector<Key> conj_pair_integration_order(const Layout& l, int species_pos);

enum class FermionRoute { determinant, brute_force };

// Integrates the fermion species at species_pos with covariance Cf; result lives
// on the same layout and no longer involves that species. The determinant route
// evaluates each monomial by the minor formula; the brute-force route multiplies
// by exp(-S_f) and integrates literally (normalization det Cf, never quadrature).
Element fermion_expectation(const Element& f, const RatMat& Cf, int species_pos,
                            FermionRoute route = FermionRoute::determinant);

// Integrates the boson species at species_pos: exp(half-Laplacian), then the
// integrated variables are set to zero.
Element boson_expectation(const Element& f, const RatMat& Cb, int species_pos);

// (Delta f) with Delta = 2 sum C_b[k][l] d/dphi_k d/dphibar_l
//                      + 2 sum C_f[k][l] d/dpsi_k d/dpsibar_l,
// the rightmost derivative acting first. Either matrix may be empty. Species
// without an entry here are external and contribute zero.
Element laplacian(const Element& f, const RatMat* Cb, int boson_pos, const RatMat* Cf,
                  int fermion_pos);

// exp(t/2 Delta) f; terminates because Delta lowers degree.
Element heat_semigroup(const Element& f, const RatMat* Cb, int boson_pos, const RatMat* Cf,
                       int fermion_pos, const Rat& t = Rat(1));

// Full Gaussian expectation on a doubled layout: integrates every primed species
// (fermions first, then bosons) and maps the result back to the base layout.
Element expectation_primed(const Element& f_doubled, const CovariancePair& c,
                           FermionRoute route = FermionRoute::determinant);

// E_C theta F, landing on the base layout.
Element expectation_theta(const Element& f, const CovariancePair& c,
                          FermionRoute route = FermionRoute::determinant);

// Exact residuals (max |coefficient|^2 of the difference); zero when the identity holds.
Rat convolution_residual(const Element& f, const CovariancePair& c1, const CovariancePair& c2);
Rat wick_residual(const Element& f, const CovariancePair& c);  // E_C theta vs exp(Delta/2)
Rat factorisation_residual(const Element& f1, const Element& f2, const CovariancePair& c);

}  // namespace tphi
