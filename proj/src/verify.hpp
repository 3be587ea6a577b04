#pragma once

#include <functional>
#include <string>
#include <vector>

#include "regulator.hpp"
#include "serialize.hpp"

namespace tphi {

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

enum class LayoutFamily { boson, fermion, susy };
enum class CoeffDist { rational_grid, complex_unit };

// Everything a suite needs to draw reproducible random instances: the torus,
// the species family, the size caps, the coefficient distribution, and the
// master seed. (spec, seed, trial index) determines each instance bit-exactly.
struct InstanceSpec {
  Torus torus{1, 2, 1};
  LayoutFamily family = LayoutFamily::susy;
  int max_degree = 3;    // boson degree cap per polynomial term
  int max_fermions = 2;  // fermion word length cap
  int nterms = 3;        // summands per random element
  CoeffDist dist = CoeffDist::rational_grid;
  uint64_t seed = 1;
};

LayoutPtr instance_layout(const InstanceSpec& spec);
std::vector<int> instance_boson_positions(const InstanceSpec& spec);
std::vector<int> instance_fermion_positions(const InstanceSpec& spec);

// Random element over the spec's layout; real_coeffs forces the rational grid
// even when the spec asks for complex coefficients (exact-arithmetic suites).
Element instance_element(const InstanceSpec& spec, Rng& rng, bool real_coeffs);
Poly instance_poly(const InstanceSpec& spec, Rng& rng, bool real_coeffs);
FieldAssign instance_field(const InstanceSpec& spec, Rng& rng, bool real_valued);
RatMat instance_spd(Rng& rng, int n);
RatMat instance_symmetric_invertible(Rng& rng, int n);

Json json_of_spec(const InstanceSpec& spec);
InstanceSpec spec_of_json(const Json& j);

// ---------------------------------------------------------------------------
// Independent oracles
// ---------------------------------------------------------------------------

// Grassmann integral over the generators listed in `order`, computed by literal
// expansion in a bitmask exterior algebra: no determinant shortcuts, no shared
// code with the production route. Coefficients may involve bosons but no
// fermion generator outside of `order`. Guard: |order| <= 8.
Element oracle_grassmann_integral(const Element& f, const IndexSeq& order);

// Normalized fermionic expectation <F> = integral(e^{-S} F) / integral(e^{-S})
// with S = sum psibar_k (C^{-1})_{kl} psi_l over the conjugate pair species at
// `fermion_pos`, built solely on oracle_grassmann_integral.
Element oracle_grassmann_expectation(const Element& f, const RatMat& cf, int fermion_pos);

// Wick/Isserlis moment for a word of boson generators: the sum over perfect
// matchings that pair each unbarred factor with a barred one, each matching
// weighted by prod C_b[barred site][unbarred site]. Guard: <= 10 factors.
RC oracle_isserlis(const std::vector<Key>& word, const RatMat& cb);

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

struct PropertyReport {
  std::string id;
  long trials = 0;
  long violations = 0;
  // Minimum margin (rhs - lhs, normalized where stated in the suite) seen over
  // all trials; >= 0 whenever the suite passes, negative on violations.
  double worst_slack = 0.0;
  double runtime_ms = 0.0;
  std::string fingerprint;

  bool passed() const { return violations == 0; }
};

Json json_of_report(const PropertyReport& r);
PropertyReport report_of_json(const Json& j);

std::string environment_fingerprint();

struct SuiteInfo {
  std::string id;
  std::string summary;
};

// The fixed catalog: one suite per module invariant plus the proposition-level
// checks the acceptance gate runs. Sorted by id; ids are unique.
const std::vector<SuiteInfo>& suite_registry();
bool suite_known(const std::string& id);

// Runs `trials` independent trials of the suite (substream seeded by trial
// index, merged deterministically in index order regardless of worker count).
// Collects every violation instead of aborting; throws only on unknown ids.
PropertyReport run_suite(const std::string& id, const InstanceSpec& spec, long trials,
                         int workers = 1);

// ---------------------------------------------------------------------------
// Shared numerics used by suites and the acceptance gate
// ---------------------------------------------------------------------------

// Nodes and weights of the n-point Gauss-Hermite rule for weight e^{-x^2},
// via the symmetric tridiagonal Jacobi matrix.
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

// |det(<u_i, v_j>)|^2 and prod <u_i,u_i><v_i,v_i> for exact complex vectors
// under the standard inner product <u,v> = sum conj(u_k) v_k.
struct GramCheck {
  Rat det_sq;
  Rat bound_sq;
  bool holds = false;
};
GramCheck gram_inequality_check(const std::vector<std::vector<RC>>& u,
                                const std::vector<std::vector<RC>>& v);

// Exact T_phi(h) seminorm at derivative order 0 as an explicit class sum
//   sum_c h^{|z_c|}/nu_c! * |F_c(phi)|,
// independent of the production evaluator (used to cross-check it and to
// drive the interpolation bound below). Real data only.
Rat class_sum_seminorm(const Element& f, const FieldAssign& phi, const Rat& h);

// Rational upper bound for sup_{0<=t<=1} ||F||_{T_{t phi}(h)} at order 0 via
// Bernstein enclosures of each class polynomial t -> F_c(t phi). Real data.
Rat sup_seminorm_upper(const Element& f, const FieldAssign& phi, const Rat& h);

}  // namespace tphi
