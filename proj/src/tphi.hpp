#pragma once

#include "gaussian.hpp"
#include "lp.hpp"
#include "testfn.hpp"

namespace tphi {

// How the test-function sup is computed.
//  exact_p0:     closed form, derivative order 0 weights only; exact.
//  lp_real:      exact rational simplex over symmetrised test functions; exact
//                for real coefficient data (which it verifies), any p_phi.
//  grid_complex: max of rotated real programs over a rational phase grid; a
//                certified lower bound valid for complex data.
enum class NormMode { exact_p0, lp_real, grid_complex };

struct NormParams {
  Weight w;
  NormMode mode = NormMode::exact_p0;
  int pn_cap = 4;     // boson-component cap of the test-function class
  int len_cap = -1;   // total-length cap; -1 derives the smallest cap covering f
  int rotations = 8;  // grid mode: even number of phases on the upper half circle
};

struct NormCertificate {
  std::string mode;
  double value = 0;  // reported seminorm (grid mode: certified lower bound)
  bool exact = false;
  Rat exact_value = Rat(0);  // set when exact
  // grid mode: value >= rigor_factor * (sup over real test functions); the sup
  // over complex test functions can exceed the real one.
  double rigor_factor = 1.0;
  int p_phi = 0;
  int pn_cap = 0;
  int len_cap = 0;
  int rotations = 0;
  int best_rotation = -1;
  int nvars = 0;
  int nrows = 0;
  // Symmetric witness test function: feasible for the unit ball, and the pairing
  // against f attains the reported value (lp/grid modes).
  std::map<IndexSeq, RC> optimizer;
};

// ||f||_{T_phi(w)} = sup over the unit ball of the w-norm of <f, g>_phi.
NormCertificate tphi_seminorm(const Element& f, const FieldAssign& phi, const NormParams& par);

// Re-derives the certificate's claims from its stored witness.
struct ReplayReport {
  double pairing_abs = 0;   // |<f, g_opt>_phi|
  Rat ball_sq = Rat(0);     // exact ||g_opt||_Phi^2, must be <= 1
  bool exact_match = false; // lp mode: pairing equals the stored rational exactly
};
ReplayReport certificate_replay(const Element& f, const FieldAssign& phi, const NormParams& par,
                                const NormCertificate& cert);

struct Interval {
  double lo = 0, hi = 0;
};

// Localized field norm: distance in the Phi(w) norm from the space of fields
// supported off the site set X (components inside X cannot be corrected).
// Exact (lo == hi) at p_phi = 0 and for real field data at any order; complex
// data at positive order gets a phase-grid minimax bracket [lo, hi] with
// hi = lo / cos(1/quarter_points). Both conjugate components are handled via
// f_bar = conj(f), valid since the weights are conjugation-symmetric.
Interval field_local_norm(const FieldAssign& phi, LayoutPtr l, int species_pos, const Weight& w,
                          const std::vector<int>& x_sites, int quarter_points = 8);

// Same with the correction space enlarged to fields that agree with a lattice
// polynomial of total degree <= poly_degree on box_sites (free elsewhere).
// box_sites must unwrap to a genuine box on the torus; throws when it wraps.
Interval field_poly_local_norm(const FieldAssign& phi, LayoutPtr l, int species_pos,
                               const Weight& w, const std::vector<int>& box_sites,
                               int poly_degree, int quarter_points = 8);

}  // namespace tphi
