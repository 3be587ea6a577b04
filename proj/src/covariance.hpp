#pragma once

#include "layout.hpp"

namespace tphi {

using RatMat = std::vector<std::vector<Rat>>;

inline RatMat rat_zeros(int n) { return RatMat(n, std::vector<Rat>(n, Rat(0))); }
inline RatMat rat_identity(int n) {
  RatMat m = rat_zeros(n);
  for (int i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}
RatMat rat_add(const RatMat& a, const RatMat& b);
RatMat rat_scale(const RatMat& a, const Rat& s);
Rat rat_det(RatMat m);
RatMat rat_inv(RatMat m);
bool rat_symmetric(const RatMat& m);
bool rat_spd(const RatMat& m);  // symmetric with positive leading principal minors

// kappa^{graph distance} on the torus sites; strictly diagonally dominant
// (hence SPD) whenever sum_{y != x} kappa^{d(x,y)} < 1, which holds for
// kappa <= 1/4 on every torus with at least 2^d * ... comfortably at desk scale;
// callers can assert rat_spd exactly.
RatMat decaying_covariance(const Torus& t, const Rat& kappa);

// Covariances for one complex-boson pair and one conjugate-fermion pair over the
// same label set {0..M-1}. Either matrix may be empty when the species is absent.
struct CovariancePair {
  RatMat Cb;  // SPD
  RatMat Cf;  // symmetric invertible

  int Mb() const { return (int)Cb.size(); }
  int Mf() const { return (int)Cf.size(); }

  static CovariancePair supersymmetric(const RatMat& c) { return CovariancePair{c, c}; }

  // Assembled fermion matrix in the moment convention: rows/cols labelled
  // psi_1..psi_M, psibar_1..psibar_M with E psi_u psi_v = -entry(u,v),
  // i.e. [[0, Cf], [-Cf^T, 0]].
  RatMat assembled_fermion_moment() const;
  // Assembled boson matrix in the same convention: rows/cols labelled
  // phi_1..phi_M, phibar_1..phibar_M with E phi_u phi_v = entry(u,v),
  // i.e. [[0, Cb], [Cb^T, 0]] (symmetric since bosons commute).
  RatMat assembled_boson_moment() const;
  // Assembled real-coordinate boson matrix (1/2) diag(Cb, Cb).
  RatMat assembled_boson_real() const;
};

}  // namespace tphi
