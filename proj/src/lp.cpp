#include "lp.hpp"

#include <stdexcept>

namespace tphi {

namespace {

struct Simplex {
  int m = 0, n = 0;                 // rows, columns excluding the rhs
  std::vector<std::vector<Rat>> T;  // m rows of length n+1, rhs last
  std::vector<Rat> obj;             // reduced-cost row; current value = -obj[n]
  std::vector<int> basis;

  void pivot(int pr, int pc) {
    Rat piv = T[pr][pc];
    for (int j = 0; j <= n; ++j) T[pr][j] /= piv;
    T[pr][pc] = 1;
    for (int i = 0; i < m; ++i) {
      if (i == pr) continue;
      Rat f = T[i][pc];
      if (f == 0) continue;
      for (int j = 0; j <= n; ++j) T[i][j] -= f * T[pr][j];
      T[i][pc] = 0;
    }
    Rat f = obj[pc];
    if (f != 0) {
      for (int j = 0; j <= n; ++j) obj[j] -= f * T[pr][j];
      obj[pc] = 0;
    }
    basis[pr] = pc;
  }

  // Dantzig pricing (steepest reduced cost) for speed, falling back to Bland's
  // rule after a pivot budget so termination stays guaranteed under degeneracy.
  // Returns false when unbounded.
  bool solve(const std::vector<bool>& allowed) {
    long iter = 0;
    const long bland_after = 16L * (m + n + 16);
    for (;;) {
      int pc = -1;
      if (++iter < bland_after) {
        Rat best_cost(0);
        for (int j = 0; j < n; ++j)
          if (allowed[j] && obj[j] > best_cost) {
            pc = j;
            best_cost = obj[j];
          }
      } else {
        for (int j = 0; j < n; ++j)
          if (allowed[j] && obj[j] > 0) {
            pc = j;
            break;
          }
      }
      if (pc < 0) return true;
      int pr = -1;
      Rat best(0);
      for (int i = 0; i < m; ++i) {
        if (T[i][pc] > 0) {
          Rat ratio = T[i][n] / T[i][pc];
          if (pr < 0 || ratio < best || (ratio == best && basis[i] < basis[pr])) {
            pr = i;
            best = ratio;
          }
        }
      }
      if (pr < 0) return false;
      pivot(pr, pc);
    }
  }
};

}  // namespace

LpResult lp_maximize(const LpProblem& p) {
  int m = (int)p.A.size();
  int nx = (int)p.c.size();
  for (auto& row : p.A)
    if ((int)row.size() != nx) throw std::runtime_error("lp: ragged constraint matrix");
  if ((int)p.b.size() != m) throw std::runtime_error("lp: rhs size mismatch");

  // Free x split as u - v; one slack per row; artificials for negative rhs rows.
  Simplex s;
  s.m = m;
  int nuv = 2 * nx, nslack = m;
  std::vector<int> art_of(m, -1);
  int nart = 0;
  for (int i = 0; i < m; ++i)
    if (p.b[i] < 0) art_of[i] = nart++;
  s.n = nuv + nslack + nart;
  s.T.assign(m, std::vector<Rat>(s.n + 1, Rat(0)));
  s.basis.assign(m, -1);
  for (int i = 0; i < m; ++i) {
    Rat sgn(p.b[i] < 0 ? -1 : 1);
    for (int j = 0; j < nx; ++j) {
      Rat a = sgn * p.A[i][j];
      s.T[i][j] = a;
      s.T[i][nx + j] = -a;
    }
    s.T[i][nuv + i] = sgn;
    s.T[i][s.n] = sgn * p.b[i];
    if (art_of[i] >= 0) {
      s.T[i][nuv + nslack + art_of[i]] = 1;
      s.basis[i] = nuv + nslack + art_of[i];
    } else {
      s.basis[i] = nuv + i;
    }
  }

  LpResult out;
  std::vector<bool> allowed(s.n, true);

  if (nart > 0) {
    // Phase 1: maximize minus the sum of artificials; eliminate basic columns.
    s.obj.assign(s.n + 1, Rat(0));
    for (int j = 0; j < nart; ++j) s.obj[nuv + nslack + j] = Rat(-1);
    for (int i = 0; i < m; ++i)
      if (art_of[i] >= 0)
        for (int j = 0; j <= s.n; ++j) s.obj[j] += s.T[i][j];
    for (int i = 0; i < m; ++i) s.obj[s.basis[i]] = 0;
    if (!s.solve(allowed)) throw std::runtime_error("lp: phase 1 unbounded");
    if (s.obj[s.n] != 0) return out;  // infeasible
    for (int i = 0; i < m; ++i) {
      if (s.basis[i] >= nuv + nslack) {  // leftover artificial at value zero
        int pc = -1;
        for (int j = 0; j < nuv + nslack; ++j)
          if (s.T[i][j] != 0) {
            pc = j;
            break;
          }
        if (pc >= 0) s.pivot(i, pc);  // else the row is redundant; leave it
      }
    }
    for (int j = nuv + nslack; j < s.n; ++j) allowed[j] = false;
  }
  out.feasible = true;

  // Phase 2: original objective, eliminated over the current basis.
  s.obj.assign(s.n + 1, Rat(0));
  for (int j = 0; j < nx; ++j) {
    s.obj[j] = p.c[j];
    s.obj[nx + j] = -p.c[j];
  }
  for (int i = 0; i < m; ++i) {
    Rat cb = s.basis[i] < nx             ? p.c[s.basis[i]]
             : s.basis[i] < nuv          ? -p.c[s.basis[i] - nx]
                                         : Rat(0);
    if (cb != 0)
      for (int j = 0; j <= s.n; ++j) s.obj[j] -= cb * s.T[i][j];
  }
  for (int i = 0; i < m; ++i) s.obj[s.basis[i]] = 0;

  if (!s.solve(allowed)) {
    out.bounded = false;
    return out;
  }
  out.bounded = true;
  out.value = -s.obj[s.n];
  std::vector<Rat> full(s.n, Rat(0));
  for (int i = 0; i < m; ++i) full[s.basis[i]] = s.T[i][s.n];
  out.x.assign(nx, Rat(0));
  for (int j = 0; j < nx; ++j) out.x[j] = full[j] - full[nx + j];
  return out;
}

}  // namespace tphi
