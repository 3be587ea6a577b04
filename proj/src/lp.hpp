#pragma once

#include <vector>

#include "rational.hpp"

namespace tphi {

// maximize c.x subject to A x <= b, x free; exact rational arithmetic.
struct LpProblem {
  std::vector<std::vector<Rat>> A;
  std::vector<Rat> b;
  std::vector<Rat> c;
};

struct LpResult {
  bool feasible = false;
  bool bounded = false;
  Rat value = Rat(0);
  std::vector<Rat> x;  // an optimizer (set when feasible and bounded)
};

// Dense two-phase primal simplex with Bland's rule: exact and always terminating.
LpResult lp_maximize(const LpProblem& p);

}  // namespace tphi
