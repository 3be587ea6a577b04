#include "element.hpp"

namespace tphi {

SortResult mono_canonicalize(Mono word) {
  SortResult r;
  // Insertion sort, counting swaps; fine at desk-scale word lengths.
  int swaps = 0;
  for (size_t i = 1; i < word.size(); ++i) {
    Key k = word[i];
    size_t j = i;
    while (j > 0 && word[j - 1] > k) {
      word[j] = word[j - 1];
      --j;
      ++swaps;
    }
    word[j] = k;
  }
  for (size_t i = 1; i < word.size(); ++i)
    if (word[i] == word[i - 1]) {
      r.zero = true;
      return r;
    }
  r.mono = std::move(word);
  r.sign = (swaps % 2 == 0) ? 1 : -1;
  return r;
}

SortResult mono_merge(const Mono& a, const Mono& b) {
  SortResult r;
  r.mono.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  long crossings = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      r.zero = true;
      return r;
    }
    if (a[i] < b[j]) {
      r.mono.push_back(a[i++]);
    } else {
      crossings += long(a.size() - i);
      r.mono.push_back(b[j++]);
    }
  }
  while (i < a.size()) r.mono.push_back(a[i++]);
  while (j < b.size()) r.mono.push_back(b[j++]);
  r.sign = (crossings % 2 == 0) ? 1 : -1;
  return r;
}

Element& Element::operator+=(const Element& o) {
  for (auto& [m, p] : o.terms) add(m, p);
  return *this;
}

Element& Element::operator-=(const Element& o) {
  for (auto& [m, p] : o.terms) add(m, p.scaled(RC(Rat(-1))));
  return *this;
}

Element Element::scaled(const RC& s) const {
  Element r = zero(layout);
  if (s.is_zero()) return r;
  for (auto& [m, p] : terms) r.terms[m] = p.scaled(s);
  return r;
}

Element operator*(const Element& a, const Element& b) {
  Element r = Element::zero(a.layout);
  for (auto& [ma, pa] : a.terms)
    for (auto& [mb, pb] : b.terms) {
      SortResult sr = mono_merge(ma, mb);
      if (sr.zero) continue;
      Poly prod = pa * pb;
      if (sr.sign < 0) prod = prod.scaled(RC(Rat(-1)));
      r.add(sr.mono, prod);
    }
  return r;
}

Element Element::boson_derivative(Key x) const {
  Element r = zero(layout);
  for (auto& [m, p] : terms) r.add(m, p.derivative(x));
  return r;
}

Element Element::fermion_derivative(Key u) const {
  Element r = zero(layout);
  for (auto& [m, p] : terms)
    for (size_t j = 0; j < m.size(); ++j)
      if (m[j] == u) {
        Mono nm = m;
        nm.erase(nm.begin() + j);
        r.add(nm, (j % 2 == 0) ? p : p.scaled(RC(Rat(-1))));
        break;
      }
  return r;
}

int Element::degree() const {
  int deg = 0;
  for (auto& [m, p] : terms) deg = std::max(deg, (int)m.size() + p.total_degree());
  return deg;
}

int Element::max_fermion_length() const {
  int n = 0;
  for (auto& [m, p] : terms) n = std::max(n, (int)m.size());
  return n;
}

RC Element::coefficient(const IndexSeq& z, const FieldAssign& phi) const {
  Mono fword;
  std::vector<Key> bos;
  for (Key k : z)
    (is_fermion(*layout, k) ? fword : bos).push_back(k);
  SortResult sr = mono_canonicalize(std::move(fword));
  if (sr.zero) return RC();
  auto it = terms.find(sr.mono);
  if (it == terms.end()) return RC();
  Poly p = it->second;
  for (Key x : bos) {
    p = p.derivative(x);
    if (p.is_zero()) return RC();
  }
  RC v = p.eval(phi);
  return sr.sign < 0 ? -v : v;
}

Rat Element::max_coeff_abs2() const {
  Rat best(0);
  for (auto& [m, p] : terms)
    for (auto& [d, c] : p.t) best = std::max(best, c.abs2());
  return best;
}

Element taylor_exponential(const Element& f, int boson_cap) {
  for (auto& [m, p] : f.terms)
    if (m.size() % 2 != 0)
      throw std::runtime_error("taylor_exponential: odd fermion degree");
  Poly b = f.boson_part();
  if (!b.constant_term().is_zero())
    throw std::runtime_error("taylor_exponential: nonzero boson constant term");

  // Nilpotent part: every monomial carries >= 2 fermion generators.
  Element n = f;
  n.terms.erase(Mono{});

  Element expn = Element::constant(f.layout, RC(1));
  Element pw = Element::constant(f.layout, RC(1));
  Rat fact(1);
  for (int k = 1; !pw.is_zero(); ++k) {
    pw = pw * n;
    if (pw.is_zero()) break;
    fact *= k;
    expn += pw.scaled(RC(Rat(1) / fact));
  }

  Element result = expn;
  bool truncated = false;
  if (!b.is_zero()) {
    // exp of the boson part, truncated in total degree.
    Poly expb = Poly::constant(RC(1));
    Poly bpw = Poly::constant(RC(1));
    Rat bfact(1);
    int mindeg = boson_cap + 1;
    for (auto& [d, c] : b.t) {
      int s = 0;
      for (auto& [k, e] : d) s += (int)e;
      mindeg = std::min(mindeg, s);
    }
    for (int k = 1; k * mindeg <= boson_cap; ++k) {
      bpw = bpw * b;
      // Drop terms beyond the cap.
      Poly kept;
      for (auto& [d, c] : bpw.t) {
        int s = 0;
        for (auto& [kk, e] : d) s += (int)e;
        if (s <= boson_cap)
          kept.t[d] = c;
        else
          truncated = true;
      }
      bpw = kept;
      if (bpw.is_zero()) break;
      bfact *= k;
      expb += bpw.scaled(RC(Rat(1) / bfact));
    }
    if (!bpw.is_zero()) truncated = true;
    Element be = Element::zero(f.layout);
    be.add(Mono{}, expb);
    result = be * expn;
  }
  result.truncation_degree = truncated ? boson_cap : -1;
  return result;
}

}  // namespace tphi
