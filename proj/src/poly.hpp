#pragma once

#include <functional>
#include <map>

#include "layout.hpp"

namespace tphi {

// Multi-degree of a boson monomial: sorted (variable, exponent) pairs, exponents > 0.
using MultiDeg = std::vector<std::pair<Key, uint32_t>>;

// Polynomial over the complex rationals in commuting boson variables.
struct Poly {
  std::map<MultiDeg, RC> t;

  static Poly zero() { return {}; }
  static Poly constant(RC c) {
    Poly p;
    if (!c.is_zero()) p.t[{}] = std::move(c);
    return p;
  }
  static Poly var(Key k) {
    Poly p;
    p.t[{{k, 1}}] = RC(1);
    return p;
  }

  bool is_zero() const { return t.empty(); }
  RC constant_term() const {
    auto it = t.find({});
    return it == t.end() ? RC() : it->second;
  }

  void add_term(const MultiDeg& d, const RC& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = t.emplace(d, c);
    if (!fresh) {
      it->second += c;
      if (it->second.is_zero()) t.erase(it);
    }
  }

  Poly& operator+=(const Poly& o) {
    for (auto& [d, c] : o.t) add_term(d, c);
    return *this;
  }
  Poly& operator-=(const Poly& o) {
    for (auto& [d, c] : o.t) add_term(d, -c);
    return *this;
  }
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }

  Poly scaled(const RC& s) const {
    Poly r;
    if (s.is_zero()) return r;
    for (auto& [d, c] : t) r.t[d] = s * c;
    return r;
  }

  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly r;
    for (auto& [da, ca] : a.t)
      for (auto& [db, cb] : b.t) r.add_term(mul_deg(da, db), ca * cb);
    return r;
  }

  static MultiDeg mul_deg(const MultiDeg& a, const MultiDeg& b) {
    MultiDeg r;
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      if (j == b.size() || (i < a.size() && a[i].first < b[j].first))
        r.push_back(a[i++]);
      else if (i == a.size() || b[j].first < a[i].first)
        r.push_back(b[j++]);
      else {
        r.emplace_back(a[i].first, a[i].second + b[j].second);
        ++i, ++j;
      }
    }
    return r;
  }

  Poly derivative(Key x) const {
    Poly r;
    for (auto& [d, c] : t)
      for (size_t i = 0; i < d.size(); ++i)
        if (d[i].first == x) {
          MultiDeg nd = d;
          RC nc = Rat(d[i].second) * c;
          if (--nd[i].second == 0) nd.erase(nd.begin() + i);
          r.add_term(nd, nc);
        }
    return r;
  }

  int total_degree() const {
    int deg = 0;
    for (auto& [d, c] : t) {
      int s = 0;
      for (auto& [k, e] : d) s += (int)e;
      deg = std::max(deg, s);
    }
    return deg;
  }

  RC eval(const FieldAssign& phi) const {
    RC out;
    for (auto& [d, c] : t) {
      RC v = c;
      for (auto& [k, e] : d) {
        RC base = phi.at(k);
        for (uint32_t r = 0; r < e; ++r) v *= base;
        if (v.is_zero()) break;
      }
      out += v;
    }
    return out;
  }

  // Substitute x -> x + t * x' simultaneously for every variable with a mapping.
  Poly shifted(const std::function<Key(Key)>& renamed, const std::function<Key(Key)>& twin,
               const Rat& tscale) const {
    Poly out;
    for (auto& [d, c] : t) {
      Poly term = Poly::constant(c);
      for (auto& [k, e] : d) {
        Poly base;
        base.t[{{renamed(k), 1}}] = RC(1);
        base.add_term({{twin(k), 1}}, RC(tscale));
        Poly pw = Poly::constant(RC(1));
        for (uint32_t r = 0; r < e; ++r) pw = pw * base;
        term = term * pw;
      }
      out += term;
    }
    return out;
  }

  // Keep only terms free of the given variables (i.e. set them to zero).
  Poly dropped_vars(const std::function<bool(Key)>& kill) const {
    Poly r;
    for (auto& [d, c] : t) {
      bool dead = false;
      for (auto& [k, e] : d)
        if (kill(k)) {
          dead = true;
          break;
        }
      if (!dead) r.t[d] = c;
    }
    return r;
  }

  Poly renamed_vars(const std::function<Key(Key)>& f) const {
    Poly r;
    for (auto& [d, c] : t) {
      MultiDeg nd;
      for (auto& [k, e] : d) nd.emplace_back(f(k), e);
      std::sort(nd.begin(), nd.end());
      r.add_term(nd, c);
    }
    return r;
  }

  bool operator==(const Poly& o) const { return t == o.t; }
};

}  // namespace tphi
