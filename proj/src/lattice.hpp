#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tphi {

// Discrete torus Z^d / (m*R Z)^d, sites encoded row-major. Blocks are the m^d
// translates of the side-R cube, indexed row-major on the block grid.
struct Torus {
  int d = 1;
  int R = 1;
  int m = 1;

  int side() const { return R * m; }
  int nsites() const {
    int n = 1;
    for (int k = 0; k < d; ++k) n *= side();
    return n;
  }
  int nblocks() const {
    int n = 1;
    for (int k = 0; k < d; ++k) n *= m;
    return n;
  }

  std::vector<int> coords(int site) const {
    std::vector<int> c(d);
    for (int k = d - 1; k >= 0; --k) {
      c[k] = site % side();
      site /= side();
    }
    return c;
  }
  int site(const std::vector<int>& c) const {
    int s = 0;
    for (int k = 0; k < d; ++k) {
      int v = ((c[k] % side()) + side()) % side();
      s = s * side() + v;
    }
    return s;
  }

  // Unit step along axis (0-based), step = +1 or -1, with wraparound.
  int shift(int x, int axis, int step) const {
    std::vector<int> c = coords(x);
    c[axis] += step;
    return site(c);
  }

  // L1 (graph) distance with wraparound.
  int l1_dist(int x, int y) const {
    std::vector<int> a = coords(x), b = coords(y);
    int s = 0;
    for (int k = 0; k < d; ++k) {
      int delta = a[k] > b[k] ? a[k] - b[k] : b[k] - a[k];
      s += delta < side() - delta ? delta : side() - delta;
    }
    return s;
  }

  int block_of(int x) const {
    std::vector<int> c = coords(x);
    int b = 0;
    for (int k = 0; k < d; ++k) b = b * m + c[k] / R;
    return b;
  }
  std::vector<int> block_sites(int b) const {
    std::vector<int> corner(d);
    for (int k = d - 1; k >= 0; --k) {
      corner[k] = (b % m) * R;
      b /= m;
    }
    std::vector<int> out;
    std::vector<int> off(d, 0);
    for (;;) {
      std::vector<int> c(d);
      for (int k = 0; k < d; ++k) c[k] = corner[k] + off[k];
      out.push_back(site(c));
      int k = d - 1;
      while (k >= 0 && ++off[k] == R) off[k--] = 0;
      if (k < 0) break;
    }
    return out;
  }

  bool operator==(const Torus& o) const { return d == o.d && R == o.R && m == o.m; }
};

// Multi-index over the 2d signed unit directions +e1,-e1,...,+ed,-ed.
// Direction j: axis j/2, sign +1 for even j, -1 for odd j.
struct MultiIndex {
  std::vector<uint8_t> c;  // length 2d

  explicit MultiIndex(int d = 0) : c(2 * d, 0) {}
  int order() const {
    int s = 0;
    for (auto v : c) s += v;
    return s;
  }
  bool operator==(const MultiIndex& o) const { return c == o.c; }
  bool operator<(const MultiIndex& o) const { return c < o.c; }
};

// Forward difference along signed direction j acting on a site-indexed array.
template <class T>
std::vector<T> forward_difference(const Torus& t, const std::vector<T>& f, int dir) {
  int axis = dir / 2, step = (dir % 2 == 0) ? 1 : -1;
  std::vector<T> g(f.size());
  for (int x = 0; x < (int)f.size(); ++x) g[x] = f[t.shift(x, axis, step)] - f[x];
  return g;
}

template <class T>
std::vector<T> apply_multiindex(const Torus& t, std::vector<T> f, const MultiIndex& a) {
  for (int j = 0; j < (int)a.c.size(); ++j)
    for (int r = 0; r < a.c[j]; ++r) f = forward_difference(t, f, j);
  return f;
}

// Enumerates multi-indices with |a|_1 <= maxorder.
std::vector<MultiIndex> multiindices_up_to(int d, int maxorder);

// Block-level geometry: connectivity (sup-metric distance 1, corners included),
// small sets (connected polymers of at most 2^d blocks) and the closure X -> X^box.
struct BlockGeometry {
  Torus torus;
  int nblocks;
  std::vector<std::vector<int>> block_neighbors;  // excluding the block itself
  std::vector<uint64_t> small_sets;               // bitmasks over blocks
  std::vector<uint64_t> block_box;                // union of small sets containing b

  explicit BlockGeometry(const Torus& t);

  int small_set_size_cap() const { return 1 << torus.d; }
  bool blocks_connected_set(uint64_t mask) const;
  bool is_small_set(uint64_t mask) const;

  // X given as a site set; returns the sites of X^box.
  std::vector<int> closure_sites(const std::vector<int>& x_sites) const;
  uint64_t closure_blocks(uint64_t block_mask) const;
  uint64_t blocks_touching(const std::vector<int>& x_sites) const;
  std::vector<int> sites_of_blocks(uint64_t block_mask) const;
};

}  // namespace tphi
