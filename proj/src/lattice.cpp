#include "lattice.hpp"

#include <algorithm>
#include <set>

namespace tphi {

std::vector<MultiIndex> multiindices_up_to(int d, int maxorder) {
  std::vector<MultiIndex> out;
  MultiIndex a(d);
  // Odometer over 2d counters with total <= maxorder.
  for (;;) {
    if (a.order() <= maxorder) out.push_back(a);
    int j = 2 * d - 1;
    while (j >= 0) {
      if (++a.c[j] <= maxorder && a.order() <= maxorder) break;
      a.c[j--] = 0;
    }
    if (j < 0) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

BlockGeometry::BlockGeometry(const Torus& t) : torus(t), nblocks(t.nblocks()) {
  if (nblocks > 64) throw std::runtime_error("block geometry limited to 64 blocks");

  // Block torus coordinates and sup-metric adjacency.
  auto bcoords = [&](int b) {
    std::vector<int> c(t.d);
    for (int k = t.d - 1; k >= 0; --k) {
      c[k] = b % t.m;
      b /= t.m;
    }
    return c;
  };
  auto torus_dist_inf = [&](const std::vector<int>& a, const std::vector<int>& b) {
    int dist = 0;
    for (int k = 0; k < t.d; ++k) {
      int delta = std::abs(a[k] - b[k]);
      delta = std::min(delta, t.m - delta);
      dist = std::max(dist, delta);
    }
    return dist;
  };
  block_neighbors.assign(nblocks, {});
  for (int a = 0; a < nblocks; ++a)
    for (int b = 0; b < nblocks; ++b)
      if (a != b && torus_dist_inf(bcoords(a), bcoords(b)) == 1) block_neighbors[a].push_back(b);

  // Connected subsets of <= 2^d blocks, grown one neighbor at a time.
  int cap = small_set_size_cap();
  std::set<uint64_t> seen;
  std::vector<uint64_t> queue;
  for (int b = 0; b < nblocks; ++b) {
    uint64_t s = 1ULL << b;
    seen.insert(s);
    queue.push_back(s);
  }
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    uint64_t s = queue[qi];
    if (__builtin_popcountll(s) >= cap) continue;
    for (int b = 0; b < nblocks; ++b) {
      if (!(s >> b & 1)) continue;
      for (int nb : block_neighbors[b]) {
        uint64_t s2 = s | (1ULL << nb);
        if (s2 != s && seen.insert(s2).second) queue.push_back(s2);
      }
    }
  }
  small_sets.assign(seen.begin(), seen.end());

  block_box.assign(nblocks, 0);
  for (uint64_t s : small_sets)
    for (int b = 0; b < nblocks; ++b)
      if (s >> b & 1) block_box[b] |= s;
}

bool BlockGeometry::blocks_connected_set(uint64_t mask) const {
  if (!mask) return false;
  int start = __builtin_ctzll(mask);
  uint64_t reach = 1ULL << start;
  for (;;) {
    uint64_t grow = reach;
    for (int b = 0; b < nblocks; ++b)
      if (reach >> b & 1)
        for (int nb : block_neighbors[b])
          if (mask >> nb & 1) grow |= 1ULL << nb;
    if (grow == reach) break;
    reach = grow;
  }
  return reach == mask;
}

bool BlockGeometry::is_small_set(uint64_t mask) const {
  return __builtin_popcountll(mask) <= small_set_size_cap() && blocks_connected_set(mask);
}

uint64_t BlockGeometry::blocks_touching(const std::vector<int>& x_sites) const {
  uint64_t m = 0;
  for (int x : x_sites) m |= 1ULL << torus.block_of(x);
  return m;
}

uint64_t BlockGeometry::closure_blocks(uint64_t block_mask) const {
  uint64_t out = 0;
  for (int b = 0; b < nblocks; ++b)
    if (block_mask >> b & 1) out |= block_box[b];
  return out;
}

std::vector<int> BlockGeometry::sites_of_blocks(uint64_t block_mask) const {
  std::vector<int> out;
  for (int b = 0; b < nblocks; ++b)
    if (block_mask >> b & 1) {
      auto s = torus.block_sites(b);
      out.insert(out.end(), s.begin(), s.end());
    }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> BlockGeometry::closure_sites(const std::vector<int>& x_sites) const {
  return sites_of_blocks(closure_blocks(blocks_touching(x_sites)));
}

}  // namespace tphi
