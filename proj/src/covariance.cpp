#include "covariance.hpp"

namespace tphi {

RatMat rat_add(const RatMat& a, const RatMat& b) {
  RatMat r = a;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a.size(); ++j) r[i][j] += b[i][j];
  return r;
}

RatMat rat_scale(const RatMat& a, const Rat& s) {
  RatMat r = a;
  for (auto& row : r)
    for (auto& v : row) v *= s;
  return r;
}

Rat rat_det(RatMat m) {
  int n = (int)m.size();
  Rat det(1);
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r)
      if (m[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) return Rat(0);
    if (piv != col) {
      std::swap(m[piv], m[col]);
      det = -det;
    }
    det *= m[col][col];
    Rat inv = Rat(1) / m[col][col];
    for (int r = col + 1; r < n; ++r) {
      if (m[r][col] == 0) continue;
      Rat f = m[r][col] * inv;
      for (int c = col; c < n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return det;
}

RatMat rat_inv(RatMat m) {
  int n = (int)m.size();
  RatMat inv = rat_identity(n);
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r)
      if (m[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) throw std::runtime_error("rat_inv: singular matrix");
    std::swap(m[piv], m[col]);
    std::swap(inv[piv], inv[col]);
    Rat p = Rat(1) / m[col][col];
    for (int c = 0; c < n; ++c) {
      m[col][c] *= p;
      inv[col][c] *= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col || m[r][col] == 0) continue;
      Rat f = m[r][col];
      for (int c = 0; c < n; ++c) {
        m[r][c] -= f * m[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

bool rat_symmetric(const RatMat& m) {
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t j = i + 1; j < m.size(); ++j)
      if (m[i][j] != m[j][i]) return false;
  return true;
}

bool rat_spd(const RatMat& m) {
  if (!rat_symmetric(m)) return false;
  int n = (int)m.size();
  for (int k = 1; k <= n; ++k) {
    RatMat sub(k, std::vector<Rat>(k));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub[i][j] = m[i][j];
    if (rat_det(std::move(sub)) <= 0) return false;
  }
  return true;
}

RatMat decaying_covariance(const Torus& t, const Rat& kappa) {
  int n = t.nsites();
  RatMat c(n, std::vector<Rat>(n));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      auto a = t.coords(x), b = t.coords(y);
      long dist = 0;
      for (int k = 0; k < t.d; ++k) {
        int delta = std::abs(a[k] - b[k]);
        dist += std::min(delta, t.side() - delta);
      }
      c[x][y] = rat_pow(kappa, dist);
    }
  return c;
}

RatMat CovariancePair::assembled_fermion_moment() const {
  int m = Mf();
  RatMat a = rat_zeros(2 * m);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) {
      a[k][m + l] = Cf[k][l];
      a[m + k][l] = -Cf[l][k];
    }
  return a;
}

RatMat CovariancePair::assembled_boson_moment() const {
  int m = Mb();
  RatMat a = rat_zeros(2 * m);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) {
      a[k][m + l] = Cb[k][l];
      a[m + k][l] = Cb[l][k];
    }
  return a;
}

RatMat CovariancePair::assembled_boson_real() const {
  int m = Mb();
  RatMat a = rat_zeros(2 * m);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) {
      a[k][l] = Cb[k][l] / 2;
      a[m + k][m + l] = Cb[k][l] / 2;
    }
  return a;
}

}  // namespace tphi
