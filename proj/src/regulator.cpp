#include "regulator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include "rng.hpp"

namespace tphi {

namespace {

constexpr double kNormal99 = 2.5758293035489;  // two-sided 99% normal quantile

Rat block_size(const Torus& t) {
  Rat b(1);
  for (int k = 0; k < t.d; ++k) b *= t.R;
  return b;
}

std::pair<Rat, Rat> box_norm_sq(const BlockGeometry& geo, const RegulatorParams& par, int block,
                                const FieldAssign& phi, bool poly_quotient) {
  std::vector<int> box = geo.sites_of_blocks(geo.block_box[block]);
  Weight w = ell_weight(par);
  Interval iv;
  if (poly_quotient) {
    int k = poly_degree_cap(geo.torus.d, par.poly_dim_cap);
    iv = k < 0 ? field_local_norm(phi, par.layout, par.boson_pos, w, box, par.quarter_points)
               : field_poly_local_norm(phi, par.layout, par.boson_pos, w, box, k,
                                       par.quarter_points);
  } else {
    iv = field_local_norm(phi, par.layout, par.boson_pos, w, box, par.quarter_points);
  }
  Rat lo(iv.lo), hi(iv.hi);
  return {lo * lo, hi * hi};
}

RegulatorValue regulator_impl(const BlockGeometry& geo, const RegulatorParams& par,
                              const std::vector<int>& x_sites, const FieldAssign& phi,
                              bool poly_quotient) {
  std::set<int> xs(x_sites.begin(), x_sites.end());
  std::map<int, long> block_count;
  for (int x : xs) ++block_count[geo.torus.block_of(x)];
  Rat half = poly_quotient ? Rat(1, 2) : Rat(1);
  RegulatorValue out;
  for (auto& [b, cnt] : block_count) {
    auto [lo2, hi2] = box_norm_sq(geo, par, b, phi, poly_quotient);
    Rat coef = half * Rat(cnt) / block_size(geo.torus);
    out.exp_lo += coef * lo2;
    out.exp_hi += coef * hi2;
  }
  out.lo = std::exp(to_double(out.exp_lo));
  out.hi = std::exp(to_double(out.exp_hi));
  return out;
}

FieldAssign real_field(const Layout& l, int sp, const std::function<Rat(int)>& value) {
  FieldAssign phi;
  for (int x = 0; x < l.torus.nsites(); ++x) {
    Rat v = value(x);
    if (v == 0) continue;
    phi.set(pack(uint16_t(sp), 0, uint32_t(x)), RC(v));
    phi.set(pack(uint16_t(sp), 1, uint32_t(x)), RC(v));
  }
  return phi;
}

std::set<int> element_sites(const Element& f) {
  std::set<int> s;
  for (auto& [m, p] : f.terms) {
    for (Key k : m) s.insert((int)key_site(k));
    for (auto& [d, c] : p.t)
      for (auto& [k, e] : d) s.insert((int)key_site(k));
  }
  return s;
}

void require_support(const Element& f, const std::vector<int>& allowed_sites, const char* what) {
  std::set<int> allowed(allowed_sites.begin(), allowed_sites.end());
  for (int s : element_sites(f))
    if (!allowed.count(s))
      throw std::invalid_argument(std::string(what) + ": element support leaves the site set");
}

bool is_block_union(const Torus& t, const std::vector<int>& x_sites) {
  std::set<int> xs(x_sites.begin(), x_sites.end());
  if (xs.empty()) return false;
  std::set<int> blocks;
  for (int x : xs) blocks.insert(t.block_of(x));
  size_t total = 0;
  for (int b : blocks) {
    std::vector<int> sites = t.block_sites(b);
    for (int y : sites)
      if (!xs.count(y)) return false;
    total += sites.size();
  }
  return total == xs.size();
}

// Upper estimate of the seminorm over complex test functions: exact value when
// the certificate is exact; grid certificates bound the real sup from below by
// value / rigor, and the complex sup by twice the real one.
double seminorm_upper(const NormCertificate& c) {
  return c.exact ? c.value : 2.0 * c.value / c.rigor_factor;
}

Eigen::MatrixXd to_eigen(const RatMat& a) {
  Eigen::MatrixXd m(a.size(), a.size());
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a.size(); ++j) m((long)i, (long)j) = to_double(a[i][j]);
  return m;
}

void finish_moments(McReport& rep) {
  rep.estimate = rep.sum / double(rep.samples);
  double var = 0.0;
  if (rep.samples > 1) {
    var = (rep.sumsq - rep.sum * rep.sum / double(rep.samples)) / double(rep.samples - 1);
    if (var < 0.0) var = 0.0;
  }
  rep.ci_halfwidth = kNormal99 * std::sqrt(var / double(rep.samples));
}

}  // namespace

Weight ell_weight(const RegulatorParams& par) {
  return make_weight(par.layout, par.ell, par.p_phi, par.Rscale);
}

Weight hh_weight(const RegulatorParams& par) {
  return make_weight(par.layout, par.hh, par.p_phi, par.Rscale);
}

int poly_degree_cap(int d, int poly_dim_cap) {
  // dimension of a degree-k polynomial field is (d-2)/2 + k
  long num = 2L * poly_dim_cap - d + 2;
  if (num < 0) return -1;
  return int(num / 2);
}

RegulatorValue fluctuation_regulator(const BlockGeometry& geo, const RegulatorParams& par,
                                     const std::vector<int>& x_sites, const FieldAssign& phi) {
  return regulator_impl(geo, par, x_sites, phi, false);
}

RegulatorValue large_field_regulator(const BlockGeometry& geo, const RegulatorParams& par,
                                     const std::vector<int>& x_sites, const FieldAssign& phi) {
  return regulator_impl(geo, par, x_sites, phi, true);
}

std::vector<FieldAssign> standard_probes(const RegulatorParams& par, uint64_t seed,
                                         int gaussian_draws) {
  const Layout& l = *par.layout;
  const int sp = par.boson_pos;
  const int n = l.torus.nsites();
  std::vector<FieldAssign> base;
  base.push_back(FieldAssign{});
  for (const Rat& c : {Rat(par.ell / 2), par.ell, Rat(2 * par.ell)})
    base.push_back(real_field(l, sp, [&](int) { return c; }));
  base.push_back(real_field(l, sp, [&](int x) { return x == 0 ? par.ell : Rat(0); }));
  base.push_back(
      real_field(l, sp, [&](int x) { return x == n / 2 ? Rat(2 * par.ell) : Rat(0); }));
  base.push_back(real_field(l, sp, [&](int x) -> Rat {
    return Rat(par.ell * Rat(l.torus.coords(x)[0], l.torus.side()));
  }));
  for (int g = 0; g < gaussian_draws; ++g) {
    Rng rng = Rng::substream(seed, uint64_t(g));
    std::vector<Rat> vals(n);
    for (int x = 0; x < n; ++x) vals[x] = par.ell * Rat(std::lround(4 * rng.normal()), 8);
    base.push_back(real_field(l, sp, [&](int x) { return vals[x]; }));
  }
  std::vector<FieldAssign> probes = base;
  for (size_t i = 1; i < base.size(); ++i)
    for (long num = 1; num <= 3; ++num) probes.push_back(assign_scale(base[i], Rat(num, 4)));
  return probes;
}

RegulatorNormReport regulator_norm(const Element& f, const std::vector<int>& x_sites,
                                   RegulatorKind kind, const RegulatorParams& par,
                                   const BlockGeometry& geo,
                                   const std::vector<FieldAssign>& probes) {
  require_support(f, geo.closure_sites(x_sites), "regulator norm");
  const bool fluct = kind == RegulatorKind::fluctuation;
  Weight w = fluct ? ell_weight(par) : hh_weight(par);
  NormParams np{w, par.mode, par.pn_cap, par.len_cap, par.rotations};
  RegulatorNormReport rep;
  rep.probes = probes.size();
  rep.degree = f.degree();
  NormCertificate c0 = tphi_seminorm(f, FieldAssign{}, np);
  rep.t0 = c0.value;
  for (size_t i = 0; i < probes.size(); ++i) {
    double val = tphi_seminorm(f, probes[i], np).value;
    RegulatorValue g = fluct ? fluctuation_regulator(geo, par, x_sites, probes[i])
                             : large_field_regulator(geo, par, x_sites, probes[i]);
    double ratio = val / g.hi;
    if (ratio > rep.lower) {
      rep.lower = ratio;
      rep.best_probe = (int)i;
    }
  }
  if (fluct && is_block_union(geo.torus, x_sites) && rep.degree <= par.len_cap) {
    // Polynomial growth chain at kappa = 2^{-1/2} (2R)^{-p}: the norm depends
    // on the field only through its values on the closure, where truncation
    // costs at most (2R)^p per derivative and the sup of |phi|/ell is dominated
    // by every block norm entering G, so exp(kappa^2 ||phi||^2) <= G(X, phi)
    // and the degree-A bound T_0 A^{A/2} kappa^{-A} exp(kappa^2 ||phi||^2)
    // collapses to T_0 (2A)^{A/2} (2R)^{pA}.
    int a = rep.degree;
    rep.upper = seminorm_upper(c0) * std::pow(2.0 * a, a / 2.0) *
                std::pow(2.0 * double(par.Rscale), double(par.p_phi) * a);
    rep.upper_valid = true;
  }
  return rep;
}

double polynomial_growth_constant(int a_degree) {
  double s = 0.5 * (std::sqrt(4.0 * a_degree + 5.0) - 1.0);
  return std::pow(1.0 + s, a_degree + 1) * std::exp(-0.5 * s * s);
}

KkkReport kkk_check(const Element& f, int a_degree, const std::vector<int>& x_sites,
                    const RegulatorParams& par, const BlockGeometry& geo,
                    const std::vector<FieldAssign>& probes) {
  if (par.ell > par.hh) throw std::invalid_argument("kkk check: needs ell <= hh");
  if (a_degree >= par.len_cap)
    throw std::invalid_argument("kkk check: degree must stay below the sequence cap");
  if (f.degree() > a_degree)
    throw std::invalid_argument("kkk check: element degree exceeds the stated degree");
  require_support(f, x_sites, "kkk check");

  Weight wl = ell_weight(par), wh = hh_weight(par);
  NormParams npl{wl, par.mode, par.pn_cap, par.len_cap, par.rotations};
  NormParams nph{wh, par.mode, par.pn_cap, par.len_cap, par.rotations};

  KkkReport rep;
  rep.probes = probes.size();
  rep.rho = to_double(rho_ratio(wl, wh, a_degree + 1, par.len_cap));
  rep.c_a_single_block = polynomial_growth_constant(a_degree);
  rep.t0 = tphi_seminorm(f, FieldAssign{}, npl).value;
  uint64_t touching = geo.blocks_touching(x_sites);
  rep.single_block = std::popcount(touching) == 1 && is_block_union(geo.torus, x_sites);

  for (const FieldAssign& phi : probes) {
    double th = tphi_seminorm(f, phi, nph).value;
    RegulatorValue gt = large_field_regulator(geo, par, x_sites, phi);
    rep.gtilde_lower = std::max(rep.gtilde_lower, th / gt.hi);
  }

  std::vector<int> closure = geo.closure_sites(x_sites);
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (const FieldAssign& phi : probes) {
    double lhs = tphi_seminorm(f, phi, npl).value;
    TestFunction ft = field_test_function(par.layout, par.boson_pos, phi, par.pn_cap, par.len_cap);
    double nphi = std::sqrt(to_double(phi_norm_sq(ft, wl)));
    RegulatorValue g = fluctuation_regulator(geo, par, x_sites, phi);
    double rhs = std::pow(1.0 + nphi, a_degree + 1) *
                 (rep.t0 + rep.rho * rep.gtilde_lower * std::sqrt(g.lo));
    double margin = (rhs - lhs) / std::max(rhs, 1.0);
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -1e-9) rep.holds = false;
    Interval loc = field_local_norm(phi, par.layout, par.boson_pos, wl, closure,
                                    par.quarter_points);
    rep.c_a_realized = std::max(rep.c_a_realized,
                                std::pow(1.0 + loc.lo, a_degree + 1) / std::sqrt(g.hi));
  }
  return rep;
}

McReport regulator_expectation_mc(const RegulatorParams& par, const std::vector<int>& x_sites,
                                  const RatMat& cb, long samples, uint64_t seed, int workers) {
  if (par.p_phi != 0)
    throw std::invalid_argument("regulator expectation: derivative order 0 only");
  if (!(par.alpha_g > 1.0))
    throw std::invalid_argument("regulator expectation: alpha_g must exceed 1");
  if (par.t < 0) throw std::invalid_argument("regulator expectation: negative power");
  if (samples < 1 || workers < 1)
    throw std::invalid_argument("regulator expectation: needs samples and workers >= 1");
  const Torus& t = par.layout->torus;
  const int n = t.nsites();
  if ((int)cb.size() != n)
    throw std::invalid_argument("regulator expectation: covariance size mismatch");
  if (!rat_spd(cb)) throw std::invalid_argument("regulator expectation: covariance must be spd");

  BlockGeometry geo(t);
  std::set<int> xs(x_sites.begin(), x_sites.end());
  const double bsz = to_double(block_size(t));
  const double tt = to_double(par.t);
  const double ell = to_double(par.ell);

  McReport rep;
  rep.seed = seed;
  rep.samples = samples;
  rep.workers = workers;
  rep.trace_budget = std::log(par.alpha_g) * double(xs.size()) / bsz;
  rep.bound = std::exp(rep.trace_budget);

  // Hypothesis gate along the proof route: sup <= sum turns the exponent into
  // the half square sum of xi = sqrt(2 t kappa) phi / ell, whose covariance is
  // two copies of (t / ell^2) K^{1/2} C_b K^{1/2} with K the block-count weight.
  std::vector<double> kappa(n, 0.0);
  for (int x : xs)
    for (int y : geo.sites_of_blocks(geo.block_box[t.block_of(x)])) kappa[y] += 1.0 / bsz;
  Eigen::MatrixXd cbd = to_eigen(cb);
  Eigen::VectorXd ksqrt(n);
  for (int i = 0; i < n; ++i) ksqrt[i] = std::sqrt(kappa[i]);
  Eigen::MatrixXd q = (tt / (ell * ell)) * ksqrt.asDiagonal() * cbd * ksqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  rep.lambda_max = es.eigenvalues().maxCoeff();
  rep.trace_q = 2.0 * q.trace();
  Weight wplus = make_weight(par.layout, par.ell, par.p_phi + t.d, par.Rscale);
  TestFunction ctf = covariance_test_function(par.layout, CovariancePair{cb, {}}, par.boson_pos,
                                              -1, std::max(par.pn_cap, 2), std::max(par.len_cap, 2));
  rep.cb_phiplus_norm = std::sqrt(to_double(phi_norm_sq(ctf, wplus)));
  rep.hypothesis_ok = rep.lambda_max < 0.5 && rep.trace_q <= rep.trace_budget;

  std::vector<std::pair<std::vector<int>, double>> boxes;
  {
    std::map<int, long> bc;
    for (int x : xs) ++bc[t.block_of(x)];
    for (auto& [b, cnt] : bc)
      boxes.emplace_back(geo.sites_of_blocks(geo.block_box[b]), double(cnt) / bsz);
  }
  Eigen::MatrixXd lfac = Eigen::LLT<Eigen::MatrixXd>(0.5 * cbd).matrixL();

  auto run = [&](uint64_t stream, long ns, double& sum, double& sumsq) {
    Rng rng = Rng::substream(seed, stream);
    Eigen::VectorXd zu(n), zv(n);
    for (long s = 0; s < ns; ++s) {
      for (int i = 0; i < n; ++i) zu[i] = rng.normal();
      for (int i = 0; i < n; ++i) zv[i] = rng.normal();
      Eigen::VectorXd u = lfac * zu, v = lfac * zv;
      double expo = 0.0;
      for (auto& [box, coef] : boxes) {
        double m = 0.0;
        for (int y : box) m = std::max(m, u[y] * u[y] + v[y] * v[y]);
        expo += coef * m / (ell * ell);
      }
      double g = std::exp(tt * expo);
      sum += g;
      sumsq += g * g;
    }
  };

  std::vector<double> sums(workers, 0.0), sumsqs(workers, 0.0);
  const long per = samples / workers;
  std::vector<std::thread> pool;
  for (int k = 0; k < workers; ++k) {
    long ns = per + (k < samples % workers ? 1 : 0);
    pool.emplace_back(run, uint64_t(k), ns, std::ref(sums[k]), std::ref(sumsqs[k]));
  }
  for (auto& th : pool) th.join();
  for (int k = 0; k < workers; ++k) {
    rep.sum += sums[k];
    rep.sumsq += sumsqs[k];
  }
  finish_moments(rep);
  return rep;
}

McReport mc_merge(McReport a, const McReport& b) {
  if (a.bound != b.bound || a.trace_budget != b.trace_budget)
    throw std::invalid_argument("mc merge: runs target different configurations");
  a.samples += b.samples;
  a.sum += b.sum;
  a.sumsq += b.sumsq;
  a.workers += b.workers;
  a.hypothesis_ok = a.hypothesis_ok && b.hypothesis_ok;
  finish_moments(a);
  return a;
}

std::vector<std::complex<double>> sample_boson_field(const RatMat& cb, Rng& rng) {
  const int n = (int)cb.size();
  Eigen::MatrixXd lfac = Eigen::LLT<Eigen::MatrixXd>(0.5 * to_eigen(cb)).matrixL();
  Eigen::VectorXd zu(n), zv(n);
  for (int i = 0; i < n; ++i) zu[i] = rng.normal();
  for (int i = 0; i < n; ++i) zv[i] = rng.normal();
  Eigen::VectorXd u = lfac * zu, v = lfac * zv;
  std::vector<std::complex<double>> out(n);
  for (int i = 0; i < n; ++i) out[i] = {u[i], v[i]};
  return out;
}

IntegrabilityReport gaussian_integrability_check(const std::vector<std::vector<double>>& c) {
  const int n = (int)c.size();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = c[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  IntegrabilityReport rep;
  rep.lambda_max = n ? es.eigenvalues().maxCoeff() : 0.0;
  rep.applicable = rep.lambda_max < 0.5;
  double moment = 1.0;
  for (int i = 0; i < n; ++i) {
    double lam = es.eigenvalues()[i];
    moment *= lam < 1.0 ? 1.0 / std::sqrt(1.0 - lam) : std::numeric_limits<double>::infinity();
  }
  rep.moment = moment;
  rep.trace_bound = std::exp(m.trace());
  return rep;
}

SobolevReport lattice_sobolev_check(int d, int r_side,
                                    const std::vector<std::complex<double>>& f) {
  long npts = 1;
  for (int k = 0; k < d; ++k) npts *= r_side;
  if ((long)f.size() != npts) throw std::invalid_argument("sobolev check: needs R^d values");

  // One field over the standalone box per multi-index in {0,1}^{2d}; stencils
  // that step outside the box mark the value undefined.
  struct Grid {
    std::vector<std::complex<double>> v;
    std::vector<char> ok;
  };
  auto coords = [&](long site) {
    std::vector<int> c(d);
    for (int k = d - 1; k >= 0; --k) {
      c[k] = int(site % r_side);
      site /= r_side;
    }
    return c;
  };
  auto site_of = [&](const std::vector<int>& c) {
    long s = 0;
    for (int k = 0; k < d; ++k) s = s * r_side + c[k];
    return s;
  };
  auto diff = [&](const Grid& g, int dir) {
    Grid out{std::vector<std::complex<double>>(npts, 0.0), std::vector<char>(npts, 0)};
    int axis = dir / 2, step = dir % 2 == 0 ? 1 : -1;
    for (long y = 0; y < npts; ++y) {
      std::vector<int> c = coords(y);
      c[axis] += step;
      if (c[axis] < 0 || c[axis] >= r_side) continue;
      long y2 = site_of(c);
      if (!g.ok[y] || !g.ok[y2]) continue;
      out.v[y] = g.v[y2] - g.v[y];
      out.ok[y] = 1;
    }
    return out;
  };

  double rhs_sum = 0.0;
  for (uint32_t mask = 0; mask < (1u << (2 * d)); ++mask) {
    Grid g{f, std::vector<char>(npts, 1)};
    int order = 0;
    for (int dir = 0; dir < 2 * d; ++dir)
      if (mask & (1u << dir)) {
        g = diff(g, dir);
        ++order;
      }
    double scale = std::pow(double(r_side), order);
    for (long y = 0; y < npts; ++y)
      if (g.ok[y]) rhs_sum += scale * scale * std::norm(g.v[y]);
  }
  SobolevReport rep;
  rep.rhs = std::pow(2.0, 3 * d + 2) / double(npts) * rhs_sum;
  for (long x = 0; x < npts; ++x) {
    double ratio = rep.rhs > 0.0 ? std::norm(f[x]) / rep.rhs : 0.0;
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst_site = (int)x;
    }
  }
  rep.holds = rep.worst_ratio <= 1.0 + 1e-12;
  return rep;
}

}  // namespace tphi
