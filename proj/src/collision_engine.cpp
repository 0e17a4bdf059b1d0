#include "collision_engine.hpp"

#include <algorithm>
#include <cmath>

#ifdef __AVX512F__
#include <immintrin.h>
#endif

#include "boltzmix/parallel.hpp"

namespace boltzmix {

void SweepStats::merge(const SweepStats& o) {
  pruned_node_bound += o.pruned_node_bound;
  pruned_mass_bound += o.pruned_mass_bound;
  samples_total += o.samples_total;
  samples_evaluated += o.samples_evaluated;
  samples_pruned += o.samples_pruned;
}

void SweepStats::finalize() {
  if (samples_total > 0) {
    const std::int64_t escaped = samples_total - samples_evaluated - samples_pruned;
    escape_fraction = static_cast<double>(escaped) / static_cast<double>(samples_total);
  }
}

namespace detail {
namespace {

// Max of |f| over nodes with radius >= r, binned radially.
struct RadialEnvelope {
  double inv_bin = 0.0;
  std::vector<double> env;  // suffix max over bins

  double query(double r) const {
    if (env.empty()) return 0.0;
    if (r <= 0.0) return env[0];
    const auto b = static_cast<std::size_t>(r * inv_bin);
    if (b >= env.size()) return 0.0;
    return env[b];
  }
};

RadialEnvelope build_envelope(const VelocityGrid& grid, const Field& f) {
  RadialEnvelope e;
  const double bin_w = 0.5 * grid.h();
  const double rmax = std::sqrt(3.0) * grid.v_max() + grid.h();
  const int nb = static_cast<int>(rmax / bin_w) + 2;
  e.inv_bin = 1.0 / bin_w;
  e.env.assign(nb, 0.0);
  const int n = grid.n();
  std::int64_t flat = 0;
  for (int ix = 0; ix < n; ++ix) {
    const double vx = grid.coord(ix);
    for (int iy = 0; iy < n; ++iy) {
      const double vy = grid.coord(iy);
      for (int iz = 0; iz < n; ++iz, ++flat) {
        const double vz = grid.coord(iz);
        const double r = std::sqrt(vx * vx + vy * vy + vz * vz);
        auto b = static_cast<std::size_t>(r * e.inv_bin);
        if (b >= e.env.size()) b = e.env.size() - 1;
        e.env[b] = std::max(e.env[b], std::abs(f[flat]));
      }
    }
  }
  for (int b = nb - 2; b >= 0; --b) e.env[b] = std::max(e.env[b], e.env[b + 1]);
  return e;
}

// Distance from the origin to an axis-aligned box.
double dist_to_origin(const double lo[3], const double hi[3]) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = std::max({0.0, lo[a], -hi[a]});
    d2 += d * d;
  }
  return std::sqrt(d2);
}

struct AxisStencil {
  int o = 0;        // base node offset relative to the v index
  double fr = 0.0;  // fractional part in [0, 1)
};

AxisStencil make_axis_stencil(double t) {
  AxisStencil s;
  const double fl = std::floor(t);
  s.o = static_cast<int>(fl);
  s.fr = t - fl;
  return s;
}

// Zero-extended fields live in an (n+2)^3 buffer with a one-node halo of
// zeros, so stencils straddling the boundary gather the correct partial
// sums without branching. Node (ix,iy,iz) sits at padded index
// ((ix+1)(n+2) + iy+1)(n+2) + iz+1.
struct PaddedField {
  int p;  // n + 2
  std::vector<double> data;
  PaddedField(int n, const Field& src) : p(n + 2) {
    data.assign(static_cast<std::int64_t>(p) * p * p, 0.0);
    std::int64_t flat = 0;
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy)
        for (int iz = 0; iz < n; ++iz, ++flat)
          data[(static_cast<std::int64_t>(ix + 1) * p + (iy + 1)) * p + (iz + 1)] =
              src[flat];
  }
};

struct SigmaBox {
  int lo[3], hi[3];
  int o1[3], o2[3];                   // per-axis stencil base offsets
  std::int64_t base1 = 0, base2 = 0;  // same, flattened in padded coordinates
  double w1[8], w2[8];
  bool empty = true;
  std::int64_t volume = 0;
  double min_r1 = 0.0, min_r2 = 0.0;  // min radius of the two gather regions
};

// Per-axis slice maxima of |f| with halo indexing (entry i+1 holds axis
// index i, i in [-1, n]). Used to trim box tails whose contribution bound
// fits in the pruning budget.
struct AxisProfiles {
  std::vector<double> col[3];
};

AxisProfiles build_axis_profiles(const VelocityGrid& grid, const Field& f) {
  const int n = grid.n();
  AxisProfiles p;
  for (auto& c : p.col) c.assign(n + 2, 0.0);
  std::int64_t flat = 0;
  for (int ix = 0; ix < n; ++ix)
    for (int iy = 0; iy < n; ++iy)
      for (int iz = 0; iz < n; ++iz, ++flat) {
        const double a = std::abs(f[flat]);
        p.col[0][ix + 1] = std::max(p.col[0][ix + 1], a);
        p.col[1][iy + 1] = std::max(p.col[1][iy + 1], a);
        p.col[2][iz + 1] = std::max(p.col[2][iz + 1], a);
      }
  return p;
}

// max over the two planes a stencil with base offset o gathers at slice i
inline double slice_max(const std::vector<double>& col, int i, int o) {
  return std::max(col[i + o + 1], col[i + o + 2]);
}

void corner_weights(const AxisStencil s[3], double w[8]) {
  const double fx = s[0].fr, fy = s[1].fr, fz = s[2].fr;
  const double gx = 1.0 - fx, gy = 1.0 - fy, gz = 1.0 - fz;
  w[0] = gx * gy * gz;
  w[1] = gx * gy * fz;
  w[2] = gx * fy * gz;
  w[3] = gx * fy * fz;
  w[4] = fx * gy * gz;
  w[5] = fx * gy * fz;
  w[6] = fx * fy * gz;
  w[7] = fx * fy * fz;
}

// Builds the index box for one (d, sigma): v and v - d on the grid and at
// least one stencil corner of each interpolation inside it (a base offset in
// [-1, n-1] per axis; anything further out interpolates to zero).
SigmaBox make_sigma_box(const VelocityGrid& grid, const int di[3], const Vec3& off1,
                        const Vec3& off2) {
  SigmaBox box;
  const int n = grid.n();
  const double inv_h = 1.0 / grid.h();
  AxisStencil s1[3], s2[3];
  const double t1[3] = {off1.x * inv_h, off1.y * inv_h, off1.z * inv_h};
  const double t2[3] = {off2.x * inv_h - di[0], off2.y * inv_h - di[1],
                        off2.z * inv_h - di[2]};
  std::int64_t vol = 1;
  for (int a = 0; a < 3; ++a) {
    s1[a] = make_axis_stencil(t1[a]);
    s2[a] = make_axis_stencil(t2[a]);
    int lo = std::max(0, di[a]);
    int hi = std::min(n - 1, n - 1 + di[a]);
    lo = std::max({lo, -1 - s1[a].o, -1 - s2[a].o});
    hi = std::min({hi, n - 1 - s1[a].o, n - 1 - s2[a].o});
    if (lo > hi) return box;
    box.lo[a] = lo;
    box.hi[a] = hi;
    box.o1[a] = s1[a].o;
    box.o2[a] = s2[a].o;
    vol *= (hi - lo + 1);
  }
  box.empty = false;
  box.volume = vol;
  const std::int64_t p = n + 2;
  box.base1 = (static_cast<std::int64_t>(s1[0].o) * p + s1[1].o) * p + s1[2].o;
  box.base2 = (static_cast<std::int64_t>(s2[0].o) * p + s2[1].o) * p + s2[2].o;
  corner_weights(s1, box.w1);
  corner_weights(s2, box.w2);
  double lo1[3], hi1[3], lo2[3], hi2[3];
  for (int a = 0; a < 3; ++a) {
    lo1[a] = grid.coord(box.lo[a] + s1[a].o);
    hi1[a] = grid.coord(box.hi[a] + s1[a].o + 1);
    lo2[a] = grid.coord(box.lo[a] + s2[a].o);
    hi2[a] = grid.coord(box.hi[a] + s2[a].o + 1);
  }
  box.min_r1 = dist_to_origin(lo1, hi1);
  box.min_r2 = dist_to_origin(lo2, hi2);
  return box;
}

struct ThreadBudget {
  double node = 0.0, mass = 0.0;
  double acc_node = 0.0, acc_mass = 0.0;
  bool enabled = false;

  bool try_skip(double u_node, double u_mass) {
    if (!enabled) return false;
    if (acc_node + u_node <= node && acc_mass + u_mass <= mass) {
      acc_node += u_node;
      acc_mass += u_mass;
      return true;
    }
    return false;
  }
};

// Trims box tails along each axis while the per-slice contribution bound
// fits in the remaining budgets. bound(axis, i) must dominate the magnitude
// any node in slice i of that axis can receive from this (d, sigma); mult
// doubles the accounting for half-space self-adjoint sweeps.
template <class SliceBound>
void tighten_box(SigmaBox& box, double h3, std::int64_t mult, ThreadBudget& budget,
                 SweepStats& st, SliceBound&& bound) {
  for (int a = 0; a < 3; ++a) {
    for (int side = 0; side < 2; ++side) {
      while (box.lo[a] <= box.hi[a]) {
        const int i = side == 0 ? box.lo[a] : box.hi[a];
        const double ub = mult * bound(a, i);
        const std::int64_t ext = box.hi[a] - box.lo[a] + 1;
        const std::int64_t svol = box.volume / ext;
        if (!budget.try_skip(ub, ub * static_cast<double>(svol) * h3)) break;
        st.samples_pruned += mult * svol;
        box.volume -= svol;
        if (side == 0)
          ++box.lo[a];
        else
          --box.hi[a];
      }
    }
    if (box.lo[a] > box.hi[a]) {
      box.empty = true;
      box.volume = 0;
      return;
    }
  }
}

// Geometry shared by one difference d.
struct DiffGeom {
  int di[3];
  Vec3 dvec;
  double dnorm = 0.0;
  Vec3 dhat{0.0, 0.0, 1.0};  // zhat convention at d = 0
  double kin = 0.0;
  double sb = 0.0;
  std::int64_t pair_volume = 0;
  double plo[3], phi[3];  // pair box in velocity coordinates
};

bool decode_diff(const PairGeom& g, std::int64_t dflat, DiffGeom& out) {
  const int n = g.grid->n();
  const int dn = 2 * n - 1;
  out.di[0] = static_cast<int>(dflat / (static_cast<std::int64_t>(dn) * dn)) - (n - 1);
  out.di[1] = static_cast<int>((dflat / dn) % dn) - (n - 1);
  out.di[2] = static_cast<int>(dflat % dn) - (n - 1);
  std::int64_t vol = 1;
  for (int a = 0; a < 3; ++a) {
    const int lo = std::max(0, out.di[a]);
    const int hi = std::min(n - 1, n - 1 + out.di[a]);
    vol *= (hi - lo + 1);
    out.plo[a] = g.grid->coord(lo);
    out.phi[a] = g.grid->coord(hi);
  }
  out.pair_volume = vol;
  const double h = g.grid->h();
  out.dvec = {out.di[0] * h, out.di[1] * h, out.di[2] * h};
  out.dnorm = norm(out.dvec);
  if (out.dnorm > 0.0) out.dhat = out.dvec / out.dnorm;
  out.kin = g.tables->kin[dflat];
  out.sb = g.tables->sb[dflat];
  return out.kin != 0.0;
}

// Conservative min radii of the full per-d gather regions (all sigma).
void diff_min_radii(const DiffGeom& d, double aj, double ai, double* r1, double* r2) {
  double lo[3], hi[3];
  const double shift1[3] = {-aj * d.dvec.x, -aj * d.dvec.y, -aj * d.dvec.z};
  for (int a = 0; a < 3; ++a) {
    lo[a] = d.plo[a] + shift1[a];
    hi[a] = d.phi[a] + shift1[a];
  }
  *r1 = std::max(0.0, dist_to_origin(lo, hi) - aj * d.dnorm);
  // v* box is the pair box shifted by -d; then + ai d and a ball of ai |d|
  const double shift2[3] = {(ai - 1.0) * d.dvec.x, (ai - 1.0) * d.dvec.y,
                            (ai - 1.0) * d.dvec.z};
  for (int a = 0; a < 3; ++a) {
    lo[a] = d.plo[a] + shift2[a];
    hi[a] = d.phi[a] + shift2[a];
  }
  *r2 = std::max(0.0, dist_to_origin(lo, hi) - ai * d.dnorm);
}

}  // namespace

DiffTables build_diff_tables(const VelocityGrid& grid, const SphereRule& sphere,
                             double gamma, const AngularPart& b) {
  DiffTables t;
  const int n = grid.n();
  t.n = n;
  t.dn = 2 * n - 1;
  const std::int64_t total = static_cast<std::int64_t>(t.dn) * t.dn * t.dn;
  t.kin.resize(total);
  t.sb.resize(total);
  const double h = grid.h();
  const bool b_const = (b.kind() == AngularPart::Kind::Constant);
  const double sb_const = b_const ? kFourPi * b.eval(0.0) : 0.0;
  parallel_chunks(total, [&](int, std::int64_t begin, std::int64_t end) {
    for (std::int64_t f = begin; f < end; ++f) {
      const int dx = static_cast<int>(f / (static_cast<std::int64_t>(t.dn) * t.dn)) - (n - 1);
      const int dy = static_cast<int>((f / t.dn) % t.dn) - (n - 1);
      const int dz = static_cast<int>(f % t.dn) - (n - 1);
      const double dn2 = (static_cast<double>(dx) * dx + static_cast<double>(dy) * dy +
                          static_cast<double>(dz) * dz) * h * h;
      if (dn2 == 0.0) {
        t.kin[f] = (gamma == 0.0) ? 1.0 : 0.0;
      } else if (gamma == 0.0) {
        t.kin[f] = 1.0;
      } else if (gamma == 1.0) {
        t.kin[f] = std::sqrt(dn2);
      } else {
        t.kin[f] = std::pow(dn2, 0.5 * gamma);
      }
      if (b_const) {
        t.sb[f] = sb_const;
      } else {
        Vec3 dhat{0.0, 0.0, 1.0};
        if (dn2 > 0.0) {
          const double inv = 1.0 / std::sqrt(dn2);
          dhat = {dx * h * inv, dy * h * inv, dz * h * inv};
        }
        double s = 0.0;
        for (int q = 0; q < sphere.size(); ++q)
          s += sphere.weights()[q] * b.eval(dot(dhat, sphere.nodes()[q]));
        t.sb[f] = s;
      }
    }
  });
  return t;
}

std::vector<double> mollified_sb_table(const VelocityGrid& grid, const SphereRule& sphere,
                                       const AngularPart& b, const Mollifier& moll) {
  const int n = grid.n();
  const int dn = 2 * n - 1;
  const std::int64_t total = static_cast<std::int64_t>(dn) * dn * dn;
  std::vector<double> tab(total, 0.0);
  const double h = grid.h();
  parallel_chunks(total, [&](int, std::int64_t begin, std::int64_t end) {
    for (std::int64_t f = begin; f < end; ++f) {
      const int dx = static_cast<int>(f / (static_cast<std::int64_t>(dn) * dn)) - (n - 1);
      const int dy = static_cast<int>((f / dn) % dn) - (n - 1);
      const int dz = static_cast<int>(f % dn) - (n - 1);
      const Vec3 dvec{dx * h, dy * h, dz * h};
      const double dnorm = norm(dvec);
      const double prel = moll.profile_rel(dnorm);
      if (prel == 0.0) continue;
      const Vec3 dhat = (dnorm > 0.0) ? dvec / dnorm : Vec3{0.0, 0.0, 1.0};
      double s = 0.0;
      for (int q = 0; q < sphere.size(); ++q) {
        const double ct = dot(dhat, sphere.nodes()[q]);
        s += sphere.weights()[q] * b.eval(ct) * moll.profile_ang(std::abs(ct));
      }
      tab[f] = prel * s;
    }
  });
  return tab;
}

namespace {

// Inner kernel over a whole index box: out[v] += K * (8-point dot on f) *
// (8-point dot on g) with the stencil weights held in registers across the
// plane loops. Gathers walk the padded layout (stride p), outputs the plain
// one. The reverse-output flavor is a compile-time variant so the loops stay
// branch-free and vectorize.
template <bool kWithRev>
void gain_box(const SigmaBox& box, const double* __restrict fdata,
              const double* __restrict gdata, double* __restrict out,
              double* __restrict out_rev, int n, std::int64_t dshift, double K) {
  const int p = n + 2;
  const std::int64_t pp = static_cast<std::int64_t>(p) * p;
  const int len = box.hi[2] - box.lo[2] + 1;
#ifdef __AVX512F__
  const __m512d a0 = _mm512_set1_pd(K * box.w1[0]), a1 = _mm512_set1_pd(K * box.w1[1]),
                a2 = _mm512_set1_pd(K * box.w1[2]), a3 = _mm512_set1_pd(K * box.w1[3]),
                a4 = _mm512_set1_pd(K * box.w1[4]), a5 = _mm512_set1_pd(K * box.w1[5]),
                a6 = _mm512_set1_pd(K * box.w1[6]), a7 = _mm512_set1_pd(K * box.w1[7]);
  const __m512d b0 = _mm512_set1_pd(box.w2[0]), b1 = _mm512_set1_pd(box.w2[1]),
                b2 = _mm512_set1_pd(box.w2[2]), b3 = _mm512_set1_pd(box.w2[3]),
                b4 = _mm512_set1_pd(box.w2[4]), b5 = _mm512_set1_pd(box.w2[5]),
                b6 = _mm512_set1_pd(box.w2[6]), b7 = _mm512_set1_pd(box.w2[7]);
  for (int ix = box.lo[0]; ix <= box.hi[0]; ++ix) {
    for (int iy = box.lo[1]; iy <= box.hi[1]; ++iy) {
      const std::int64_t row = (static_cast<std::int64_t>(ix) * n + iy) * n + box.lo[2];
      const std::int64_t prow =
          (static_cast<std::int64_t>(ix + 1) * p + (iy + 1)) * p + (box.lo[2] + 1);
      const double* f1 = fdata + prow + box.base1;
      const double* g2 = gdata + prow + box.base2;
      double* o = out + row;
      double* orev = kWithRev ? out_rev + row - dshift : nullptr;
      int k = 0;
      for (; k + 8 <= len; k += 8) {
        __m512d fv = _mm512_mul_pd(a0, _mm512_loadu_pd(f1 + k));
        fv = _mm512_fmadd_pd(a1, _mm512_loadu_pd(f1 + k + 1), fv);
        fv = _mm512_fmadd_pd(a2, _mm512_loadu_pd(f1 + k + p), fv);
        fv = _mm512_fmadd_pd(a3, _mm512_loadu_pd(f1 + k + p + 1), fv);
        fv = _mm512_fmadd_pd(a4, _mm512_loadu_pd(f1 + k + pp), fv);
        fv = _mm512_fmadd_pd(a5, _mm512_loadu_pd(f1 + k + pp + 1), fv);
        fv = _mm512_fmadd_pd(a6, _mm512_loadu_pd(f1 + k + pp + p), fv);
        fv = _mm512_fmadd_pd(a7, _mm512_loadu_pd(f1 + k + pp + p + 1), fv);
        __m512d gv = _mm512_mul_pd(b0, _mm512_loadu_pd(g2 + k));
        gv = _mm512_fmadd_pd(b1, _mm512_loadu_pd(g2 + k + 1), gv);
        gv = _mm512_fmadd_pd(b2, _mm512_loadu_pd(g2 + k + p), gv);
        gv = _mm512_fmadd_pd(b3, _mm512_loadu_pd(g2 + k + p + 1), gv);
        gv = _mm512_fmadd_pd(b4, _mm512_loadu_pd(g2 + k + pp), gv);
        gv = _mm512_fmadd_pd(b5, _mm512_loadu_pd(g2 + k + pp + 1), gv);
        gv = _mm512_fmadd_pd(b6, _mm512_loadu_pd(g2 + k + pp + p), gv);
        gv = _mm512_fmadd_pd(b7, _mm512_loadu_pd(g2 + k + pp + p + 1), gv);
        const __m512d q = _mm512_mul_pd(fv, gv);
        _mm512_storeu_pd(o + k, _mm512_add_pd(_mm512_loadu_pd(o + k), q));
        if constexpr (kWithRev)
          _mm512_storeu_pd(orev + k, _mm512_add_pd(_mm512_loadu_pd(orev + k), q));
      }
      if (k < len) {
        const __mmask8 m = static_cast<__mmask8>((1u << (len - k)) - 1);
        __m512d fv = _mm512_mul_pd(a0, _mm512_maskz_loadu_pd(m, f1 + k));
        fv = _mm512_fmadd_pd(a1, _mm512_maskz_loadu_pd(m, f1 + k + 1), fv);
        fv = _mm512_fmadd_pd(a2, _mm512_maskz_loadu_pd(m, f1 + k + p), fv);
        fv = _mm512_fmadd_pd(a3, _mm512_maskz_loadu_pd(m, f1 + k + p + 1), fv);
        fv = _mm512_fmadd_pd(a4, _mm512_maskz_loadu_pd(m, f1 + k + pp), fv);
        fv = _mm512_fmadd_pd(a5, _mm512_maskz_loadu_pd(m, f1 + k + pp + 1), fv);
        fv = _mm512_fmadd_pd(a6, _mm512_maskz_loadu_pd(m, f1 + k + pp + p), fv);
        fv = _mm512_fmadd_pd(a7, _mm512_maskz_loadu_pd(m, f1 + k + pp + p + 1), fv);
        __m512d gv = _mm512_mul_pd(b0, _mm512_maskz_loadu_pd(m, g2 + k));
        gv = _mm512_fmadd_pd(b1, _mm512_maskz_loadu_pd(m, g2 + k + 1), gv);
        gv = _mm512_fmadd_pd(b2, _mm512_maskz_loadu_pd(m, g2 + k + p), gv);
        gv = _mm512_fmadd_pd(b3, _mm512_maskz_loadu_pd(m, g2 + k + p + 1), gv);
        gv = _mm512_fmadd_pd(b4, _mm512_maskz_loadu_pd(m, g2 + k + pp), gv);
        gv = _mm512_fmadd_pd(b5, _mm512_maskz_loadu_pd(m, g2 + k + pp + 1), gv);
        gv = _mm512_fmadd_pd(b6, _mm512_maskz_loadu_pd(m, g2 + k + pp + p), gv);
        gv = _mm512_fmadd_pd(b7, _mm512_maskz_loadu_pd(m, g2 + k + pp + p + 1), gv);
        const __m512d q = _mm512_mul_pd(fv, gv);
        _mm512_mask_storeu_pd(o + k, m,
                              _mm512_add_pd(_mm512_maskz_loadu_pd(m, o + k), q));
        if constexpr (kWithRev)
          _mm512_mask_storeu_pd(
              orev + k, m, _mm512_add_pd(_mm512_maskz_loadu_pd(m, orev + k), q));
      }
    }
  }
#else
  const double a0 = K * box.w1[0], a1 = K * box.w1[1], a2 = K * box.w1[2],
               a3 = K * box.w1[3], a4 = K * box.w1[4], a5 = K * box.w1[5],
               a6 = K * box.w1[6], a7 = K * box.w1[7];
  const double b0 = box.w2[0], b1 = box.w2[1], b2 = box.w2[2], b3 = box.w2[3],
               b4 = box.w2[4], b5 = box.w2[5], b6 = box.w2[6], b7 = box.w2[7];
  for (int ix = box.lo[0]; ix <= box.hi[0]; ++ix) {
    for (int iy = box.lo[1]; iy <= box.hi[1]; ++iy) {
      const std::int64_t row = (static_cast<std::int64_t>(ix) * n + iy) * n + box.lo[2];
      const std::int64_t prow =
          (static_cast<std::int64_t>(ix + 1) * p + (iy + 1)) * p + (box.lo[2] + 1);
      const double* __restrict f1 = fdata + prow + box.base1;
      const double* __restrict g2 = gdata + prow + box.base2;
      double* __restrict o = out + row;
      double* __restrict orev = kWithRev ? out_rev + row - dshift : nullptr;
      for (int k = 0; k < len; ++k) {
        const double fv = a0 * f1[k] + a1 * f1[k + 1] + a2 * f1[k + p] +
                          a3 * f1[k + p + 1] + a4 * f1[k + pp] + a5 * f1[k + pp + 1] +
                          a6 * f1[k + pp + p] + a7 * f1[k + pp + p + 1];
        const double gv = b0 * g2[k] + b1 * g2[k + 1] + b2 * g2[k + p] +
                          b3 * g2[k + p + 1] + b4 * g2[k + pp] + b5 * g2[k + pp + 1] +
                          b6 * g2[k + pp + p] + b7 * g2[k + pp + p + 1];
        const double q = fv * gv;
        o[k] += q;
        if constexpr (kWithRev) orev[k] += q;
      }
    }
  }
#endif
}

}  // namespace

void bilinear_gain_sweep(const PairGeom& geom, const Field& f, const Field& g,
                         const SweepOptions& opts, Field& gain, Field* gain_rev,
                         bool self_adjoint, SweepStats& stats) {
  const VelocityGrid& grid = *geom.grid;
  const SphereRule& sphere = *geom.sphere;
  const int n = grid.n();
  const std::int64_t n3 = grid.size();
  const int dn = 2 * n - 1;
  const std::int64_t ndiff = static_cast<std::int64_t>(dn) * dn * dn;
  // self-adjoint sweeps cover only d >= 0 (lexicographically, i.e. the upper
  // half of the flat difference index) and mirror through the reverse output
  const std::int64_t d_begin = self_adjoint ? (ndiff - 1) / 2 : 0;
  const int nsig = sphere.size();
  const double h3 = grid.cell_volume();
  const double aj = geom.mj / (geom.mi + geom.mj);
  const double ai = geom.mi / (geom.mi + geom.mj);
  const double final_scale = geom.cphi * h3;

  const PaddedField fp(n, f);
  const PaddedField gp(n, g);

  const bool prune = opts.node_error_budget > 0.0 && opts.mass_error_budget > 0.0;
  RadialEnvelope env_f, env_g;
  AxisProfiles prof_f, prof_g;
  if (prune) {
    env_f = build_envelope(grid, f);
    env_g = build_envelope(grid, g);
    prof_f = build_axis_profiles(grid, f);
    prof_g = build_axis_profiles(grid, g);
  }

  const int workers = worker_count();
  std::vector<Field> bufs(workers, Field(n3, 0.0));
  std::vector<Field> bufs_rev;
  if (gain_rev) bufs_rev.assign(workers, Field(n3, 0.0));
  std::vector<SweepStats> tstats(workers);

  parallel_chunks(ndiff - d_begin, [&](int w, std::int64_t begin, std::int64_t end) {
    double* __restrict out = bufs[w].data();
    double* __restrict out_rev = gain_rev ? bufs_rev[w].data() : nullptr;
    SweepStats& st = tstats[w];
    ThreadBudget budget;
    if (prune) {
      budget.enabled = true;
      budget.node = opts.node_error_budget / workers;
      budget.mass = opts.mass_error_budget / workers;
    }
    const double* fdata = fp.data.data();
    const double* gdata = gp.data.data();
    DiffGeom d;
    for (std::int64_t idx = begin; idx < end; ++idx) {
      const std::int64_t dflat = d_begin + idx;
      const bool active = decode_diff(geom, dflat, d);
      // in the self-adjoint half sweep every d > 0 stands for the antipodal
      // pair, so the sample accounting doubles
      const std::int64_t mult = (self_adjoint && dflat != d_begin) ? 2 : 1;
      const bool with_rev = gain_rev && !(self_adjoint && dflat == d_begin);
      st.samples_total += mult * d.pair_volume * nsig;
      if (!active) {
        // zero kinetic factor: integrand vanishes, nothing escapes
        st.samples_evaluated += mult * d.pair_volume * nsig;
        continue;
      }
      if (prune) {
        double r1, r2;
        diff_min_radii(d, aj, ai, &r1, &r2);
        const double u =
            mult * final_scale * d.kin * d.sb * env_f.query(r1) * env_g.query(r2);
        if (budget.try_skip(u, u * static_cast<double>(d.pair_volume) * h3)) {
          st.samples_pruned += mult * d.pair_volume * nsig;
          continue;
        }
      }
      for (int q = 0; q < nsig; ++q) {
        const Vec3& sig = sphere.nodes()[q];
        const double cos_t = dot(d.dhat, sig);
        const double wb = sphere.weights()[q] *
                          (geom.b_constant ? geom.b_value : geom.b->eval(cos_t));
        const Vec3 u = sig * d.dnorm - d.dvec;
        SigmaBox box = make_sigma_box(grid, d.di, u * aj, u * (-ai));
        if (box.empty) continue;
        if (prune) {
          const double kwb = final_scale * d.kin * wb;
          const double ub =
              mult * kwb * env_f.query(box.min_r1) * env_g.query(box.min_r2);
          if (budget.try_skip(ub, ub * static_cast<double>(box.volume) * h3)) {
            st.samples_pruned += mult * box.volume;
            continue;
          }
          tighten_box(box, h3, mult, budget, st, [&](int a, int i) {
            return kwb * slice_max(prof_f.col[a], i, box.o1[a]) *
                   slice_max(prof_g.col[a], i, box.o2[a]);
          });
          if (box.empty) continue;
        }
        st.samples_evaluated += mult * box.volume;
        const double K = d.kin * wb;
        const std::int64_t dshift =
            (static_cast<std::int64_t>(d.di[0]) * n + d.di[1]) * n + d.di[2];
        if (with_rev)
          gain_box<true>(box, fdata, gdata, out, out_rev, n, dshift, K);
        else
          gain_box<false>(box, fdata, gdata, out, nullptr, n, dshift, K);
      }
    }
    st.pruned_node_bound += budget.acc_node;
    st.pruned_mass_bound += budget.acc_mass;
  });

  for (int w = 0; w < workers; ++w) {
    const Field& src = bufs[w];
    for (std::int64_t i = 0; i < n3; ++i) gain[i] += final_scale * src[i];
    if (gain_rev) {
      const Field& srcr = bufs_rev[w];
      Field& dst = *gain_rev;
      for (std::int64_t i = 0; i < n3; ++i) dst[i] += final_scale * srcr[i];
    }
    stats.merge(tstats[w]);
  }
}

namespace {

#ifdef __AVX512F__

// 8-point stencil dot at vector width, padded layout.
inline __m512d stencil8(const double* s, int k, int p, std::int64_t pp, const __m512d* w) {
  __m512d v = _mm512_mul_pd(w[0], _mm512_loadu_pd(s + k));
  v = _mm512_fmadd_pd(w[1], _mm512_loadu_pd(s + k + 1), v);
  v = _mm512_fmadd_pd(w[2], _mm512_loadu_pd(s + k + p), v);
  v = _mm512_fmadd_pd(w[3], _mm512_loadu_pd(s + k + p + 1), v);
  v = _mm512_fmadd_pd(w[4], _mm512_loadu_pd(s + k + pp), v);
  v = _mm512_fmadd_pd(w[5], _mm512_loadu_pd(s + k + pp + 1), v);
  v = _mm512_fmadd_pd(w[6], _mm512_loadu_pd(s + k + pp + p), v);
  v = _mm512_fmadd_pd(w[7], _mm512_loadu_pd(s + k + pp + p + 1), v);
  return v;
}

inline __m512d stencil8_masked(const double* s, int k, int p, std::int64_t pp,
                               const __m512d* w, __mmask8 m) {
  __m512d v = _mm512_mul_pd(w[0], _mm512_maskz_loadu_pd(m, s + k));
  v = _mm512_fmadd_pd(w[1], _mm512_maskz_loadu_pd(m, s + k + 1), v);
  v = _mm512_fmadd_pd(w[2], _mm512_maskz_loadu_pd(m, s + k + p), v);
  v = _mm512_fmadd_pd(w[3], _mm512_maskz_loadu_pd(m, s + k + p + 1), v);
  v = _mm512_fmadd_pd(w[4], _mm512_maskz_loadu_pd(m, s + k + pp), v);
  v = _mm512_fmadd_pd(w[5], _mm512_maskz_loadu_pd(m, s + k + pp + 1), v);
  v = _mm512_fmadd_pd(w[6], _mm512_maskz_loadu_pd(m, s + k + pp + p), v);
  v = _mm512_fmadd_pd(w[7], _mm512_maskz_loadu_pd(m, s + k + pp + p + 1), v);
  return v;
}

#endif  // __AVX512F__

template <bool kWithTheta>
void linearized_box(const SigmaBox& box, const double* __restrict fip,
                    const double* __restrict mip, const double* __restrict fjp,
                    const double* __restrict mjp, const double* __restrict pvdata,
                    double* __restrict agf, double* __restrict bgf,
                    double* __restrict lgf, int n, double K, double TH) {
  const int p = n + 2;
  const std::int64_t pp = static_cast<std::int64_t>(p) * p;
  const int len = box.hi[2] - box.lo[2] + 1;
#ifdef __AVX512F__
  __m512d w1[8], w2[8];
  for (int c = 0; c < 8; ++c) {
    w1[c] = _mm512_set1_pd(box.w1[c]);
    w2[c] = _mm512_set1_pd(box.w2[c]);
  }
  const __m512d Kv = _mm512_set1_pd(K);
  const __m512d THv = _mm512_set1_pd(TH);
  for (int ix = box.lo[0]; ix <= box.hi[0]; ++ix) {
    for (int iy = box.lo[1]; iy <= box.hi[1]; ++iy) {
      const std::int64_t row = (static_cast<std::int64_t>(ix) * n + iy) * n + box.lo[2];
      const std::int64_t prow =
          (static_cast<std::int64_t>(ix + 1) * p + (iy + 1)) * p + (box.lo[2] + 1);
      const double* fi1 = fip + prow + box.base1;
      const double* mi1 = mip + prow + box.base1;
      const double* fj2 = fjp + prow + box.base2;
      const double* mj2 = mjp + prow + box.base2;
      const double* pv = kWithTheta ? pvdata + row : nullptr;
      double* ag = kWithTheta ? agf + row : nullptr;
      double* bg = kWithTheta ? bgf + row : nullptr;
      double* lg = lgf + row;
      int k = 0;
      for (; k + 8 <= len; k += 8) {
        const __m512d fiv = stencil8(fi1, k, p, pp, w1);
        const __m512d miv = stencil8(mi1, k, p, pp, w1);
        const __m512d fjv = stencil8(fj2, k, p, pp, w2);
        const __m512d mjv = stencil8(mj2, k, p, pp, w2);
        const __m512d S = _mm512_fmadd_pd(fiv, mjv, _mm512_mul_pd(miv, fjv));
        _mm512_storeu_pd(lg + k, _mm512_fmadd_pd(Kv, S, _mm512_loadu_pd(lg + k)));
        if constexpr (kWithTheta) {
          const __m512d t = _mm512_mul_pd(THv, _mm512_loadu_pd(pv + k));
          _mm512_storeu_pd(ag + k,
                           _mm512_fmadd_pd(t, S, _mm512_loadu_pd(ag + k)));
          const __m512d kt = _mm512_sub_pd(Kv, t);
          _mm512_storeu_pd(bg + k,
                           _mm512_fmadd_pd(kt, S, _mm512_loadu_pd(bg + k)));
        }
      }
      if (k < len) {
        const __mmask8 m = static_cast<__mmask8>((1u << (len - k)) - 1);
        const __m512d fiv = stencil8_masked(fi1, k, p, pp, w1, m);
        const __m512d miv = stencil8_masked(mi1, k, p, pp, w1, m);
        const __m512d fjv = stencil8_masked(fj2, k, p, pp, w2, m);
        const __m512d mjv = stencil8_masked(mj2, k, p, pp, w2, m);
        const __m512d S = _mm512_fmadd_pd(fiv, mjv, _mm512_mul_pd(miv, fjv));
        _mm512_mask_storeu_pd(
            lg + k, m, _mm512_fmadd_pd(Kv, S, _mm512_maskz_loadu_pd(m, lg + k)));
        if constexpr (kWithTheta) {
          const __m512d t = _mm512_mul_pd(THv, _mm512_maskz_loadu_pd(m, pv + k));
          _mm512_mask_storeu_pd(
              ag + k, m, _mm512_fmadd_pd(t, S, _mm512_maskz_loadu_pd(m, ag + k)));
          const __m512d kt = _mm512_sub_pd(Kv, t);
          _mm512_mask_storeu_pd(
              bg + k, m, _mm512_fmadd_pd(kt, S, _mm512_maskz_loadu_pd(m, bg + k)));
        }
      }
    }
  }
#else
  const double a0 = box.w1[0], a1 = box.w1[1], a2 = box.w1[2], a3 = box.w1[3],
               a4 = box.w1[4], a5 = box.w1[5], a6 = box.w1[6], a7 = box.w1[7];
  const double b0 = box.w2[0], b1 = box.w2[1], b2 = box.w2[2], b3 = box.w2[3],
               b4 = box.w2[4], b5 = box.w2[5], b6 = box.w2[6], b7 = box.w2[7];
  for (int ix = box.lo[0]; ix <= box.hi[0]; ++ix) {
    for (int iy = box.lo[1]; iy <= box.hi[1]; ++iy) {
      const std::int64_t row = (static_cast<std::int64_t>(ix) * n + iy) * n + box.lo[2];
      const std::int64_t prow =
          (static_cast<std::int64_t>(ix + 1) * p + (iy + 1)) * p + (box.lo[2] + 1);
      const double* __restrict fi1 = fip + prow + box.base1;
      const double* __restrict mi1 = mip + prow + box.base1;
      const double* __restrict fj2 = fjp + prow + box.base2;
      const double* __restrict mj2 = mjp + prow + box.base2;
      const double* __restrict pv = kWithTheta ? pvdata + row : nullptr;
      double* __restrict ag = kWithTheta ? agf + row : nullptr;
      double* __restrict bg = kWithTheta ? bgf + row : nullptr;
      double* __restrict lg = lgf + row;
      for (int k = 0; k < len; ++k) {
        const double fiv = a0 * fi1[k] + a1 * fi1[k + 1] + a2 * fi1[k + p] +
                           a3 * fi1[k + p + 1] + a4 * fi1[k + pp] + a5 * fi1[k + pp + 1] +
                           a6 * fi1[k + pp + p] + a7 * fi1[k + pp + p + 1];
        const double miv = a0 * mi1[k] + a1 * mi1[k + 1] + a2 * mi1[k + p] +
                           a3 * mi1[k + p + 1] + a4 * mi1[k + pp] + a5 * mi1[k + pp + 1] +
                           a6 * mi1[k + pp + p] + a7 * mi1[k + pp + p + 1];
        const double fjv = b0 * fj2[k] + b1 * fj2[k + 1] + b2 * fj2[k + p] +
                           b3 * fj2[k + p + 1] + b4 * fj2[k + pp] + b5 * fj2[k + pp + 1] +
                           b6 * fj2[k + pp + p] + b7 * fj2[k + pp + p + 1];
        const double mjv = b0 * mj2[k] + b1 * mj2[k + 1] + b2 * mj2[k + p] +
                           b3 * mj2[k + p + 1] + b4 * mj2[k + pp] + b5 * mj2[k + pp + 1] +
                           b6 * mj2[k + pp + p] + b7 * mj2[k + pp + p + 1];
        const double S = fiv * mjv + miv * fjv;
        lg[k] += K * S;
        if constexpr (kWithTheta) {
          const double t = TH * pv[k];
          ag[k] += t * S;
          bg[k] += (K - t) * S;
        }
      }
    }
  }
#endif
}

}  // namespace

void linearized_gain_sweep(const PairGeom& geom, const Field& fi, const Field& fj,
                           const Field& mu_i, const Field& mu_j, const Mollifier* moll,
                           const Field* pv, const SweepOptions& opts, Field* again,
                           Field* bgain, Field& lgain, SweepStats& stats) {
  const VelocityGrid& grid = *geom.grid;
  const SphereRule& sphere = *geom.sphere;
  const int n = grid.n();
  const std::int64_t n3 = grid.size();
  const int dn = 2 * n - 1;
  const std::int64_t ndiff = static_cast<std::int64_t>(dn) * dn * dn;
  const int nsig = sphere.size();
  const double h3 = grid.cell_volume();
  const double aj = geom.mj / (geom.mi + geom.mj);
  const double ai = geom.mi / (geom.mi + geom.mj);
  const double final_scale = geom.cphi * h3;
  const bool with_theta = (moll != nullptr);

  const PaddedField fip(n, fi);
  const PaddedField fjp(n, fj);
  const PaddedField mip(n, mu_i);
  const PaddedField mjp(n, mu_j);

  const bool prune = opts.node_error_budget > 0.0 && opts.mass_error_budget > 0.0;
  RadialEnvelope env_fi, env_fj, env_mi, env_mj;
  AxisProfiles prof_fi, prof_fj, prof_mi, prof_mj;
  if (prune) {
    env_fi = build_envelope(grid, fi);
    env_fj = build_envelope(grid, fj);
    env_mi = build_envelope(grid, mu_i);
    env_mj = build_envelope(grid, mu_j);
    prof_fi = build_axis_profiles(grid, fi);
    prof_fj = build_axis_profiles(grid, fj);
    prof_mi = build_axis_profiles(grid, mu_i);
    prof_mj = build_axis_profiles(grid, mu_j);
  }

  const int workers = worker_count();
  const int nbuf = with_theta ? 3 : 1;
  std::vector<std::vector<Field>> bufs(workers);
  for (auto& b : bufs) b.assign(nbuf, Field(n3, 0.0));
  std::vector<SweepStats> tstats(workers);

  parallel_chunks(ndiff, [&](int w, std::int64_t begin, std::int64_t end) {
    double* __restrict lg = bufs[w][0].data();
    double* __restrict ag = with_theta ? bufs[w][1].data() : nullptr;
    double* __restrict bg = with_theta ? bufs[w][2].data() : nullptr;
    SweepStats& st = tstats[w];
    ThreadBudget budget;
    if (prune) {
      budget.enabled = true;
      budget.node = opts.node_error_budget / workers;
      budget.mass = opts.mass_error_budget / workers;
    }
    DiffGeom d;
    for (std::int64_t dflat = begin; dflat < end; ++dflat) {
      const bool active = decode_diff(geom, dflat, d);
      st.samples_total += d.pair_volume * nsig;
      if (!active) {
        st.samples_evaluated += d.pair_volume * nsig;
        continue;
      }
      if (prune) {
        double r1, r2;
        diff_min_radii(d, aj, ai, &r1, &r2);
        const double bound_s = env_fi.query(r1) * env_mj.query(r2) +
                               env_mi.query(r1) * env_fj.query(r2);
        const double u = final_scale * d.kin * d.sb * bound_s;
        // A and B are bounded by the same sum, so a factor 2 covers all
        // three accumulators
        if (budget.try_skip(2.0 * u, 2.0 * u * static_cast<double>(d.pair_volume) * h3)) {
          st.samples_pruned += d.pair_volume * nsig;
          continue;
        }
      }
      const double prel = with_theta ? moll->profile_rel(d.dnorm) : 0.0;
      for (int q = 0; q < nsig; ++q) {
        const Vec3& sig = sphere.nodes()[q];
        const double cos_t = dot(d.dhat, sig);
        const double bval = geom.b_constant ? geom.b_value : geom.b->eval(cos_t);
        const double wb = sphere.weights()[q] * bval;
        const Vec3 u = sig * d.dnorm - d.dvec;
        SigmaBox box = make_sigma_box(grid, d.di, u * aj, u * (-ai));
        if (box.empty) continue;
        if (prune) {
          const double kwb = final_scale * d.kin * wb;
          const double bound_s = env_fi.query(box.min_r1) * env_mj.query(box.min_r2) +
                                 env_mi.query(box.min_r1) * env_fj.query(box.min_r2);
          const double ub = kwb * bound_s;
          if (budget.try_skip(2.0 * ub, 2.0 * ub * static_cast<double>(box.volume) * h3)) {
            st.samples_pruned += box.volume;
            continue;
          }
          tighten_box(box, h3, 1, budget, st, [&](int a, int i) {
            return 2.0 * kwb *
                   (slice_max(prof_fi.col[a], i, box.o1[a]) *
                        slice_max(prof_mj.col[a], i, box.o2[a]) +
                    slice_max(prof_mi.col[a], i, box.o1[a]) *
                        slice_max(prof_fj.col[a], i, box.o2[a]));
          });
          if (box.empty) continue;
        }
        st.samples_evaluated += box.volume;
        const double K = d.kin * wb;
        const double TH = with_theta
                              ? d.kin * wb * prel * moll->profile_ang(std::abs(cos_t))
                              : 0.0;
        if (with_theta)
          linearized_box<true>(box, fip.data.data(), mip.data.data(), fjp.data.data(),
                               mjp.data.data(), pv->data(), ag, bg, lg, n, K, TH);
        else
          linearized_box<false>(box, fip.data.data(), mip.data.data(), fjp.data.data(),
                                mjp.data.data(), nullptr, nullptr, nullptr, lg, n, K, TH);
      }
    }
    st.pruned_node_bound += budget.acc_node;
    st.pruned_mass_bound += budget.acc_mass;
  });

  for (int w = 0; w < workers; ++w) {
    for (std::int64_t i = 0; i < n3; ++i) lgain[i] += final_scale * bufs[w][0][i];
    if (with_theta) {
      for (std::int64_t i = 0; i < n3; ++i) (*again)[i] += final_scale * bufs[w][1][i];
      for (std::int64_t i = 0; i < n3; ++i) (*bgain)[i] += final_scale * bufs[w][2][i];
    }
    stats.merge(tstats[w]);
  }
}

void correlate_loss(const VelocityGrid& grid, const DiffTables& tables,
                    const std::vector<double>& tab, const Field& g, double scale,
                    Field& out) {
  const int n = grid.n();
  const int dn = tables.dn;
  // fold kin into the kernel once
  std::vector<double> ck(tables.kin.size());
  for (std::size_t i = 0; i < ck.size(); ++i) ck[i] = tables.kin[i] * tab[i];

  parallel_chunks(n, [&](int, std::int64_t xb, std::int64_t xe) {
    for (int ix = static_cast<int>(xb); ix < static_cast<int>(xe); ++ix) {
      for (int iy = 0; iy < n; ++iy) {
        double* __restrict orow = out.data() + (static_cast<std::int64_t>(ix) * n + iy) * n;
        for (int sx = 0; sx < n; ++sx) {
          const std::int64_t cx = static_cast<std::int64_t>(ix - sx + n - 1) * dn;
          for (int sy = 0; sy < n; ++sy) {
            const double* __restrict grow =
                g.data() + (static_cast<std::int64_t>(sx) * n + sy) * n;
            // row start at dz = -(n-1)
            const double* __restrict ckrow = ck.data() + (cx + (iy - sy + n - 1)) * dn;
            for (int sz = 0; sz < n; ++sz) {
              const double gs = grow[sz];
              if (gs == 0.0) continue;
              const double gss = gs * scale;
              const double* __restrict r = ckrow + (n - 1) - sz;
              for (int iz = 0; iz < n; ++iz) orow[iz] += gss * r[iz];
            }
          }
        }
      }
    }
  });
}

}  // namespace detail
}  // namespace boltzmix
