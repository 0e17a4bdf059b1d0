#include "boltzmix/collision.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "collision_impl.hpp"

namespace boltzmix {

PostCollision post_collision(const Vec3& v, const Vec3& v_star, const Vec3& sigma,
                             double mi, double mj) {
  if (std::abs(norm(sigma) - 1.0) > 1e-9)
    throw ValidationError("post_collision: sigma must be a unit vector");
  if (!(mi > 0.0) || !(mj > 0.0))
    throw ValidationError("post_collision: masses must be positive");
  const double inv_m = 1.0 / (mi + mj);
  const Vec3 rel = v - v_star;
  const double rel_n = norm(rel);
  const Vec3 center = (mi * v + mj * v_star) * inv_m;
  return {center + (mj * rel_n * inv_m) * sigma, center - (mi * rel_n * inv_m) * sigma};
}

double a_function(double a1, double a2, double a3, double a4) {
  std::array<double, 4> a{a1, a2, a3, a4};
  for (double x : a)
    if (!(x > 0.0) || !std::isfinite(x))
      throw ValidationError("a_function: arguments must be positive and finite");
  std::sort(a.begin(), a.end(), std::greater<double>());
  const double reach = a[3] + a[2] - std::max(a[0] - a[1], a[2] - a[3]);
  if (reach <= 0.0) return 0.0;
  return 8.0 * kPi * kPi / (a[0] * a[1] * a[2] * a[3]) * reach;
}

// ---------------------------------------------------------------------------
// CollisionOperator

CollisionOperator::CollisionOperator(const Mixture& mix, const KernelModel& kernel,
                                     const VelocityGrid& grid, const SphereRule& sphere)
    : impl_(std::make_unique<Impl>(mix, kernel, grid, sphere)) {}

CollisionOperator::~CollisionOperator() = default;

const Mixture& CollisionOperator::mixture() const { return impl_->mix; }
const KernelModel& CollisionOperator::kernel() const { return impl_->kernel; }
const VelocityGrid& CollisionOperator::grid() const { return impl_->grid; }
const SphereRule& CollisionOperator::sphere() const { return impl_->sphere; }

namespace {

void enforce_escape_cap(const SweepStats& stats, double cap) {
  if (stats.escape_fraction > cap)
    throw NumericalError("collision sweep: domain escape fraction " +
                         std::to_string(stats.escape_fraction) + " exceeds cap " +
                         std::to_string(cap));
}

}  // namespace

QijResult CollisionOperator::q_ij(int i, int j, const Field& f, const Field& g,
                                  const SweepOptions& opts) const {
  impl_->check_species(i);
  impl_->check_species(j);
  impl_->check_field(f);
  impl_->check_field(g);
  const std::int64_t n3 = impl_->grid.size();
  QijResult res{Field(n3, 0.0), Field(n3, 0.0), Field(n3, 0.0), {}};

  const detail::PairGeom geom = impl_->geom(i, j);
  detail::bilinear_gain_sweep(geom, f, g, opts, res.gain, nullptr, false, res.stats);
  res.stats.finalize();
  enforce_escape_cap(res.stats, opts.escape_cap);

  // loss: f(v) times the g-weighted frequency, same lattice and sigma sums
  Field freq(n3, 0.0);
  detail::correlate_loss(impl_->grid, impl_->tables(i, j), impl_->tables(i, j).sb, g,
                         geom.cphi * impl_->grid.cell_volume(), freq);
  for (std::int64_t v = 0; v < n3; ++v) {
    res.loss[v] = f[v] * freq[v];
    res.q[v] = res.gain[v] - res.loss[v];
  }
  return res;
}

QijResult CollisionOperator::q_ij(int i, int j, const Field& f, const Field& g) const {
  return q_ij(i, j, f, g, SweepOptions{});
}

CollisionOperator::GainFreq CollisionOperator::gain_and_loss_frequency(
    const DistributionVec& F, const SweepOptions& opts) const {
  const int n_sp = impl_->mix.n_species();
  if (F.n_species() != n_sp)
    throw ValidationError("collision: distribution species count mismatch");
  if (!(F.grid == impl_->grid))
    throw ValidationError("collision: distribution grid mismatch");
  for (int s = 0; s < n_sp; ++s) impl_->check_field(F[s]);

  GainFreq out{DistributionVec(impl_->grid, n_sp), DistributionVec(impl_->grid, n_sp), {}};
  // gains: diagonal pairs directly, cross pairs bidirectionally
  for (int i = 0; i < n_sp; ++i) {
    const detail::PairGeom gii = impl_->geom(i, i);
    // diagonal pairs: antipodal self-adjoint half sweep
    detail::bilinear_gain_sweep(gii, F[i], F[i], opts, out.gain[i], &out.gain[i], true,
                                out.stats);
    for (int j = i + 1; j < n_sp; ++j) {
      const detail::PairGeom gij = impl_->geom(i, j);
      detail::bilinear_gain_sweep(gij, F[i], F[j], opts, out.gain[i], &out.gain[j], false,
                                  out.stats);
    }
  }
  // loss frequencies
  const double h3 = impl_->grid.cell_volume();
  for (int i = 0; i < n_sp; ++i)
    for (int j = 0; j < n_sp; ++j)
      detail::correlate_loss(impl_->grid, impl_->tables(i, j), impl_->tables(i, j).sb,
                             F[j], impl_->kernel.cphi(i, j) * h3, out.freq[i]);
  out.stats.finalize();
  enforce_escape_cap(out.stats, opts.escape_cap);
  return out;
}

QFullResult CollisionOperator::q_full(const DistributionVec& F,
                                      const SweepOptions& opts) const {
  GainFreq gf = gain_and_loss_frequency(F, opts);
  const int n_sp = impl_->mix.n_species();
  const std::int64_t n3 = impl_->grid.size();
  QFullResult res{DistributionVec(impl_->grid, n_sp), std::move(gf.gain),
                  DistributionVec(impl_->grid, n_sp), gf.stats};
  for (int i = 0; i < n_sp; ++i) {
    for (std::int64_t v = 0; v < n3; ++v) {
      res.loss[i][v] = F[i][v] * gf.freq[i][v];
      res.q[i][v] = res.gain[i][v] - res.loss[i][v];
    }
  }
  return res;
}

QFullResult CollisionOperator::q_full(const DistributionVec& F) const {
  return q_full(F, SweepOptions{});
}

Field CollisionOperator::loss_frequency(int i, const DistributionVec& F) const {
  impl_->check_species(i);
  Field freq(impl_->grid.size(), 0.0);
  const double h3 = impl_->grid.cell_volume();
  for (int j = 0; j < impl_->mix.n_species(); ++j)
    detail::correlate_loss(impl_->grid, impl_->tables(i, j), impl_->tables(i, j).sb, F[j],
                           impl_->kernel.cphi(i, j) * h3, freq);
  return freq;
}

// ---------------------------------------------------------------------------
// RadialProfile and the gain majorant

RadialProfile::RadialProfile(std::vector<double> samples, double r_max)
    : samples_(std::move(samples)), r_max_(r_max) {
  if (samples_.size() < 2) throw ValidationError("radial profile: need >= 2 samples");
  if (!(r_max > 0.0)) throw ValidationError("radial profile: r_max must be positive");
  for (double s : samples_)
    if (!std::isfinite(s)) throw ValidationError("radial profile: non-finite sample");
}

double RadialProfile::eval(double r) const {
  if (r < 0.0 || r > r_max_) return 0.0;
  const int m = static_cast<int>(samples_.size()) - 1;
  double s = r / r_max_ * m;
  const int i0 = std::min(static_cast<int>(s), m - 1);
  const double t = s - i0;
  return samples_[i0] * (1.0 - t) + samples_[i0 + 1] * t;
}

double RadialProfile::peak() const {
  return *std::max_element(samples_.begin(), samples_.end());
}

double RadialProfile::support_radius(double frac) const {
  const double cut = frac * peak();
  const int m = static_cast<int>(samples_.size()) - 1;
  for (int i = m; i >= 0; --i)
    if (std::abs(samples_[i]) > cut) return r_max_ * i / m;
  return 0.0;
}

MajorantResult q_plus_radial_majorant(const KernelModel& kernel, double mi, double mj,
                                      int i, int j, const RadialProfile& F,
                                      const RadialProfile& G, double r, int quad_cells) {
  if (!(r > 0.0)) throw ValidationError("majorant: r must be positive");
  if (!(mi > 0.0) || !(mj > 0.0)) throw ValidationError("majorant: masses must be positive");
  for (double s : F.samples())
    if (s < 0.0) throw ValidationError("majorant: profiles must be nonnegative");
  for (double s : G.samples())
    if (s < 0.0) throw ValidationError("majorant: profiles must be nonnegative");

  MajorantResult res;
  res.f_tail_truncated = F.eval(F.r_max()) > 1e-10 * std::max(F.peak(), 1e-300);
  res.g_tail_truncated = G.eval(G.r_max()) > 1e-10 * std::max(G.peak(), 1e-300);

  const double gamma = kernel.gamma();
  const double binf = kernel.b_inf(i, j);
  const double c0 = 16.0 * kPi * kPi * binf * (mi + mj) * (mi + mj) / (mi * mj * mj);
  const double mass_ratio = mi / mj;

  const double ra = F.r_max();
  const double rb = G.r_max();
  const double d1 = ra / quad_cells;
  const double d2 = rb / quad_cells;
  const double strip = std::max(d1, d2);  // half-width of the singular strip

  // smooth part of the integrand (everything except |r' - r'*|^{gamma-1})
  const auto smooth = [&](double rp, double rs) -> double {
    const double rstar2 = mass_ratio * rp * rp + rs * rs - mass_ratio * r * r;
    if (rstar2 < 0.0) return 0.0;  // indicator off
    const double rstar = std::sqrt(rstar2);
    const double mn = std::min(std::min(mi * r, mj * rstar), std::min(mi * rp, mj * rs));
    return c0 * rp * rs / r * mn * F.eval(rp) * G.eval(rs);
  };
  // integral of |x|^{gamma-1} over [a, b]
  const auto sing_int = [&](double a, double b) -> double {
    const auto prim = [&](double x) {
      return (x >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(x), gamma) / gamma;
    };
    return prim(b) - prim(a);
  };

  double total = 0.0;
  for (int p = 0; p < quad_cells; ++p) {
    const double rp = (p + 0.5) * d1;
    // cells whose centers fall inside the strip get the analytic singular
    // weight against the smooth part frozen at the diagonal
    const int qlo = std::max(0, static_cast<int>(std::ceil((rp - strip) / d2 - 0.5)));
    const int qhi =
        std::min(quad_cells - 1, static_cast<int>(std::floor((rp + strip) / d2 - 0.5)));
    if (qlo <= qhi) {
      const double lo = qlo * d2;
      const double hi = (qhi + 1) * d2;
      total += smooth(rp, rp) * sing_int(lo - rp, hi - rp) * d1;
    }
    for (int q = 0; q < quad_cells; ++q) {
      if (q >= qlo && q <= qhi) continue;
      const double rs = (q + 0.5) * d2;
      total += smooth(rp, rs) * std::pow(std::abs(rp - rs), gamma - 1.0) * d1 * d2;
    }
  }
  res.value = total;
  return res;
}

}  // namespace boltzmix
