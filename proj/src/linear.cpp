#include "boltzmix/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "collision_impl.hpp"

namespace boltzmix {

double nu_ij(const KernelModel& kernel, const Mixture& mix, int i, int j, const Vec3& v,
             const SphereRule& sphere, const VelocityGrid& grid) {
  const double gamma = kernel.gamma();
  const double mj = mix.mass(j);
  const double amp = mix.density(j) * std::pow(mj / (2.0 * kPi), 1.5);
  const AngularPart& b = kernel.angular(i, j);
  const bool b_const = (b.kind() == AngularPart::Kind::Constant);
  const double sb_const = b_const ? kFourPi * b.eval(0.0) : 0.0;
  const double h3 = grid.cell_volume();
  double sum = 0.0;
  const int n = grid.n();
  for (int ix = 0; ix < n; ++ix) {
    const double wx = grid.coord(ix);
    for (int iy = 0; iy < n; ++iy) {
      const double wy = grid.coord(iy);
      for (int iz = 0; iz < n; ++iz) {
        const double wz = grid.coord(iz);
        const Vec3 rel{v.x - wx, v.y - wy, v.z - wz};
        const double rn = norm(rel);
        double kin;
        if (rn == 0.0)
          kin = (gamma == 0.0) ? 1.0 : 0.0;
        else
          kin = std::pow(rn, gamma);
        if (kin == 0.0) continue;
        double sb = sb_const;
        if (!b_const) {
          const Vec3 dhat = (rn > 0.0) ? rel / rn : Vec3{0.0, 0.0, 1.0};
          sb = 0.0;
          for (int q = 0; q < sphere.size(); ++q)
            sb += sphere.weights()[q] * b.eval(dot(dhat, sphere.nodes()[q]));
        }
        const double mu = amp * std::exp(-0.5 * mj * (wx * wx + wy * wy + wz * wz));
        sum += kin * sb * mu;
      }
    }
  }
  return kernel.cphi(i, j) * h3 * sum;
}

NuBounds nu_bounds(const KernelModel& kernel, const Mixture& mix, int i, int j,
                   const Vec3& v) {
  const double gamma = kernel.gamma();
  const double mj = mix.mass(j);
  const double pref = kernel.cphi(i, j) * kernel.l_b(i, j) /
                      std::pow(mj, 0.5 * (1.0 + gamma));
  const double speed_pow = std::pow(mj, 0.5 * gamma) * std::pow(norm(v), gamma);
  const double floor_c = std::sqrt(2.0 / (std::exp(1.0) * kPi));
  return {pref * std::max(speed_pow, floor_c), pref * (speed_pow + 2.0)};
}

double nu_floor(const KernelModel& kernel, const Mixture& mix) {
  const double gamma = kernel.gamma();
  const double floor_c = std::sqrt(2.0 / (std::exp(1.0) * kPi));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mix.n_species(); ++i) {
    double row = 0.0;
    for (int j = 0; j < mix.n_species(); ++j)
      row += kernel.cphi(i, j) * kernel.l_b(i, j) /
             std::pow(mix.mass(j), 0.5 * (1.0 + gamma)) * floor_c;
    best = std::min(best, row);
  }
  return best;
}

// ---------------------------------------------------------------------------
// LinearizedOperator

LinearizedOperator::LinearizedOperator(const CollisionOperator& op)
    : op_(&op), mu_(maxwellian(op.mixture(), op.grid())) {
  const int n_sp = op.mixture().n_species();
  nu_.assign(n_sp, Field(op.grid().size(), 0.0));
  for (int i = 0; i < n_sp; ++i) nu_[i] = op.loss_frequency(i, mu_);
}

double LinearizedOperator::nu_min() const {
  double m = std::numeric_limits<double>::infinity();
  for (const Field& f : nu_)
    for (double v : f) m = std::min(m, v);
  return m;
}

DistributionVec LinearizedOperator::apply(const DistributionVec& f,
                                          const SweepOptions& opts) const {
  const auto& impl = op_->impl();
  const VelocityGrid& grid = op_->grid();
  const int n_sp = op_->mixture().n_species();
  const std::int64_t n3 = grid.size();
  const double h3 = grid.cell_volume();
  DistributionVec out(grid, n_sp);
  SweepStats stats;
  for (int i = 0; i < n_sp; ++i) {
    for (int j = 0; j < n_sp; ++j) {
      const detail::PairGeom geom = impl.geom(i, j);
      detail::linearized_gain_sweep(geom, f[i], f[j], mu_[i], mu_[j], nullptr, nullptr,
                                    opts, nullptr, nullptr, out[i], stats);
      // loss of Q_ij(mu_i, f_j): mu_i times the f_j-weighted frequency
      Field freq(n3, 0.0);
      detail::correlate_loss(grid, impl.tables(i, j), impl.tables(i, j).sb, f[j],
                             impl.kernel.cphi(i, j) * h3, freq);
      const Field& mu_i = mu_[i];
      for (std::int64_t v = 0; v < n3; ++v) out[i][v] -= mu_i[v] * freq[v];
    }
    // loss of Q_ij(f_i, mu_j) summed over j: nu_i f_i
    const Field& nu_i = nu_[i];
    for (std::int64_t v = 0; v < n3; ++v) out[i][v] -= nu_i[v] * f[i][v];
  }
  return out;
}

DistributionVec LinearizedOperator::q_bilinear(const DistributionVec& f,
                                               const DistributionVec& g,
                                               const SweepOptions& opts) const {
  const auto& impl = op_->impl();
  const VelocityGrid& grid = op_->grid();
  const int n_sp = op_->mixture().n_species();
  const std::int64_t n3 = grid.size();
  const double h3 = grid.cell_volume();
  DistributionVec out(grid, n_sp);
  SweepStats stats;
  for (int i = 0; i < n_sp; ++i) {
    for (int j = 0; j < n_sp; ++j) {
      const detail::PairGeom geom = impl.geom(i, j);
      detail::bilinear_gain_sweep(geom, f[i], g[j], opts, out[i], nullptr, false, stats);
      Field freq(n3, 0.0);
      detail::correlate_loss(grid, impl.tables(i, j), impl.tables(i, j).sb, g[j],
                             impl.kernel.cphi(i, j) * h3, freq);
      for (std::int64_t v = 0; v < n3; ++v) out[i][v] -= f[i][v] * freq[v];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SplitOperator

SplitOperator::SplitOperator(const LinearizedOperator& lin, const Mollifier& moll)
    : lin_(&lin), moll_(moll) {
  const CollisionOperator& op = lin.collision();
  const VelocityGrid& grid = op.grid();
  pv_.resize(grid.size());
  for (std::int64_t v = 0; v < grid.size(); ++v)
    pv_[v] = moll_.profile_v(norm(grid.node(v)));
  const int n_sp = op.mixture().n_species();
  sb_theta_.resize(n_sp * n_sp);
  for (int i = 0; i < n_sp; ++i)
    for (int j = i; j < n_sp; ++j)
      sb_theta_[i * n_sp + j] = detail::mollified_sb_table(
          grid, op.sphere(), op.kernel().angular(i, j), moll_);
}

SplitResult SplitOperator::apply(const DistributionVec& f, const SweepOptions& opts,
                                 double residual_tol) const {
  const CollisionOperator& op = lin_->collision();
  const auto& impl = op.impl();
  const VelocityGrid& grid = op.grid();
  const int n_sp = op.mixture().n_species();
  const std::int64_t n3 = grid.size();
  const double h3 = grid.cell_volume();
  const DistributionVec& mu = lin_->mu();

  SplitResult res{DistributionVec(grid, n_sp), DistributionVec(grid, n_sp),
                  DistributionVec(grid, n_sp), DistributionVec(grid, n_sp), 0.0, {}};

  double f_sup = 0.0;
  for (int s = 0; s < n_sp; ++s) f_sup = std::max(f_sup, max_abs(f[s]));

  for (int i = 0; i < n_sp; ++i) {
    for (int j = 0; j < n_sp; ++j) {
      const detail::PairGeom geom = impl.geom(i, j);
      // gain parts of A, B and L in one sweep
      detail::linearized_gain_sweep(geom, f[i], f[j], mu[i], mu[j], &moll_, &pv_, opts,
                                    &res.A[i], &res.B[i], res.L[i], res.stats);
      // loss-type terms: K1 = plain frequency of f_j, K2 = mollified one
      Field k1(n3, 0.0), k2(n3, 0.0);
      const double scale = impl.kernel.cphi(i, j) * h3;
      detail::correlate_loss(grid, impl.tables(i, j), impl.tables(i, j).sb, f[j], scale,
                             k1);
      const auto& sbth = sb_theta_[std::min(i, j) * n_sp + std::max(i, j)];
      detail::correlate_loss(grid, impl.tables(i, j), sbth, f[j], scale, k2);
      const Field& mu_i = mu[i];
      for (std::int64_t v = 0; v < n3; ++v) {
        const double mollified = pv_[v] * mu_i[v] * k2[v];
        const double full = mu_i[v] * k1[v];
        res.A[i][v] -= mollified;
        res.B[i][v] -= (full - mollified);
        res.L[i][v] -= full;
      }
    }
    const Field& nu_i = lin_->nu(i);
    for (std::int64_t v = 0; v < n3; ++v) {
      res.nu_f[i][v] = nu_i[v] * f[i][v];
      res.L[i][v] -= res.nu_f[i][v];
    }
  }
  res.stats.finalize();

  double resid = 0.0;
  for (int i = 0; i < n_sp; ++i)
    for (std::int64_t v = 0; v < n3; ++v)
      resid = std::max(resid, std::abs(res.A[i][v] + res.B[i][v] - res.nu_f[i][v] -
                                       res.L[i][v]));
  res.max_residual = resid;
  if (f_sup > 0.0 && resid > residual_tol * f_sup)
    throw NumericalError("split_apply: identity residual " + std::to_string(resid) +
                         " exceeds " + std::to_string(residual_tol) + " * ||f||");
  return res;
}

SplitResult split_apply(const LinearizedOperator& lin, const Mollifier& moll,
                        const DistributionVec& f, const SweepOptions& opts,
                        double residual_tol) {
  return SplitOperator(lin, moll).apply(f, opts, residual_tol);
}

// ---------------------------------------------------------------------------
// Audit machinery

DistributionVec random_bump_field(const VelocityGrid& grid, int n_species,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DistributionVec f(grid, n_species);
  const double cmax = 0.5 * grid.v_max();
  for (int s = 0; s < n_species; ++s) {
    // center uniform in the ball |c| <= v_max / 2
    Vec3 c;
    do {
      c = {cmax * (2.0 * unit(rng) - 1.0), cmax * (2.0 * unit(rng) - 1.0),
           cmax * (2.0 * unit(rng) - 1.0)};
    } while (norm(c) > cmax);
    const Vec3 width{0.3 + 1.2 * unit(rng), 0.3 + 1.2 * unit(rng),
                     0.3 + 1.2 * unit(rng)};
    const double amp = 0.5 + 0.5 * unit(rng);
    const int n = grid.n();
    std::int64_t flat = 0;
    for (int ix = 0; ix < n; ++ix) {
      const double dx = (grid.coord(ix) - c.x) / width.x;
      for (int iy = 0; iy < n; ++iy) {
        const double dy = (grid.coord(iy) - c.y) / width.y;
        for (int iz = 0; iz < n; ++iz, ++flat) {
          const double dz = (grid.coord(iz) - c.z) / width.z;
          f[s][flat] = amp * std::exp(-0.5 * (dx * dx + dy * dy + dz * dz));
        }
      }
    }
  }
  return f;
}

namespace {

double weighted_norm(const std::vector<Field>& wtab, const DistributionVec& f) {
  return weighted_sup_norm(wtab, f);
}

}  // namespace

double audit_control_B(const SplitOperator& split, const Weight& w,
                       const std::vector<DistributionVec>& samples) {
  const LinearizedOperator& lin = split.linearized();
  const CollisionOperator& op = lin.collision();
  const auto wtab = weight_table(w, op.mixture(), op.grid());
  double worst = 0.0;
  for (const DistributionVec& f : samples) {
    const double fnorm = weighted_norm(wtab, f);
    if (fnorm <= 0.0)
      throw ValidationError("audit_control_B: zero sample excluded (quotient undefined)");
    const SplitResult sr = split.apply(f);
    double num = 0.0;
    for (int i = 0; i < f.n_species(); ++i) {
      const Field& nu_i = lin.nu(i);
      double sup = 0.0;
      for (std::int64_t v = 0; v < op.grid().size(); ++v)
        sup = std::max(sup, wtab[i][v] * std::abs(sr.B[i][v]) / nu_i[v]);
      num += sup;
    }
    worst = std::max(worst, num / fnorm);
  }
  return worst;
}

ControlQAudit audit_control_Q(
    const LinearizedOperator& lin, const Weight& w,
    const std::vector<std::pair<DistributionVec, DistributionVec>>& samples,
    double kappa2_prime) {
  const CollisionOperator& op = lin.collision();
  const double gamma = op.kernel().gamma();
  ControlQAudit audit;
  if (w.kind == Weight::Kind::Exponential) {
    if (gamma > 0.0) {
      const double k2p = (kappa2_prime >= 0.0) ? kappa2_prime : 0.5 * w.kappa2;
      if (k2p >= w.kappa2)
        throw ValidationError("audit_control_Q: kappa2' must be below kappa2");
      audit.c_w = k2p / gamma;
    } else {
      audit.cw_forced_zero = true;  // no gain-of-weight exponent available
    }
  }
  const auto wtab = weight_table(w, op.mixture(), op.grid());
  for (const auto& [f, g] : samples) {
    const double fn = weighted_norm(wtab, f);
    const double gn = weighted_norm(wtab, g);
    if (fn <= 0.0 || gn <= 0.0)
      throw ValidationError("audit_control_Q: zero sample excluded");
    const DistributionVec q = lin.q_bilinear(f, g);
    double num = 0.0;
    for (int i = 0; i < f.n_species(); ++i) {
      const Field& nu_i = lin.nu(i);
      double sup = 0.0;
      for (std::int64_t v = 0; v < op.grid().size(); ++v) {
        const double nu_pow = std::pow(nu_i[v], -1.0 + audit.c_w);
        sup = std::max(sup, wtab[i][v] * nu_pow * std::abs(q[i][v]));
      }
      num += sup;
    }
    audit.constant = std::max(audit.constant, num / (fn * gn));
  }
  return audit;
}

double audit_control_A(const SplitOperator& split, const Weight& w, double beta,
                       const std::vector<DistributionVec>& samples) {
  if (!(beta > 1.5)) throw ValidationError("audit_control_A: beta must exceed 3/2");
  const LinearizedOperator& lin = split.linearized();
  const CollisionOperator& op = lin.collision();
  const VelocityGrid& grid = op.grid();
  const auto wtab = weight_table(w, op.mixture(), op.grid());
  // target weight <v>^beta mu^{-1/2}
  std::vector<Field> awt(op.mixture().n_species(), Field(grid.size()));
  const DistributionVec& mu = lin.mu();
  for (int i = 0; i < op.mixture().n_species(); ++i)
    for (std::int64_t v = 0; v < grid.size(); ++v)
      awt[i][v] = std::pow(bracket(norm(grid.node(v))), beta) / std::sqrt(mu[i][v]);
  double worst = 0.0;
  for (const DistributionVec& f : samples) {
    const double fnorm = weighted_norm(wtab, f);
    if (fnorm <= 0.0) throw ValidationError("audit_control_A: zero sample excluded");
    const SplitResult sr = split.apply(f);
    double num = 0.0;
    for (int i = 0; i < f.n_species(); ++i) {
      double sup = 0.0;
      for (std::int64_t v = 0; v < grid.size(); ++v)
        sup = std::max(sup, awt[i][v] * std::abs(sr.A[i][v]));
      num += sup;
    }
    worst = std::max(worst, num / fnorm);
  }
  return worst;
}

}  // namespace boltzmix
