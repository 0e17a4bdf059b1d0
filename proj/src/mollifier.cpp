#include "boltzmix/mollifier.hpp"

#include <cmath>

namespace boltzmix {

Mollifier::Mollifier(double delta) : delta_(delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ValidationError("mollifier: delta must lie in (0, 1)");
}

Mollifier Mollifier::disabled() {
  Mollifier m;
  m.disabled_ = true;
  return m;
}

double Mollifier::smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

namespace {
// 1 for x <= a, 0 for x >= b
double down_edge(double x, double a, double b) {
  return Mollifier::smooth_step((b - x) / (b - a));
}
// 0 for x <= a, 1 for x >= b
double up_edge(double x, double a, double b) {
  return Mollifier::smooth_step((x - a) / (b - a));
}
}  // namespace

double Mollifier::profile_v(double speed) const {
  if (disabled_) return 0.0;
  const double inv = 1.0 / delta_;
  return down_edge(speed, inv, 2.0 * inv);
}

double Mollifier::profile_rel(double rel_speed) const {
  if (disabled_) return 0.0;
  const double inv = 1.0 / delta_;
  return up_edge(rel_speed, delta_, 2.0 * delta_) * down_edge(rel_speed, inv, 2.0 * inv);
}

double Mollifier::profile_ang(double abs_cos) const {
  if (disabled_) return 0.0;
  return down_edge(abs_cos, 1.0 - 2.0 * delta_, 1.0 - delta_);
}

double Mollifier::theta(const Vec3& v, const Vec3& v_star, const Vec3& sigma) const {
  if (disabled_) return 0.0;
  const Vec3 rel = v - v_star;
  const double rel_n = norm(rel);
  double cos_t = 0.0;
  if (rel_n > 0.0) cos_t = dot(rel, sigma) / rel_n;
  return profile_v(norm(v)) * profile_rel(rel_n) * profile_ang(std::abs(cos_t));
}

double theta_delta(const Mollifier& moll, const Vec3& v, const Vec3& v_star,
                   const Vec3& sigma) {
  const double sn = norm(sigma);
  if (std::abs(sn - 1.0) > 1e-9)
    throw ValidationError("theta_delta: sigma must be a unit vector");
  return moll.theta(v, v_star, sigma);
}

}  // namespace boltzmix
