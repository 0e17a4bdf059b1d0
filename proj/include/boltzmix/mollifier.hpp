// Smooth cutoff Theta_delta(v, v*, sigma) used to split the linearized
// collision operator. It is a product of three C-infinity transition
// profiles: in |v|, in the relative speed |v - v*| and in |cos theta|.
//
// Plateau (exactly one):  |v| <= 1/delta, 2 delta <= |v-v*| <= 1/delta,
//                         |cos| <= 1 - 2 delta.
// Support (zero outside): |v| <= 2/delta, delta <= |v-v*| <= 2/delta,
//                         |cos| <= 1 - delta.

#pragma once

#include "boltzmix/common.hpp"

namespace boltzmix {

class Mollifier {
 public:
  explicit Mollifier(double delta);

  // Test hook: Theta identically zero.
  static Mollifier disabled();

  double delta() const { return delta_; }
  bool is_disabled() const { return disabled_; }

  // The three profile factors.
  double profile_v(double speed) const;
  double profile_rel(double rel_speed) const;
  double profile_ang(double abs_cos) const;

  double theta(const Vec3& v, const Vec3& v_star, const Vec3& sigma) const;

  // C-infinity step: 0 for s <= 0, 1 for s >= 1.
  static double smooth_step(double s);

 private:
  Mollifier() = default;
  double delta_ = 0.1;
  bool disabled_ = false;
};

double theta_delta(const Mollifier& moll, const Vec3& v, const Vec3& v_star,
                   const Vec3& sigma);

}  // namespace boltzmix
