// Quadrature on the unit sphere.
//
// Product rule: Gauss-Legendre in the polar cosine times a uniform azimuthal
// grid. Degree d needs ceil((d+1)/2) polar nodes and d+1 azimuthal nodes; we
// round the azimuthal count up to the next even number so the rule is exactly
// antipodally symmetric.

#pragma once

#include <vector>

#include "boltzmix/common.hpp"

namespace boltzmix {

class SphereRule {
 public:
  static SphereRule product_rule(int degree);

  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  SphereRule() = default;
  std::vector<Vec3> nodes_;
  std::vector<double> weights_;
  int degree_ = 0;
};

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace boltzmix
