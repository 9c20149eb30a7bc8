#pragma once

// A particle in a harmonic trap split by a Gaussian barrier of height A:
//   H(A) = -1/2 d^2/dx^2 + 1/2 w^2 x^2 + A exp(-x^2 / (2 d^2)) + tilt * x
// on a uniform symmetric grid (units m = hbar = w = 1 unless configured).

#include <cmath>
#include <string>

#include "spqa/models/driven_model.hpp"

namespace spqa {

struct GridConfig {
  double half_width = 10.0;
  int n_points = 513;

  double spacing() const { return 2.0 * half_width / (n_points - 1); }

  void validate() const {
    if (n_points < 3 || n_points % 2 == 0) {
      throw ConfigurationError("grid needs an odd number of points >= 3 so that x = 0 is a node", "n_points");
    }
    if (!(half_width > 0.0)) throw ConfigurationError("must be positive", "half_width");
  }

  RVector nodes() const {
    RVector x(n_points);
    const double h = spacing();
    const int mid = n_points / 2;
    // Built outward from the centre so that x(i) == -x(n-1-i) exactly.
    for (int i = 0; i < n_points; ++i) x(i) = (i - mid) * h;
    return x;
  }
};

struct SingleParticleModel {
  GridConfig grid;
  double omega = 1.0;
  double width = std::sqrt(2.0);
  double tilt = 0.0;
  RVector x;
  DrivenModel driven;

  /// V(x, A) at every grid node, tilt included.
  RVector potential(double barrier) const {
    return (0.5 * omega * omega * x.array().square() + barrier * barrier_profile().array() + tilt * x.array())
        .matrix();
  }

  RVector barrier_profile() const {
    return (-x.array().square() / (2.0 * width * width)).exp().matrix();
  }
};

/// Grid reflection x -> -x as a permutation matrix.
inline SymmetryOperator grid_reflection(int n_points) {
  CMatrix p = CMatrix::Zero(n_points, n_points);
  for (int i = 0; i < n_points; ++i) p(n_points - 1 - i, i) = 1.0;
  return SymmetryOperator{HermitianOperator(std::move(p))};
}

inline SingleParticleModel build_single_particle(const GridConfig& grid, double omega, double width, double tilt) {
  grid.validate();
  if (!(omega > 0.0)) throw ConfigurationError("trap frequency must be positive", "omega");
  if (!(width > 0.0)) throw ConfigurationError("barrier width must be positive", "width");

  SingleParticleModel m;
  m.grid = grid;
  m.omega = omega;
  m.width = width;
  m.tilt = tilt;
  m.x = grid.nodes();

  const int n = grid.n_points;
  const double h = grid.spacing();
  // Second-order central differences with Dirichlet walls.
  RMatrix kinetic = RMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    kinetic(i, i) = 1.0 / (h * h);
    if (i + 1 < n) {
      kinetic(i, i + 1) = -0.5 / (h * h);
      kinetic(i + 1, i) = -0.5 / (h * h);
    }
  }
  const RVector trap = 0.5 * omega * omega * m.x.array().square();
  RMatrix symmetric_const = kinetic;
  symmetric_const.diagonal() += trap;
  RMatrix biased_const = symmetric_const;
  biased_const.diagonal() += tilt * m.x;

  const HermitianOperator barrier = HermitianOperator::diagonal(m.barrier_profile());
  m.driven.name = "single_particle";
  m.driven.parameter_name = "A";
  m.driven.symmetric = ParametricHamiltonian(HermitianOperator(symmetric_const), {barrier});
  m.driven.hamiltonian = ParametricHamiltonian(HermitianOperator(biased_const), {barrier});
  m.driven.symmetry = grid_reflection(n);
  m.driven.bias_operator = HermitianOperator::diagonal(m.x);
  m.driven.static_bias = tilt;
  return m;
}

}  // namespace spqa
