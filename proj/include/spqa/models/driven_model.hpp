#pragma once

#include <string>

#include "spqa/core/hermitian.hpp"
#include "spqa/core/sectors.hpp"

namespace spqa {

/// What the engine needs from a concrete model.
///
/// `hamiltonian` is what gets propagated and may contain a static
/// symmetry-breaking bias. `symmetric` is the same family with the bias
/// removed; it commutes with `symmetry` and defines the instantaneous
/// eigenstates used for schedules and fidelities. Random bias samples
/// multiply `bias_operator`.
struct DrivenModel {
  std::string name;
  ParametricHamiltonian hamiltonian;
  ParametricHamiltonian symmetric;
  SymmetryOperator symmetry;
  HermitianOperator bias_operator;
  double static_bias = 0.0;
  std::string parameter_name = "R";

  Eigen::Index dim() const { return hamiltonian.dim(); }

  SectorSolver sector_solver(Eigen::Index levels_per_sector = 0) const {
    return SectorSolver(symmetric, sector_decompose(symmetry), levels_per_sector);
  }
};

}  // namespace spqa
