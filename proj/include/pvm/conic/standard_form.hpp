#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "pvm/conic/program.hpp"

namespace pvm::conic {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// min c'x + offset  s.t.  A x = b,  G x + s = h,  s in R+^lp x Q^soc_dims[0] x ...
struct StandardForm {
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix G;
  Eigen::VectorXd h;
  Eigen::VectorXd c;
  double objective_offset = 0.0;
  std::size_t lp_rows = 0;
  std::vector<std::size_t> soc_dims;

  /// Column of each original variable, empty when presolve fixed it.
  std::vector<std::optional<std::size_t>> column_of;
  std::vector<double> fixed_value;

  bool infeasible = false;
  std::string infeasibility_reason;

  std::size_t columns() const { return static_cast<std::size_t>(c.size()); }
  /// Maps a solution of the reduced problem back to all original variables.
  std::vector<double> expand(const Eigen::VectorXd& x) const;
};

/// Bound-tightening presolve (fixed-variable substitution, singleton rows,
/// constant cones) followed by lowering to standard form. Rotated cones become
/// ||(v - l, 2p, 2q, ...)|| <= v + l.
StandardForm lower_program(const ConicProgram& prog, std::span<const BoundOverride> overrides,
                           double tolerance = 1e-9);

}  // namespace pvm::conic
