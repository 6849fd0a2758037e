#pragma once

#include <Eigen/Core>

#include "pvm/conic/standard_form.hpp"

namespace pvm::conic {

struct IpmSettings {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  // Fallback tolerances accepted when progress stalls before full accuracy.
  double feastol_inaccurate = 1e-4;
  double abstol_inaccurate = 5e-5;
  double reltol_inaccurate = 5e-5;
  int max_iterations = 200;
  double gamma = 0.99;
  double delta_static = 7e-8;
  double step_min = 1e-6;
  double step_max = 0.999;
  double sigma_min = 1e-4;
  double sigma_max = 1.0;
  int refinement_steps = 9;
  int equilibration_passes = 3;
};

enum class IpmExit { Optimal, ReducedOptimal, PrimalInfeasible, DualInfeasible, MaxIterations, Numerics };

struct IpmResult {
  IpmExit exit = IpmExit::Numerics;
  /// Primal/dual point in the units of the StandardForm (before unscaling it
  /// is never exposed).
  Eigen::VectorXd x, y, z, s;
  /// c'x + objective_offset.
  double objective = 0.0;
  int iterations = 0;
  double pres = 0.0;
  double dres = 0.0;
  double gap = 0.0;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
/// Mehrotra predictor-corrector steps.
IpmResult solve_standard_form(const StandardForm& sf, const IpmSettings& settings);

}  // namespace pvm::conic
