#include "pvm/conic/solver.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pvm/common.hpp"
#include "pvm/conic/interior_point.hpp"
#include "pvm/conic/standard_form.hpp"

namespace pvm::conic {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::GapLimit: return "gap-limit";
    case SolveStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(feasibility_tolerance > 0.0)) throw InputError("feasibility tolerance must be positive");
  if (!(cone_tolerance > 0.0)) throw InputError("cone tolerance must be positive");
  if (!(mip_gap > 0.0 && mip_gap < 1.0)) throw InputError("relative MIP gap must lie in (0,1)");
  if (!(absolute_mip_gap >= 0.0)) throw InputError("absolute MIP gap must be non-negative");
  if (!(residual_tolerance > 0.0)) throw InputError("residual tolerance must be positive");
  if (!(integrality_tolerance > 0.0 && integrality_tolerance < 0.5))
    throw InputError("integrality tolerance must lie in (0,0.5)");
  if (!(time_limit_s > 0.0)) throw InputError("time limit must be positive");
  if (node_limit == 0) throw InputError("node limit must be positive");
  if (max_iterations <= 0) throw InputError("iteration limit must be positive");
}

namespace {

// One interior-point run with the stopping tolerances scaled by `scale`.
SolveResult solve_once(const ConicProgram& prog, const StandardForm& sf, const SolverConfig& cfg,
                       std::span<const BoundOverride> overrides, double scale) {
  SolveResult out;
  IpmSettings st;
  st.feastol = cfg.feasibility_tolerance * scale;
  st.abstol = cfg.cone_tolerance * scale;
  st.reltol = cfg.cone_tolerance * scale;
  st.max_iterations = cfg.max_iterations;
  const IpmResult ipm = solve_standard_form(sf, st);
  out.iterations = ipm.iterations;
  switch (ipm.exit) {
    case IpmExit::Optimal:
    case IpmExit::ReducedOptimal: {
      out.x = sf.expand(ipm.x);
      out.objective = prog.objective().evaluate(out.x);
      out.max_residual = evaluate_residuals(prog, out.x, overrides).max();
      out.reduced_accuracy = ipm.exit == IpmExit::ReducedOptimal;
      if (out.max_residual <= cfg.residual_tolerance) {
        out.status = SolveStatus::Optimal;
      } else {
        out.status = SolveStatus::IterationLimit;
        out.message = fmt::format("converged point fails residual audit ({:.3g})", out.max_residual);
      }
      break;
    }
    case IpmExit::PrimalInfeasible:
      out.status = SolveStatus::Infeasible;
      out.message = "primal infeasibility certificate";
      break;
    case IpmExit::DualInfeasible:
      out.status = SolveStatus::Unbounded;
      out.message = "dual infeasibility certificate";
      break;
    case IpmExit::MaxIterations:
      out.status = SolveStatus::IterationLimit;
      out.message = fmt::format("iteration limit (pres {:.2g}, dres {:.2g}, gap {:.2g})", ipm.pres, ipm.dres, ipm.gap);
      break;
    case IpmExit::Numerics:
      out.status = SolveStatus::IterationLimit;
      out.message = fmt::format("numerical stall (pres {:.2g}, dres {:.2g}, gap {:.2g})", ipm.pres, ipm.dres, ipm.gap);
      break;
  }
  return out;
}

}  // namespace

SolveResult solve_relaxation(const ConicProgram& prog, const SolverConfig& cfg,
                             std::span<const BoundOverride> overrides) {
  cfg.validate();
  if (!prog.sealed()) throw Error("program must be sealed before solving");
  const StandardForm sf = lower_program(prog, overrides);
  if (sf.infeasible) {
    SolveResult out;
    out.status = SolveStatus::Infeasible;
    out.message = sf.infeasibility_reason;
    return out;
  }
  // A run that stalls just short of its tolerances (or whose point misses the
  // residual audit) usually goes through with the stopping rule moved a
  // decade either way. The audit still decides acceptance.
  SolveResult out = solve_once(prog, sf, cfg, overrides, 1.0);
  for (double scale : {0.1, 10.0}) {
    if (out.status != SolveStatus::IterationLimit) break;
    SolveResult retry = solve_once(prog, sf, cfg, overrides, scale);
    retry.iterations += out.iterations;
    if (retry.status != SolveStatus::IterationLimit) return retry;
    out.iterations = retry.iterations;
  }
  return out;
}

const Backend& reference_backend() {
  static const ReferenceBackend backend;
  return backend;
}

}  // namespace pvm::conic
