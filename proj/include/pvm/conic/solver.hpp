#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pvm/conic/program.hpp"

namespace pvm::conic {

enum class SolveStatus { Optimal, Infeasible, Unbounded, GapLimit, IterationLimit };

std::string_view to_string(SolveStatus status);

/// How big-M constants in on/off rows are chosen by model builders.
enum class BigMPolicy {
  /// Tightest valid constant implied by the capacity bound: rate * capacity cap.
  CapacityRate,
};

struct SolverConfig {
  double feasibility_tolerance = 1e-8;
  /// Duality-gap tolerance of the interior-point method (absolute and relative).
  double cone_tolerance = 1e-8;
  double mip_gap = 1e-3;
  /// Branch-and-bound also stops once incumbent - bound falls below this.
  double absolute_mip_gap = 1e-9;
  std::size_t node_limit = 100000;
  double time_limit_s = 3600.0;
  BigMPolicy big_m = BigMPolicy::CapacityRate;
  int max_iterations = 200;
  /// Absolute bound for the independent residual audit of returned points.
  double residual_tolerance = 1e-6;
  /// Integrality tolerance for binaries in branch-and-bound.
  double integrality_tolerance = 1e-6;

  /// Throws InputError when a field is outside its domain.
  void validate() const;
};

struct BoundTracePoint {
  std::size_t node = 0;
  double incumbent = std::numeric_limits<double>::infinity();
  double lower_bound = -std::numeric_limits<double>::infinity();
};

struct SolveResult {
  SolveStatus status = SolveStatus::IterationLimit;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x;
  /// Relative MIP gap; 0 for continuous solves, infinity without an incumbent.
  double gap = 0.0;
  double max_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::size_t nodes = 0;
  /// The interior-point run stopped at relaxed tolerances and the point passed
  /// the residual audit.
  bool reduced_accuracy = false;
  std::vector<BoundTracePoint> trace;
  std::string message;

  bool optimal() const { return status == SolveStatus::Optimal; }
  double value(Var v) const { return x.at(v.index); }
};

/// Continuous solve of the program (binaries relaxed to [0,1]); overrides
/// replace variable bounds for this solve only.
SolveResult solve_relaxation(const ConicProgram& prog, const SolverConfig& cfg,
                             std::span<const BoundOverride> overrides = {});

/// Proposes binary fixings from a fractional relaxed point. The branch-and-bound
/// solves the relaxation with those fixings and keeps the result as an incumbent
/// when it is integral and feasible.
using IncumbentHeuristic =
    std::function<std::vector<BoundOverride>(const ConicProgram& prog, std::span<const double> relaxed)>;

struct MisocpOptions {
  /// Empty means round-to-nearest on every binary.
  IncumbentHeuristic heuristic;
  bool record_trace = true;
};

SolveResult solve_misocp(const ConicProgram& prog, const SolverConfig& cfg, const MisocpOptions& options = {});

/// Replaceable solver backend. Model code calls through this interface so a
/// different conic solver can be plugged in with the same contracts.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual SolveResult solve_relaxation(const ConicProgram& prog, const SolverConfig& cfg) const = 0;
  virtual SolveResult solve_misocp(const ConicProgram& prog, const SolverConfig& cfg,
                                   const MisocpOptions& options) const = 0;
};

class ReferenceBackend final : public Backend {
 public:
  SolveResult solve_relaxation(const ConicProgram& prog, const SolverConfig& cfg) const override {
    return conic::solve_relaxation(prog, cfg);
  }
  SolveResult solve_misocp(const ConicProgram& prog, const SolverConfig& cfg,
                           const MisocpOptions& options) const override {
    return conic::solve_misocp(prog, cfg, options);
  }
};

const Backend& reference_backend();

}  // namespace pvm::conic
