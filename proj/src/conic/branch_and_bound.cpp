#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <set>

#include "pvm/common.hpp"
#include "pvm/conic/solver.hpp"

namespace pvm::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  double bound = -kInf;
  std::size_t id = 0;
  std::vector<BoundOverride> fixings;
};

struct WorseNode {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

double relative_gap(double incumbent, double lower, double abs_tol) {
  if (!std::isfinite(incumbent)) return kInf;
  const double diff = incumbent - lower;
  if (diff <= abs_tol) return 0.0;
  return diff / std::max(std::fabs(incumbent), 1e-10);
}

std::vector<BoundOverride> round_all(const ConicProgram& prog, std::span<const double> x) {
  std::vector<BoundOverride> out;
  for (std::size_t b : prog.binaries()) {
    const double v = x[b] >= 0.5 ? 1.0 : 0.0;
    out.push_back({b, v, v});
  }
  return out;
}

// Node fixings win over heuristic proposals for the same variable.
std::vector<BoundOverride> merge_fixings(const std::vector<BoundOverride>& node, std::vector<BoundOverride> proposal) {
  std::vector<BoundOverride> out = node;
  for (BoundOverride& p : proposal) {
    const bool taken = std::any_of(node.begin(), node.end(), [&](const BoundOverride& o) { return o.var == p.var; });
    if (!taken) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const BoundOverride& a, const BoundOverride& b) { return a.var < b.var; });
  return out;
}

class BranchAndBound {
 public:
  BranchAndBound(const ConicProgram& prog, const SolverConfig& cfg, const MisocpOptions& options)
      : prog_(prog), cfg_(cfg), options_(options), binaries_(prog.binaries()) {}

  SolveResult run();

 private:
  void offer_incumbent(const SolveResult& candidate) {
    if (!candidate.optimal() || candidate.objective >= incumbent_) return;
    incumbent_ = candidate.objective;
    best_ = candidate;
  }

  // Returns the binary to branch on, or nullopt when the point is integral.
  std::optional<std::size_t> branching_variable(const std::vector<double>& x) const {
    std::optional<std::size_t> pick;
    double best = cfg_.integrality_tolerance;
    for (std::size_t b : binaries_) {
      const double frac = std::min(x[b], 1.0 - x[b]);
      if (frac > best) {
        best = frac;
        pick = b;
      }
    }
    return pick;
  }

  // Integral relaxed point: snap the binaries and keep it when the audit passes,
  // otherwise re-solve with the binaries fixed.
  void accept_integral(const Node& node, const SolveResult& relaxed) {
    SolveResult snapped = relaxed;
    std::vector<BoundOverride> fix;
    for (std::size_t b : binaries_) {
      const double v = std::round(snapped.x[b]);
      snapped.x[b] = v;
      fix.push_back({b, v, v});
    }
    snapped.objective = prog_.objective().evaluate(snapped.x);
    snapped.max_residual = evaluate_residuals(prog_, snapped.x).max();
    if (snapped.max_residual <= cfg_.residual_tolerance) {
      offer_incumbent(snapped);
      return;
    }
    offer_incumbent(solve_relaxation(prog_, cfg_, merge_fixings(node.fixings, fix)));
  }

  void run_heuristic(const Node& node, const SolveResult& relaxed) {
    std::vector<BoundOverride> proposal =
        options_.heuristic ? options_.heuristic(prog_, relaxed.x) : round_all(prog_, relaxed.x);
    proposal = merge_fixings(node.fixings, std::move(proposal));
    std::vector<std::pair<std::size_t, double>> key;
    for (const BoundOverride& o : proposal) key.emplace_back(o.var, o.lower);
    if (!tried_.insert(key).second) return;
    ++heuristic_solves_;
    SolveResult r = solve_relaxation(prog_, cfg_, proposal);
    if (r.optimal() && !branching_variable(r.x)) offer_incumbent(r);
  }

  const ConicProgram& prog_;
  const SolverConfig& cfg_;
  const MisocpOptions& options_;
  std::vector<std::size_t> binaries_;
  double incumbent_ = kInf;
  SolveResult best_;
  std::set<std::vector<std::pair<std::size_t, double>>> tried_;
  std::size_t heuristic_solves_ = 0;
};

SolveResult BranchAndBound::run() {
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };

  SolveResult root = solve_relaxation(prog_, cfg_);
  if (!root.optimal()) {
    if (root.status != SolveStatus::Infeasible) root.gap = kInf;
    root.nodes = 1;
    return root;
  }
  if (!branching_variable(root.x)) {
    root.nodes = 1;
    root.gap = 0.0;
    if (options_.record_trace) root.trace.push_back({1, root.objective, root.objective});
    return root;
  }

  std::priority_queue<Node, std::vector<Node>, WorseNode> open;
  std::size_t next_id = 0;
  open.push(Node{root.objective, next_id++, {}});
  double lower = root.objective;
  double lost_bound = kInf;  // bound of nodes whose relaxation could not be solved
  std::size_t nodes = 0;
  std::vector<BoundTracePoint> trace;
  bool limit_hit = false;
  int iterations = 0;

  while (!open.empty()) {
    lower = std::max(lower, std::min(open.top().bound, lost_bound));
    if (relative_gap(incumbent_, lower, cfg_.absolute_mip_gap) <= cfg_.mip_gap) break;
    if (nodes >= cfg_.node_limit || elapsed() >= cfg_.time_limit_s) {
      limit_hit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    if (node.bound >= incumbent_ - cfg_.absolute_mip_gap) continue;

    ++nodes;
    SolveResult relaxed = nodes == 1 ? root : solve_relaxation(prog_, cfg_, node.fixings);
    iterations += relaxed.iterations;
    if (relaxed.status == SolveStatus::Infeasible) {
      // pruned
    } else if (!relaxed.optimal()) {
      lost_bound = std::min(lost_bound, node.bound);
    } else {
      const double bound = std::max(node.bound, relaxed.objective);
      if (bound < incumbent_ - cfg_.absolute_mip_gap) {
        const auto j = branching_variable(relaxed.x);
        if (!j) {
          accept_integral(node, relaxed);
        } else {
          run_heuristic(node, relaxed);
          for (double v : {0.0, 1.0}) {
            Node child{bound, next_id++, node.fixings};
            child.fixings.push_back(BoundOverride{*j, v, v});
            open.push(std::move(child));
          }
        }
      }
    }
    if (options_.record_trace) {
      const double lb = open.empty() ? std::min(incumbent_, lost_bound) : std::min(open.top().bound, lost_bound);
      trace.push_back({nodes, incumbent_, std::max(lower, std::min(lb, incumbent_))});
    }
  }
  if (open.empty() && !limit_hit) lower = std::max(lower, std::min(incumbent_, lost_bound));

  SolveResult out;
  if (std::isfinite(incumbent_)) {
    out = best_;
    out.gap = relative_gap(incumbent_, std::min(lower, incumbent_), cfg_.absolute_mip_gap);
    out.status = out.gap <= cfg_.mip_gap ? SolveStatus::Optimal : SolveStatus::GapLimit;
  } else if (open.empty() && !limit_hit && !std::isfinite(lost_bound)) {
    out.status = SolveStatus::Infeasible;
    out.message = "no integral point in the search tree";
  } else {
    out.status = SolveStatus::GapLimit;
    out.gap = kInf;
    out.message = "no incumbent within limits";
  }
  if (limit_hit && out.status == SolveStatus::GapLimit && out.message.empty()) out.message = "node or time limit";
  out.nodes = nodes;
  out.iterations = iterations;
  out.trace = std::move(trace);
  return out;
}

}  // namespace

SolveResult solve_misocp(const ConicProgram& prog, const SolverConfig& cfg, const MisocpOptions& options) {
  cfg.validate();
  if (!prog.sealed()) throw Error("program must be sealed before solving");
  BranchAndBound bb(prog, cfg, options);
  return bb.run();
}

}  // namespace pvm::conic
