#include "pvm/conic/standard_form.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace pvm::conic {

namespace {

struct Reduced {
  std::vector<Term> terms;  // free variables only, merged and sorted
  double constant = 0.0;    // contribution of fixed variables
};

class Presolver {
 public:
  Presolver(const ConicProgram& prog, std::span<const BoundOverride> overrides, double tol)
      : prog_(prog), tol_(tol), lb_(prog.variable_count()), ub_(prog.variable_count()),
        fixed_(prog.variable_count(), false), value_(prog.variable_count(), 0.0) {
    for (std::size_t i = 0; i < lb_.size(); ++i) {
      lb_[i] = prog.variables()[i].lower;
      ub_[i] = prog.variables()[i].upper;
    }
    for (const BoundOverride& o : overrides) {
      lb_[o.var] = o.lower;
      ub_[o.var] = o.upper;
    }
    for (std::size_t i = 0; i < lb_.size(); ++i) {
      if (lb_[i] > ub_[i] + tol_ * std::max(1.0, std::fabs(lb_[i]))) {
        fail(fmt::format("variable {} has empty bound interval", i));
        return;
      }
      refresh_fixed(i);
    }
  }

  void run() {
    dead_.assign(prog_.rows().size(), false);
    bool changed = true;
    while (changed && !infeasible_) {
      changed = false;
      for (std::size_t r = 0; r < prog_.rows().size() && !infeasible_; ++r) {
        if (dead_[r]) continue;
        const LinearRow& row = prog_.rows()[r];
        const Reduced red = reduce(row.terms, 0.0);
        const double rhs = row.rhs - red.constant;
        if (red.terms.empty()) {
          dead_[r] = true;
          const double slack = row.sense == Sense::Equal ? std::fabs(rhs) : -rhs;
          if (slack > tol_ * std::max(1.0, std::fabs(row.rhs)))
            fail(fmt::format("constant row {} violated by {:.3g}", r, slack));
        } else if (red.terms.size() == 1) {
          dead_[r] = true;
          changed = true;
          const Term t = red.terms.front();
          const double at = rhs / t.coef;
          if (row.sense == Sense::Equal) {
            tighten(t.var, at, at);
          } else if (t.coef > 0.0) {
            tighten(t.var, lb_[t.var], at);
          } else {
            tighten(t.var, at, ub_[t.var]);
          }
        }
      }
    }
  }

  Reduced reduce(const std::vector<Term>& terms, double constant) const {
    Reduced out;
    out.constant = constant;
    out.terms.reserve(terms.size());
    for (const Term& t : terms) {
      if (fixed_[t.var]) {
        out.constant += t.coef * value_[t.var];
      } else {
        out.terms.push_back(t);
      }
    }
    std::sort(out.terms.begin(), out.terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    std::size_t w = 0;
    for (std::size_t k = 0; k < out.terms.size(); ++k) {
      if (w > 0 && out.terms[w - 1].var == out.terms[k].var) {
        out.terms[w - 1].coef += out.terms[k].coef;
      } else {
        out.terms[w++] = out.terms[k];
      }
    }
    out.terms.resize(w);
    std::erase_if(out.terms, [](const Term& t) { return t.coef == 0.0; });
    return out;
  }

  bool infeasible() const { return infeasible_; }
  const std::string& reason() const { return reason_; }
  bool row_dead(std::size_t r) const { return dead_[r]; }
  bool fixed(std::size_t i) const { return fixed_[i]; }
  double value(std::size_t i) const { return value_[i]; }
  double lower(std::size_t i) const { return lb_[i]; }
  double upper(std::size_t i) const { return ub_[i]; }

 private:
  void fail(std::string why) {
    if (!infeasible_) reason_ = std::move(why);
    infeasible_ = true;
  }

  void refresh_fixed(std::size_t i) {
    if (std::isfinite(lb_[i]) && std::isfinite(ub_[i]) && ub_[i] - lb_[i] <= 1e-12 * std::max(1.0, std::fabs(lb_[i]))) {
      fixed_[i] = true;
      value_[i] = 0.5 * (lb_[i] + ub_[i]);
    }
  }

  void tighten(std::size_t i, double lo, double hi) {
    const double slack = tol_ * std::max(1.0, std::max(std::fabs(lo), std::fabs(hi)));
    if (lo > ub_[i] + slack || hi < lb_[i] - slack || lo > hi + slack) {
      fail(fmt::format("bounds of variable {} become empty", i));
      return;
    }
    lb_[i] = std::max(lb_[i], lo);
    ub_[i] = std::min(ub_[i], hi);
    if (lb_[i] > ub_[i]) lb_[i] = ub_[i] = 0.5 * (lb_[i] + ub_[i]);
    refresh_fixed(i);
  }

  const ConicProgram& prog_;
  double tol_;
  std::vector<double> lb_, ub_;
  std::vector<bool> fixed_;
  std::vector<double> value_;
  std::vector<bool> dead_;
  bool infeasible_ = false;
  std::string reason_;
};

using Triplet = Eigen::Triplet<double, int>;

}  // namespace

std::vector<double> StandardForm::expand(const Eigen::VectorXd& x) const {
  std::vector<double> out(column_of.size());
  for (std::size_t i = 0; i < column_of.size(); ++i)
    out[i] = column_of[i] ? x[static_cast<Eigen::Index>(*column_of[i])] : fixed_value[i];
  return out;
}

StandardForm lower_program(const ConicProgram& prog, std::span<const BoundOverride> overrides, double tolerance) {
  StandardForm sf;
  const std::size_t nvar = prog.variable_count();
  Presolver pre(prog, overrides, tolerance);
  if (!pre.infeasible()) pre.run();

  sf.column_of.assign(nvar, std::nullopt);
  sf.fixed_value.assign(nvar, 0.0);
  std::size_t ncol = 0;
  for (std::size_t i = 0; i < nvar; ++i) {
    if (pre.fixed(i)) {
      sf.fixed_value[i] = pre.value(i);
    } else {
      sf.column_of[i] = ncol++;
    }
  }
  if (pre.infeasible()) {
    sf.infeasible = true;
    sf.infeasibility_reason = pre.reason();
    sf.c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ncol));
    return sf;
  }
  const auto col = [&](std::size_t var) { return static_cast<int>(*sf.column_of[var]); };

  const Reduced obj = pre.reduce(prog.objective().terms(), prog.objective().constant());
  sf.c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ncol));
  for (const Term& t : obj.terms) sf.c[col(t.var)] += t.coef;
  sf.objective_offset = obj.constant;

  std::vector<Triplet> a_trip;
  std::vector<double> b;
  std::vector<Triplet> g_trip;
  std::vector<double> h;
  for (std::size_t r = 0; r < prog.rows().size(); ++r) {
    if (pre.row_dead(r)) continue;
    const LinearRow& row = prog.rows()[r];
    const Reduced red = pre.reduce(row.terms, 0.0);
    if (row.sense == Sense::Equal) {
      const int k = static_cast<int>(b.size());
      for (const Term& t : red.terms) a_trip.emplace_back(k, col(t.var), t.coef);
      b.push_back(row.rhs - red.constant);
    } else {
      const int k = static_cast<int>(h.size());
      for (const Term& t : red.terms) g_trip.emplace_back(k, col(t.var), t.coef);
      h.push_back(row.rhs - red.constant);
    }
  }
  for (std::size_t i = 0; i < nvar; ++i) {
    if (pre.fixed(i)) continue;
    if (std::isfinite(pre.upper(i))) {
      g_trip.emplace_back(static_cast<int>(h.size()), col(i), 1.0);
      h.push_back(pre.upper(i));
    }
    if (std::isfinite(pre.lower(i))) {
      g_trip.emplace_back(static_cast<int>(h.size()), col(i), -1.0);
      h.push_back(-pre.lower(i));
    }
  }
  sf.lp_rows = h.size();

  // Cone member s_k = expr_k(x) is written as G_k x + s_k = h_k with G_k = -a_k, h_k = constant.
  std::vector<Reduced> members;
  for (std::size_t ci = 0; ci < prog.cones().size(); ++ci) {
    const ConeRow& cone = prog.cones()[ci];
    members.clear();
    if (cone.kind == ConeKind::Rotated) {
      const LinExpr& v = cone.members[0];
      const LinExpr& l = cone.members[1];
      members.push_back(pre.reduce((v + l).terms(), v.constant() + l.constant()));
      members.push_back(pre.reduce((v - l).terms(), v.constant() - l.constant()));
      for (std::size_t k = 2; k < cone.members.size(); ++k) {
        const LinExpr p = 2.0 * cone.members[k];
        members.push_back(pre.reduce(p.terms(), p.constant()));
      }
    } else {
      for (const LinExpr& m : cone.members) members.push_back(pre.reduce(m.terms(), m.constant()));
    }
    const bool constant =
        std::all_of(members.begin(), members.end(), [](const Reduced& m) { return m.terms.empty(); });
    if (constant) {
      double sq = 0.0;
      for (std::size_t k = 1; k < members.size(); ++k) sq += members[k].constant * members[k].constant;
      const double viol = std::sqrt(sq) - members[0].constant;
      if (viol > tolerance * std::max(1.0, std::fabs(members[0].constant))) {
        sf.infeasible = true;
        sf.infeasibility_reason = fmt::format("constant cone {} violated by {:.3g}", ci, viol);
        return sf;
      }
      continue;
    }
    for (const Reduced& m : members) {
      const int k = static_cast<int>(h.size());
      for (const Term& t : m.terms) g_trip.emplace_back(k, col(t.var), -t.coef);
      h.push_back(m.constant);
    }
    sf.soc_dims.push_back(members.size());
  }

  sf.A.resize(static_cast<int>(b.size()), static_cast<int>(ncol));
  sf.A.setFromTriplets(a_trip.begin(), a_trip.end());
  sf.A.prune(0.0);
  sf.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  sf.G.resize(static_cast<int>(h.size()), static_cast<int>(ncol));
  sf.G.setFromTriplets(g_trip.begin(), g_trip.end());
  sf.G.prune(0.0);
  sf.h = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
  return sf;
}

}  // namespace pvm::conic
