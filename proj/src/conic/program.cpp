#include "pvm/conic/program.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pvm/common.hpp"

namespace pvm::conic {

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  constant_ += other.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
  for (const Term& t : other.terms_) terms_.push_back({t.var, -t.coef});
  constant_ -= other.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(double k) {
  for (Term& t : terms_) t.coef *= k;
  constant_ *= k;
  return *this;
}

double LinExpr::evaluate(std::span<const double> x) const {
  double v = constant_;
  for (const Term& t : terms_) v += t.coef * x[t.var];
  return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double k, LinExpr a) { return a *= k; }
LinExpr operator*(double k, Var v) { return LinExpr().add(v, k); }

void ConicProgram::require_open() const {
  if (sealed_) throw Error("program is sealed");
}

void ConicProgram::check_expr(const LinExpr& e) const {
  for (const Term& t : e.terms())
    if (t.var >= vars_.size()) throw Error(fmt::format("expression references undeclared variable {}", t.var));
}

Var ConicProgram::add_variable(double lower, double upper, std::string name) {
  require_open();
  if (lower > upper) throw Error(fmt::format("variable '{}' has lower bound above upper bound", name));
  vars_.push_back(VariableInfo{lower, upper, false, std::move(name)});
  return Var{vars_.size() - 1};
}

Var ConicProgram::add_binary(std::string name) {
  require_open();
  vars_.push_back(VariableInfo{0.0, 1.0, true, std::move(name)});
  return Var{vars_.size() - 1};
}

void ConicProgram::set_bounds(Var v, double lower, double upper) {
  require_open();
  VariableInfo& info = vars_.at(v.index);
  if (info.binary && (lower < 0.0 || upper > 1.0)) throw Error("binary bounds must stay within [0,1]");
  if (lower > upper) throw Error("lower bound above upper bound");
  info.lower = lower;
  info.upper = upper;
}

void ConicProgram::set_objective(LinExpr objective) {
  require_open();
  check_expr(objective);
  objective_ = std::move(objective);
}

void ConicProgram::add_objective(Var v, double coef) {
  require_open();
  objective_.add(v, coef);
}

std::size_t ConicProgram::add_equality(const LinExpr& lhs, double rhs) {
  require_open();
  check_expr(lhs);
  rows_.push_back(LinearRow{lhs.terms(), Sense::Equal, rhs - lhs.constant()});
  return rows_.size() - 1;
}

std::size_t ConicProgram::add_less_equal(const LinExpr& lhs, double rhs) {
  require_open();
  check_expr(lhs);
  rows_.push_back(LinearRow{lhs.terms(), Sense::LessEqual, rhs - lhs.constant()});
  return rows_.size() - 1;
}

std::size_t ConicProgram::add_greater_equal(const LinExpr& lhs, double rhs) {
  return add_less_equal(-1.0 * lhs, -rhs);
}

std::size_t ConicProgram::add_rotated_cone(LinExpr v, LinExpr l, std::vector<LinExpr> components) {
  require_open();
  ConeRow row{ConeKind::Rotated, {}};
  row.members.push_back(std::move(v));
  row.members.push_back(std::move(l));
  for (auto& c : components) row.members.push_back(std::move(c));
  for (const auto& m : row.members) check_expr(m);
  cones_.push_back(std::move(row));
  return cones_.size() - 1;
}

std::size_t ConicProgram::add_norm_cone(LinExpr t, std::vector<LinExpr> components) {
  require_open();
  ConeRow row{ConeKind::Norm, {}};
  row.members.push_back(std::move(t));
  for (auto& c : components) row.members.push_back(std::move(c));
  for (const auto& m : row.members) check_expr(m);
  cones_.push_back(std::move(row));
  return cones_.size() - 1;
}

void ConicProgram::seal() {
  if (sealed_) return;
  check_expr(objective_);
  for (const VariableInfo& v : vars_)
    if (v.binary && (v.lower < 0.0 || v.upper > 1.0)) throw Error("binary variable outside [0,1]");
  sealed_ = true;
}

std::vector<std::size_t> ConicProgram::binaries() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].binary) out.push_back(i);
  return out;
}

std::size_t ConicProgram::equality_count() const {
  return static_cast<std::size_t>(
      std::count_if(rows_.begin(), rows_.end(), [](const LinearRow& r) { return r.sense == Sense::Equal; }));
}

std::size_t ConicProgram::inequality_count() const { return rows_.size() - equality_count(); }

namespace {

std::string var_name(const std::vector<VariableInfo>& vars, std::size_t i) {
  return vars[i].name.empty() ? fmt::format("x{}", i) : vars[i].name;
}

std::string expr_text(const std::vector<VariableInfo>& vars, const std::vector<Term>& terms, double constant) {
  std::string s;
  for (const Term& t : terms) s += fmt::format("{:+.12g}*{} ", t.coef, var_name(vars, t.var));
  if (constant != 0.0 || terms.empty()) s += fmt::format("{:+.12g}", constant);
  return s;
}

}  // namespace

std::string ConicProgram::dump() const {
  std::string out;
  out += fmt::format("min {}\n", expr_text(vars_, objective_.terms(), objective_.constant()));
  for (std::size_t i = 0; i < vars_.size(); ++i)
    out += fmt::format("var {} [{:.12g}, {:.12g}]{}\n", var_name(vars_, i), vars_[i].lower, vars_[i].upper,
                       vars_[i].binary ? " binary" : "");
  for (const LinearRow& r : rows_)
    out += fmt::format("row {}{} {:.12g}\n", expr_text(vars_, r.terms, 0.0), r.sense == Sense::Equal ? "==" : "<=", r.rhs);
  for (const ConeRow& c : cones_) {
    out += c.kind == ConeKind::Rotated ? "rcone" : "ncone";
    for (const LinExpr& m : c.members) out += fmt::format(" ({})", expr_text(vars_, m.terms(), m.constant()));
    out += "\n";
  }
  return out;
}

double Residuals::max() const { return std::max({equality, inequality, bounds, cone}); }

Residuals evaluate_residuals(const ConicProgram& prog, std::span<const double> x,
                             std::span<const BoundOverride> overrides) {
  if (x.size() != prog.variable_count()) throw Error("point dimension does not match program");
  Residuals r;
  std::vector<double> lower(prog.variable_count()), upper(prog.variable_count());
  for (std::size_t i = 0; i < prog.variable_count(); ++i) {
    lower[i] = prog.variables()[i].lower;
    upper[i] = prog.variables()[i].upper;
  }
  for (const BoundOverride& o : overrides) {
    lower[o.var] = o.lower;
    upper[o.var] = o.upper;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.bounds = std::max({r.bounds, lower[i] - x[i], x[i] - upper[i]});
    if (prog.variables()[i].binary) r.integrality = std::max(r.integrality, std::min(std::fabs(x[i]), std::fabs(1.0 - x[i])));
  }
  for (const LinearRow& row : prog.rows()) {
    double lhs = 0.0;
    for (const Term& t : row.terms) lhs += t.coef * x[t.var];
    if (row.sense == Sense::Equal) {
      r.equality = std::max(r.equality, std::fabs(lhs - row.rhs));
    } else {
      r.inequality = std::max(r.inequality, lhs - row.rhs);
    }
  }
  for (const ConeRow& c : prog.cones()) {
    if (c.kind == ConeKind::Rotated) {
      const double v = c.members[0].evaluate(x);
      const double l = c.members[1].evaluate(x);
      double sq = 0.0;
      for (std::size_t k = 2; k < c.members.size(); ++k) {
        const double p = c.members[k].evaluate(x);
        sq += p * p;
      }
      // Same cone written as ||(2p, v - l)|| <= v + l keeps the measure in linear units.
      const double viol = std::sqrt(4.0 * sq + (v - l) * (v - l)) - (v + l);
      r.cone = std::max({r.cone, viol, -v, -l});
    } else {
      const double t = c.members[0].evaluate(x);
      double sq = 0.0;
      for (std::size_t k = 1; k < c.members.size(); ++k) {
        const double u = c.members[k].evaluate(x);
        sq += u * u;
      }
      r.cone = std::max(r.cone, std::sqrt(sq) - t);
    }
  }
  return r;
}

}  // namespace pvm::conic
