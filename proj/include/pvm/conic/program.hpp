#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pvm::conic {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Handle to a decision variable of a ConicProgram.
struct Var {
  std::size_t index = 0;
  friend bool operator==(Var, Var) = default;
};

struct Term {
  std::size_t var = 0;
  double coef = 0.0;
};

/// Affine expression sum(coef * var) + constant.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT(google-explicit-constructor)
  LinExpr(Var v) { terms_.push_back({v.index, 1.0}); }  // NOLINT(google-explicit-constructor)

  LinExpr& add(Var v, double coef) {
    if (coef != 0.0) terms_.push_back({v.index, coef});
    return *this;
  }
  LinExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }
  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(double k);

  const std::vector<Term>& terms() const { return terms_; }
  double constant() const { return constant_; }
  double evaluate(std::span<const double> x) const;

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double k, LinExpr a);
LinExpr operator*(double k, Var v);

enum class Sense { Equal, LessEqual };

/// sum(terms) (== | <=) rhs.
struct LinearRow {
  std::vector<Term> terms;
  Sense sense = Sense::Equal;
  double rhs = 0.0;
};

enum class ConeKind {
  /// members = {v, l, p1, p2, ...}:  v * l >= p1^2 + p2^2 + ..., v, l >= 0
  Rotated,
  /// members = {t, u1, u2, ...}:  ||u|| <= t
  Norm,
};

struct ConeRow {
  ConeKind kind = ConeKind::Norm;
  std::vector<LinExpr> members;
};

struct VariableInfo {
  double lower = -kInfinity;
  double upper = kInfinity;
  bool binary = false;
  std::string name;
};

/// Bound replacement applied on top of a sealed program (used by branching
/// and by heuristics that fix binaries).
struct BoundOverride {
  std::size_t var = 0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Minimization problem with linear rows and second-order cone rows.
/// Build it, seal it, then hand it to a solver; sealed programs reject edits.
class ConicProgram {
 public:
  Var add_variable(double lower = -kInfinity, double upper = kInfinity, std::string name = {});
  /// A {0,1} variable; relaxations treat it as continuous on [0,1].
  Var add_binary(std::string name = {});
  void set_bounds(Var v, double lower, double upper);

  void set_objective(LinExpr objective);
  void add_objective(Var v, double coef);

  std::size_t add_equality(const LinExpr& lhs, double rhs);
  std::size_t add_less_equal(const LinExpr& lhs, double rhs);
  std::size_t add_greater_equal(const LinExpr& lhs, double rhs);
  /// v * l >= sum p_k^2 with v, l >= 0.
  std::size_t add_rotated_cone(LinExpr v, LinExpr l, std::vector<LinExpr> components);
  /// ||u|| <= t.
  std::size_t add_norm_cone(LinExpr t, std::vector<LinExpr> components);

  /// Validates references and freezes the program.
  void seal();
  bool sealed() const { return sealed_; }

  std::size_t variable_count() const { return vars_.size(); }
  const std::vector<VariableInfo>& variables() const { return vars_; }
  const VariableInfo& variable(Var v) const { return vars_.at(v.index); }
  const LinExpr& objective() const { return objective_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  const std::vector<ConeRow>& cones() const { return cones_; }
  std::vector<std::size_t> binaries() const;
  std::size_t equality_count() const;
  std::size_t inequality_count() const;

  /// One constraint per line; meant for eyeballing or diffing, not a stable format.
  std::string dump() const;

 private:
  void require_open() const;
  void check_expr(const LinExpr& e) const;

  std::vector<VariableInfo> vars_;
  LinExpr objective_;
  std::vector<LinearRow> rows_;
  std::vector<ConeRow> cones_;
  bool sealed_ = false;
};

/// Independent constraint audit of a primal point, in original units.
struct Residuals {
  double equality = 0.0;
  double inequality = 0.0;
  double bounds = 0.0;
  double cone = 0.0;
  double integrality = 0.0;

  /// Largest constraint violation; integrality is reported separately.
  double max() const;
};

Residuals evaluate_residuals(const ConicProgram& prog, std::span<const double> x,
                             std::span<const BoundOverride> overrides = {});

}  // namespace pvm::conic
