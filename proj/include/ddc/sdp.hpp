#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ddc::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Affine matrix expression  C + sum_k x_k M_k  in the scalar unknowns x of a
/// Problem. Only products where one side is constant are representable.
/// Every expression carries a readable rendering used by dump().
class Expr {
 public:
  Expr() = default;

  static Expr constant(const MatrixXd& value, std::string text = {});
  static Expr zeros(int rows, int cols);
  static Expr identity(int n);
  static Expr scalar(double v);

  /// Block matrix; blocks in one row share a height, blocks in one column
  /// share a width.
  static Expr blocks(const std::vector<std::vector<Expr>>& rows);

  int rows() const { return static_cast<int>(constant_.rows()); }
  int cols() const { return static_cast<int>(constant_.cols()); }
  bool is_constant() const { return coefficients_.empty(); }

  const MatrixXd& constant_term() const { return constant_; }
  const std::map<int, MatrixXd>& coefficients() const { return coefficients_; }
  const std::string& text() const { return text_; }

  Expr transpose() const;
  /// (E + E^T) / 2.
  Expr sym() const;
  /// 1x1 expression.
  Expr trace() const;

  MatrixXd evaluate(const VectorXd& x) const;

  Expr& operator+=(const Expr& other);
  Expr& operator-=(const Expr& other);

  friend Expr operator+(Expr a, const Expr& b) { return a += b; }
  friend Expr operator-(Expr a, const Expr& b) { return a -= b; }
  friend Expr operator-(const Expr& a);
  friend Expr operator*(double s, const Expr& e);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator*(const MatrixXd& m, const Expr& e);
  friend Expr operator*(const Expr& e, const MatrixXd& m);

 private:
  friend class Problem;

  MatrixXd constant_;
  std::map<int, MatrixXd> coefficients_;
  std::string text_;
};

enum class VarKind { kSymmetric, kGeneral, kScalar };

struct Variable {
  std::string name;
  VarKind kind = VarKind::kGeneral;
  int rows = 0;
  int cols = 0;
  int offset = 0;  // first scalar unknown
  int count = 0;   // number of scalar unknowns
};

struct LmiConstraint {
  std::string name;
  Expr expr;            // symmetric
  double margin = 0.0;  // expr >= margin * I
};

struct EqualityConstraint {
  std::string name;
  Expr expr;  // every entry == 0
};

enum class Sense { kFeasibility, kMinimize, kMaximize };

class Problem {
 public:
  Expr add_symmetric(const std::string& name, int n);
  Expr add_general(const std::string& name, int rows, int cols);
  Expr add_scalar(const std::string& name);

  /// Requires `e` >= margin * I. Throws kInvalidArgument when `e` is not
  /// square or its asymmetry exceeds 1e-10; the stored copy is symmetrized.
  void add_lmi(const std::string& name, const Expr& e, double margin = 0.0);
  void add_equality(const std::string& name, const Expr& e);

  void minimize(const Expr& objective);
  void maximize(const Expr& objective);

  int num_unknowns() const { return num_unknowns_; }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<LmiConstraint>& lmis() const { return lmis_; }
  const std::vector<EqualityConstraint>& equalities() const {
    return equalities_;
  }
  Sense sense() const { return sense_; }
  const Expr& objective() const { return objective_; }

  /// Reshapes the scalar unknowns of `var` out of a full solution vector.
  MatrixXd extract(const Variable& var, const VectorXd& x) const;

 private:
  Expr add_variable(const std::string& name, VarKind kind, int rows, int cols);

  std::vector<Variable> variables_;
  std::vector<LmiConstraint> lmis_;
  std::vector<EqualityConstraint> equalities_;
  Expr objective_;
  Sense sense_ = Sense::kFeasibility;
  int num_unknowns_ = 0;
};

/// Upper bound on scalar unknowns accepted by solve().
inline constexpr int kMaxUnknowns = 1000;

struct Settings {
  double tolerance = 1e-9;              // relative gap and infeasibilities
  int max_iterations = 150;
  double variable_bound = 1e5;          // |x_k| <= bound on reduced unknowns
  double feasibility_tolerance = 1e-7;  // certified min eigenvalue
};

enum class Status { kOptimal, kFeasible, kInfeasible, kNumericalFailure };

std::string to_string(Status s);

struct Solution {
  Status status = Status::kNumericalFailure;
  std::map<std::string, MatrixXd> values;
  double objective_value = 0.0;
  VectorXd x;
  std::vector<double> constraint_min_eigs;  // of expr - margin*I, per LMI
  double equality_residual = 0.0;
  int iterations = 0;
  std::string message;

  bool ok() const {
    return status == Status::kOptimal || status == Status::kFeasible;
  }
  const MatrixXd& value(const std::string& name) const;
  double scalar(const std::string& name) const;
};

Solution solve(const Problem& problem, const Settings& settings = {});

/// Plain-text rendering: variable table, objective, constraints.
std::string dump(const Problem& problem);

}  // namespace ddc::sdp
