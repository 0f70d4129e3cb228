#include <sstream>

#include "ddc/error.hpp"
#include "ddc/sdp.hpp"

namespace ddc::sdp {

namespace {

std::string shape(const MatrixXd& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

void require_same_shape(const Expr& a, const Expr& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string("operand shapes differ in ") + op + ": " +
                    a.text() + " vs " + b.text());
  }
}

}  // namespace

Expr Expr::constant(const MatrixXd& value, std::string text) {
  Expr e;
  e.constant_ = value;
  e.text_ = text.empty() ? shape(value) : std::move(text);
  return e;
}

Expr Expr::zeros(int rows, int cols) {
  Expr e;
  e.constant_ = MatrixXd::Zero(rows, cols);
  e.text_ = "0";
  return e;
}

Expr Expr::identity(int n) {
  return constant(MatrixXd::Identity(n, n), "I" + std::to_string(n));
}

Expr Expr::scalar(double v) {
  std::ostringstream os;
  os << v;
  return constant(MatrixXd::Constant(1, 1, v), os.str());
}

Expr Expr::blocks(const std::vector<std::vector<Expr>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty block matrix");
  }
  const std::size_t ncols = rows.front().size();
  std::vector<int> heights, widths(ncols, 0);
  for (const auto& row : rows) {
    if (row.size() != ncols) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged block matrix");
    }
    heights.push_back(row.front().rows());
  }
  for (std::size_t c = 0; c < ncols; ++c) widths[c] = rows.front()[c].cols();
  int total_r = 0, total_c = 0;
  for (int h : heights) total_r += h;
  for (int w : widths) total_c += w;

  Expr out;
  out.constant_ = MatrixXd::Zero(total_r, total_c);
  std::string text = "[";
  int r0 = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    int c0 = 0;
    text += r ? "; " : "";
    for (std::size_t c = 0; c < ncols; ++c) {
      const Expr& b = rows[r][c];
      if (b.rows() != heights[r] || b.cols() != widths[c]) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "block (" + std::to_string(r) + "," + std::to_string(c) +
                        ") has the wrong shape");
      }
      out.constant_.block(r0, c0, b.rows(), b.cols()) = b.constant_;
      for (const auto& [k, m] : b.coefficients_) {
        auto it = out.coefficients_.find(k);
        if (it == out.coefficients_.end()) {
          it = out.coefficients_
                   .emplace(k, MatrixXd::Zero(total_r, total_c))
                   .first;
        }
        it->second.block(r0, c0, b.rows(), b.cols()) += m;
      }
      text += (c ? ", " : "") + b.text_;
      c0 += widths[c];
    }
    r0 += heights[r];
  }
  out.text_ = text + "]";
  return out;
}

Expr Expr::transpose() const {
  Expr out;
  out.constant_ = constant_.transpose();
  for (const auto& [k, m] : coefficients_) out.coefficients_[k] = m.transpose();
  out.text_ = text_ + "'";
  return out;
}

Expr Expr::sym() const {
  Expr out = *this;
  out += transpose();
  out = 0.5 * out;
  out.text_ = "sym(" + text_ + ")";
  return out;
}

Expr Expr::trace() const {
  if (rows() != cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "trace of non-square " + text_);
  }
  Expr out;
  out.constant_ = MatrixXd::Constant(1, 1, constant_.trace());
  for (const auto& [k, m] : coefficients_) {
    out.coefficients_[k] = MatrixXd::Constant(1, 1, m.trace());
  }
  out.text_ = "tr(" + text_ + ")";
  return out;
}

MatrixXd Expr::evaluate(const VectorXd& x) const {
  MatrixXd out = constant_;
  for (const auto& [k, m] : coefficients_) out += x(k) * m;
  return out;
}

Expr& Expr::operator+=(const Expr& other) {
  require_same_shape(*this, other, "+");
  constant_ += other.constant_;
  for (const auto& [k, m] : other.coefficients_) {
    auto it = coefficients_.find(k);
    if (it == coefficients_.end()) {
      coefficients_.emplace(k, m);
    } else {
      it->second += m;
    }
  }
  text_ = "(" + text_ + " + " + other.text_ + ")";
  return *this;
}

Expr& Expr::operator-=(const Expr& other) { return *this += -other; }

Expr operator-(const Expr& a) {
  Expr out = -1.0 * a;
  out.text_ = "-" + a.text_;
  return out;
}

Expr operator*(double s, const Expr& e) {
  Expr out;
  out.constant_ = s * e.constant_;
  for (const auto& [k, m] : e.coefficients_) out.coefficients_[k] = s * m;
  std::ostringstream os;
  os << s << "*" << e.text_;
  out.text_ = os.str();
  return out;
}

Expr operator*(const MatrixXd& m, const Expr& e) {
  return Expr::constant(m) * e;
}

Expr operator*(const Expr& e, const MatrixXd& m) {
  return e * Expr::constant(m);
}

Expr operator*(const Expr& a, const Expr& b) {
  // A 1x1 factor scales the other side entrywise.
  const bool a_scalar = a.rows() == 1 && a.cols() == 1;
  const bool b_scalar = b.rows() == 1 && b.cols() == 1;
  if ((a_scalar || b_scalar) && a.cols() != b.rows()) {
    const Expr& s = a_scalar ? a : b;
    const Expr& m = a_scalar ? b : a;
    Expr out;
    if (m.is_constant()) {
      out.constant_ = s.constant_(0, 0) * m.constant_;
      for (const auto& [k, c] : s.coefficients_) {
        out.coefficients_[k] = c(0, 0) * m.constant_;
      }
    } else if (s.is_constant()) {
      out = s.constant_(0, 0) * m;
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "product of two variable expressions is not affine: " +
                      a.text_ + " * " + b.text_);
    }
    out.text_ = a.text_ + "*" + b.text_;
    return out;
  }
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "inner dimensions differ in " + a.text_ + " * " + b.text_);
  }
  Expr out;
  if (a.is_constant()) {
    out.constant_ = a.constant_ * b.constant_;
    for (const auto& [k, m] : b.coefficients_) {
      out.coefficients_[k] = a.constant_ * m;
    }
  } else if (b.is_constant()) {
    out.constant_ = a.constant_ * b.constant_;
    for (const auto& [k, m] : a.coefficients_) {
      out.coefficients_[k] = m * b.constant_;
    }
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "product of two variable expressions is not affine: " +
                    a.text_ + " * " + b.text_);
  }
  out.text_ = a.text_ + "*" + b.text_;
  return out;
}

Expr Problem::add_variable(const std::string& name, VarKind kind, int rows,
                           int cols) {
  for (const auto& v : variables_) {
    if (v.name == name) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate variable " + name);
    }
  }
  if (rows <= 0 || cols <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty variable " + name);
  }
  Variable var{name, kind, rows, cols, num_unknowns_, 0};
  Expr e;
  e.constant_ = MatrixXd::Zero(rows, cols);
  e.text_ = name;
  int k = num_unknowns_;
  switch (kind) {
    case VarKind::kSymmetric:
      for (int j = 0; j < cols; ++j) {
        for (int i = 0; i <= j; ++i) {
          MatrixXd m = MatrixXd::Zero(rows, cols);
          m(i, j) = 1.0;
          m(j, i) = 1.0;
          e.coefficients_.emplace(k++, std::move(m));
        }
      }
      break;
    case VarKind::kGeneral:
    case VarKind::kScalar:
      for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
          MatrixXd m = MatrixXd::Zero(rows, cols);
          m(i, j) = 1.0;
          e.coefficients_.emplace(k++, std::move(m));
        }
      }
      break;
  }
  var.count = k - num_unknowns_;
  num_unknowns_ = k;
  variables_.push_back(var);
  return e;
}

Expr Problem::add_symmetric(const std::string& name, int n) {
  return add_variable(name, VarKind::kSymmetric, n, n);
}

Expr Problem::add_general(const std::string& name, int rows, int cols) {
  return add_variable(name, VarKind::kGeneral, rows, cols);
}

Expr Problem::add_scalar(const std::string& name) {
  return add_variable(name, VarKind::kScalar, 1, 1);
}

void Problem::add_lmi(const std::string& name, const Expr& e, double margin) {
  if (e.rows() != e.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "constraint " + name + " is not square");
  }
  auto asym = [](const MatrixXd& m) {
    return m.size() ? (m - m.transpose()).cwiseAbs().maxCoeff() : 0.0;
  };
  auto scale = [](const MatrixXd& m) {
    return std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  };
  double worst = asym(e.constant_) / scale(e.constant_);
  for (const auto& [k, m] : e.coefficients_) {
    worst = std::max(worst, asym(m) / scale(m));
  }
  if (worst > 1e-10) {
    throw Error(ErrorCode::kInvalidArgument,
                "constraint " + name + " is not symmetric (asymmetry " +
                    std::to_string(worst) + "): " + e.text_);
  }
  Expr stored = e;
  stored.constant_ = 0.5 * (e.constant_ + e.constant_.transpose());
  for (auto& [k, m] : stored.coefficients_) m = 0.5 * (m + m.transpose());
  lmis_.push_back({name, std::move(stored), margin});
}

void Problem::add_equality(const std::string& name, const Expr& e) {
  equalities_.push_back({name, e});
}

void Problem::minimize(const Expr& objective) {
  if (objective.rows() != 1 || objective.cols() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "objective must be scalar");
  }
  objective_ = objective;
  sense_ = Sense::kMinimize;
}

void Problem::maximize(const Expr& objective) {
  minimize(objective);
  sense_ = Sense::kMaximize;
}

MatrixXd Problem::extract(const Variable& var, const VectorXd& x) const {
  MatrixXd out(var.rows, var.cols);
  int k = var.offset;
  if (var.kind == VarKind::kSymmetric) {
    for (int j = 0; j < var.cols; ++j) {
      for (int i = 0; i <= j; ++i) {
        out(i, j) = x(k);
        out(j, i) = x(k);
        ++k;
      }
    }
  } else {
    for (int j = 0; j < var.cols; ++j) {
      for (int i = 0; i < var.rows; ++i) out(i, j) = x(k++);
    }
  }
  return out;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kFeasible: return "feasible";
    case Status::kInfeasible: return "infeasible";
    case Status::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

const MatrixXd& Solution::value(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no value for variable " + name);
  }
  return it->second;
}

double Solution::scalar(const std::string& name) const {
  return value(name)(0, 0);
}

std::string dump(const Problem& problem) {
  std::ostringstream os;
  os << "variables " << problem.variables().size() << " unknowns "
     << problem.num_unknowns() << "\n";
  for (const auto& v : problem.variables()) {
    const char* kind = v.kind == VarKind::kSymmetric ? "symmetric"
                       : v.kind == VarKind::kScalar  ? "scalar"
                                                     : "general";
    os << "  " << v.name << " " << kind << " " << v.rows << "x" << v.cols
       << " unknowns[" << v.offset << ".." << v.offset + v.count - 1 << "]\n";
  }
  switch (problem.sense()) {
    case Sense::kFeasibility: os << "objective feasibility\n"; break;
    case Sense::kMinimize:
      os << "objective minimize " << problem.objective().text() << "\n";
      break;
    case Sense::kMaximize:
      os << "objective maximize " << problem.objective().text() << "\n";
      break;
  }
  os << "lmi " << problem.lmis().size() << "\n";
  for (const auto& c : problem.lmis()) {
    os << "  " << c.name << " (" << c.expr.rows() << "x" << c.expr.cols()
       << ") >= " << c.margin << "*I : " << c.expr.text() << "\n";
  }
  os << "equality " << problem.equalities().size() << "\n";
  for (const auto& c : problem.equalities()) {
    os << "  " << c.name << " (" << c.expr.rows() << "x" << c.expr.cols()
       << ") == 0 : " << c.expr.text() << "\n";
  }
  return os.str();
}

}  // namespace ddc::sdp
