// Primal-dual interior-point method for small dense block-diagonal SDPs.
//
// The user problem  min c'x  s.t.  F_k(x) = F_k0 + sum_i x_i F_ki >= 0  is the
// dual of the standard form
//   min <C, X>  s.t.  <A_i, X> = b_i,  X >= 0
//   max b'y     s.t.  Z = C - sum_i y_i A_i >= 0
// with y = x, C = F0, A_i = -F_i, b = -c. Linear equalities are eliminated
// up front and every reduced unknown is boxed by |y| <= variable_bound, which
// keeps both sides strictly feasible. Search directions use the HKM scaling
// with a Mehrotra predictor-corrector step.

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddc/error.hpp"
#include "ddc/linalg.hpp"
#include "ddc/sdp.hpp"

namespace ddc::sdp {

namespace {

struct DenseBlock {
  MatrixXd c;
  std::vector<int> vars;
  std::vector<MatrixXd> a;
};

struct LpEntry {
  double c = 0.0;
  std::vector<std::pair<int, double>> a;
};

struct StdForm {
  int m = 0;
  VectorXd b;
  std::vector<DenseBlock> dense;
  std::vector<LpEntry> lp;

  int total_dim() const {
    int n = static_cast<int>(lp.size());
    for (const auto& blk : dense) n += static_cast<int>(blk.c.rows());
    return n;
  }
};

struct IpmResult {
  bool converged = false;
  VectorXd y;
  int iterations = 0;
  std::string message;
};

double inner(const MatrixXd& a, const MatrixXd& b) {
  return a.cwiseProduct(b).sum();
}

// <A_i, W> for every i; W need not be symmetric (A_i is).
VectorXd apply_a(const StdForm& f, const std::vector<MatrixXd>& w,
                 const VectorXd& wl) {
  VectorXd out = VectorXd::Zero(f.m);
  for (std::size_t k = 0; k < f.dense.size(); ++k) {
    const auto& blk = f.dense[k];
    for (std::size_t t = 0; t < blk.vars.size(); ++t) {
      out(blk.vars[t]) += inner(blk.a[t], w[k]);
    }
  }
  for (std::size_t e = 0; e < f.lp.size(); ++e) {
    for (const auto& [i, v] : f.lp[e].a) out(i) += v * wl(e);
  }
  return out;
}

void apply_at(const StdForm& f, const VectorXd& y, std::vector<MatrixXd>& out,
              VectorXd& outl) {
  out.resize(f.dense.size());
  for (std::size_t k = 0; k < f.dense.size(); ++k) {
    const auto& blk = f.dense[k];
    out[k] = MatrixXd::Zero(blk.c.rows(), blk.c.cols());
    for (std::size_t t = 0; t < blk.vars.size(); ++t) {
      out[k] += y(blk.vars[t]) * blk.a[t];
    }
  }
  outl = VectorXd::Zero(static_cast<Eigen::Index>(f.lp.size()));
  for (std::size_t e = 0; e < f.lp.size(); ++e) {
    for (const auto& [i, v] : f.lp[e].a) outl(e) += v * y(i);
  }
}

// Largest step in (0, inf] keeping X + a dX positive semidefinite.
double max_step(const MatrixXd& x, const MatrixXd& dx) {
  Eigen::LLT<MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const MatrixXd linv_dx =
      llt.matrixL().solve(llt.matrixL().solve(dx).transpose());
  const double lmin = min_eig_sym(linv_dx);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

double max_step_lp(const VectorXd& x, const VectorXd& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index e = 0; e < x.size(); ++e) {
    if (dx(e) < 0.0) a = std::min(a, -x(e) / dx(e));
  }
  return a;
}

IpmResult run_ipm(const StdForm& f, const Settings& s) {
  IpmResult res;
  const int m = f.m;
  const std::size_t nb = f.dense.size();
  const int n_total = f.total_dim();

  // Starting point scaled after the data (Helmberg et al. / CSDP heuristic).
  double max_a = 0.0, max_ratio = 0.0, c_norm = 0.0;
  std::vector<double> a_norm(m, 0.0);
  for (const auto& blk : f.dense) {
    c_norm += blk.c.squaredNorm();
    for (std::size_t t = 0; t < blk.vars.size(); ++t) {
      a_norm[blk.vars[t]] += blk.a[t].squaredNorm();
    }
  }
  for (const auto& e : f.lp) {
    c_norm += e.c * e.c;
    for (const auto& [i, v] : e.a) a_norm[i] += v * v;
  }
  c_norm = std::sqrt(c_norm);
  for (int i = 0; i < m; ++i) {
    a_norm[i] = std::sqrt(a_norm[i]);
    max_a = std::max(max_a, a_norm[i]);
    max_ratio = std::max(max_ratio, (1.0 + std::abs(f.b(i))) / (1.0 + a_norm[i]));
  }
  const double b_norm = f.b.norm();
  const double dim = std::max(1, n_total);
  const double alpha0 = 10.0 * std::max(1.0, dim * max_ratio);
  const double beta0 = 10.0 * std::max(1.0, (1.0 + std::max(max_a, c_norm)) /
                                                std::sqrt(dim));

  std::vector<MatrixXd> X(nb), Z(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const auto n = f.dense[k].c.rows();
    X[k] = alpha0 * MatrixXd::Identity(n, n);
    Z[k] = beta0 * MatrixXd::Identity(n, n);
  }
  VectorXd xl = VectorXd::Constant(static_cast<Eigen::Index>(f.lp.size()), alpha0);
  VectorXd zl = VectorXd::Constant(static_cast<Eigen::Index>(f.lp.size()), beta0);
  VectorXd y = VectorXd::Zero(m);
  VectorXd cl(static_cast<Eigen::Index>(f.lp.size()));
  for (std::size_t e = 0; e < f.lp.size(); ++e) cl(e) = f.lp[e].c;

  VectorXd best_y = y;
  double best_err = std::numeric_limits<double>::infinity();

  std::vector<MatrixXd> at_y, rd(nb), zinv(nb);
  VectorXd at_yl;
  for (int iter = 0; iter < s.max_iterations; ++iter) {
    res.iterations = iter + 1;
    apply_at(f, y, at_y, at_yl);
    double pobj = cl.dot(xl), dnorm = 0.0, mu_num = xl.dot(zl);
    for (std::size_t k = 0; k < nb; ++k) {
      rd[k] = f.dense[k].c - at_y[k] - Z[k];
      dnorm += rd[k].squaredNorm();
      pobj += inner(f.dense[k].c, X[k]);
      mu_num += inner(X[k], Z[k]);
    }
    const VectorXd rdl = cl - at_yl - zl;
    dnorm = std::sqrt(dnorm + rdl.squaredNorm());
    const VectorXd rp = f.b - apply_a(f, X, xl);
    const double dobj = f.b.dot(y);
    const double mu = mu_num / dim;

    const double gap =
        std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double pinf = rp.norm() / (1.0 + b_norm);
    const double dinf = dnorm / (1.0 + c_norm);
    const double err = std::max({gap, pinf, dinf});
    if (!std::isfinite(err)) {
      res.message = "non-finite iterate";
      break;
    }
    if (err < best_err) {
      best_err = err;
      best_y = y;
    }
    if (err <= s.tolerance) {
      res.converged = true;
      res.y = y;
      res.message = "converged";
      return res;
    }
    if (y.cwiseAbs().maxCoeff() > 1e14 || mu > 1e20) {
      res.message = "iterates diverged";
      break;
    }

    // Schur complement M_ij = <A_i, X A_j Z^{-1}>.
    MatrixXd M = MatrixXd::Zero(m, m);
    bool ok = true;
    for (std::size_t k = 0; k < nb && ok; ++k) {
      Eigen::LLT<MatrixXd> llt(Z[k]);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      zinv[k] = llt.solve(MatrixXd::Identity(Z[k].rows(), Z[k].cols()));
      zinv[k] = symmetrize(zinv[k]);
      const auto& blk = f.dense[k];
      for (std::size_t t = 0; t < blk.vars.size(); ++t) {
        const MatrixXd g = X[k] * blk.a[t] * zinv[k];
        for (std::size_t u = 0; u < blk.vars.size(); ++u) {
          M(blk.vars[u], blk.vars[t]) += inner(blk.a[u], g);
        }
      }
    }
    if (!ok) {
      res.message = "dual slack lost definiteness";
      break;
    }
    for (std::size_t e = 0; e < f.lp.size(); ++e) {
      const double w = xl(e) / zl(e);
      for (const auto& [i, vi] : f.lp[e].a) {
        for (const auto& [j, vj] : f.lp[e].a) M(i, j) += vi * vj * w;
      }
    }
    M = symmetrize(M);
    Eigen::LLT<MatrixXd> mfac(M);
    if (mfac.info() != Eigen::Success) {
      const double reg = 1e-14 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
      M.diagonal().array() += reg;
      mfac.compute(M);
      if (mfac.info() != Eigen::Success) {
        res.message = "Schur complement is singular";
        break;
      }
    }

    std::vector<MatrixXd> x_rd_zinv(nb);
    for (std::size_t k = 0; k < nb; ++k) x_rd_zinv[k] = X[k] * rd[k] * zinv[k];
    const VectorXd xl_rdl_zl = xl.cwiseProduct(rdl).cwiseQuotient(zl);
    const VectorXd base_rhs = f.b + apply_a(f, x_rd_zinv, xl_rdl_zl);

    std::vector<MatrixXd> dX(nb), dZ(nb), dXa(nb), dZa(nb);
    VectorXd dxl, dzl;
    auto directions = [&](const VectorXd& rhs, double sigma_mu,
                          const std::vector<MatrixXd>* corr,
                          const VectorXd* corrl) {
      const VectorXd dy = mfac.solve(rhs);
      std::vector<MatrixXd> at_dy;
      VectorXd at_dyl;
      apply_at(f, dy, at_dy, at_dyl);
      for (std::size_t k = 0; k < nb; ++k) {
        dZ[k] = rd[k] - at_dy[k];
        MatrixXd tmp = sigma_mu * zinv[k] - X[k] - X[k] * dZ[k] * zinv[k];
        if (corr) tmp -= (*corr)[k];
        dX[k] = symmetrize(tmp);
      }
      dzl = rdl - at_dyl;
      dxl = (sigma_mu * zl.cwiseInverse() - xl -
             xl.cwiseProduct(dzl).cwiseQuotient(zl));
      if (corrl) dxl -= *corrl;
      return dy;
    };
    auto steps = [&](double& ap, double& ad) {
      ap = max_step_lp(xl, dxl);
      ad = max_step_lp(zl, dzl);
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(X[k], dX[k]));
        ad = std::min(ad, max_step(Z[k], dZ[k]));
      }
    };

    // Predictor.
    directions(base_rhs, 0.0, nullptr, nullptr);
    double ap = 0.0, ad = 0.0;
    steps(ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double mu_aff = (xl + ap * dxl).dot(zl + ad * dzl);
    for (std::size_t k = 0; k < nb; ++k) {
      mu_aff += inner(X[k] + ap * dX[k], Z[k] + ad * dZ[k]);
    }
    mu_aff /= dim;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0),
                                    0.0, 1.0);
    dXa = dX;
    dZa = dZ;
    const VectorXd dxla = dxl, dzla = dzl;

    // Corrector.
    std::vector<MatrixXd> corr(nb), zinv_ones(nb);
    for (std::size_t k = 0; k < nb; ++k) corr[k] = dXa[k] * dZa[k] * zinv[k];
    const VectorXd corrl = dxla.cwiseProduct(dzla).cwiseQuotient(zl);
    const VectorXd rhs = base_rhs - sigma * mu * apply_a(f, zinv, zl.cwiseInverse()) +
                         apply_a(f, corr, corrl);
    const VectorXd dy = directions(rhs, sigma * mu, &corr, &corrl);
    steps(ap, ad);
    const double frac = 0.95;
    ap = std::min(1.0, frac * ap);
    ad = std::min(1.0, frac * ad);
    if (ap < 1e-12 && ad < 1e-12) {
      res.message = "step length collapsed";
      break;
    }
    for (std::size_t k = 0; k < nb; ++k) {
      X[k] = symmetrize(X[k] + ap * dX[k]);
      Z[k] = symmetrize(Z[k] + ad * dZ[k]);
    }
    xl += ap * dxl;
    zl += ad * dzl;
    y += ad * dy;
  }
  if (res.message.empty()) res.message = "iteration limit reached";
  // Accept a slightly looser point when the method stalls at the end.
  if (best_err <= 1e3 * s.tolerance) {
    res.converged = true;
    res.message += " (accepted at " + std::to_string(best_err) + ")";
  }
  res.y = best_y;
  return res;
}

// Affine reparametrization x = x0 + N y. Equality constraints are eliminated
// first; directions that then touch neither an LMI nor the objective are
// pinned at zero so the Schur complement stays nonsingular.
struct Reduction {
  VectorXd x0;
  MatrixXd basis;  // m0 x m
  bool identity = true;
  bool consistent = true;
};

// Orthonormal basis of the row space of `a` (as columns).
MatrixXd row_space(const MatrixXd& a, double rel_tol) {
  if (a.rows() == 0 || a.cols() == 0) return MatrixXd::Zero(a.cols(), 0);
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * std::max(1.0, sv(0))) ++rank;
  }
  return svd.matrixV().leftCols(rank);
}

Reduction reduce(const Problem& p, const VectorXd& cost) {
  const int m0 = p.num_unknowns();
  Reduction r;
  r.x0 = VectorXd::Zero(m0);
  r.basis = MatrixXd::Identity(m0, m0);
  int rows = 0;
  for (const auto& e : p.equalities()) rows += e.expr.rows() * e.expr.cols();
  if (rows > 0) {
    MatrixXd a = MatrixXd::Zero(rows, m0);
    VectorXd rhs(rows);
    int row = 0;
    for (const auto& e : p.equalities()) {
      for (int j = 0; j < e.expr.cols(); ++j) {
        for (int i = 0; i < e.expr.rows(); ++i) {
          rhs(row) = -e.expr.constant_term()(i, j);
          for (const auto& [k, mk] : e.expr.coefficients()) a(row, k) = mk(i, j);
          ++row;
        }
      }
    }
    Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > 1e-10 * std::max(1.0, sv(0))) ++rank;
    }
    VectorXd coef = svd.matrixU().leftCols(rank).transpose() * rhs;
    coef = coef.cwiseQuotient(sv.head(rank));
    r.x0 = svd.matrixV().leftCols(rank) * coef;
    r.consistent = (a * r.x0 - rhs).norm() <= 1e-9 * (1.0 + rhs.norm());
    r.basis = svd.matrixV().rightCols(m0 - rank);
    r.identity = false;
  }

  // Stack every LMI coefficient (upper triangle) and the cost as rows.
  int entries = 1;
  for (const auto& c : p.lmis()) entries += c.expr.rows() * (c.expr.rows() + 1) / 2;
  MatrixXd influence = MatrixXd::Zero(entries, m0);
  influence.row(0) = cost.transpose();
  int row = 1;
  for (const auto& c : p.lmis()) {
    const int n = c.expr.rows();
    for (const auto& [k, mk] : c.expr.coefficients()) {
      int rr = row;
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i <= j; ++i) influence(rr++, k) = mk(i, j);
      }
    }
    row += n * (n + 1) / 2;
  }
  const MatrixXd reduced = influence * r.basis;
  const MatrixXd keep = row_space(reduced, 1e-12);
  if (keep.cols() < r.basis.cols()) {
    r.basis = r.basis * keep;
    r.identity = false;
  }
  return r;
}

// Reduced LMI data: F0 and the nonzero F_j for the reduced unknowns.
struct ReducedLmi {
  MatrixXd f0;
  std::vector<int> vars;
  std::vector<MatrixXd> f;
};

std::vector<ReducedLmi> reduce_lmis(const Problem& p, const Reduction& r) {
  std::vector<ReducedLmi> out;
  const int m = static_cast<int>(r.basis.cols());
  for (const auto& c : p.lmis()) {
    ReducedLmi red;
    const int n = c.expr.rows();
    red.f0 = c.expr.constant_term() - c.margin * MatrixXd::Identity(n, n);
    if (r.identity) {
      for (const auto& [k, mk] : c.expr.coefficients()) {
        if (mk.cwiseAbs().maxCoeff() == 0.0) continue;
        red.vars.push_back(k);
        red.f.push_back(mk);
      }
    } else {
      for (const auto& [k, mk] : c.expr.coefficients()) red.f0 += r.x0(k) * mk;
      for (int j = 0; j < m; ++j) {
        MatrixXd acc = MatrixXd::Zero(n, n);
        for (const auto& [k, mk] : c.expr.coefficients()) {
          if (r.basis(k, j) != 0.0) acc += r.basis(k, j) * mk;
        }
        if (acc.cwiseAbs().maxCoeff() > 1e-14) {
          red.vars.push_back(j);
          red.f.push_back(symmetrize(acc));
        }
      }
    }
    out.push_back(std::move(red));
  }
  return out;
}

// Standard form for the reduced problem. `phase_one` adds a shift variable t
// (index m) to every LMI and minimizes it, with t >= -1.
StdForm build_std_form(const std::vector<ReducedLmi>& lmis, int m,
                       const VectorXd& cost, double bound, bool phase_one) {
  StdForm f;
  f.m = phase_one ? m + 1 : m;
  f.b = VectorXd::Zero(f.m);
  if (phase_one) {
    f.b(m) = -1.0;
  } else {
    f.b = -cost;
  }
  for (const auto& l : lmis) {
    DenseBlock blk;
    blk.c = l.f0;
    for (std::size_t t = 0; t < l.vars.size(); ++t) {
      blk.vars.push_back(l.vars[t]);
      blk.a.push_back(-l.f[t]);
    }
    if (phase_one) {
      blk.vars.push_back(m);
      blk.a.push_back(-MatrixXd::Identity(l.f0.rows(), l.f0.cols()));
    }
    f.dense.push_back(std::move(blk));
  }
  for (int j = 0; j < f.m; ++j) {
    f.lp.push_back({bound, {{j, 1.0}}});
    if (!(phase_one && j == m)) f.lp.push_back({bound, {{j, -1.0}}});
  }
  if (phase_one) f.lp.push_back({1.0, {{m, -1.0}}});
  return f;
}

}  // namespace

Solution solve(const Problem& problem, const Settings& settings) {
  Solution sol;
  const int m0 = problem.num_unknowns();
  if (m0 > kMaxUnknowns) {
    sol.message = "problem has " + std::to_string(m0) + " unknowns; limit is " +
                  std::to_string(kMaxUnknowns);
    return sol;
  }

  VectorXd cost0 = VectorXd::Zero(m0);
  if (problem.sense() != Sense::kFeasibility) {
    for (const auto& [k, mk] : problem.objective().coefficients()) {
      cost0(k) = mk(0, 0);
    }
    if (problem.sense() == Sense::kMaximize) cost0 = -cost0;
  }
  const Reduction red = reduce(problem, cost0);
  if (!red.consistent) {
    sol.status = Status::kInfeasible;
    sol.message = "equality constraints are inconsistent";
    return sol;
  }
  const int m = static_cast<int>(red.basis.cols());
  const VectorXd cost = red.identity ? cost0 : VectorXd(red.basis.transpose() * cost0);
  const auto lmis = reduce_lmis(problem, red);

  auto finish = [&](const VectorXd& y) {
    sol.x = red.identity ? y : VectorXd(red.x0 + red.basis * y);
    for (const auto& v : problem.variables()) {
      sol.values[v.name] = problem.extract(v, sol.x);
    }
    if (problem.sense() != Sense::kFeasibility) {
      sol.objective_value = problem.objective().evaluate(sol.x)(0, 0);
    }
    sol.constraint_min_eigs.clear();
    for (const auto& c : problem.lmis()) {
      const MatrixXd val = c.expr.evaluate(sol.x);
      sol.constraint_min_eigs.push_back(
          min_eig_sym(val - c.margin * MatrixXd::Identity(val.rows(), val.cols())));
    }
    sol.equality_residual = 0.0;
    for (const auto& e : problem.equalities()) {
      sol.equality_residual = std::max(
          sol.equality_residual, e.expr.evaluate(sol.x).cwiseAbs().maxCoeff());
    }
  };

  if (m == 0) {
    finish(VectorXd::Zero(0));
    const bool feasible =
        std::all_of(sol.constraint_min_eigs.begin(), sol.constraint_min_eigs.end(),
                    [&](double v) { return v >= -settings.feasibility_tolerance; });
    sol.status = feasible ? (problem.sense() == Sense::kFeasibility ? Status::kFeasible
                                                                    : Status::kOptimal)
                          : Status::kInfeasible;
    return sol;
  }

  const StdForm main_form =
      build_std_form(lmis, m, cost, settings.variable_bound, false);
  const IpmResult main = run_ipm(main_form, settings);
  sol.iterations = main.iterations;
  if (main.converged) {
    finish(main.y);
    const double worst = sol.constraint_min_eigs.empty()
                             ? 0.0
                             : *std::min_element(sol.constraint_min_eigs.begin(),
                                                 sol.constraint_min_eigs.end());
    if (worst >= -settings.feasibility_tolerance &&
        sol.equality_residual <= 1e-8) {
      sol.status = problem.sense() == Sense::kFeasibility ? Status::kFeasible
                                                          : Status::kOptimal;
      sol.message = main.message;
      return sol;
    }
    sol.message = "solver point violates constraints (min eigenvalue " +
                  std::to_string(worst) + ")";
  } else {
    sol.message = main.message;
  }

  // Classify the failure: phase one maximizes the uniform margin.
  const StdForm p1_form =
      build_std_form(lmis, m, VectorXd::Zero(m), settings.variable_bound, true);
  const IpmResult p1 = run_ipm(p1_form, settings);
  sol.iterations += p1.iterations;
  if (p1.converged) {
    const double shift = p1.y(m);
    if (shift > settings.feasibility_tolerance) {
      sol.status = Status::kInfeasible;
      sol.message = "infeasible: best uniform violation " + std::to_string(shift);
      finish(p1.y.head(m));
      return sol;
    }
  }
  sol.status = Status::kNumericalFailure;
  if (!main.converged) finish(main.y);
  return sol;
}

}  // namespace ddc::sdp
