#include "ddc/synth_noiseless.hpp"

#include <cmath>

#include "ddc/error.hpp"
#include "ddc/linalg.hpp"

namespace ddc {

namespace {

using sdp::Expr;

void require_square_pd(const MatrixXd& q, int n, const char* what) {
  if (q.rows() != n || q.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " must be " + std::to_string(n) + "x" +
                    std::to_string(n));
  }
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.norm()) ||
      min_eig_sym(q) <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " must be symmetric positive definite");
  }
}

void raise_on_failure(const sdp::Solution& s, const std::string& what) {
  if (s.ok()) return;
  if (s.status == sdp::Status::kInfeasible) {
    throw Error(ErrorCode::kInfeasible, what + ": " + s.message);
  }
  throw Error(ErrorCode::kNumericalFailure, what + ": " + s.message);
}

}  // namespace

sdp::Problem initial_gain_problem(const DataRecord& rec, const MatrixXd& q) {
  const int n = rec.n(), t = rec.horizon();
  sdp::Problem prob;
  const Expr gamma = prob.add_general("Gamma", t, n);
  const Expr xg = Expr::constant(rec.x_minus, "X-") * gamma;
  const Expr xpg = Expr::constant(rec.x_plus, "X+") * gamma;
  prob.add_equality("X- Gamma symmetric", xg - xg.transpose());
  const Expr s = xg.sym();
  const Expr eye = Expr::identity(n);
  prob.add_lmi("lyapunov", Expr::blocks({{s - eye, xpg}, {xpg.transpose(), s}}));
  prob.add_lmi("X- Gamma >= I", s - eye);
  prob.minimize((Expr::constant(q, "Q") * s).trace());
  return prob;
}

InitialGain initial_gain(const DataRecord& rec, const MatrixXd& q,
                         const sdp::Settings& settings) {
  require_square_pd(q, rec.n(), "Q");
  if (!check_rank(rec)) {
    throw Error(ErrorCode::kInfeasible,
                "[U-; X-] does not have full row rank; the data are not usable");
  }
  InitialGain out;
  out.solution = sdp::solve(initial_gain_problem(rec, q), settings);
  raise_on_failure(out.solution, "initial gain SDP");
  out.gamma = out.solution.value("Gamma");
  const MatrixXd xg = symmetrize(rec.x_minus * out.gamma);
  out.k0 = rec.u_minus * out.gamma * xg.inverse();
  return out;
}

sdp::Problem riccati_problem(const DataRecord& rec, const MatrixXd& gamma,
                             const MatrixXd& q) {
  const int n = rec.n();
  const MatrixXd m = rec.x_plus * gamma * (rec.x_minus * gamma).inverse();
  sdp::Problem prob;
  const Expr p = prob.add_symmetric("P", n);
  prob.add_lmi("P >= 0", p);
  prob.add_lmi("riccati",
               Expr::constant(m.transpose(), "M'") * p * Expr::constant(m, "M") -
                   p + Expr::constant(q, "Q"));
  prob.maximize(p.trace());
  return prob;
}

MatrixXd riccati_from_data(const DataRecord& rec, const MatrixXd& gamma,
                           const MatrixXd& q, const sdp::Settings& settings) {
  require_square_pd(q, rec.n(), "Q");
  if (gamma.rows() != rec.horizon() || gamma.cols() != rec.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "Gamma must be T x n");
  }
  const sdp::Solution s = sdp::solve(riccati_problem(rec, gamma, q), settings);
  if (!s.ok()) throw Error(ErrorCode::kNumericalFailure, "Riccati SDP: " + s.message);
  return symmetrize(s.value("P"));
}

double are_residual(const Plant& plant, const MatrixXd& p, const MatrixXd& q) {
  const MatrixXd& a = plant.a;
  const MatrixXd& b = plant.b;
  const MatrixXd bpb = b.transpose() * p * b;
  const MatrixXd bpa = b.transpose() * p * a;
  const MatrixXd rhs =
      a.transpose() * p * a - bpa.transpose() * bpb.ldlt().solve(bpa) + q;
  return (p - rhs).norm();
}

MareGain solve_mare(const MatrixXd& r_tilde, const MatrixXd& q_tilde,
                    double delta, double tol, int max_iterations) {
  const int p = static_cast<int>(r_tilde.rows());
  require_square_pd(r_tilde, p, "R~");
  require_square_pd(q_tilde, p, "Q~");
  const double c = 1.0 - delta * delta;
  auto step = [&](const MatrixXd& l) -> MatrixXd {
    return symmetrize(l - c * l * (l + r_tilde).ldlt().solve(l) + q_tilde);
  };
  MareGain out;
  out.r_tilde = r_tilde;
  out.q_tilde = q_tilde;
  out.delta = delta;
  MatrixXd l = q_tilde;
  for (int it = 1; it <= max_iterations; ++it) {
    const MatrixXd next = step(l);
    if (!next.allFinite()) break;
    const double change = (next - l).cwiseAbs().maxCoeff();
    l = next;
    if (change <= tol * std::max(1.0, l.cwiseAbs().maxCoeff())) {
      out.iterations = it;
      out.lambda_mat = l;
      out.residual = (step(l) - l).cwiseAbs().maxCoeff();
      out.o_gain = -(l + r_tilde).ldlt().solve(l);
      return out;
    }
  }
  throw Error(ErrorCode::kNoConvergence,
              "MARE fixed-point iteration did not converge for delta = " +
                  std::to_string(delta));
}

MareGain gain_consensus_matrix(const RowStochasticDff& dff,
                               const MatrixXd& r_tilde, const MatrixXd& q_tilde,
                               std::optional<double> delta) {
  if (dff.degenerate) {
    MareGain g = solve_mare(r_tilde, q_tilde, delta.value_or(0.0));
    g.degenerate = true;
    return g;
  }
  if (!(dff.mu < 1.0)) {
    throw Error(ErrorCode::kSubdominantModulusNotLessThanOne,
                "subdominant eigenvalue modulus of D_ff is " +
                    std::to_string(dff.mu));
  }
  const double d = delta.value_or(0.5 * (dff.mu + 1.0));
  if (d <= dff.mu) {
    throw Error(ErrorCode::kInvalidArgument,
                "delta = " + std::to_string(d) + " must exceed mu = " +
                    std::to_string(dff.mu));
  }
  return solve_mare(r_tilde, q_tilde, d);
}

MatrixXd solve_g(const DataRecord& rec, const MatrixXd& k0) {
  if (!check_rank(rec)) {
    throw Error(ErrorCode::kRankDeficient, "[U-; X-] does not have full row rank");
  }
  const int n = rec.n(), p = rec.p();
  if (k0.rows() != p || k0.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "K must be p x n");
  }
  MatrixXd stacked(p + n, rec.horizon());
  stacked << rec.u_minus, rec.x_minus;
  MatrixXd rhs = MatrixXd::Zero(p + n, n);
  rhs.topRows(p) = k0;
  MatrixXd g = min_norm_solve(stacked, rhs);
  const double res = (stacked * g - rhs).norm();
  if (res > 1e-8 * std::max(1.0, rhs.norm())) {
    throw Error(ErrorCode::kNumericalFailure,
                "G residual " + std::to_string(res) + " too large");
  }
  return g;
}

NoiselessSynthesis synthesize_agent(const DataRecord& rec, const MatrixXd& q,
                                    const sdp::Settings& settings) {
  NoiselessSynthesis s;
  const InitialGain ig = initial_gain(rec, q, settings);
  s.gamma = ig.gamma;
  s.k0 = ig.k0;
  s.q = q;
  s.p_mat = riccati_from_data(rec, s.gamma, q, settings);
  s.g = solve_g(rec, s.k0);
  s.u_factor = s.gamma * symmetrize(rec.x_minus * s.gamma).inverse();
  s.x_plus_g = rec.x_plus * s.g;
  s.w = rec.x_plus * s.u_factor - s.x_plus_g;
  return s;
}

bool ConsensusRegion::contains(std::complex<double> eta) const {
  const double e1 = std::norm(eta - 1.0);
  if (kind == Kind::kInvertibleB) return e1 < bound;
  const double m = std::abs(eta);
  return a * e1 + b * m * m + c * m + d <= 1.0;
}

ConsensusRegion consensus_region(const std::vector<NoiselessSynthesis>& agents,
                                 bool invertible_b) {
  if (agents.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no agents");
  }
  const Eigen::Index n = agents.front().p_mat.rows();
  for (const auto& ag : agents) {
    if (ag.p_mat.rows() != n || ag.w.rows() != n || ag.x_plus_g.rows() != n) {
      throw Error(ErrorCode::kInvalidArgument, "agents differ in state size");
    }
  }
  ConsensusRegion out;
  out.kind = invertible_b ? ConsensusRegion::Kind::kInvertibleB
                          : ConsensusRegion::Kind::kGeneralB;
  out.p_sum = MatrixXd::Zero(n, n);
  for (const auto& ag : agents) out.p_sum += ag.p_mat;

  out.f_mat = MatrixXd::Zero(n, n);
  out.r_mat = MatrixXd::Zero(n, n);
  MatrixXd sum_a = MatrixXd::Zero(n, n), sum_b = sum_a, sum_c = sum_a,
           sum_d = sum_a;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& ag = agents[i];
    const MatrixXd others = out.p_sum - ag.p_mat;
    out.f_mat += ag.q + others;
    const MatrixXd xpx = ag.x_plus_g.transpose() * ag.p_mat * ag.x_plus_g;
    const MatrixXd wpw = ag.w.transpose() * others * ag.w;
    out.r_mat += xpx + wpw;
    sum_a += xpx;
    sum_b += ag.x_plus_g.transpose() * others * ag.x_plus_g;
    sum_d += wpw;
    for (std::size_t j = 0; j < agents.size(); ++j) {
      if (j == i) continue;
      const auto& bj = agents[j];
      sum_c += bj.x_plus_g.transpose() * bj.p_mat * ag.x_plus_g +
               ag.x_plus_g.transpose() * ag.p_mat * bj.x_plus_g;
    }
  }
  out.f_mat = symmetrize(out.f_mat);
  const MatrixXd fh = inv_sqrt_spd(out.f_mat);
  auto scaled = [&](const MatrixXd& m) { return sigma_max(fh * m * fh); };
  if (invertible_b) {
    out.bound = 1.0 / scaled(symmetrize(out.r_mat));
  } else {
    out.a = scaled(sum_a);
    out.b = scaled(sum_b);
    out.c = scaled(sum_c);
    out.d = scaled(sum_d);
  }
  return out;
}

bool verify_region(const WeightedGraphMatrix& wgm, const ConsensusRegion& region) {
  for (Eigen::Index k = 0; k < wgm.eigenvalues.size(); ++k) {
    if (!region.contains(wgm.eigenvalues(k))) return false;
  }
  return true;
}

}  // namespace ddc
