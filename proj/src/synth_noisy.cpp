#include "ddc/synth_noisy.hpp"

#include <cmath>

#include "ddc/error.hpp"
#include "ddc/linalg.hpp"

namespace ddc {

using sdp::Expr;

SpectrumGains spectrum_gains(const MatrixXd& l_ff) {
  if (l_ff.rows() != l_ff.cols() || l_ff.rows() == 0) {
    throw Error(ErrorCode::kNonSquare, "L_ff must be square and nonempty");
  }
  if ((l_ff - l_ff.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + l_ff.norm())) {
    throw Error(ErrorCode::kInvalidArgument,
                "L_ff must be symmetric (undirected follower graph)");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(l_ff),
                                             Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigenFailure, "symmetric eigensolver failed on L_ff");
  }
  SpectrumGains g;
  g.lambda_min = es.eigenvalues().minCoeff();
  g.lambda_max = es.eigenvalues().maxCoeff();
  if (g.lambda_min <= 1e-12 * std::max(1.0, g.lambda_max)) {
    throw Error(ErrorCode::kNonPositiveSpectrum,
                "smallest eigenvalue of L_ff is " + std::to_string(g.lambda_min) +
                    "; some follower is not connected to the leader");
  }
  g.alpha = 2.0 / (g.lambda_min + g.lambda_max);
  g.nu = (g.lambda_max - g.lambda_min) / (g.lambda_max + g.lambda_min);
  return g;
}

sdp::Problem informative_gain_problem(const DataRecord& rec,
                                      const NoiseBound& bound, double nu,
                                      const NoisyOptions& opts) {
  const int n = rec.n(), p = rec.p(), t = rec.horizon();
  if (bound.n() != n || bound.horizon() != t) {
    throw Error(ErrorCode::kDimensionMismatch,
                "noise bound is for n=" + std::to_string(bound.n()) + ", T=" +
                    std::to_string(bound.horizon()) + " but data have n=" +
                    std::to_string(n) + ", T=" + std::to_string(t));
  }
  if (!(nu >= 0.0 && nu < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "nu must lie in [0, 1)");
  }

  sdp::Problem prob;
  const Expr phi = prob.add_symmetric("Phi", n);
  const Expr f = prob.add_general("F", p, n);
  const Expr eps = prob.add_scalar("eps");
  const Expr gamma = prob.add_scalar("gamma");
  const Expr tau = prob.add_scalar("tau");

  const Expr zn = Expr::zeros(n, n), zp = Expr::zeros(p, p);
  const Expr znp = Expr::zeros(n, p), zpn = Expr::zeros(p, n);
  const Expr in = Expr::identity(n), ip = Expr::identity(p);
  const Expr ft = f.transpose();
  const Expr base = Expr::blocks({
      {phi - gamma * in, zn, znp, zn, znp, zn},
      {zn, zn, znp, phi, znp, zn},
      {zpn, zpn, -(nu * nu) * (tau * ip), f, zp, zpn},
      {zn, phi, ft, phi, ft, zn},
      {zpn, zpn, zp, f, tau * ip, zpn},
      {zn, zn, znp, zn, znp, in},
  });

  // E N E' with E = [[I, X+], [0, -X-], [0, -U-], 0, 0, 0].
  const int rows = 4 * n + 2 * p;
  MatrixXd e = MatrixXd::Zero(rows, n + t);
  e.block(0, 0, n, n) = MatrixXd::Identity(n, n);
  e.block(0, n, n, t) = rec.x_plus;
  e.block(n, n, n, t) = -rec.x_minus;
  e.block(2 * n, n, p, t) = -rec.u_minus;
  MatrixXd nmat(n + t, n + t);
  nmat << bound.n11, bound.n12, bound.n21(), bound.n22;
  const MatrixXd quad = symmetrize(e * nmat * e.transpose());

  prob.add_lmi("informativity", base - eps * Expr::constant(quad, "E N E'"),
               opts.margin);
  prob.add_lmi("eps >= 0", eps);
  prob.add_lmi("gamma > 0", gamma, opts.margin);
  prob.add_lmi("tau > 0", tau, opts.margin);
  prob.add_lmi("Phi <= I", in - phi);
  prob.maximize(gamma);
  return prob;
}

NoisySynthesis informative_gain(const DataRecord& rec, const NoiseBound& bound,
                                double nu, double alpha,
                                const NoisyOptions& opts,
                                const sdp::Settings& settings) {
  bound.validate();
  NoisySynthesis out;
  out.solution = sdp::solve(informative_gain_problem(rec, bound, nu, opts), settings);
  if (!out.solution.ok()) {
    if (out.solution.status == sdp::Status::kInfeasible) {
      throw Error(ErrorCode::kInfeasible,
                  "data are not informative under the noise bound: " +
                      out.solution.message);
    }
    throw Error(ErrorCode::kNumericalFailure,
                "informativity LMI: " + out.solution.message);
  }
  const sdp::Solution& s = out.solution;
  out.phi = symmetrize(s.value("Phi"));
  out.f = s.value("F");
  out.eps = s.scalar("eps");
  out.gamma_scalar = s.scalar("gamma");
  out.tau = s.scalar("tau");
  out.nu = nu;
  out.alpha = alpha;
  out.k0 = out.phi.llt().solve(out.f.transpose()).transpose();
  out.lmi_min_eig = s.constraint_min_eigs.front();
  return out;
}

Plant sample_consistent_system(const Plant& plant, const DataRecord& rec,
                               const NoiseBound& bound, Rng& rng) {
  const int n = plant.n(), p = plant.p(), t = rec.horizon();
  const MatrixXd d = rec.d ? *rec.d : MatrixXd::Zero(n, t);
  if (!check_noise_bound(d, bound)) {
    throw Error(ErrorCode::kInvalidArgument,
                "true noise does not satisfy the bound");
  }
  MatrixXd delta(n, n + p);
  for (int j = 0; j < n + p; ++j) {
    for (int i = 0; i < n; ++i) delta(i, j) = rng.normal();
  }
  MatrixXd z(p + n, t);
  z << rec.u_minus, rec.x_minus;
  const MatrixXd shift = delta * z;
  auto admissible = [&](double s) {
    return check_noise_bound(d - s * shift, bound, 0.0);
  };
  // The admissible set in s is an interval around 0 (concave matrix map).
  double hi = 1.0;
  while (admissible(hi) && hi < 1e6) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (admissible(mid) ? lo : hi) = mid;
  }
  const double s = lo * rng.uniform01();
  Plant out;
  out.b = plant.b + s * delta.leftCols(p);
  out.a = plant.a + s * delta.rightCols(n);
  return out;
}

}  // namespace ddc
