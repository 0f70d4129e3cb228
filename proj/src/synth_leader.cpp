#include "ddc/synth_leader.hpp"

#include <cmath>
#include <limits>

#include "ddc/error.hpp"
#include "ddc/linalg.hpp"
#include "ddc/synth_noiseless.hpp"

namespace ddc {

LeaderSynthesis leader_gain(const DataRecord& rec, const MatrixXd& q,
                            const sdp::Settings& settings) {
  LeaderSynthesis out;
  const InitialGain ig = initial_gain(rec, q, settings);
  out.gamma = ig.gamma;
  out.k0 = ig.k0;
  out.p_mat = riccati_from_data(rec, ig.gamma, q, settings);
  out.m = solve_g(rec, out.k0);
  const MatrixXd xm = rec.x_plus * out.m;
  const MatrixXd qh = inv_sqrt_spd(q);
  out.theta = sigma_max(qh * xm.transpose() * out.p_mat * xm * qh);
  return out;
}

Circle min_ratio_circle(const Eigen::VectorXcd& eigenvalues, double tol) {
  if (eigenvalues.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty spectrum");
  }
  if (eigenvalues.real().minCoeff() <= 0.0) {
    throw Error(ErrorCode::kInfeasible,
                "an eigenvalue of L-bar has nonpositive real part; the leader "
                "does not reach every follower");
  }
  auto radius = [&](double h) {
    return (eigenvalues.array() - h).abs().maxCoeff();
  };
  auto ratio = [&](double h) { return radius(h) / h; };

  const double scale = eigenvalues.cwiseAbs().maxCoeff();
  // The ratio is quasiconvex in h, so golden-section search is exact.
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 0.0, hi = 10.0 * scale;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = ratio(x1), f2 = ratio(x2);
  while (hi - lo > tol * std::max(1.0, scale)) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = ratio(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = ratio(x2);
    }
  }
  Circle c;
  c.h0 = 0.5 * (lo + hi);
  c.r0 = radius(c.h0);
  c.ratio = c.r0 / c.h0;
  return c;
}

void enclosing_circle(const WeightedGraphMatrix& wgm, LeaderSynthesis& syn) {
  const Circle c = min_ratio_circle(wgm.eigenvalues);
  syn.h0 = c.h0;
  syn.r0 = c.r0;
  syn.ratio = c.ratio;
  syn.c0 = 1.0 / c.h0;
  const double limit = syn.theta > 0.0 ? 1.0 / std::sqrt(syn.theta)
                                       : std::numeric_limits<double>::infinity();
  if (!(c.ratio < limit)) {
    throw Error(ErrorCode::kInfeasible,
                "no covering circle: best r0/h0 = " + std::to_string(c.ratio) +
                    " but theta^-1/2 = " + std::to_string(limit));
  }
}

LeaderProtocolInit leader_protocol_gains(const MatrixXd& k0, double c0,
                                         int followers) {
  LeaderProtocolInit init;
  init.k.assign(followers + 1, MatrixXd::Zero(k0.rows(), k0.cols()));
  init.c.assign(followers + 1, 0.0);
  init.k[0] = k0;
  init.c[0] = c0;
  return init;
}

}  // namespace ddc
