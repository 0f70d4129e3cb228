#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ddc/netgraph.hpp"
#include "ddc/plant.hpp"
#include "ddc/sdp.hpp"

namespace ddc {

struct LeaderSynthesis {
  MatrixXd gamma;
  MatrixXd k0;     // p x n
  MatrixXd p_mat;  // n x n
  MatrixXd m;      // T x n, minimum-norm solution of [K0; 0] = [U-; X-] M
  double theta = 0.0;
  double h0 = 0.0;
  double r0 = 0.0;
  double ratio = 0.0;  // r0 / h0
  double c0 = 0.0;     // 1 / h0
};

/// Gain, Riccati solution, M and theta from the leader's own data.
LeaderSynthesis leader_gain(const DataRecord& rec, const MatrixXd& q,
                            const sdp::Settings& settings = {});

struct Circle {
  double h0 = 0.0;
  double r0 = 0.0;
  double ratio = 0.0;
};

/// Circle centred at h0 > 0 on the real axis covering `eigenvalues` with
/// the smallest r0 / h0. Golden-section search over (0, 10 max|lambda|].
/// Throws kInfeasible if some eigenvalue has nonpositive real part.
Circle min_ratio_circle(const Eigen::VectorXcd& eigenvalues, double tol = 1e-10);

/// Fills h0, r0, ratio and c0 of `syn`. Throws kInfeasible when the best
/// ratio is not below theta^{-1/2}.
void enclosing_circle(const WeightedGraphMatrix& wgm, LeaderSynthesis& syn);

struct LeaderProtocolInit {
  std::vector<MatrixXd> k;  // index 0 is the leader
  std::vector<double> c;
};

/// Leader holds (K0, c0); followers start from zero.
LeaderProtocolInit leader_protocol_gains(const MatrixXd& k0, double c0,
                                         int followers);

}  // namespace ddc
