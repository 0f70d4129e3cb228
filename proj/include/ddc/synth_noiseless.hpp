#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ddc/netgraph.hpp"
#include "ddc/plant.hpp"
#include "ddc/sdp.hpp"

namespace ddc {

/// Per-agent result of the noise-free design.
struct NoiselessSynthesis {
  MatrixXd gamma;     // T x n
  MatrixXd k0;        // p x n, K_i(0) = U_- Gamma (X_- Gamma)^{-1}
  MatrixXd q;         // n x n weight
  MatrixXd p_mat;     // n x n Riccati solution from data
  MatrixXd g;         // T x n, minimum-norm solution of [K; 0] = [U_-; X_-] G
  MatrixXd u_factor;  // Gamma (X_- Gamma)^{-1}
  MatrixXd x_plus_g;  // X_+ G
  MatrixXd w;         // X_+ U - X_+ G
};

struct InitialGain {
  MatrixXd gamma;
  MatrixXd k0;
  sdp::Solution solution;
};

/// SDP in Gamma: min tr(Q X_- Gamma) with the closed loop certified by a
/// Lyapunov block. Gamma is a general T x n unknown and symmetry of X_- Gamma
/// is imposed as an equality.
sdp::Problem initial_gain_problem(const DataRecord& rec, const MatrixXd& q);

/// Throws kInfeasible when the data fail the rank condition or the SDP has
/// no solution, kNumericalFailure when the solver stalls.
InitialGain initial_gain(const DataRecord& rec, const MatrixXd& q,
                         const sdp::Settings& settings = {});

/// max tr(P) s.t. P >= 0, M' P M - P + Q >= 0 with M = X_+ Gamma (X_- Gamma)^{-1}.
sdp::Problem riccati_problem(const DataRecord& rec, const MatrixXd& gamma,
                             const MatrixXd& q);
MatrixXd riccati_from_data(const DataRecord& rec, const MatrixXd& gamma,
                           const MatrixXd& q, const sdp::Settings& settings = {});

/// Residual of P = A'PA - A'PB (B'PB)^{-1} B'PA + Q against a known plant
/// (Frobenius norm).
double are_residual(const Plant& plant, const MatrixXd& p, const MatrixXd& q);

struct MareGain {
  MatrixXd lambda_mat;
  MatrixXd r_tilde;
  MatrixXd q_tilde;
  double delta = 0.0;
  MatrixXd o_gain;  // -(Lambda + R)^{-1} Lambda
  int iterations = 0;
  double residual = 0.0;
  bool degenerate = false;  // single follower: no neighbours to agree with
};

/// Fixed-point iteration L <- L - (1 - delta^2) L (L + R)^{-1} L + Q from
/// L = Q. Throws kNoConvergence after `max_iterations`.
MareGain solve_mare(const MatrixXd& r_tilde, const MatrixXd& q_tilde,
                    double delta, double tol = 1e-10,
                    int max_iterations = 100000);

/// Checks mu < delta < 1 (delta defaults to (mu + 1) / 2) and solves the
/// MARE. Throws kSubdominantModulusNotLessThanOne when mu >= 1 and
/// kInvalidArgument when delta <= mu.
MareGain gain_consensus_matrix(const RowStochasticDff& dff,
                               const MatrixXd& r_tilde, const MatrixXd& q_tilde,
                               std::optional<double> delta = std::nullopt);

/// Minimum-norm G with [k0; 0] = [U_-; X_-] G. Throws kRankDeficient.
MatrixXd solve_g(const DataRecord& rec, const MatrixXd& k0);

/// Runs the initial gain, Riccati and G steps for one agent.
NoiselessSynthesis synthesize_agent(const DataRecord& rec, const MatrixXd& q,
                                    const sdp::Settings& settings = {});

struct ConsensusRegion {
  enum class Kind { kInvertibleB, kGeneralB };
  Kind kind = Kind::kInvertibleB;
  double bound = 0.0;  // |eta - 1|^2 < bound
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  MatrixXd r_mat;
  MatrixXd f_mat;
  MatrixXd p_sum;

  bool contains(std::complex<double> eta) const;
};

/// Throws kFNotPositiveDefinite when the aggregate F is not positive definite
/// and kInvalidArgument for an empty or inconsistent agent list.
ConsensusRegion consensus_region(const std::vector<NoiselessSynthesis>& agents,
                                 bool invertible_b);

bool verify_region(const WeightedGraphMatrix& wgm, const ConsensusRegion& region);

}  // namespace ddc
