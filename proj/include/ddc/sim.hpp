#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddc/netgraph.hpp"
#include "ddc/plant.hpp"
#include "ddc/synth_noiseless.hpp"

namespace ddc {

/// Closed-loop run. Index 0 is the leader throughout; gain and coupling
/// tables hold followers only (entry i-1 is follower i).
struct Trace {
  std::vector<MatrixXd> states;               // horizon+1 entries, n x (N+1)
  std::vector<MatrixXd> inputs;               // horizon entries, p x (N+1)
  std::vector<std::vector<MatrixXd>> gains;   // horizon+1 entries of N gains
  std::vector<VectorXd> couplings;            // leader-only protocol
  std::vector<double> consensus_error;        // max_i ||x_i - x_0||_2
  std::vector<double> gain_disagreement;      // max_i ||K_i - target||_F
  MatrixXd target_gain;

  int horizon() const { return static_cast<int>(inputs.size()); }
  int agents() const {
    return states.empty() ? 0 : static_cast<int>(states.front().cols());
  }
};

/// u_i = K_i sum_j a_ij/(1+d_i) (x_i - x_j) and
/// K_i <- K_i + O sum_{j>=1} a_ij/(1+z) (K_i - K_j). The leader term enters
/// the state feedback but not the gain update. Target gain is the mean of
/// the initial follower gains.
Trace run_noiseless_protocol(const Plant& plant, const NetworkGraph& graph,
                             const std::vector<MatrixXd>& follower_gains,
                             const MatrixXd& o_gain, const MatrixXd& x0s,
                             int horizon);

/// u_i = alpha K_i sum_j a_ij (x_i - x_j) and K_i <- K_i + sum_j w_ij (K_j - K_i)
/// with w_ij = a_ij/(1+d_i). `gains` has N+1 entries; entry 0 is the
/// leader's gain, which stays fixed and is the target.
Trace run_noisy_protocol(const Plant& plant, const NetworkGraph& graph,
                         const std::vector<MatrixXd>& gains, double alpha,
                         const MatrixXd& x0s, int horizon);

/// u_i = c_i K_i sum_j w_ij (x_i - x_j); K and c are averaged with w_ij.
/// Entry 0 of `gains` and `couplings` is the leader's (K0, c0).
Trace run_leader_protocol(const Plant& plant, const NetworkGraph& graph,
                          const std::vector<MatrixXd>& gains,
                          const std::vector<double>& couplings,
                          const MatrixXd& x0s, int horizon);

struct SchurCheck {
  bool schur = false;
  bool singular = false;    // Lyapunov operator singular (unit-circle pair)
  double p_min_eig = 0.0;   // smallest eigenvalue of the solution P
  std::string diagnostic;
};

/// Solves F' P F - P = -I through the vectorized linear system and tests P
/// for positive definiteness.
SchurCheck lyapunov_certificate(const MatrixXd& f);
bool is_schur(const MatrixXd& f);

/// Modal closed-loop matrices A + scale * lambda_k * B * K. Complex modes
/// use the real embedding.
std::vector<MatrixXd> modal_matrices(const Plant& plant,
                                     const Eigen::VectorXcd& spectrum,
                                     const MatrixXd& k0, double scale);

/// True iff every modal matrix is Schur.
bool certify_network(const Plant& plant, const Eigen::VectorXcd& spectrum,
                     const MatrixXd& k0, double scale);

/// Writes trace_states.csv, trace_inputs.csv, trace_gains.csv,
/// trace_errors.csv and (when present) trace_couplings.csv. Each row is one
/// series named in the first column; column t+1 is time step t. Returns the
/// written file names.
std::vector<std::string> export_trace(const Trace& trace,
                                      const std::filesystem::path& dir);

/// Plot data: traj_axis{k}.csv per state component (rows are time
/// steps, columns t, agent_0..agent_N), consensus_error.csv and plot.py.
std::vector<std::string> emit_plot_data(const Trace& trace,
                                        const std::filesystem::path& dir);

struct LogLinearFit {
  double slope = 0.0;      // per step, natural log
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

/// Least-squares fit of log(series[t]) on t over [first, last]; nonpositive
/// samples are skipped.
LogLinearFit fit_log_linear(const std::vector<double>& series, int first,
                            int last);

}  // namespace ddc
