#pragma once

#include <optional>

#include <Eigen/Dense>

#include "ddc/plant.hpp"
#include "ddc/rng.hpp"
#include "ddc/sdp.hpp"

namespace ddc {

struct SpectrumGains {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double alpha = 0.0;  // 2 / (l1 + lN)
  double nu = 0.0;     // (lN - l1) / (lN + l1)
};

/// L_ff must be symmetric with a positive spectrum; throws
/// kNonPositiveSpectrum otherwise (kInvalidArgument when asymmetric).
SpectrumGains spectrum_gains(const MatrixXd& l_ff);

struct NoisySynthesis {
  MatrixXd phi;  // n x n
  MatrixXd f;    // p x n
  double eps = 0.0;
  double gamma_scalar = 0.0;
  double tau = 0.0;
  double nu = 0.0;
  double alpha = 0.0;
  MatrixXd k0;   // F Phi^{-1}
  double lmi_min_eig = 0.0;
  sdp::Solution solution;
};

struct NoisyOptions {
  double margin = 1e-6;  // strictness margin on the block LMI
};

/// The block LMI in (Phi, F, eps, gamma, tau) for one agent, with
/// objective max gamma and the normalization Phi <= I.
sdp::Problem informative_gain_problem(const DataRecord& rec,
                                      const NoiseBound& bound, double nu,
                                      const NoisyOptions& opts = {});

/// Throws kInfeasible when the data are not informative under the bound and
/// kNumericalFailure when the solver fails. `alpha` is copied into the result.
NoisySynthesis informative_gain(const DataRecord& rec, const NoiseBound& bound,
                                double nu, double alpha = 1.0,
                                const NoisyOptions& opts = {},
                                const sdp::Settings& settings = {});

/// Draws a system (A', B') consistent with the data under the bound:
/// [B' A'] = [B A] + s * Delta with Delta Gaussian and s uniform within the
/// admissible range, so that X+ - A' X- - B' U- satisfies the bound. Needs the
/// true plant and noise (harness only).
Plant sample_consistent_system(const Plant& plant, const DataRecord& rec,
                               const NoiseBound& bound, Rng& rng);

}  // namespace ddc
