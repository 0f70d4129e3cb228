#pragma once

#include <filesystem>
#include <optional>

#include <Eigen/Dense>

#include "ddc/rng.hpp"

namespace ddc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Ground-truth agent dynamics x(t+1) = a x(t) + b u(t). Synthesis code never
/// reads these matrices; only data generation and harness checks do.
struct Plant {
  MatrixXd a;
  MatrixXd b;

  int n() const { return static_cast<int>(a.rows()); }
  int p() const { return static_cast<int>(b.cols()); }
};

/// Rank test on [B, AB, ..., A^{n-1}B].
bool is_controllable(const Plant& plant, double rel_tol = 1e-9);

/// One agent's sampled trajectory.
struct DataRecord {
  MatrixXd u_minus;  // p x T
  MatrixXd x;        // n x (T+1)
  MatrixXd x_minus;  // n x T
  MatrixXd x_plus;   // n x T
  std::optional<MatrixXd> d;  // true process noise, harness-only

  int horizon() const { return static_cast<int>(u_minus.cols()); }
  int n() const { return static_cast<int>(x.rows()); }
  int p() const { return static_cast<int>(u_minus.rows()); }

  /// Builds the record from inputs and a state sequence with one more column.
  static DataRecord from_sequences(MatrixXd u_minus, MatrixXd x,
                                   std::optional<MatrixXd> d = std::nullopt);
};

/// Quadratic noise prior [I D] N [I D]^T >= 0 with N11 > 0, N22 < 0.
struct NoiseBound {
  MatrixXd n11;  // n x n
  MatrixXd n12;  // n x T
  MatrixXd n22;  // T x T

  MatrixXd n21() const { return n12.transpose(); }
  int n() const { return static_cast<int>(n11.rows()); }
  int horizon() const { return static_cast<int>(n22.rows()); }

  /// Throws kInvalidArgument unless the block shapes and sign conditions hold.
  void validate() const;

  /// N11 = scale * I_n, N12 = 0, N22 = -I_T.
  static NoiseBound energy(int n, int horizon, double scale);
};

struct InputPolicy {
  enum class Kind { kUniform, kZero, kExplicit };
  Kind kind = Kind::kUniform;
  double amplitude = 1.0;  // uniform on [-amplitude, amplitude] per channel
  MatrixXd values;         // p x T when kExplicit
};

struct NoisePolicy {
  enum class Kind { kNone, kGaussianBounded };
  Kind kind = Kind::kNone;
  std::optional<NoiseBound> bound;
};

/// Open-loop experiment of length `horizon`. When `x0` is empty the initial
/// state is drawn uniformly from [-1, 1]^n. Gaussian noise is rescaled as a
/// whole block, only if needed, so that it satisfies the bound.
DataRecord collect_data(const Plant& plant, int horizon,
                        const InputPolicy& input, const NoisePolicy& noise,
                        Rng& rng, const std::optional<VectorXd>& x0 = {});

/// Full row rank of [U_-; X_-] with singular values relative to the largest.
bool check_rank(const DataRecord& rec, double rel_tol = 1e-8);

/// N11 + N12 D^T + D N21 + D N22 D^T >= -tol I.
bool check_noise_bound(const MatrixXd& d, const NoiseBound& bound,
                       double tol = 1e-9);

/// Value of the quadratic form N11 + N12 D^T + D N21 + D N22 D^T.
MatrixXd noise_bound_form(const MatrixXd& d, const NoiseBound& bound);

/// Largest s in [0, 1] such that s * d satisfies the bound.
double admissible_noise_scale(const MatrixXd& d, const NoiseBound& bound);

/// CSV persistence: u_minus.csv, x.csv and (if present) d.csv inside `dir`.
void save_data_record(const std::filesystem::path& dir, const DataRecord& rec);
DataRecord load_data_record(const std::filesystem::path& dir);

}  // namespace ddc
