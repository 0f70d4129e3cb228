#include "ddc/plant.hpp"

#include <cmath>

#include "ddc/csv.hpp"
#include "ddc/error.hpp"
#include "ddc/linalg.hpp"

namespace ddc {

bool is_controllable(const Plant& plant, double rel_tol) {
  const int n = plant.n();
  MatrixXd ctrb(n, n * plant.p());
  MatrixXd block = plant.b;
  for (int k = 0; k < n; ++k) {
    ctrb.middleCols(k * plant.p(), plant.p()) = block;
    block = plant.a * block;
  }
  return numerical_rank(ctrb, rel_tol) == n;
}

DataRecord DataRecord::from_sequences(MatrixXd u_minus, MatrixXd x,
                                      std::optional<MatrixXd> d) {
  if (x.cols() != u_minus.cols() + 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                "state sequence must have one more column than inputs");
  }
  DataRecord rec;
  const Eigen::Index t = u_minus.cols();
  rec.x_minus = x.leftCols(t);
  rec.x_plus = x.rightCols(t);
  rec.u_minus = std::move(u_minus);
  rec.x = std::move(x);
  rec.d = std::move(d);
  return rec;
}

void NoiseBound::validate() const {
  const Eigen::Index n = n11.rows(), t = n22.rows();
  if (n11.cols() != n || n22.cols() != t || n12.rows() != n ||
      n12.cols() != t) {
    throw Error(ErrorCode::kInvalidArgument, "noise bound block shapes differ");
  }
  if ((n11 - n11.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      (n22 - n22.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "N11 and N22 must be symmetric");
  }
  if (min_eig_sym(n11) <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "N11 must be positive definite");
  }
  if (min_eig_sym(-n22) <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "N22 must be negative definite");
  }
}

NoiseBound NoiseBound::energy(int n, int horizon, double scale) {
  return NoiseBound{scale * MatrixXd::Identity(n, n),
                    MatrixXd::Zero(n, horizon),
                    -MatrixXd::Identity(horizon, horizon)};
}

MatrixXd noise_bound_form(const MatrixXd& d, const NoiseBound& bound) {
  if (d.rows() != bound.n11.rows() || d.cols() != bound.n22.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "noise matrix is " + std::to_string(d.rows()) + "x" +
                    std::to_string(d.cols()) + " but bound expects " +
                    std::to_string(bound.n11.rows()) + "x" +
                    std::to_string(bound.n22.rows()));
  }
  const MatrixXd cross = bound.n12 * d.transpose();
  return bound.n11 + cross + cross.transpose() +
         d * bound.n22 * d.transpose();
}

bool check_noise_bound(const MatrixXd& d, const NoiseBound& bound,
                       double tol) {
  return min_eig_sym(noise_bound_form(d, bound)) >= -tol;
}

double admissible_noise_scale(const MatrixXd& d, const NoiseBound& bound) {
  if (check_noise_bound(d, bound, 0.0)) return 1.0;
  // s = 0 gives N11 > 0; the admissible set in s is an interval around 0.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (check_noise_bound(mid * d, bound, 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

DataRecord collect_data(const Plant& plant, int horizon,
                        const InputPolicy& input, const NoisePolicy& noise,
                        Rng& rng, const std::optional<VectorXd>& x0) {
  const int n = plant.n(), p = plant.p();
  if (horizon < n + p) {
    throw Error(ErrorCode::kHorizonTooShort,
                "T = " + std::to_string(horizon) + " < n + p = " +
                    std::to_string(n + p));
  }
  if (plant.b.rows() != n || plant.a.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "plant matrices disagree");
  }

  VectorXd x = VectorXd::Zero(n);
  if (x0) {
    if (x0->size() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "initial state size");
    }
    x = *x0;
  } else {
    for (int k = 0; k < n; ++k) x(k) = rng.uniform(-1.0, 1.0);
  }

  MatrixXd u = MatrixXd::Zero(p, horizon);
  switch (input.kind) {
    case InputPolicy::Kind::kUniform:
      for (int t = 0; t < horizon; ++t) {
        for (int k = 0; k < p; ++k) {
          u(k, t) = rng.uniform(-input.amplitude, input.amplitude);
        }
      }
      break;
    case InputPolicy::Kind::kZero:
      break;
    case InputPolicy::Kind::kExplicit:
      if (input.values.rows() != p || input.values.cols() != horizon) {
        throw Error(ErrorCode::kDimensionMismatch, "explicit input shape");
      }
      u = input.values;
      break;
  }

  std::optional<MatrixXd> d;
  if (noise.kind == NoisePolicy::Kind::kGaussianBounded) {
    if (!noise.bound) {
      throw Error(ErrorCode::kInvalidArgument, "noisy data needs a bound");
    }
    noise.bound->validate();
    MatrixXd draw(n, horizon);
    for (int t = 0; t < horizon; ++t) {
      for (int k = 0; k < n; ++k) draw(k, t) = rng.normal();
    }
    draw *= admissible_noise_scale(draw, *noise.bound);
    d = std::move(draw);
  }

  MatrixXd xs(n, horizon + 1);
  xs.col(0) = x;
  for (int t = 0; t < horizon; ++t) {
    VectorXd next = plant.a * xs.col(t) + plant.b * u.col(t);
    if (d) next += d->col(t);
    xs.col(t + 1) = next;
  }
  return DataRecord::from_sequences(std::move(u), std::move(xs), std::move(d));
}

bool check_rank(const DataRecord& rec, double rel_tol) {
  const int rows = rec.p() + rec.n();
  if (rec.horizon() < rows) return false;
  MatrixXd stacked(rows, rec.horizon());
  stacked << rec.u_minus, rec.x_minus;
  return numerical_rank(stacked, rel_tol) == rows;
}

void save_data_record(const std::filesystem::path& dir, const DataRecord& rec) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "u_minus.csv", rec.u_minus);
  write_matrix_csv(dir / "x.csv", rec.x);
  if (rec.d) write_matrix_csv(dir / "d.csv", *rec.d);
}

DataRecord load_data_record(const std::filesystem::path& dir) {
  std::optional<MatrixXd> d;
  if (std::filesystem::exists(dir / "d.csv")) d = read_matrix_csv(dir / "d.csv");
  return DataRecord::from_sequences(read_matrix_csv(dir / "u_minus.csv"),
                                    read_matrix_csv(dir / "x.csv"),
                                    std::move(d));
}

}  // namespace ddc
