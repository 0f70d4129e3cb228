#include "ddc/sim.hpp"

#include <cmath>
#include <fstream>

#include "ddc/csv.hpp"
#include "ddc/error.hpp"
#include "ddc/linalg.hpp"

namespace ddc {

namespace {

void check_inputs(const Plant& plant, const NetworkGraph& graph,
                  const MatrixXd& x0s, int horizon) {
  const int n = plant.n();
  if (plant.a.cols() != n || plant.b.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "plant matrices disagree");
  }
  if (x0s.rows() != n || x0s.cols() != graph.followers() + 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                "initial states must be n x (N+1)");
  }
  if (horizon < 0) {
    throw Error(ErrorCode::kInvalidArgument, "horizon must be nonnegative");
  }
}

void check_gains(const std::vector<MatrixXd>& gains, std::size_t count,
                 const Plant& plant) {
  if (gains.size() != count) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected " + std::to_string(count) + " gains, got " +
                    std::to_string(gains.size()));
  }
  for (const auto& k : gains) {
    if (k.rows() != plant.p() || k.cols() != plant.n()) {
      throw Error(ErrorCode::kDimensionMismatch, "gains must be p x n");
    }
  }
}

double consensus_error(const MatrixXd& x) {
  double e = 0.0;
  for (Eigen::Index i = 1; i < x.cols(); ++i) {
    e = std::max(e, (x.col(i) - x.col(0)).norm());
  }
  return e;
}

double disagreement(const std::vector<MatrixXd>& k, const MatrixXd& target) {
  double e = 0.0;
  for (const auto& ki : k) e = std::max(e, (ki - target).norm());
  return e;
}

// sum_j weight(i, j) (x_i - x_j) for follower i.
template <typename W>
VectorXd local_error(const MatrixXd& x, int i, W weight) {
  VectorXd s = VectorXd::Zero(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double w = weight(i, static_cast<int>(j));
    if (w != 0.0) s += w * (x.col(i) - x.col(j));
  }
  return s;
}

// Column by column so that agents in identical states stay bit-identical.
void step(const Plant& plant, MatrixXd& x, const MatrixXd& u) {
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const VectorXd next = plant.a * x.col(i) + plant.b * u.col(i);
    x.col(i) = next;
  }
}

void record(Trace& tr, const MatrixXd& x, const std::vector<MatrixXd>& k) {
  tr.states.push_back(x);
  tr.gains.push_back(k);
  tr.consensus_error.push_back(consensus_error(x));
  tr.gain_disagreement.push_back(disagreement(k, tr.target_gain));
}

}  // namespace

Trace run_noiseless_protocol(const Plant& plant, const NetworkGraph& graph,
                             const std::vector<MatrixXd>& follower_gains,
                             const MatrixXd& o_gain, const MatrixXd& x0s,
                             int horizon) {
  check_inputs(plant, graph, x0s, horizon);
  const int nf = graph.followers();
  check_gains(follower_gains, nf, plant);
  if (o_gain.rows() != plant.p() || o_gain.cols() != plant.p()) {
    throw Error(ErrorCode::kDimensionMismatch, "O must be p x p");
  }
  const MatrixXd& a = graph.adjacency;
  Trace tr;
  tr.target_gain = MatrixXd::Zero(plant.p(), plant.n());
  for (const auto& k : follower_gains) tr.target_gain += k;
  tr.target_gain /= nf;

  MatrixXd x = x0s;
  std::vector<MatrixXd> k = follower_gains;
  record(tr, x, k);
  for (int t = 0; t < horizon; ++t) {
    MatrixXd u = MatrixXd::Zero(plant.p(), nf + 1);
    for (int i = 1; i <= nf; ++i) {
      const double scale = 1.0 / (1.0 + graph.degrees(i));
      u.col(i) = k[i - 1] * local_error(x, i, [&](int r, int c) {
                   return a(r, c) * scale;
                 });
    }
    std::vector<MatrixXd> next_k = k;
    for (int i = 1; i <= nf; ++i) {
      MatrixXd acc = MatrixXd::Zero(plant.p(), plant.n());
      for (int j = 1; j <= nf; ++j) {
        if (a(i, j) != 0.0) acc += a(i, j) / (1.0 + graph.z) * (k[i - 1] - k[j - 1]);
      }
      next_k[i - 1] = k[i - 1] + o_gain * acc;
    }
    step(plant, x, u);
    k = std::move(next_k);
    tr.inputs.push_back(std::move(u));
    record(tr, x, k);
  }
  return tr;
}

Trace run_noisy_protocol(const Plant& plant, const NetworkGraph& graph,
                         const std::vector<MatrixXd>& gains, double alpha,
                         const MatrixXd& x0s, int horizon) {
  check_inputs(plant, graph, x0s, horizon);
  const int nf = graph.followers();
  check_gains(gains, nf + 1, plant);
  const MatrixXd& a = graph.adjacency;
  Trace tr;
  tr.target_gain = gains[0];

  MatrixXd x = x0s;
  std::vector<MatrixXd> k(gains.begin() + 1, gains.end());
  record(tr, x, k);
  auto gain_of = [&](int j) -> const MatrixXd& {
    return j == 0 ? gains[0] : k[j - 1];
  };
  for (int t = 0; t < horizon; ++t) {
    MatrixXd u = MatrixXd::Zero(plant.p(), nf + 1);
    for (int i = 1; i <= nf; ++i) {
      u.col(i) = alpha * k[i - 1] *
                 local_error(x, i, [&](int r, int c) { return a(r, c); });
    }
    std::vector<MatrixXd> next_k = k;
    for (int i = 1; i <= nf; ++i) {
      const double scale = 1.0 / (1.0 + graph.degrees(i));
      for (int j = 0; j <= nf; ++j) {
        if (a(i, j) != 0.0) {
          next_k[i - 1] += a(i, j) * scale * (gain_of(j) - k[i - 1]);
        }
      }
    }
    step(plant, x, u);
    k = std::move(next_k);
    tr.inputs.push_back(std::move(u));
    record(tr, x, k);
  }
  return tr;
}

Trace run_leader_protocol(const Plant& plant, const NetworkGraph& graph,
                          const std::vector<MatrixXd>& gains,
                          const std::vector<double>& couplings,
                          const MatrixXd& x0s, int horizon) {
  check_inputs(plant, graph, x0s, horizon);
  const int nf = graph.followers();
  check_gains(gains, nf + 1, plant);
  if (couplings.size() != static_cast<std::size_t>(nf + 1)) {
    throw Error(ErrorCode::kDimensionMismatch, "expected N+1 couplings");
  }
  const MatrixXd& a = graph.adjacency;
  Trace tr;
  tr.target_gain = gains[0];

  MatrixXd x = x0s;
  std::vector<MatrixXd> k(gains.begin() + 1, gains.end());
  VectorXd c(nf);
  for (int i = 0; i < nf; ++i) c(i) = couplings[i + 1];
  const double c0 = couplings[0];
  record(tr, x, k);
  tr.couplings.push_back(c);
  for (int t = 0; t < horizon; ++t) {
    MatrixXd u = MatrixXd::Zero(plant.p(), nf + 1);
    for (int i = 1; i <= nf; ++i) {
      const double scale = 1.0 / (1.0 + graph.degrees(i));
      u.col(i) = c(i - 1) * k[i - 1] * local_error(x, i, [&](int r, int cc) {
                   return a(r, cc) * scale;
                 });
    }
    std::vector<MatrixXd> next_k = k;
    VectorXd next_c = c;
    for (int i = 1; i <= nf; ++i) {
      const double scale = 1.0 / (1.0 + graph.degrees(i));
      for (int j = 0; j <= nf; ++j) {
        if (a(i, j) == 0.0) continue;
        const double w = a(i, j) * scale;
        const MatrixXd& kj = j == 0 ? gains[0] : k[j - 1];
        const double cj = j == 0 ? c0 : c(j - 1);
        next_k[i - 1] += w * (kj - k[i - 1]);
        next_c(i - 1) += w * (cj - c(i - 1));
      }
    }
    step(plant, x, u);
    k = std::move(next_k);
    c = next_c;
    tr.inputs.push_back(std::move(u));
    record(tr, x, k);
    tr.couplings.push_back(c);
  }
  return tr;
}

SchurCheck lyapunov_certificate(const MatrixXd& f) {
  if (f.rows() != f.cols()) {
    throw Error(ErrorCode::kNonSquare, "is_schur needs a square matrix");
  }
  SchurCheck out;
  const Eigen::Index n = f.rows();
  if (n == 0) {
    out.schur = true;
    return out;
  }
  const MatrixXd ft = f.transpose();
  const MatrixXd op = kron(ft, ft) - MatrixXd::Identity(n * n, n * n);
  const MatrixXd eye = MatrixXd::Identity(n, n);
  const VectorXd rhs = -Eigen::Map<const VectorXd>(eye.data(), n * n);
  Eigen::FullPivLU<MatrixXd> lu(op);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) {
    out.singular = true;
    out.diagnostic = "Lyapunov operator is singular: F has a reciprocal "
                     "eigenvalue pair on the unit circle";
    return out;
  }
  const VectorXd vp = lu.solve(rhs);
  if (!vp.allFinite() || (op * vp - rhs).norm() > 1e-8 * (1.0 + vp.norm())) {
    out.singular = true;
    out.diagnostic = "Lyapunov solve is ill-conditioned";
    return out;
  }
  const MatrixXd p = symmetrize(Eigen::Map<const MatrixXd>(vp.data(), n, n));
  out.p_min_eig = min_eig_sym(p);
  Eigen::LLT<MatrixXd> llt(p);
  out.schur = llt.info() == Eigen::Success && out.p_min_eig > 0.0;
  if (!out.schur) out.diagnostic = "Lyapunov solution is not positive definite";
  return out;
}

bool is_schur(const MatrixXd& f) { return lyapunov_certificate(f).schur; }

std::vector<MatrixXd> modal_matrices(const Plant& plant,
                                     const Eigen::VectorXcd& spectrum,
                                     const MatrixXd& k0, double scale) {
  const MatrixXd bk = plant.b * k0;
  std::vector<MatrixXd> out;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const std::complex<double> lam = scale * spectrum(i);
    if (std::abs(lam.imag()) <= 1e-14 * std::max(1.0, std::abs(lam))) {
      out.push_back(plant.a + lam.real() * bk);
    } else {
      const Eigen::MatrixXcd m =
          plant.a.cast<std::complex<double>>() + lam * bk.cast<std::complex<double>>();
      out.push_back(real_embedding(m));
    }
  }
  return out;
}

bool certify_network(const Plant& plant, const Eigen::VectorXcd& spectrum,
                     const MatrixXd& k0, double scale) {
  for (const auto& m : modal_matrices(plant, spectrum, k0, scale)) {
    if (!is_schur(m)) return false;
  }
  return true;
}

namespace {

void write_series(const std::filesystem::path& path, int columns,
                  const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "series";
  for (int t = 0; t < columns; ++t) out << ",t" << t;
  out << '\n';
  for (const auto& [name, values] : rows) {
    out << name;
    for (double v : values) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace

std::vector<std::string> export_trace(const Trace& tr,
                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  const int steps = static_cast<int>(tr.states.size());
  const int agents = tr.agents();
  const int n = steps > 0 ? static_cast<int>(tr.states.front().rows()) : 0;

  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (int i = 0; i < agents; ++i) {
    for (int c = 0; c < n; ++c) {
      std::vector<double> v;
      for (const auto& x : tr.states) v.push_back(x(c, i));
      rows.emplace_back("x" + std::to_string(i) + "_" + std::to_string(c), v);
    }
  }
  write_series(dir / "trace_states.csv", steps, rows);
  files.push_back("trace_states.csv");

  rows.clear();
  const int p = tr.inputs.empty() ? 0 : static_cast<int>(tr.inputs.front().rows());
  for (int i = 0; i < agents; ++i) {
    for (int c = 0; c < p; ++c) {
      std::vector<double> v;
      for (const auto& u : tr.inputs) v.push_back(u(c, i));
      rows.emplace_back("u" + std::to_string(i) + "_" + std::to_string(c), v);
    }
  }
  write_series(dir / "trace_inputs.csv", tr.horizon(), rows);
  files.push_back("trace_inputs.csv");

  rows.clear();
  if (!tr.gains.empty()) {
    const auto& k0 = tr.gains.front();
    for (std::size_t i = 0; i < k0.size(); ++i) {
      for (Eigen::Index r = 0; r < k0[i].rows(); ++r) {
        for (Eigen::Index c = 0; c < k0[i].cols(); ++c) {
          std::vector<double> v;
          for (const auto& kt : tr.gains) v.push_back(kt[i](r, c));
          rows.emplace_back("K" + std::to_string(i + 1) + "_" +
                                std::to_string(r) + std::to_string(c),
                            v);
        }
      }
    }
  }
  write_series(dir / "trace_gains.csv", steps, rows);
  files.push_back("trace_gains.csv");

  rows.clear();
  rows.emplace_back("consensus_error", tr.consensus_error);
  rows.emplace_back("gain_disagreement", tr.gain_disagreement);
  write_series(dir / "trace_errors.csv", steps, rows);
  files.push_back("trace_errors.csv");

  if (!tr.couplings.empty()) {
    rows.clear();
    for (Eigen::Index i = 0; i < tr.couplings.front().size(); ++i) {
      std::vector<double> v;
      for (const auto& c : tr.couplings) v.push_back(c(i));
      rows.emplace_back("c" + std::to_string(i + 1), v);
    }
    write_series(dir / "trace_couplings.csv", steps, rows);
    files.push_back("trace_couplings.csv");
  }
  return files;
}

std::vector<std::string> emit_plot_data(const Trace& tr,
                                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  const int agents = tr.agents();
  const int n = tr.states.empty() ? 0 : static_cast<int>(tr.states.front().rows());
  for (int c = 0; c < n; ++c) {
    const std::string name = "traj_axis" + std::to_string(c) + ".csv";
    std::ofstream out(dir / name);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
    out << 't';
    for (int i = 0; i < agents; ++i) out << ",agent_" << i;
    out << '\n';
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
      out << t;
      for (int i = 0; i < agents; ++i) out << ',' << format_double(tr.states[t](c, i));
      out << '\n';
    }
    files.push_back(name);
  }
  {
    std::ofstream out(dir / "consensus_error.csv");
    if (!out) throw Error(ErrorCode::kIo, "cannot write consensus_error.csv");
    out << "t,consensus_error,gain_disagreement\n";
    for (std::size_t t = 0; t < tr.consensus_error.size(); ++t) {
      out << t << ',' << format_double(tr.consensus_error[t]) << ','
          << format_double(tr.gain_disagreement[t]) << '\n';
    }
    files.push_back("consensus_error.csv");
  }
  {
    std::ofstream out(dir / "plot.py");
    if (!out) throw Error(ErrorCode::kIo, "cannot write plot.py");
    out << R"(# Plots the CSV files in this directory (needs pandas + matplotlib).
import glob
import os

import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
for path in sorted(glob.glob(os.path.join(here, "traj_axis*.csv"))):
    df = pd.read_csv(path)
    ax = df.plot(x="t", legend=True)
    ax.set_xlabel("t")
    ax.set_ylabel(os.path.basename(path)[:-4])
    ax.figure.savefig(path[:-4] + ".png", dpi=120)

err = pd.read_csv(os.path.join(here, "consensus_error.csv"))
ax = err.plot(x="t", logy=True)
ax.set_xlabel("t")
ax.figure.savefig(os.path.join(here, "consensus_error.png"), dpi=120)
)";
    files.push_back("plot.py");
  }
  return files;
}

LogLinearFit fit_log_linear(const std::vector<double>& series, int first,
                            int last) {
  LogLinearFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int t = std::max(0, first);
       t <= last && t < static_cast<int>(series.size()); ++t) {
    if (!(series[t] > 0.0)) continue;
    const double y = std::log(series[t]);
    sx += t;
    sy += y;
    sxx += double(t) * t;
    sxy += t * y;
    syy += y * y;
    ++fit.points;
  }
  if (fit.points < 2) return fit;
  const double m = fit.points;
  const double vx = sxx - sx * sx / m, vy = syy - sy * sy / m,
               cxy = sxy - sx * sy / m;
  fit.slope = cxy / vx;
  fit.intercept = (sy - fit.slope * sx) / m;
  fit.r_squared = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  return fit;
}

}  // namespace ddc
