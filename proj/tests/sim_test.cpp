#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "ddc/error.hpp"
#include "ddc/fixtures.hpp"
#include "ddc/sim.hpp"

namespace ddc {
namespace {

// Oracle: Gelfand formula with normalised repeated squaring.
double GelfandRadius(const MatrixXd& f) {
  MatrixXd m = f;
  double log_scale = 0.0;
  double power = 1.0;
  for (int k = 0; k < 60; ++k) {
    const double s = m.norm();
    if (s == 0.0) return 0.0;
    m /= s;
    log_scale += std::log(s) / power;
    m = m * m;
    power *= 2.0;
  }
  return std::exp(log_scale + std::log(std::max(m.norm(), 1e-300)) / power);
}

double SpectralRadius(const MatrixXd& m) {
  return Eigen::EigenSolver<MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

TEST(IsSchurTest, Examples) {
  EXPECT_TRUE(is_schur(MatrixXd::Zero(3, 3)));
  EXPECT_TRUE(is_schur(fixtures::sec6_plant().a));
  const SchurCheck id = lyapunov_certificate(MatrixXd::Identity(2, 2));
  EXPECT_FALSE(id.schur);
  EXPECT_TRUE(id.singular);
  EXPECT_FALSE(id.diagnostic.empty());
  EXPECT_FALSE(is_schur(1.01 * MatrixXd::Identity(2, 2)));
  EXPECT_THROW(is_schur(MatrixXd::Zero(2, 3)), Error);
}

TEST(IsSchurTest, AgreesWithGelfandOracle) {
  Rng rng(2024);
  int checked = 0;
  while (checked < 1000) {
    const int n = 2 + static_cast<int>(rng.next() % 5);
    MatrixXd f(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) f(i, j) = rng.normal();
    }
    f *= rng.uniform(0.3, 1.7) / std::sqrt(static_cast<double>(n));
    const double rho = GelfandRadius(f);
    if (std::abs(rho - 1.0) < 1e-6) continue;
    ++checked;
    EXPECT_EQ(is_schur(f), rho < 1.0) << "rho=" << rho << "\n" << f;
  }
}

TEST(IsSchurTest, GelfandOracleSanity) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    MatrixXd f(3, 3);
    for (int i = 0; i < 9; ++i) f(i) = rng.normal();
    EXPECT_NEAR(GelfandRadius(f), SpectralRadius(f), 1e-6 * SpectralRadius(f));
  }
}

TEST(CertifyNetworkTest, DeadbeatGain) {
  const Plant plant = fixtures::sec6_plant();
  const MatrixXd k = -plant.b.inverse() * plant.a;
  Eigen::VectorXcd spec(3);
  spec << 0.3, 1.0, 1.9;
  EXPECT_TRUE(certify_network(plant, spec, k, 1.0));
  Eigen::VectorXcd complex_spec(2);
  complex_spec << std::complex<double>(1.0, 0.5), std::complex<double>(1.0, -0.5);
  EXPECT_TRUE(certify_network(plant, complex_spec, k, 1.0));
  Eigen::VectorXcd far(1);
  far << 2.5;
  EXPECT_FALSE(certify_network(plant, far, k, 1.0));
}

TEST(CertifyNetworkTest, ZeroGain) {
  Plant stable = fixtures::sec6_plant();
  Eigen::VectorXcd spec(2);
  spec << 0.5, 1.2;
  EXPECT_TRUE(certify_network(stable, spec, MatrixXd::Zero(2, 2), 1.0));
  Plant unstable = stable;
  unstable.a *= 1.2;
  EXPECT_FALSE(certify_network(unstable, spec, MatrixXd::Zero(2, 2), 1.0));
}

TEST(CertifyNetworkTest, RealEmbeddingMatchesComplexRadius) {
  Rng rng(4);
  const Plant plant = fixtures::sec6_plant();
  for (int t = 0; t < 100; ++t) {
    MatrixXd k(2, 2);
    for (int i = 0; i < 4; ++i) k(i) = rng.uniform(-6, 6);
    Eigen::VectorXcd spec(1);
    spec << std::complex<double>(rng.uniform(0.1, 2.0), rng.uniform(-1, 1));
    const Eigen::MatrixXcd m = plant.a.cast<std::complex<double>>() +
                               spec(0) * (plant.b * k).cast<std::complex<double>>();
    const double rho = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(m)
                           .eigenvalues().cwiseAbs().maxCoeff();
    if (std::abs(rho - 1.0) < 1e-6) continue;
    EXPECT_EQ(certify_network(plant, spec, k, 1.0), rho < 1.0);
  }
}

class ProtocolTest : public ::testing::Test {
 protected:
  Plant plant = fixtures::sec6_plant();
  NetworkGraph graph = build_graph(fixtures::sec6_adjacency());
  MatrixXd k = -plant.b.inverse() * plant.a;
};

TEST_F(ProtocolTest, ConsensusIsInvariant) {
  MatrixXd x0s = MatrixXd::Zero(2, 6);
  for (int i = 0; i < 6; ++i) x0s.col(i) << 0.4, -0.2;
  const std::vector<MatrixXd> fk(5, k);
  const Trace a = run_noiseless_protocol(plant, graph, fk, -0.5 * MatrixXd::Identity(2, 2), x0s, 50);
  std::vector<MatrixXd> all(6, k);
  const Trace b = run_noisy_protocol(plant, graph, all, 0.13, x0s, 50);
  const Trace c = run_leader_protocol(plant, graph, all, std::vector<double>(6, 1.2), x0s, 50);
  for (const Trace* tr : {&a, &b, &c}) {
    for (double e : tr->consensus_error) EXPECT_EQ(e, 0.0);
    // The target is a mean, which need not round back to the shared gain.
    for (double e : tr->gain_disagreement) EXPECT_LE(e, 1e-14);
    for (const auto& u : tr->inputs) EXPECT_EQ(u.col(0).norm(), 0.0);
  }
}

TEST_F(ProtocolTest, StatesFollowPlant) {
  Rng rng(3);
  MatrixXd x0s(2, 6);
  for (int i = 0; i < 12; ++i) x0s(i) = rng.uniform(-1, 1);
  std::vector<MatrixXd> fk;
  for (int i = 0; i < 5; ++i) fk.push_back(k + 0.1 * i * MatrixXd::Ones(2, 2));
  const Trace tr = run_noiseless_protocol(plant, graph, fk, -0.3 * MatrixXd::Identity(2, 2), x0s, 40);
  ASSERT_EQ(tr.states.size(), 41u);
  ASSERT_EQ(tr.inputs.size(), 40u);
  for (int t = 0; t < 40; ++t) {
    const MatrixXd expect = plant.a * tr.states[t] + plant.b * tr.inputs[t];
    EXPECT_LT((tr.states[t + 1] - expect).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(tr.inputs[t].col(0).norm(), 0.0);
  }
}

TEST_F(ProtocolTest, NoiselessDeadbeatConverges) {
  Rng rng(5);
  MatrixXd x0s(2, 6);
  for (int i = 0; i < 12; ++i) x0s(i) = rng.uniform(-1, 1);
  std::vector<MatrixXd> fk;
  for (int i = 0; i < 5; ++i) fk.push_back(k + 0.05 * (i - 2) * MatrixXd::Identity(2, 2));
  const NetworkGraph g = graph;
  const MareGain o = gain_consensus_matrix(row_stochastic_dff(g),
                                           MatrixXd::Identity(2, 2),
                                           MatrixXd::Identity(2, 2));
  const Trace tr = run_noiseless_protocol(plant, g, fk, o.o_gain, x0s, 300);
  EXPECT_LT(tr.consensus_error.back(), 1e-3);
  EXPECT_LT(tr.gain_disagreement.back(), 1e-6);
}

TEST_F(ProtocolTest, FrozenGainsWhenOIsZero) {
  MatrixXd x0s = MatrixXd::Ones(2, 6);
  x0s.col(0).setZero();
  std::vector<MatrixXd> fk;
  for (int i = 0; i < 5; ++i) fk.push_back(k * (1.0 + 0.1 * i));
  const Trace tr = run_noiseless_protocol(plant, graph, fk, MatrixXd::Zero(2, 2), x0s, 20);
  for (const auto& kt : tr.gains) {
    for (int i = 0; i < 5; ++i) EXPECT_EQ(kt[i], fk[i]);
  }
}

TEST_F(ProtocolTest, NoisyGainsReachLeaderGain) {
  std::vector<MatrixXd> gains(6, MatrixXd::Zero(2, 2));
  gains[0] = MatrixXd::Constant(2, 2, 0.2);
  const Trace tr = run_noisy_protocol(plant, graph, gains, 0.0, MatrixXd::Zero(2, 6), 400);
  EXPECT_LT(tr.gain_disagreement.back(), 1e-10);
  EXPECT_EQ(tr.target_gain, gains[0]);
}

TEST(NoisyProtocolScalarTest, GeometricDecayRate) {
  // One follower with leader weight 2: closed loop a + alpha*2*b*k.
  Plant plant{MatrixXd::Constant(1, 1, 1.1), MatrixXd::Constant(1, 1, 1.0)};
  const NetworkGraph g = build_graph_from_edges(2, {{0, 1, 2.0}});
  const double alpha = 0.5, k = -0.8;
  const std::vector<MatrixXd> gains(2, MatrixXd::Constant(1, 1, k));
  MatrixXd x0s(1, 2);
  x0s << 0.0, 1.0;
  const Trace tr = run_noisy_protocol(plant, g, gains, alpha, x0s, 30);
  const double rate = std::abs(1.1 + alpha * 2.0 * k);
  const LogLinearFit fit = fit_log_linear(tr.consensus_error, 0, 30);
  EXPECT_NEAR(std::exp(fit.slope), rate, 1e-10);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST_F(ProtocolTest, LeaderCouplingsRiseToC0) {
  std::vector<MatrixXd> gains(6, MatrixXd::Zero(2, 2));
  gains[0] = k;
  std::vector<double> c(6, 0.0);
  c[0] = 1.2;
  const Trace tr = run_leader_protocol(plant, graph, gains, c, MatrixXd::Zero(2, 6), 300);
  for (std::size_t t = 1; t < tr.couplings.size(); ++t) {
    for (int i = 0; i < 5; ++i) {
      EXPECT_GE(tr.couplings[t](i), tr.couplings[t - 1](i) - 1e-15);
    }
  }
  EXPECT_NEAR(tr.couplings.back().maxCoeff(), 1.2, 1e-9);
  EXPECT_NEAR(tr.couplings.back().minCoeff(), 1.2, 1e-9);
}

TEST(LeaderProtocolTest, SingleFollowerOneStep) {
  Plant plant{MatrixXd::Constant(1, 1, 0.5), MatrixXd::Constant(1, 1, 1.0)};
  const NetworkGraph g = build_graph_from_edges(2, {{0, 1, 3.0}});
  std::vector<MatrixXd> gains = {MatrixXd::Constant(1, 1, -0.4), MatrixXd::Zero(1, 1)};
  const Trace tr = run_leader_protocol(plant, g, gains, {2.0, 0.0}, MatrixXd::Zero(1, 2), 1);
  // w_10 = 3 / (1 + 3).
  EXPECT_NEAR(tr.gains[1][0](0, 0), 0.75 * -0.4, 1e-15);
}

TEST_F(ProtocolTest, DimensionMismatch) {
  const std::vector<MatrixXd> fk(4, k);
  try {
    run_noiseless_protocol(plant, graph, fk, MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 6), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST_F(ProtocolTest, ExportShapes) {
  const std::vector<MatrixXd> fk(5, k);
  const Trace tr = run_noiseless_protocol(plant, graph, fk, MatrixXd::Zero(2, 2),
                                          MatrixXd::Ones(2, 6), 100);
  const auto dir = std::filesystem::temp_directory_path() / "ddc_sim_export";
  std::filesystem::remove_all(dir);
  const auto files = emit_plot_data(tr, dir);
  EXPECT_EQ(files.size(), 4u);
  std::ifstream in(dir / "traj_axis0.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,agent_0,agent_1,agent_2,agent_3,agent_4,agent_5");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 101);
  export_trace(tr, dir);
  std::ifstream st(dir / "trace_states.csv");
  int series = -1;
  while (std::getline(st, line)) ++series;
  EXPECT_EQ(series, 12);

  const Trace empty = run_noiseless_protocol(plant, graph, fk, MatrixXd::Zero(2, 2),
                                             MatrixXd::Ones(2, 6), 0);
  const auto dir0 = dir / "h0";
  emit_plot_data(empty, dir0);
  std::ifstream e0(dir0 / "consensus_error.csv");
  rows = 0;
  while (std::getline(e0, line)) ++rows;
  EXPECT_EQ(rows, 2);  // header and t = 0
  std::filesystem::remove_all(dir);
}

TEST(FitTest, ExactExponential) {
  std::vector<double> s;
  for (int t = 0; t < 50; ++t) s.push_back(3.0 * std::pow(0.9, t));
  const LogLinearFit fit = fit_log_linear(s, 10, 40);
  EXPECT_NEAR(fit.slope, std::log(0.9), 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_EQ(fit.points, 31);
}

}  // namespace
}  // namespace ddc
