#include "ddc/experiment.hpp"

#include <chrono>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "ddc/error.hpp"
#include "ddc/fixtures.hpp"
#include "ddc/linalg.hpp"
#include "ddc/netgraph.hpp"
#include "ddc/synth_leader.hpp"
#include "ddc/synth_noiseless.hpp"
#include "ddc/synth_noisy.hpp"

namespace ddc {

using nlohmann::json;

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kNoiseless: return "noiseless";
    case Mode::kNoisy: return "noisy";
    case Mode::kLeaderOnly: return "leader-only";
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  if (name == "noiseless") return Mode::kNoiseless;
  if (name == "noisy") return Mode::kNoisy;
  if (name == "leader-only" || name == "leader_only") return Mode::kLeaderOnly;
  throw Error(ErrorCode::kConfig, "mode: unknown mode '" + name +
                                      "' (noiseless, noisy, leader-only)");
}

ExperimentConfig fixture_config(const std::string& fixture, Mode mode,
                                std::uint64_t seed) {
  if (fixture != "sec6") {
    throw Error(ErrorCode::kConfig, "fixture: unknown fixture '" + fixture + "'");
  }
  ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.plant_name = "sec6";
  cfg.plant = fixtures::sec6_plant();
  cfg.graph_name = "sec6";
  cfg.adjacency = fixtures::sec6_adjacency();
  return cfg;
}

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kConfig, (path.empty() ? "<root>" : path) + ": " + msg);
}

void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) config_error(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      config_error(path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  return j.get<double>();
}

std::int64_t integer_at(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    config_error(path, "expected an integer");
  }
  return j.get<std::int64_t>();
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) config_error(path, "expected a string");
  return j.get<std::string>();
}

bool bool_at(const json& j, const std::string& path) {
  if (!j.is_boolean()) config_error(path, "expected true or false");
  return j.get<bool>();
}

// Array of equal-length rows. A bare number s means s * I when `square` > 0.
MatrixXd matrix_at(const json& j, const std::string& path, int square = 0) {
  if (j.is_number() && square > 0) {
    return j.get<double>() * MatrixXd::Identity(square, square);
  }
  if (!j.is_array() || j.empty()) {
    config_error(path, square > 0 ? "expected a matrix (array of rows) or a number"
                                  : "expected a matrix (array of rows)");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  MatrixXd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) config_error(rp, "expected an array of numbers");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      if (cols == 0) config_error(rp, "empty row");
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      config_error(rp, "expected " + std::to_string(cols) + " entries, got " +
                           std::to_string(row.size()));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = number_at(row[static_cast<std::size_t>(c)],
                          rp + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

void expect_shape(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                  const std::string& path) {
  if (m.rows() != rows || m.cols() != cols) {
    config_error(path, "expected " + std::to_string(rows) + "x" +
                           std::to_string(cols) + ", got " +
                           std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()));
  }
}

// Re-raises `e` with the agent index prepended to its message.
[[noreturn]] void rethrow_for_agent(const Error& e, int agent) {
  std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  throw Error(e.code(), "agent " + std::to_string(agent) + ": " + msg);
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json spectrum_json(const Eigen::VectorXcd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back({v(i).real(), v(i).imag()});
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "", {"mode", "seed", "plant", "graph", "data", "noise_bound",
                     "weights", "region", "simulation", "output"});
  if (!j.contains("mode")) config_error("mode", "required");
  if (!j.contains("seed")) config_error("seed", "required for reproducibility");
  const Mode mode = parse_mode(string_at(j["mode"], "mode"));
  const std::int64_t seed = integer_at(j["seed"], "seed");
  if (seed < 0) config_error("seed", "must be nonnegative");

  ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.seed = static_cast<std::uint64_t>(seed);

  // Plant.
  if (!j.contains("plant")) config_error("plant", "required");
  const json& pj = j["plant"];
  check_keys(pj, "plant", {"fixture", "A", "B"});
  if (pj.contains("fixture")) {
    const std::string name = string_at(pj["fixture"], "plant.fixture");
    if (name != "sec6") config_error("plant.fixture", "unknown fixture '" + name + "'");
    cfg.plant = fixtures::sec6_plant();
    cfg.plant_name = name;
  } else {
    if (!pj.contains("A")) config_error("plant.A", "required without a fixture");
    if (!pj.contains("B")) config_error("plant.B", "required without a fixture");
    cfg.plant.a = matrix_at(pj["A"], "plant.A");
    cfg.plant.b = matrix_at(pj["B"], "plant.B");
    if (cfg.plant.a.rows() != cfg.plant.a.cols()) config_error("plant.A", "must be square");
    if (cfg.plant.b.rows() != cfg.plant.a.rows()) {
      config_error("plant.B", "must have as many rows as A");
    }
    cfg.plant_name = "custom";
  }
  const int n = cfg.plant.n(), p = cfg.plant.p();

  // Graph.
  if (!j.contains("graph")) config_error("graph", "required");
  const json& gj = j["graph"];
  check_keys(gj, "graph", {"fixture", "adjacency", "nodes", "edges"});
  if (gj.contains("fixture")) {
    const std::string name = string_at(gj["fixture"], "graph.fixture");
    if (name != "sec6") config_error("graph.fixture", "unknown fixture '" + name + "'");
    cfg.adjacency = fixtures::sec6_adjacency();
    cfg.graph_name = name;
  } else if (gj.contains("adjacency")) {
    cfg.adjacency = matrix_at(gj["adjacency"], "graph.adjacency");
    cfg.graph_name = "custom";
  } else if (gj.contains("edges")) {
    if (!gj.contains("nodes")) config_error("graph.nodes", "required with edges");
    const auto nodes = integer_at(gj["nodes"], "graph.nodes");
    if (nodes < 2) config_error("graph.nodes", "need a leader and a follower");
    const json& ej = gj["edges"];
    if (!ej.is_array()) config_error("graph.edges", "expected an array");
    std::vector<Edge> edges;
    for (std::size_t e = 0; e < ej.size(); ++e) {
      const std::string ep = "graph.edges[" + std::to_string(e) + "]";
      if (!ej[e].is_array() || ej[e].size() != 3) {
        config_error(ep, "expected [from, to, weight]");
      }
      const auto from = integer_at(ej[e][0], ep + "[0]");
      const auto to = integer_at(ej[e][1], ep + "[1]");
      if (from < 0 || from >= nodes) config_error(ep + "[0]", "node out of range");
      if (to < 0 || to >= nodes) config_error(ep + "[1]", "node out of range");
      edges.push_back({static_cast<int>(from), static_cast<int>(to),
                       number_at(ej[e][2], ep + "[2]")});
    }
    cfg.adjacency = MatrixXd::Zero(nodes, nodes);
    for (const auto& e : edges) cfg.adjacency(e.to, e.from) = e.weight;
    cfg.graph_name = "custom";
  } else {
    config_error("graph", "needs fixture, adjacency or edges");
  }
  const int agents = static_cast<int>(cfg.adjacency.rows());

  // Data.
  if (j.contains("data")) {
    const json& dj = j["data"];
    check_keys(dj, "data", {"T", "input"});
    if (dj.contains("T")) {
      const auto t = integer_at(dj["T"], "data.T");
      if (t < n + p) {
        config_error("data.T", "must be at least n + p = " + std::to_string(n + p));
      }
      cfg.data_horizon = static_cast<int>(t);
    }
    if (dj.contains("input")) {
      const json& ij = dj["input"];
      check_keys(ij, "data.input", {"kind", "amplitude"});
      if (ij.contains("kind")) {
        const std::string kind = string_at(ij["kind"], "data.input.kind");
        if (kind == "uniform") {
          cfg.input.kind = InputPolicy::Kind::kUniform;
        } else if (kind == "zero") {
          cfg.input.kind = InputPolicy::Kind::kZero;
        } else {
          config_error("data.input.kind", "expected uniform or zero");
        }
      }
      if (ij.contains("amplitude")) {
        cfg.input.amplitude = number_at(ij["amplitude"], "data.input.amplitude");
        if (!(cfg.input.amplitude > 0.0)) {
          config_error("data.input.amplitude", "must be positive");
        }
      }
    }
  }
  const int horizon = cfg.data_horizon > 0 ? cfg.data_horizon
                                           : default_data_horizon(cfg);

  // Noise bound: numbers scale identities; N12 defaults to zero.
  if (j.contains("noise_bound")) {
    const json& nj = j["noise_bound"];
    check_keys(nj, "noise_bound", {"n11", "n12", "n22"});
    NoiseBound b = NoiseBound::energy(n, horizon, 0.1);
    if (nj.contains("n11")) b.n11 = matrix_at(nj["n11"], "noise_bound.n11", n);
    if (nj.contains("n22")) b.n22 = matrix_at(nj["n22"], "noise_bound.n22", horizon);
    if (nj.contains("n12")) {
      // N12 is n x T, so the only scalar shorthand is 0.
      if (nj["n12"].is_number()) {
        if (nj["n12"].get<double>() != 0.0) {
          config_error("noise_bound.n12", "a scalar must be 0");
        }
        b.n12 = MatrixXd::Zero(n, horizon);
      } else {
        b.n12 = matrix_at(nj["n12"], "noise_bound.n12");
      }
    }
    expect_shape(b.n11, n, n, "noise_bound.n11");
    expect_shape(b.n12, n, horizon, "noise_bound.n12");
    expect_shape(b.n22, horizon, horizon, "noise_bound.n22");
    try {
      b.validate();
    } catch (const Error& e) {
      config_error("noise_bound", e.what());
    }
    cfg.noise_bound = b;
  }

  // Weights.
  if (j.contains("weights")) {
    const json& wj = j["weights"];
    check_keys(wj, "weights", {"Q", "R_tilde", "Q_tilde", "delta"});
    if (wj.contains("Q")) {
      cfg.q = matrix_at(wj["Q"], "weights.Q", n);
      expect_shape(cfg.q, n, n, "weights.Q");
    }
    if (wj.contains("R_tilde")) {
      cfg.r_tilde = matrix_at(wj["R_tilde"], "weights.R_tilde", p);
      expect_shape(cfg.r_tilde, p, p, "weights.R_tilde");
    }
    if (wj.contains("Q_tilde")) {
      cfg.q_tilde = matrix_at(wj["Q_tilde"], "weights.Q_tilde", p);
      expect_shape(cfg.q_tilde, p, p, "weights.Q_tilde");
    }
    if (wj.contains("delta")) cfg.delta = number_at(wj["delta"], "weights.delta");
  }

  if (j.contains("region")) {
    const json& rj = j["region"];
    check_keys(rj, "region", {"invertible_b"});
    if (rj.contains("invertible_b")) {
      cfg.invertible_b = bool_at(rj["invertible_b"], "region.invertible_b");
    }
  }

  if (j.contains("simulation")) {
    const json& sj = j["simulation"];
    check_keys(sj, "simulation", {"horizon", "consensus_tol", "x0"});
    if (sj.contains("horizon")) {
      const auto h = integer_at(sj["horizon"], "simulation.horizon");
      if (h < 0) config_error("simulation.horizon", "must be nonnegative");
      cfg.sim_horizon = static_cast<int>(h);
    }
    if (sj.contains("consensus_tol")) {
      cfg.consensus_tol = number_at(sj["consensus_tol"], "simulation.consensus_tol");
      if (!(cfg.consensus_tol > 0.0)) {
        config_error("simulation.consensus_tol", "must be positive");
      }
    }
    if (sj.contains("x0")) {
      cfg.x0 = matrix_at(sj["x0"], "simulation.x0");
      expect_shape(*cfg.x0, n, agents, "simulation.x0");
    }
  }

  if (j.contains("output")) {
    const json& oj = j["output"];
    check_keys(oj, "output", {"dir"});
    if (oj.contains("dir")) cfg.out_dir = string_at(oj["dir"], "output.dir");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return parse_config(j);
}

int default_data_horizon(const ExperimentConfig& cfg) {
  const int np = cfg.plant.n() + cfg.plant.p();
  return std::max(cfg.mode == Mode::kNoisy ? 50 : 15, 3 * np);
}

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(json& sink) : sink_(sink) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_[stage] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

 private:
  json& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

MatrixXd draw_initial_states(const ExperimentConfig& cfg, int agents, Rng& rng) {
  if (cfg.x0) return *cfg.x0;
  MatrixXd x(cfg.plant.n(), agents);
  for (int i = 0; i < agents; ++i) {
    for (int k = 0; k < cfg.plant.n(); ++k) x(k, i) = rng.uniform(-1.0, 1.0);
  }
  return x;
}

json simulation_json(const Trace& tr, double tol) {
  json s;
  s["horizon"] = tr.horizon();
  s["final_consensus_error"] = tr.consensus_error.back();
  s["final_gain_disagreement"] = tr.gain_disagreement.back();
  // First step after which the error stays below tol.
  int settle = -1;
  for (int t = static_cast<int>(tr.consensus_error.size()) - 1; t >= 0; --t) {
    if (tr.consensus_error[t] < tol) {
      settle = t;
    } else {
      break;
    }
  }
  s["settling_step"] = settle;
  s["consensus_tol"] = tol;
  s["converged"] = tr.consensus_error.back() < tol;
  s["target_gain"] = matrix_json(tr.target_gain);
  return s;
}

json modes_json(const Plant& plant, const Eigen::VectorXcd& spectrum,
                const MatrixXd& k, double scale) {
  json modes = json::array();
  const auto mats = modal_matrices(plant, spectrum, k, scale);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const SchurCheck c = lyapunov_certificate(mats[i]);
    modes.push_back({{"eigenvalue", {spectrum(i).real(), spectrum(i).imag()}},
                     {"schur", c.schur},
                     {"lyapunov_min_eig", c.p_min_eig},
                     {"diagnostic", c.diagnostic}});
  }
  return modes;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write) {
  ExperimentResult res;
  json& rep = res.report;
  Stopwatch clock(res.timings);

  const Plant& plant = cfg.plant;
  const int n = plant.n(), p = plant.p();
  const MatrixXd q = cfg.q.size() ? cfg.q : MatrixXd::Identity(n, n);
  const MatrixXd r_tilde = cfg.r_tilde.size() ? cfg.r_tilde : MatrixXd::Identity(p, p);
  const MatrixXd q_tilde = cfg.q_tilde.size() ? cfg.q_tilde : MatrixXd::Identity(p, p);
  const int horizon = cfg.data_horizon > 0 ? cfg.data_horizon : default_data_horizon(cfg);

  rep["config"] = {{"mode", to_string(cfg.mode)},
                   {"seed", cfg.seed},
                   {"plant", cfg.plant_name},
                   {"A", matrix_json(plant.a)},
                   {"B", matrix_json(plant.b)},
                   {"graph", cfg.graph_name},
                   {"adjacency", matrix_json(cfg.adjacency)},
                   {"data_horizon", horizon},
                   {"Q", matrix_json(q)},
                   {"sim_horizon", cfg.sim_horizon},
                   {"consensus_tol", cfg.consensus_tol}};

  const NetworkGraph graph = build_graph(cfg.adjacency);
  const int nf = graph.followers();
  const WeightedGraphMatrix wgm = weighted_graph_matrix(graph);
  rep["graph"] = {{"followers", nf},
                  {"z", graph.z},
                  {"leader_spanning_tree", has_leader_spanning_tree(graph)},
                  {"l_ff", matrix_json(graph.l_ff)},
                  {"l_bar_eigenvalues", spectrum_json(wgm.eigenvalues)}};
  if (!has_leader_spanning_tree(graph)) {
    spdlog::warn("leader does not reach every follower");
  }
  clock.lap("graph");

  Rng rng(cfg.seed);
  std::vector<DataRecord> records;
  NoiseBound bound = cfg.noise_bound ? *cfg.noise_bound
                                     : NoiseBound::energy(n, horizon, 0.1);
  NoisePolicy noise;
  if (cfg.mode == Mode::kNoisy) {
    noise.kind = NoisePolicy::Kind::kGaussianBounded;
    noise.bound = bound;
  }
  // Agent indices that collect data: followers, leader too when noisy,
  // leader only in leader-only mode.
  std::vector<int> data_agents;
  if (cfg.mode == Mode::kLeaderOnly) {
    data_agents = {0};
  } else {
    for (int i = cfg.mode == Mode::kNoisy ? 0 : 1; i <= nf; ++i) data_agents.push_back(i);
  }
  for (std::size_t a = 0; a < data_agents.size(); ++a) {
    records.push_back(collect_data(plant, horizon, cfg.input, noise, rng));
  }
  const MatrixXd x0s = draw_initial_states(cfg, nf + 1, rng);
  clock.lap("collect");

  auto fail = [&](int code, const std::string& msg) {
    res.exit_status = code;
    res.message = msg;
    spdlog::error("{}", msg);
  };

  std::optional<Trace> trace;
  bool certified = false;
  json agents_json = json::array();

  try {
    if (cfg.mode == Mode::kNoiseless) {
      std::vector<NoiselessSynthesis> syn;
      for (std::size_t a = 0; a < records.size(); ++a) {
        const int idx = data_agents[a];
        try {
          syn.push_back(synthesize_agent(records[a], q));
        } catch (const Error& e) {
          rethrow_for_agent(e, idx);
        }
        const auto& s = syn.back();
        agents_json.push_back(
            {{"agent", idx},
             {"k0", matrix_json(s.k0)},
             {"p", matrix_json(s.p_mat)},
             {"are_residual_true_plant", are_residual(plant, s.p_mat, q)},
             {"closed_loop_norm_true_plant", (plant.a + plant.b * s.k0).norm()},
             {"rank_ok", check_rank(records[a])}});
      }
      clock.lap("synthesize");
      const ConsensusRegion region = consensus_region(syn, cfg.invertible_b);
      const bool verified = verify_region(wgm, region);
      json rj = {{"kind", cfg.invertible_b ? "invertible-B" : "general-B"},
                 {"verified", verified}};
      if (cfg.invertible_b) {
        rj["bound"] = region.bound;
      } else {
        rj["a"] = region.a;
        rj["b"] = region.b;
        rj["c"] = region.c;
        rj["d"] = region.d;
      }
      rep["region"] = rj;
      const bool b_invertible =
          plant.b.rows() == plant.b.cols() &&
          numerical_rank(plant.b, 1e-12) == plant.b.rows();
      if (b_invertible != cfg.invertible_b) {
        spdlog::warn("invertible_b = {} but the true B is {}invertible",
                     cfg.invertible_b, b_invertible ? "" : "not ");
      }
      const RowStochasticDff dff = row_stochastic_dff(graph);
      const MareGain mare = gain_consensus_matrix(dff, r_tilde, q_tilde, cfg.delta);
      rep["gain_sync"] = {{"mu", dff.mu},
                          {"delta", mare.delta},
                          {"degenerate", mare.degenerate},
                          {"lambda", matrix_json(mare.lambda_mat)},
                          {"O", matrix_json(mare.o_gain)},
                          {"mare_residual", mare.residual}};
      MatrixXd k_mean = MatrixXd::Zero(p, n);
      std::vector<MatrixXd> gains;
      for (const auto& s : syn) {
        gains.push_back(s.k0);
        k_mean += s.k0;
      }
      k_mean /= static_cast<double>(syn.size());
      certified = certify_network(plant, wgm.eigenvalues, k_mean, 1.0);
      rep["certificate"] = {{"gain", matrix_json(k_mean)},
                            {"scale", 1.0},
                            {"certified", certified},
                            {"modes", modes_json(plant, wgm.eigenvalues, k_mean, 1.0)}};
      clock.lap("certify");
      trace = run_noiseless_protocol(plant, graph, gains, mare.o_gain, x0s,
                                     cfg.sim_horizon);
    } else if (cfg.mode == Mode::kNoisy) {
      const SpectrumGains sg = spectrum_gains(graph.l_ff);
      rep["spectrum"] = {{"lambda_min", sg.lambda_min},
                         {"lambda_max", sg.lambda_max},
                         {"alpha", sg.alpha},
                         {"nu", sg.nu}};
      std::vector<MatrixXd> gains;
      for (std::size_t a = 0; a < records.size(); ++a) {
        const int idx = data_agents[a];
        NoisySynthesis s;
        try {
          s = informative_gain(records[a], bound, sg.nu, sg.alpha);
        } catch (const Error& e) {
          rethrow_for_agent(e, idx);
        }
        gains.push_back(s.k0);
        agents_json.push_back({{"agent", idx},
                               {"k0", matrix_json(s.k0)},
                               {"phi", matrix_json(s.phi)},
                               {"F", matrix_json(s.f)},
                               {"eps", s.eps},
                               {"gamma", s.gamma_scalar},
                               {"tau", s.tau},
                               {"lmi_min_eig", s.lmi_min_eig},
                               {"noise_within_bound",
                                check_noise_bound(*records[a].d, bound)}});
      }
      clock.lap("synthesize");
      const Eigen::VectorXcd lam =
          Eigen::SelfAdjointEigenSolver<MatrixXd>(symmetrize(graph.l_ff))
              .eigenvalues()
              .cast<std::complex<double>>();
      certified = certify_network(plant, lam, gains[0], sg.alpha);
      json per_agent = json::array();
      for (std::size_t a = 0; a < gains.size(); ++a) {
        per_agent.push_back(certify_network(plant, lam, gains[a], sg.alpha));
      }
      rep["certificate"] = {{"gain", matrix_json(gains[0])},
                            {"scale", sg.alpha},
                            {"certified", certified},
                            {"per_agent_certified", per_agent},
                            {"modes", modes_json(plant, lam, gains[0], sg.alpha)}};
      clock.lap("certify");
      trace = run_noisy_protocol(plant, graph, gains, sg.alpha, x0s, cfg.sim_horizon);
    } else {
      LeaderSynthesis s = leader_gain(records[0], q);
      json lj = {{"k0", matrix_json(s.k0)},
                 {"p", matrix_json(s.p_mat)},
                 {"theta", s.theta},
                 {"are_residual_true_plant", are_residual(plant, s.p_mat, q)}};
      clock.lap("synthesize");
      const Circle circle = min_ratio_circle(wgm.eigenvalues);
      const double limit = s.theta > 0.0 ? 1.0 / std::sqrt(s.theta) : 1e300;
      lj["h0"] = circle.h0;
      lj["r0"] = circle.r0;
      lj["ratio"] = circle.ratio;
      lj["theta_inv_sqrt"] = limit;
      lj["margin"] = limit - circle.ratio;
      agents_json.push_back(lj);
      enclosing_circle(wgm, s);
      rep["leader"] = lj;
      rep["leader"]["c0"] = s.c0;
      certified = certify_network(plant, wgm.eigenvalues, s.k0, s.c0);
      rep["certificate"] = {{"gain", matrix_json(s.k0)},
                            {"scale", s.c0},
                            {"certified", certified},
                            {"modes", modes_json(plant, wgm.eigenvalues, s.k0, s.c0)}};
      clock.lap("certify");
      const LeaderProtocolInit init = leader_protocol_gains(s.k0, s.c0, nf);
      trace = run_leader_protocol(plant, graph, init.k, init.c, x0s, cfg.sim_horizon);
    }
    clock.lap("simulate");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInfeasible || e.code() == ErrorCode::kNumericalFailure ||
        e.code() == ErrorCode::kRankDeficient ||
        e.code() == ErrorCode::kFNotPositiveDefinite ||
        e.code() == ErrorCode::kNonPositiveSpectrum ||
        e.code() == ErrorCode::kSubdominantModulusNotLessThanOne ||
        e.code() == ErrorCode::kNoConvergence) {
      fail(exit_code::kSynthesis, e.what());
    } else {
      throw;
    }
  }
  rep["agents"] = agents_json;

  if (trace) {
    rep["simulation"] = simulation_json(*trace, cfg.consensus_tol);
    const bool converged = trace->consensus_error.back() < cfg.consensus_tol;
    if (!certified) {
      fail(exit_code::kSynthesis, "network certificate failed");
    } else if (!converged) {
      fail(exit_code::kTolerance, "consensus tolerance not met within the horizon");
    } else {
      res.message = "certified and converged";
    }
  }
  rep["status"] = {{"exit_code", res.exit_status}, {"message", res.message}};

  if (write) {
    const auto& dir = cfg.out_dir;
    std::filesystem::create_directories(dir);
    for (std::size_t a = 0; a < records.size(); ++a) {
      const std::string sub = "data/agent_" + std::to_string(data_agents[a]);
      save_data_record(dir / sub, records[a]);
      res.manifest.push_back(sub + "/u_minus.csv");
      res.manifest.push_back(sub + "/x.csv");
      if (records[a].d) res.manifest.push_back(sub + "/d.csv");
    }
    if (trace) {
      for (const auto& f : export_trace(*trace, dir)) res.manifest.push_back(f);
      for (const auto& f : emit_plot_data(*trace, dir)) res.manifest.push_back(f);
    }
    res.manifest.push_back("timings.json");
    res.manifest.push_back("report.json");
    rep["manifest"] = res.manifest;
    clock.lap("write");
    std::ofstream r(dir / "report.json");
    r << rep.dump(2) << '\n';
    std::ofstream t(dir / "timings.json");
    t << res.timings.dump(2) << '\n';
    if (!r || !t) throw Error(ErrorCode::kIo, "cannot write report in " + dir.string());
  }
  res.trace = std::move(trace);
  return res;
}

}  // namespace ddc
