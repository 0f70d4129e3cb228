#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ddc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Leader-follower topology. Node 0 is the leader; a(i, j) > 0 means node i
/// receives information from node j.
struct NetworkGraph {
  MatrixXd adjacency;
  MatrixXd laplacian;
  MatrixXd l_ff;
  VectorXd l_fl;
  VectorXd degrees;  // d_i over all N+1 nodes, leader links included
  double z = 0.0;    // max over followers of the follower-only in-degree

  int followers() const { return static_cast<int>(adjacency.rows()) - 1; }
  bool follower_subgraph_symmetric(double tol = 1e-12) const;
};

struct GraphOptions {
  bool leader_root = true;
  bool require_undirected_followers = false;
};

/// One directed edge: `to` receives from `from` with `weight`.
struct Edge {
  int from = 0;
  int to = 0;
  double weight = 1.0;
};

NetworkGraph build_graph(const MatrixXd& weights, const GraphOptions& opts = {});
NetworkGraph build_graph_from_edges(int nodes, const std::vector<Edge>& edges,
                                    const GraphOptions& opts = {});

/// True iff every follower is reachable from node 0 along positive weights.
bool has_leader_spanning_tree(const NetworkGraph& g);

/// True iff the follower-only subgraph (leader removed) is connected when
/// edge directions are ignored.
bool follower_subgraph_connected(const NetworkGraph& g);

struct WeightedGraphMatrix {
  MatrixXd l_bar;                 // (I + D_ff)^{-1} L_ff
  Eigen::VectorXcd eigenvalues;   // sorted by real part, then imaginary part
  bool real_spectrum = false;     // computed through the symmetric transform
};

WeightedGraphMatrix weighted_graph_matrix(const NetworkGraph& g);

struct RowStochasticDff {
  MatrixXd d_ff;
  double mu = 1.0;          // largest modulus over the non-one eigenvalues
  bool degenerate = false;  // N = 1: no eigenvalue besides the one at 1
};

RowStochasticDff row_stochastic_dff(const NetworkGraph& g);

}  // namespace ddc
