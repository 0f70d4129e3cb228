#include "ddc/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>

#include "ddc/error.hpp"

namespace ddc {

bool NetworkGraph::follower_subgraph_symmetric(double tol) const {
  const int n = followers();
  const auto block = adjacency.bottomRightCorner(n, n);
  return (block - block.transpose()).cwiseAbs().maxCoeff() <= tol ||
         n == 0;
}

NetworkGraph build_graph(const MatrixXd& weights, const GraphOptions& opts) {
  if (weights.rows() != weights.cols() || weights.rows() < 2) {
    throw Error(ErrorCode::kNonSquare,
                "adjacency must be square with at least one follower");
  }
  const Eigen::Index size = weights.rows();
  for (Eigen::Index i = 0; i < size; ++i) {
    if (weights(i, i) != 0.0) {
      throw Error(ErrorCode::kNonZeroDiagonal,
                  "adjacency diagonal entry " + std::to_string(i) +
                      " is nonzero");
    }
    for (Eigen::Index j = 0; j < size; ++j) {
      if (!(weights(i, j) >= 0.0)) {
        throw Error(ErrorCode::kNegativeWeight,
                    "weight a(" + std::to_string(i) + "," + std::to_string(j) +
                        ") is negative or NaN");
      }
    }
  }
  if (opts.leader_root && weights.row(0).cwiseAbs().maxCoeff() > 0.0) {
    throw Error(ErrorCode::kLeaderHasInEdges,
                "leader (node 0) must not receive information");
  }

  NetworkGraph g;
  g.adjacency = weights;
  g.degrees = weights.rowwise().sum();
  g.laplacian = MatrixXd(g.degrees.asDiagonal()) - weights;
  const int n = g.followers();
  g.l_ff = g.laplacian.bottomRightCorner(n, n);
  g.l_fl = g.laplacian.block(1, 0, n, 1);
  g.z = weights.bottomRightCorner(n, n).rowwise().sum().maxCoeff();

  if (opts.require_undirected_followers && !g.follower_subgraph_symmetric()) {
    throw Error(ErrorCode::kInvalidArgument,
                "follower subgraph must be undirected");
  }
  return g;
}

NetworkGraph build_graph_from_edges(int nodes, const std::vector<Edge>& edges,
                                    const GraphOptions& opts) {
  if (nodes < 2) {
    throw Error(ErrorCode::kNonSquare, "graph needs a leader and a follower");
  }
  MatrixXd w = MatrixXd::Zero(nodes, nodes);
  for (const Edge& e : edges) {
    if (e.from < 0 || e.from >= nodes || e.to < 0 || e.to >= nodes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge endpoint out of range: " + std::to_string(e.from) +
                      " -> " + std::to_string(e.to));
    }
    if (e.from == e.to) {
      throw Error(ErrorCode::kNonZeroDiagonal, "self loop on node " +
                                                   std::to_string(e.from));
    }
    w(e.to, e.from) = e.weight;
  }
  return build_graph(w, opts);
}

bool has_leader_spanning_tree(const NetworkGraph& g) {
  const auto size = static_cast<int>(g.adjacency.rows());
  std::vector<bool> seen(size, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  while (!frontier.empty()) {
    const int j = frontier.front();
    frontier.pop();
    for (int i = 0; i < size; ++i) {
      if (!seen[i] && g.adjacency(i, j) > 0.0) {
        seen[i] = true;
        frontier.push(i);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
}

bool follower_subgraph_connected(const NetworkGraph& g) {
  const int n = g.followers();
  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int count = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j = 0; j < n; ++j) {
      if (!seen[j] && (g.adjacency(i + 1, j + 1) > 0.0 ||
                       g.adjacency(j + 1, i + 1) > 0.0)) {
        seen[j] = true;
        ++count;
        frontier.push(j);
      }
    }
  }
  return count == n;
}

namespace {

void sort_spectrum(Eigen::VectorXcd& v) {
  std::vector<std::complex<double>> tmp(v.data(), v.data() + v.size());
  std::sort(tmp.begin(), tmp.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = tmp[i];
}

}  // namespace

WeightedGraphMatrix weighted_graph_matrix(const NetworkGraph& g) {
  const int n = g.followers();
  const VectorXd scale = (g.degrees.tail(n).array() + 1.0).matrix();
  if ((scale.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "1 + d_i must be positive");
  }
  WeightedGraphMatrix out;
  out.l_bar = scale.cwiseInverse().asDiagonal() * g.l_ff;

  if (g.follower_subgraph_symmetric()) {
    // (I+D)^{1/2} L_bar (I+D)^{-1/2} = (I+D)^{-1/2} L_ff (I+D)^{-1/2}
    const VectorXd s = scale.cwiseSqrt().cwiseInverse();
    const MatrixXd sym = s.asDiagonal() * g.l_ff * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sym + sym.transpose()),
                                               Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorCode::kEigenFailure, "symmetric eigensolver failed");
    }
    out.eigenvalues = es.eigenvalues().cast<std::complex<double>>();
    out.real_spectrum = true;
  } else {
    Eigen::EigenSolver<MatrixXd> es(out.l_bar, false);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorCode::kEigenFailure, "Hessenberg-QR eigensolver failed");
    }
    out.eigenvalues = es.eigenvalues();
  }
  sort_spectrum(out.eigenvalues);
  return out;
}

RowStochasticDff row_stochastic_dff(const NetworkGraph& g) {
  const int n = g.followers();
  const MatrixXd a_ff = g.adjacency.bottomRightCorner(n, n);
  RowStochasticDff out;
  out.d_ff = a_ff / (1.0 + g.z);
  for (int i = 0; i < n; ++i) {
    out.d_ff(i, i) = 1.0 - a_ff.row(i).sum() / (1.0 + g.z);
  }
  if (n == 1) {
    out.mu = 1.0;
    out.degenerate = true;
    return out;
  }
  Eigen::EigenSolver<MatrixXd> es(out.d_ff, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigenFailure, "eigensolver failed on D_ff");
  }
  const Eigen::VectorXcd ev = es.eigenvalues();
  Eigen::Index skip = 0;
  for (Eigen::Index k = 1; k < ev.size(); ++k) {
    const double dk = std::abs(ev(k) - 1.0);
    const double ds = std::abs(ev(skip) - 1.0);
    if (dk < ds || (dk == ds && ev(k).real() > ev(skip).real())) skip = k;
  }
  out.mu = 0.0;
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (k != skip) out.mu = std::max(out.mu, std::abs(ev(k)));
  }
  return out;
}

}  // namespace ddc
