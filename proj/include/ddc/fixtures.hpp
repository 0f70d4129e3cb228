#pragma once

#include <Eigen/Dense>

#include "ddc/plant.hpp"

namespace ddc::fixtures {

/// Rotation-like agent used in the reference example: x+ = A x + 0.2 u.
inline Plant sec6_plant() {
  Plant p;
  p.a.resize(2, 2);
  p.a << 0.707, 0.707, -0.707, 0.707;
  p.b = 0.2 * Eigen::MatrixXd::Identity(2, 2);
  return p;
}

/// Six-node leader-follower network (node 0 leads). Followers 2, 3 and 4
/// hear the leader with weight 5; the follower subgraph is undirected.
inline Eigen::MatrixXd sec6_adjacency() {
  Eigen::MatrixXd a(6, 6);
  a << 0, 0, 0, 0, 0, 0,
       0, 0, 1, 2, 0, 0,
       5, 1, 0, 1, 3, 0,
       5, 2, 1, 0, 0, 2,
       5, 0, 3, 0, 0, 2,
       0, 0, 0, 2, 2, 0;
  return a;
}

/// Energy bound with N11 = 0.1 I, N12 = 0, N22 = -I.
inline NoiseBound sec6_noise_bound(int horizon) {
  return NoiseBound::energy(2, horizon, 0.1);
}

}  // namespace ddc::fixtures
