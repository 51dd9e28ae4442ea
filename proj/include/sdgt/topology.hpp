// Subnet topology: random geometric graphs, Metropolis-Hastings mixing
// weights, spectral gaps, and the assembled multi-subnet network.
//
// Each subnet is an undirected geometric graph on the unit-square-like area
// [0, area_side]^2: node i gets a position and a communication radius, and
// an edge exists iff the pair distance is within BOTH radii.  Mixing uses
// Metropolis-Hastings weights, which are symmetric and doubly stochastic by
// construction.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sdgt/rng.hpp"

namespace sdgt {

struct GeometricGraph {
    Eigen::MatrixX2d positions;              // m x 2 node coordinates
    Eigen::VectorXd radii;                   // m communication radii
    std::vector<std::vector<int>> neighbors; // adjacency lists, sorted, no self
};

// Adjacency rule: edge iff dist(i, j) <= min(r_i, r_j).
bool geometric_edge(const Eigen::Vector2d& pi, double ri,
                    const Eigen::Vector2d& pj, double rj);

// Build adjacency lists from given positions and radii.
std::vector<std::vector<int>> adjacency_from_layout(const Eigen::MatrixX2d& positions,
                                                    const Eigen::VectorXd& radii);

bool is_connected(const std::vector<std::vector<int>>& neighbors);

// Sample a connected geometric graph: positions uniform on [0, area_side]^2,
// radii uniform on [r_min, r_max].  Resamples everything on a disconnected
// draw, up to 1000 attempts, then throws NumericError("generation-failed").
GeometricGraph generate_geometric_graph(int m, double area_side, double r_min,
                                        double r_max, RngStream& rng);

// Metropolis-Hastings weights: w_ij = 1/(1 + max(deg_i, deg_j)) on edges,
// w_ii = 1 - sum_j w_ij.  Symmetric, doubly stochastic, nonnegative.
Eigen::MatrixXd metropolis_weights(const GeometricGraph& graph);

// rho = 1 - sigma_2(W)^2 where sigma_2 is the second-largest singular value.
// Throws NumericError("degenerate-mixing") when sigma_2 >= 1 (no contraction).
double spectral_gap(const Eigen::MatrixXd& W);

// Check the consensus contraction ||WX - Xbar||_F^2 <= (1 - rho)||X - Xbar||_F^2
// up to relative tolerance, where Xbar has every row equal to the column mean.
bool verify_mixing_contraction(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X,
                               double rho, double rel_tol = 1e-9);

struct NetworkTopology {
    std::vector<int> subnet_sizes;        // m_s
    std::vector<int> offsets;             // first global client id per subnet
    std::vector<Eigen::MatrixXd> mixing;  // W_s blocks
    std::vector<double> rho;              // spectral gap per subnet
    std::vector<int> sample_sizes;        // h_s clients reporting per round
    std::vector<double> beta;             // 1 - h_s/m_s
    double p = 1.0;                       // min_s (1 - beta_s^2)
    double q = 1.0;                       // min_s rho_s
    int n = 0;                            // total clients

    int num_subnets() const { return static_cast<int>(subnet_sizes.size()); }
    // Subnet owning global client id i.
    int subnet_of(int i) const;
};

// Validate block shapes/sample sizes and compute rho_s, beta_s, p, q.
NetworkTopology assemble_network(const std::vector<Eigen::MatrixXd>& blocks,
                                 const std::vector<int>& sample_sizes);

// Convenience builder: one geometric graph per subnet (independent
// substreams of `rng`), Metropolis weights, then assemble_network.
NetworkTopology build_random_network(const std::vector<int>& subnet_sizes,
                                     const std::vector<int>& sample_sizes,
                                     double area_side, double r_min, double r_max,
                                     const RngStream& rng,
                                     std::vector<GeometricGraph>* graphs_out = nullptr);

} // namespace sdgt
