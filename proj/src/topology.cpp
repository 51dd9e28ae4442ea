#include "sdgt/topology.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <fmt/format.h>
#include <queue>

#include "sdgt/errors.hpp"

namespace sdgt {

bool geometric_edge(const Eigen::Vector2d& pi, double ri,
                    const Eigen::Vector2d& pj, double rj) {
    return (pi - pj).norm() <= std::min(ri, rj);
}

std::vector<std::vector<int>> adjacency_from_layout(const Eigen::MatrixX2d& positions,
                                                    const Eigen::VectorXd& radii) {
    const int m = static_cast<int>(positions.rows());
    std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            if (geometric_edge(positions.row(i), radii(i), positions.row(j), radii(j))) {
                nbrs[static_cast<std::size_t>(i)].push_back(j);
                nbrs[static_cast<std::size_t>(j)].push_back(i);
            }
        }
    }
    return nbrs;
}

bool is_connected(const std::vector<std::vector<int>>& neighbors) {
    const int m = static_cast<int>(neighbors.size());
    if (m == 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    int count = 1;
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop();
        for (int v : neighbors[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++count;
                frontier.push(v);
            }
        }
    }
    return count == m;
}

GeometricGraph generate_geometric_graph(int m, double area_side, double r_min,
                                        double r_max, RngStream& rng) {
    if (m < 1) throw ConfigError("generate_geometric_graph: need m >= 1");
    if (area_side <= 0 || r_min < 0 || r_max < r_min)
        throw ConfigError("generate_geometric_graph: invalid area/radius parameters");

    const int max_attempts = 1000;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        GeometricGraph g;
        g.positions.resize(m, 2);
        g.radii.resize(m);
        for (int i = 0; i < m; ++i) {
            g.positions(i, 0) = rng.uniform(0.0, area_side);
            g.positions(i, 1) = rng.uniform(0.0, area_side);
            g.radii(i) = rng.uniform(r_min, r_max);
        }
        g.neighbors = adjacency_from_layout(g.positions, g.radii);
        if (is_connected(g.neighbors)) return g;
    }
    throw NumericError(fmt::format(
        "generation-failed: no connected geometric graph after {} attempts "
        "(m={}, area={}, radii=[{},{}])",
        max_attempts, m, area_side, r_min, r_max));
}

Eigen::MatrixXd metropolis_weights(const GeometricGraph& graph) {
    const int m = static_cast<int>(graph.neighbors.size());
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        const auto deg = [&](int u) {
            return static_cast<double>(graph.neighbors[static_cast<std::size_t>(u)].size());
        };
        double off_sum = 0.0;
        for (int j : graph.neighbors[static_cast<std::size_t>(i)]) {
            double w = 1.0 / (1.0 + std::max(deg(i), deg(j)));
            W(i, j) = w;
            off_sum += w;
        }
        W(i, i) = 1.0 - off_sum;
    }
    return W;
}

double spectral_gap(const Eigen::MatrixXd& W) {
    const int m = static_cast<int>(W.rows());
    if (m == 1) return 1.0; // single node mixes exactly
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(W);
    double sigma2 = svd.singularValues()(1);
    if (sigma2 >= 1.0 - 1e-12) {
        throw NumericError(fmt::format(
            "degenerate-mixing: second singular value {} >= 1, no consensus contraction",
            sigma2));
    }
    return 1.0 - sigma2 * sigma2;
}

bool verify_mixing_contraction(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X,
                               double rho, double rel_tol) {
    Eigen::RowVectorXd mean = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - mean;
    double before = centered.squaredNorm();
    Eigen::MatrixXd mixed = W * X;
    Eigen::MatrixXd mixed_centered = mixed.rowwise() - mean;
    double after = mixed_centered.squaredNorm();
    return after <= (1.0 - rho) * before + rel_tol * (1.0 + before);
}

int NetworkTopology::subnet_of(int i) const {
    for (int s = num_subnets() - 1; s >= 0; --s) {
        if (i >= offsets[static_cast<std::size_t>(s)]) return s;
    }
    throw std::out_of_range("subnet_of: bad client id");
}

NetworkTopology assemble_network(const std::vector<Eigen::MatrixXd>& blocks,
                                 const std::vector<int>& sample_sizes) {
    if (blocks.empty()) throw ConfigError("assemble_network: need at least one subnet");
    if (blocks.size() != sample_sizes.size())
        throw ConfigError("assemble_network: one sample size per subnet required");

    NetworkTopology topo;
    topo.p = 1.0;
    topo.q = 1.0;
    for (std::size_t s = 0; s < blocks.size(); ++s) {
        const Eigen::MatrixXd& W = blocks[s];
        const int m = static_cast<int>(W.rows());
        if (m < 1 || W.cols() != m)
            throw ConfigError(fmt::format("assemble_network: block {} is not square", s));
        const int h = sample_sizes[s];
        if (h < 1 || h > m)
            throw ConfigError(fmt::format(
                "assemble_network: sample size {} out of range [1,{}] for subnet {}", h, m, s));
        topo.offsets.push_back(topo.n);
        topo.subnet_sizes.push_back(m);
        topo.mixing.push_back(W);
        topo.sample_sizes.push_back(h);
        double rho_s = spectral_gap(W);
        topo.rho.push_back(rho_s);
        double beta_s = 1.0 - static_cast<double>(h) / static_cast<double>(m);
        topo.beta.push_back(beta_s);
        topo.p = std::min(topo.p, 1.0 - beta_s * beta_s);
        topo.q = std::min(topo.q, rho_s);
        topo.n += m;
    }
    return topo;
}

NetworkTopology build_random_network(const std::vector<int>& subnet_sizes,
                                     const std::vector<int>& sample_sizes,
                                     double area_side, double r_min, double r_max,
                                     const RngStream& rng,
                                     std::vector<GeometricGraph>* graphs_out) {
    if (subnet_sizes.size() != sample_sizes.size())
        throw ConfigError("build_random_network: one sample size per subnet required");
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(subnet_sizes.size());
    if (graphs_out) graphs_out->clear();
    for (std::size_t s = 0; s < subnet_sizes.size(); ++s) {
        RngStream sub = rng.substream("topology", s);
        GeometricGraph g = generate_geometric_graph(subnet_sizes[s], area_side,
                                                    r_min, r_max, sub);
        blocks.push_back(metropolis_weights(g));
        if (graphs_out) graphs_out->push_back(std::move(g));
    }
    return assemble_network(blocks, sample_sizes);
}

} // namespace sdgt
