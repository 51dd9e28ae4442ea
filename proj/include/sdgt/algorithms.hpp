// Semi-decentralized optimization with dual gradient tracking.
//
// Topology: clients are grouped into subnets; within a subnet they gossip
// over a mixing matrix every inner round, and once per outer round each
// subnet uploads a sampled subset of its clients to the server, which
// broadcasts an updated global model back to exactly those clients.
//
// Each client i keeps two correction terms alongside its model x_i:
//   y_i  tracks the gradient disagreement between its subnet and the global
//        average (updated from the server aggregation residual psi_s), and
//   z_i  tracks the disagreement between the client and its subnet average
//        (updated from gossip displacement accumulators once per round).
// The inner step is  x <- mix(x - gamma * (grad + y + z)),  i.e. the
// correction steers every client's drift toward the global descent
// direction even though only a subset ever talks to the server.
//
// The free functions below are the building blocks (initialization, one
// inner round, the z refresh, client sampling, server aggregation); the
// run_* drivers in runner.hpp compose them into full experiments.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sdgt/objectives.hpp"
#include "sdgt/rng.hpp"
#include "sdgt/topology.hpp"

namespace sdgt {

// Wraps an objective with the per-client random streams used for minibatch
// draws.  batch <= 0 selects exact full gradients (the deterministic mode).
class GradientEvaluator {
public:
    GradientEvaluator(const Objective& obj, int batch, const RngStream& master);

    // Gradient used during inner rounds (minibatch substream per client).
    void gradient(int client, const Eigen::VectorXd& x, Eigen::VectorXd& out);
    // Gradient used once at initialization (separate one-shot substream).
    void init_gradient(int client, const Eigen::VectorXd& x, Eigen::VectorXd& out);

    int batch() const { return batch_; }
    const Objective& objective() const { return *obj_; }

private:
    const Objective* obj_;
    int batch_;
    std::vector<RngStream> minibatch_;
    std::vector<RngStream> init_;
};

struct ClientState {
    Eigen::VectorXd x;       // current model
    Eigen::VectorXd y;       // cross-subnet tracking term
    Eigen::VectorXd z;       // within-subnet tracking term
    Eigen::VectorXd acc;     // gossip displacement accumulator (reset each round)
    Eigen::VectorXd x_start; // model at the start of the current outer round
};

struct ServerState {
    Eigen::VectorXd x_g;              // global model
    std::vector<Eigen::VectorXd> psi; // per-subnet aggregation residual
};

struct SdgtState {
    std::vector<ClientState> clients;
    ServerState server;
    double delta_accum = 0.0; // sum_i sum_k ||x_i - x_g||^2 over the round so far
    int acc_rounds = 0;       // inner rounds accumulated since the last z refresh

    // Scratch buffers reused across inner rounds.
    std::vector<Eigen::VectorXd> half;
    std::vector<Eigen::VectorXd> mixed;
    Eigen::VectorXd grad_tmp;
};

// Every client starts at x0.  Trackers are seeded from one gradient per
// client at x0: y_i = (global mean) - (subnet mean), z_i = (subnet mean) -
// (own gradient), so sum_i y_i = 0 and each subnet's z sums to zero exactly.
SdgtState sdgt_init(const Eigen::VectorXd& x0, const Objective& obj,
                    const NetworkTopology& topo, GradientEvaluator& grads);

// One inner round: every client takes the corrected half-step
// x - gamma*(grad + y + z), then each subnet mixes the half-steps
// synchronously (all combines read pre-round values).  The displacement
// half - mixed + gamma*y is added to the client's accumulator, and the
// pre-step distance to the global model is added to delta_accum.
void within_subnet_round(SdgtState& state, const NetworkTopology& topo,
                         GradientEvaluator& grads, double gamma);

// End-of-round z refresh: z_i += (acc_i - mix(acc)_i) / (K*gamma), then the
// accumulators reset.  K must equal the number of inner rounds accumulated,
// otherwise NumericError("accumulator-mismatch") is thrown.  Preserves the
// per-subnet zero-sum of z exactly (mixing is doubly stochastic).
void update_z_terms(SdgtState& state, const NetworkTopology& topo, int K, double gamma);

// Draw sample_sizes[s] distinct clients from each subnet; returns global
// client ids grouped by subnet.
std::vector<std::vector<int>> sample_clients(const NetworkTopology& topo,
                                             const std::vector<int>& sample_sizes,
                                             RngStream& rng);

// Server aggregation: sampled clients report x - x_start + K*gamma*y.  The
// global model moves by the subnet-balanced mean of the reports; each
// subnet's residual psi_s = (subnet report mean - global move)/(K*gamma)
// replaces the previous value and is installed as the new y of that
// subnet's sampled clients, which also download the new global model.
// Afterwards every client re-snapshots x_start for the next round.
void global_aggregate(SdgtState& state, const NetworkTopology& topo,
                      const std::vector<std::vector<int>>& sampled, int K,
                      double gamma);

} // namespace sdgt
