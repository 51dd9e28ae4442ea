// Experiment drivers: full multi-round runs of the dual-tracking method and
// the two baselines, with per-round diagnostics, energy accounting, and the
// optional adaptive sampling/communication controller.
//
// All randomness derives from RunOptions::seed through named substreams
// ("sampling" for client selection, "minibatch"/"init-noise" per client for
// stochastic gradients), so records are bit-reproducible for a fixed
// configuration; only the wall_time_s field varies between repetitions.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sdgt/analysis.hpp"
#include "sdgt/control.hpp"
#include "sdgt/objectives.hpp"
#include "sdgt/topology.hpp"

namespace sdgt {

struct RoundRecord {
    int t = 0;                // outer round, 1-based
    double gap = 0.0;         // F(x_g) - F(optimum) after the round (NaN if unknown)
    double grad_norm = 0.0;   // ||grad F(x_g)||^2 after the round
    double delta_t = 0.0;     // within-round drift (see DiagnosticsRow)
    double gamma_t = 0.0;     // end-of-round dispersion around the new global model
    double y_t = 0.0;         // cross-subnet tracking residual (NaN for SCAFFOLD)
    double z_t = 0.0;         // within-subnet tracking residual (NaN for SCAFFOLD)
    int k_t = 1;              // inner rounds used this round
    double p_t = 1.0;         // realized sampling level this round
    std::vector<int> h_s;     // per-subnet sample counts this round
    double ds_energy = 0.0;   // cumulative device-to-server energy
    double d2d_energy = 0.0;  // cumulative gossip energy
    double wall_time_s = 0.0; // elapsed wall time since the run started
};

struct ControllerConfig {
    ControlLambdas lambdas;
    int k_max = 50;
    int cadence = 1;    // rounds between re-solves
    int initial_k = 1;
    std::vector<int> initial_sample_sizes; // empty = topology defaults
};

struct RunOptions {
    double gamma = 1e-3;
    int rounds = 1;
    int k = 1;     // inner rounds per aggregation (fixed-schedule runs)
    int batch = 0; // minibatch size; 0 = full gradients
    std::uint64_t seed = 0;
    const Eigen::VectorXd* x0 = nullptr;      // nullptr = zeros
    const Eigen::VectorXd* optimum = nullptr; // enables the gap column
    const ControlCosts* costs = nullptr;      // enables energy accounting
    const ControllerConfig* controller = nullptr; // dual-tracking runs only
    double stop_gap = -1.0; // stop once gap <= stop_gap (needs optimum)
};

// Dual-tracking method (with optional controller).
std::vector<RoundRecord> run_sdgt(const Objective& obj, const NetworkTopology& topo,
                                  const RunOptions& opt);

// Tracker-free baseline: local step + gossip inner rounds, subnet-balanced
// server average of sampled models, sampled clients reset to the average.
std::vector<RoundRecord> run_sd_fedavg(const Objective& obj, const NetworkTopology& topo,
                                       const RunOptions& opt);

// Control-variate baseline: sampled clients run K corrected local steps from
// the server model; server applies the mean model delta and maintains
// per-client control variates (variate update uses the model displacement).
// No gossip, so d2d energy is zero and the tracking residual columns are NaN.
std::vector<RoundRecord> run_scaffold(const Objective& obj, const NetworkTopology& topo,
                                      const RunOptions& opt);

} // namespace sdgt
