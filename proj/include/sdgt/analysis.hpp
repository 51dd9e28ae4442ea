// Run analysis: trajectory diagnostics, the four-dimensional error-system
// contraction certificate with its admissible step-size bound, energy
// accounting, and geometric rate fitting.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

#include "sdgt/algorithms.hpp"
#include "sdgt/objectives.hpp"
#include "sdgt/topology.hpp"

namespace sdgt {

// ---------------------------------------------------------------------------
// Trajectory diagnostics

struct DiagnosticsRow {
    double gap = 0.0;       // F(x_g) - F(optimum), NaN when no optimum is known
    double grad_norm = 0.0; // ||grad F(x_g)||^2
    double delta_t = 0.0;   // (1/n) sum_i sum_k ||x_i^{t,k} - x_g^t||^2
    double gamma_t = 0.0;   // (1/n) sum_i ||x_i^{end} - x_g^{new}||^2
    double y_t = 0.0;       // cross-subnet tracking residual
    double z_t = 0.0;       // within-subnet tracking residual
};

// Tracking residuals at the point x_g, evaluated with full gradients:
//   first  = (1/n) sum_i || y_i + (subnet mean grad - global mean grad) ||^2
//   second = (1/n) sum_i || z_i + (own grad - subnet mean grad) ||^2
// Null entries in Y/Z stand for zero trackers (used by the tracker-free
// baseline).  Both vanish exactly when the trackers equal the gradient
// disagreements they are meant to follow.
std::pair<double, double> tracking_residuals(const std::vector<const Eigen::VectorXd*>& Y,
                                             const std::vector<const Eigen::VectorXd*>& Z,
                                             const Eigen::VectorXd& x_g,
                                             const Objective& obj,
                                             const NetworkTopology& topo);

// Mean squared distance of the given models to a center point.
double dispersion(const std::vector<Eigen::VectorXd>& models, const Eigen::VectorXd& center);

// Bundle the full diagnostics row for a dual-tracking state.  end_models are
// the pre-broadcast end-of-round models (for gamma_t); delta_accum is the
// state's within-round drift accumulator.
DiagnosticsRow compute_diagnostics(const SdgtState& state, const Objective& obj,
                                   const NetworkTopology& topo,
                                   const Eigen::VectorXd* optimum, double delta_accum,
                                   const std::vector<Eigen::VectorXd>* end_models);

// ---------------------------------------------------------------------------
// Contraction certificate

struct BoundParams {
    double p = 1.0;      // sampling level: min_s (1 - beta_s^2)
    double q = 1.0;      // mixing level: min_s rho_s
    int K = 1;           // inner rounds per aggregation
    double L = 1.0;      // smoothness constant
    double mu = 1.0;     // strong convexity constant
    double sigma2 = 0.0; // gradient noise variance
    int n = 1;           // number of clients
    double gamma = 0.0;  // step size; <= 0 selects half the admissible bound
};

// The five admissibility terms whose minimum is the step-size bound.  The
// `corrected` first term carries an extra factor 1/4 that the recursion
// actually requires; the uncorrected variant is kept for comparison because
// it fails the contraction check on a few percent of parameter tuples.
std::array<double, 5> admissible_step_terms(double p, double q, int K, double L,
                                            double mu, bool corrected = true);
double admissible_step_size(double p, double q, int K, double L, double mu,
                            bool corrected = true);

// One-round transition matrix of the coupled error vector
// (optimality gap, sampling error, within-subnet consensus, residual drift).
Eigen::Matrix4d contraction_matrix(const BoundParams& params);
// Additive noise vector (scales linearly with sigma2).
Eigen::Vector4d noise_vector(const BoundParams& params);

struct ContractionCertificate {
    BoundParams params;              // with gamma filled in
    double gamma_bar = 0.0;          // admissible step bound
    Eigen::Matrix4d A;               // transition matrix
    Eigen::Vector4d b;               // noise vector
    double norm_A = 0.0;             // max absolute column sum
    double contraction_target = 0.0; // 1 - mu*K*gamma/4
    bool contracts = false;          // norm_A <= contraction_target
    Eigen::Vector4d steady_state;    // (I - A)^{-1} b
    double steady_state_norm = 0.0;  // l1 norm of the steady state
};

// Build the certificate; throws NumericError("singular-IminusA") when
// ||A||_1 >= 1, in which case the steady state does not exist.
ContractionCertificate build_certificate(BoundParams params, bool corrected = true);

// ---------------------------------------------------------------------------
// Energy accounting

// Energy spent in one round: device-to-server uploads cost (h_s/m_s)*E_s per
// subnet; K gossip rounds cost K*delta*E_s per subnet.  Returns {ds, d2d}.
std::pair<double, double> round_energy(const std::vector<int>& sample_sizes,
                                       const std::vector<int>& subnet_sizes,
                                       const std::vector<double>& energy, int K,
                                       double delta);

// ---------------------------------------------------------------------------
// Geometric rate fit

struct RateFit {
    double rate = 1.0;     // per-round contraction factor c in gap_t ~ c^t
    double r_squared = 0.0;
    bool saturated = false; // some gaps were <= eps and were clipped
};

// Least-squares fit of log(gap) against the round index, after discarding
// the first burn_in_fraction of the series.  Non-positive gaps are clipped
// to machine epsilon and flagged.
RateFit geometric_rate_fit(const std::vector<double>& gaps, double burn_in_fraction = 0.2);

} // namespace sdgt
