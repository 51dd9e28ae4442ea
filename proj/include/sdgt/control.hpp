// Adaptive sampling / communication control.
//
// Once per round (or less often, via the cadence setting) the server
// re-chooses the sampling level p and the inner-round count K by minimizing
// a surrogate of "error still to burn down plus energy spent":
//
//   J(p, K) = l1*H/p^2 + sqrt(l2*H/K) + (l2*H/(K p^2))^(2/3)
//             + l3 * ( sum_s (1-beta_s) E_s  +  K * sum_s delta*E_s )
//
// where H is an online progress estimate assembled from two cheap server-side
// observations: the round-to-round movement of the subnet residuals psi_s and
// the dispersion of the sampled client models around the new global model.
// For a candidate p each subnet's skip fraction is beta_s =
// min(sqrt(1-p), (m_s-1)/m_s): as tight as the target allows while always
// sampling at least one client.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sdgt {

struct ControlLambdas {
    double l1 = 1.0; // weight of the sampling-error term
    double l2 = 1.0; // weight of the consensus-error terms
    double l3 = 0.0; // weight of the energy cost
};

struct ControlCosts {
    std::vector<double> energy; // E_s: device-to-server upload cost per subnet
    double delta = 0.0;         // D2D cost ratio: one gossip round costs delta*E_s
};

// Mean squared movement of the subnet residuals between consecutive rounds:
// (1/S) sum_s ||psi_before[s] - psi_after[s]||^2.
double estimate_y_hat(const std::vector<Eigen::VectorXd>& psi_before,
                      const std::vector<Eigen::VectorXd>& psi_after);

// Dispersion of the sampled end-of-round models around the new global model,
// subnet-balanced: (1/S) sum_s (1/h_s) sum_j ||x_j - x_g||^2.
double estimate_gamma_hat(const std::vector<std::vector<Eigen::VectorXd>>& sampled_models,
                          const Eigen::VectorXd& x_g);

// Progress estimate for round t:
//   H_t = 1/t + l1^2 * ( K^3 gamma^3 / p^2 * y_hat + K gamma / p * gamma_hat ).
double update_h_hat(int t, double lambda1, int K, double gamma, double p,
                    double y_hat, double gamma_hat);

// Per-subnet skip fraction for a target sampling level p.
std::vector<double> beta_for_p(double p, const std::vector<int>& subnet_sizes);

double control_objective(double p, int K, double h_hat, const ControlLambdas& lambdas,
                         const ControlCosts& costs, const std::vector<int>& subnet_sizes);

struct ControlSolution {
    double p = 1.0;
    int K = 1;
    std::vector<double> beta;
    double objective = 0.0;
};

// Grid search: p on a uniform grid of `p_grid` points in (0, 1], K in
// {1..k_max}.  Ties resolve to the smallest K, then the smallest p.
ControlSolution solve_control(double h_hat, const ControlLambdas& lambdas,
                              const ControlCosts& costs,
                              const std::vector<int>& subnet_sizes, int k_max,
                              int p_grid = 200);

struct AppliedControl {
    std::vector<int> sample_sizes;     // h_s = clamp(round((1-beta_s)*m_s), 1, m_s)
    std::vector<double> realized_beta; // 1 - h_s/m_s after rounding
    double realized_p = 1.0;           // min_s (1 - realized_beta_s^2)
};

// Round the fractional skip targets to integer sample counts (half away
// from zero), clamped to [1, m_s], and report the realized levels.
AppliedControl apply_control(const std::vector<double>& beta,
                             const std::vector<int>& subnet_sizes);

} // namespace sdgt
