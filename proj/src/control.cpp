#include "sdgt/control.hpp"

#include <cmath>
#include <fmt/format.h>

#include "sdgt/errors.hpp"

namespace sdgt {

double estimate_y_hat(const std::vector<Eigen::VectorXd>& psi_before,
                      const std::vector<Eigen::VectorXd>& psi_after) {
    if (psi_before.empty() || psi_before.size() != psi_after.size())
        throw ConfigError("estimate_y_hat: residual lists must be nonempty and equal length");
    double total = 0.0;
    for (std::size_t s = 0; s < psi_before.size(); ++s)
        total += (psi_before[s] - psi_after[s]).squaredNorm();
    return total / static_cast<double>(psi_before.size());
}

double estimate_gamma_hat(const std::vector<std::vector<Eigen::VectorXd>>& sampled_models,
                          const Eigen::VectorXd& x_g) {
    if (sampled_models.empty())
        throw ConfigError("estimate_gamma_hat: need at least one subnet");
    double total = 0.0;
    for (const auto& subnet : sampled_models) {
        if (subnet.empty())
            throw ConfigError("estimate_gamma_hat: every subnet needs a sampled model");
        double sub = 0.0;
        for (const auto& x : subnet) sub += (x - x_g).squaredNorm();
        total += sub / static_cast<double>(subnet.size());
    }
    return total / static_cast<double>(sampled_models.size());
}

double update_h_hat(int t, double lambda1, int K, double gamma, double p,
                    double y_hat, double gamma_hat) {
    if (t < 1 || K < 1 || gamma <= 0.0 || p <= 0.0 || p > 1.0)
        throw ConfigError("update_h_hat: need t >= 1, K >= 1, gamma > 0, p in (0,1]");
    const double k = static_cast<double>(K);
    const double kcube = k * k * k * gamma * gamma * gamma;
    return 1.0 / static_cast<double>(t) +
           lambda1 * lambda1 * (kcube / (p * p) * y_hat + k * gamma / p * gamma_hat);
}

std::vector<double> beta_for_p(double p, const std::vector<int>& subnet_sizes) {
    if (p <= 0.0 || p > 1.0) throw ConfigError("beta_for_p: p must be in (0,1]");
    std::vector<double> beta;
    beta.reserve(subnet_sizes.size());
    for (int m : subnet_sizes) {
        if (m < 1) throw ConfigError("beta_for_p: subnet sizes must be >= 1");
        double cap = (static_cast<double>(m) - 1.0) / static_cast<double>(m);
        beta.push_back(std::min(std::sqrt(1.0 - p), cap));
    }
    return beta;
}

double control_objective(double p, int K, double h_hat, const ControlLambdas& lambdas,
                         const ControlCosts& costs, const std::vector<int>& subnet_sizes) {
    if (K < 1) throw ConfigError("control_objective: K must be >= 1");
    if (h_hat < 0.0) throw ConfigError("control_objective: progress estimate must be >= 0");
    if (costs.energy.size() != subnet_sizes.size())
        throw ConfigError("control_objective: one energy cost per subnet required");
    std::vector<double> beta = beta_for_p(p, subnet_sizes);
    const double k = static_cast<double>(K);

    double error_terms = lambdas.l1 * h_hat / (p * p) + std::sqrt(lambdas.l2 * h_hat / k) +
                         std::pow(lambdas.l2 * h_hat / (k * p * p), 2.0 / 3.0);
    double ds_cost = 0.0, d2d_cost = 0.0;
    for (std::size_t s = 0; s < subnet_sizes.size(); ++s) {
        ds_cost += (1.0 - beta[s]) * costs.energy[s];
        d2d_cost += costs.delta * costs.energy[s];
    }
    return error_terms + lambdas.l3 * (ds_cost + k * d2d_cost);
}

ControlSolution solve_control(double h_hat, const ControlLambdas& lambdas,
                              const ControlCosts& costs,
                              const std::vector<int>& subnet_sizes, int k_max,
                              int p_grid) {
    if (k_max < 1 || p_grid < 1)
        throw ConfigError("solve_control: need k_max >= 1 and a nonempty p grid");
    ControlSolution best;
    bool first = true;
    for (int K = 1; K <= k_max; ++K) {
        for (int j = 1; j <= p_grid; ++j) {
            double p = static_cast<double>(j) / static_cast<double>(p_grid);
            double value = control_objective(p, K, h_hat, lambdas, costs, subnet_sizes);
            if (first || value < best.objective) {
                first = false;
                best.p = p;
                best.K = K;
                best.objective = value;
            }
        }
    }
    best.beta = beta_for_p(best.p, subnet_sizes);
    return best;
}

AppliedControl apply_control(const std::vector<double>& beta,
                             const std::vector<int>& subnet_sizes) {
    if (beta.size() != subnet_sizes.size())
        throw ConfigError("apply_control: one skip fraction per subnet required");
    AppliedControl out;
    out.realized_p = 1.0;
    for (std::size_t s = 0; s < beta.size(); ++s) {
        if (beta[s] < 0.0 || beta[s] >= 1.0)
            throw ConfigError(fmt::format("apply_control: beta {} outside [0,1)", beta[s]));
        const double m = static_cast<double>(subnet_sizes[s]);
        int h = static_cast<int>(std::floor((1.0 - beta[s]) * m + 0.5));
        h = std::max(1, std::min(subnet_sizes[s], h));
        out.sample_sizes.push_back(h);
        double realized = 1.0 - static_cast<double>(h) / m;
        out.realized_beta.push_back(realized);
        out.realized_p = std::min(out.realized_p, 1.0 - realized * realized);
    }
    return out;
}

} // namespace sdgt
