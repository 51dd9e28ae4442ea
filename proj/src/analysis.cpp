#include "sdgt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "sdgt/errors.hpp"

namespace sdgt {

std::pair<double, double> tracking_residuals(const std::vector<const Eigen::VectorXd*>& Y,
                                             const std::vector<const Eigen::VectorXd*>& Z,
                                             const Eigen::VectorXd& x_g,
                                             const Objective& obj,
                                             const NetworkTopology& topo) {
    const int n = topo.n;
    if (static_cast<int>(Y.size()) != n || static_cast<int>(Z.size()) != n)
        throw ConfigError("tracking_residuals: one tracker pointer per client required");

    std::vector<Eigen::VectorXd> g(static_cast<std::size_t>(n));
    Eigen::VectorXd global_mean = Eigen::VectorXd::Zero(x_g.size());
    for (int i = 0; i < n; ++i) {
        obj.full_gradient(i, x_g, g[static_cast<std::size_t>(i)]);
        global_mean += g[static_cast<std::size_t>(i)];
    }
    global_mean /= static_cast<double>(n);

    double y_res = 0.0, z_res = 0.0;
    for (int s = 0; s < topo.num_subnets(); ++s) {
        const int off = topo.offsets[static_cast<std::size_t>(s)];
        const int m = topo.subnet_sizes[static_cast<std::size_t>(s)];
        Eigen::VectorXd subnet_mean = Eigen::VectorXd::Zero(x_g.size());
        for (int j = 0; j < m; ++j) subnet_mean += g[static_cast<std::size_t>(off + j)];
        subnet_mean /= static_cast<double>(m);
        for (int j = 0; j < m; ++j) {
            const int i = off + j;
            Eigen::VectorXd ydev = subnet_mean - global_mean;
            if (Y[static_cast<std::size_t>(i)]) ydev += *Y[static_cast<std::size_t>(i)];
            y_res += ydev.squaredNorm();
            Eigen::VectorXd zdev = g[static_cast<std::size_t>(i)] - subnet_mean;
            if (Z[static_cast<std::size_t>(i)]) zdev += *Z[static_cast<std::size_t>(i)];
            z_res += zdev.squaredNorm();
        }
    }
    return {y_res / n, z_res / n};
}

double dispersion(const std::vector<Eigen::VectorXd>& models, const Eigen::VectorXd& center) {
    if (models.empty()) throw ConfigError("dispersion: need at least one model");
    double total = 0.0;
    for (const auto& x : models) total += (x - center).squaredNorm();
    return total / static_cast<double>(models.size());
}

DiagnosticsRow compute_diagnostics(const SdgtState& state, const Objective& obj,
                                   const NetworkTopology& topo,
                                   const Eigen::VectorXd* optimum, double delta_accum,
                                   const std::vector<Eigen::VectorXd>* end_models) {
    DiagnosticsRow row;
    const Eigen::VectorXd& x_g = state.server.x_g;
    row.gap = optimum ? obj.global_loss(x_g) - obj.global_loss(*optimum)
                      : std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd grad;
    obj.global_gradient(x_g, grad);
    row.grad_norm = grad.squaredNorm();
    row.delta_t = delta_accum / static_cast<double>(topo.n);
    row.gamma_t = end_models ? dispersion(*end_models, x_g) : 0.0;

    std::vector<const Eigen::VectorXd*> Y, Z;
    Y.reserve(state.clients.size());
    Z.reserve(state.clients.size());
    for (const auto& c : state.clients) {
        Y.push_back(&c.y);
        Z.push_back(&c.z);
    }
    std::tie(row.y_t, row.z_t) = tracking_residuals(Y, Z, x_g, obj, topo);
    return row;
}

// ---------------------------------------------------------------------------
// Contraction certificate

namespace {

void check_bound_inputs(double p, double q, int K, double L, double mu) {
    if (!(p > 0.0 && p <= 1.0) || !(q > 0.0 && q <= 1.0))
        throw ConfigError("contraction bound: p and q must be in (0,1]");
    if (K < 1) throw ConfigError("contraction bound: K must be >= 1");
    if (!(L > 0.0) || !(mu > 0.0) || mu > L)
        throw ConfigError("contraction bound: need 0 < mu <= L");
}

} // namespace

std::array<double, 5> admissible_step_terms(double p, double q, int K, double L,
                                            double mu, bool corrected) {
    check_bound_inputs(p, q, K, L, mu);
    const double k = static_cast<double>(K);
    const double pq = std::min(p, q);
    double t1 = pq * mu / (k * (14.0 * L * L + 240.0 * L * L * L));
    if (corrected) t1 /= 4.0;
    const double t2 = 1.0 / (18.0 * k * L);
    const double t3 = 4.0 / (mu * k);
    const double t4 =
        pq * p / (2.0 * (45.0 * k * L + 108.0 * k * L * L + k * mu / 4.0));
    const double t5 =
        pq * pq / (2.0 * (86.0 * k * k + 864.0 * k * k * L + k * mu / 4.0));
    return {t1, t2, t3, t4, t5};
}

double admissible_step_size(double p, double q, int K, double L, double mu,
                            bool corrected) {
    auto terms = admissible_step_terms(p, q, K, L, mu, corrected);
    return *std::min_element(terms.begin(), terms.end());
}

Eigen::Matrix4d contraction_matrix(const BoundParams& prm) {
    check_bound_inputs(prm.p, prm.q, prm.K, prm.L, prm.mu);
    if (!(prm.gamma > 0.0)) throw ConfigError("contraction_matrix: gamma must be > 0");
    const double g = prm.gamma, K = prm.K, L = prm.L, mu = prm.mu, p = prm.p, q = prm.q;
    const double K2 = K * K, K3 = K * K * K, g2 = g * g, L2 = L * L, L3 = L * L * L;

    Eigen::Matrix4d A;
    A(0, 0) = 1.0 - mu * K * g / 2.0;
    A(0, 1) = 9.0 * g * K * L * (1.0 - p);
    A(0, 2) = 72.0 * K3 * L * g2;
    A(0, 3) = 72.0 * K3 * L * g2;

    A(1, 0) = 14.0 / p * g2 * K2 * L2;
    A(1, 1) = 1.0 - p / 2.0 + 36.0 / p * g2 * K * L2;
    A(1, 2) = 14.0 / p * K2 * g;
    A(1, 3) = 14.0 / p * K2 * g;

    A(2, 0) = 72.0 / p * g2 * K2 * L3;
    A(2, 1) = 30.0 / p * L2 * K * g;
    A(2, 2) = 1.0 - p / 2.0 + 240.0 / p * K3 * g2 * L2;
    A(2, 3) = 240.0 / p * K3 * g2 * L2;

    A(3, 0) = 168.0 / q * g2 * K2 * L3;
    A(3, 1) = 78.0 / q * L2 * K * g;
    A(3, 2) = 624.0 / q * K3 * g2 * L2;
    A(3, 3) = 1.0 - q / 2.0 + 624.0 / q * K3 * g2 * L2;
    return A;
}

Eigen::Vector4d noise_vector(const BoundParams& prm) {
    check_bound_inputs(prm.p, prm.q, prm.K, prm.L, prm.mu);
    if (!(prm.gamma > 0.0)) throw ConfigError("noise_vector: gamma must be > 0");
    if (prm.n < 1) throw ConfigError("noise_vector: n must be >= 1");
    const double g = prm.gamma, K = prm.K, L = prm.L, q = prm.q;
    const double g2 = g * g, g3 = g2 * g, g4 = g2 * g2, K2 = K * K, K3 = K * K * K;
    Eigen::Vector4d b;
    b(0) = 2.0 * g2 * K / prm.n + 9.0 * K2 * g3 * L;
    b(1) = K * g2 + 3.0 * K3 * g4 * L * L;
    b(2) = 2.0 * g / (q * K) + 30.0 * K3 * g3 * L * L / q;
    b(3) = 2.0 * g / (q * K) + 78.0 * K3 * g3 * L * L / q;
    return b * prm.sigma2;
}

ContractionCertificate build_certificate(BoundParams params, bool corrected) {
    ContractionCertificate cert;
    cert.gamma_bar =
        admissible_step_size(params.p, params.q, params.K, params.L, params.mu, corrected);
    if (params.gamma <= 0.0) params.gamma = 0.5 * cert.gamma_bar;
    cert.params = params;
    cert.A = contraction_matrix(params);
    cert.b = noise_vector(params);
    cert.norm_A = cert.A.cwiseAbs().colwise().sum().maxCoeff();
    cert.contraction_target = 1.0 - params.mu * params.K * params.gamma / 4.0;
    cert.contracts = cert.norm_A <= cert.contraction_target;
    if (cert.norm_A >= 1.0)
        throw NumericError(fmt::format(
            "singular-IminusA: ||A||_1 = {} >= 1, error system does not contract "
            "(gamma = {}, bound = {})",
            cert.norm_A, params.gamma, cert.gamma_bar));
    Eigen::Matrix4d IminusA = Eigen::Matrix4d::Identity() - cert.A;
    cert.steady_state = IminusA.fullPivLu().solve(cert.b);
    cert.steady_state_norm = cert.steady_state.cwiseAbs().sum();
    return cert;
}

// ---------------------------------------------------------------------------
// Energy accounting

std::pair<double, double> round_energy(const std::vector<int>& sample_sizes,
                                       const std::vector<int>& subnet_sizes,
                                       const std::vector<double>& energy, int K,
                                       double delta) {
    const std::size_t S = subnet_sizes.size();
    if (sample_sizes.size() != S || energy.size() != S)
        throw ConfigError("round_energy: per-subnet lists must have equal length");
    if (K < 0 || delta < 0.0)
        throw ConfigError("round_energy: need K >= 0 and delta >= 0");
    double ds = 0.0, d2d = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        if (subnet_sizes[s] < 1 || sample_sizes[s] < 0 || sample_sizes[s] > subnet_sizes[s])
            throw ConfigError("round_energy: sample sizes must lie in [0, m_s]");
        ds += static_cast<double>(sample_sizes[s]) / subnet_sizes[s] * energy[s];
        d2d += delta * energy[s];
    }
    return {ds, static_cast<double>(K) * d2d};
}

// ---------------------------------------------------------------------------
// Geometric rate fit

RateFit geometric_rate_fit(const std::vector<double>& gaps, double burn_in_fraction) {
    if (burn_in_fraction < 0.0 || burn_in_fraction >= 1.0)
        throw ConfigError("geometric_rate_fit: burn-in fraction must be in [0,1)");
    const auto skip =
        static_cast<std::size_t>(burn_in_fraction * static_cast<double>(gaps.size()));
    if (gaps.size() - skip < 2)
        throw ConfigError("geometric_rate_fit: need at least two points after burn-in");

    RateFit fit;
    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<double> logs;
    logs.reserve(gaps.size() - skip);
    for (std::size_t i = skip; i < gaps.size(); ++i) {
        double g = gaps[i];
        if (g <= eps) {
            g = eps;
            fit.saturated = true;
        }
        logs.push_back(std::log(g));
    }

    const double m = static_cast<double>(logs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const double x = static_cast<double>(i);
        sx += x;
        sy += logs[i];
        sxx += x * x;
        sxy += x * logs[i];
        syy += logs[i] * logs[i];
    }
    const double var_x = sxx - sx * sx / m;
    const double var_y = syy - sy * sy / m;
    const double cov = sxy - sx * sy / m;
    const double slope = cov / var_x;
    fit.rate = std::exp(slope);
    fit.r_squared = var_y > 0.0 ? (cov * cov) / (var_x * var_y) : 1.0;
    return fit;
}

} // namespace sdgt
