#include "sdgt/objectives.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fmt/format.h>

#include "sdgt/errors.hpp"

namespace sdgt {

double Objective::global_loss(const Eigen::VectorXd& x) const {
    double total = 0.0;
    for (int i = 0; i < num_clients(); ++i) total += loss(i, x);
    return total / num_clients();
}

void Objective::global_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    out = Eigen::VectorXd::Zero(dimension());
    Eigen::VectorXd g(dimension());
    for (int i = 0; i < num_clients(); ++i) {
        full_gradient(i, x, g);
        out += g;
    }
    out /= num_clients();
}

// ---------------------------------------------------------------------------
// Least squares

LeastSquaresProblem generate_ls_problem(int n_clients, int dim, int per_client,
                                        double omega, double noise_var, RngStream& rng) {
    if (omega < 0.0 || omega >= 1.0)
        throw ConfigError(fmt::format("invalid-omega: {} outside [0, 1)", omega));
    if (n_clients < 1 || dim < 1 || per_client < 1)
        throw ConfigError("generate_ls_problem: counts must be >= 1");
    if (noise_var < 0.0)
        throw ConfigError("generate_ls_problem: noise variance must be >= 0");

    LeastSquaresProblem p;
    p.omega = omega;
    p.noise_var = noise_var;
    p.ground_truth.resize(dim);
    for (int l = 0; l < dim; ++l) p.ground_truth(l) = rng.normal();

    const double head_scale = 1.0 / std::sqrt(1.0 - omega * omega);
    const double noise_sd = std::sqrt(noise_var);
    p.A.reserve(static_cast<std::size_t>(n_clients));
    p.b.reserve(static_cast<std::size_t>(n_clients));
    for (int i = 0; i < n_clients; ++i) {
        Eigen::MatrixXd A(per_client, dim);
        for (int r = 0; r < per_client; ++r) {
            // Stationary AR(1) chain across coordinates.
            double prev = rng.normal() * head_scale;
            A(r, 0) = prev;
            for (int l = 1; l < dim; ++l) {
                prev = omega * prev + rng.normal();
                A(r, l) = prev;
            }
        }
        Eigen::VectorXd b = A * p.ground_truth;
        for (int r = 0; r < per_client; ++r) b(r) += noise_sd * rng.normal();
        p.A.push_back(std::move(A));
        p.b.push_back(std::move(b));
    }
    return p;
}

namespace {

// Average Hessian (1/n) sum_i A_i^T A_i / |D_i|.
Eigen::MatrixXd average_hessian(const LeastSquaresProblem& p) {
    const int d = static_cast<int>(p.ground_truth.size());
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < p.A.size(); ++i) {
        G.noalias() += p.A[i].transpose() * p.A[i] / static_cast<double>(p.A[i].rows());
    }
    G /= static_cast<double>(p.A.size());
    return G;
}

} // namespace

Eigen::VectorXd ls_optimum(const LeastSquaresProblem& p) {
    const int d = static_cast<int>(p.ground_truth.size());
    Eigen::MatrixXd G = average_hessian(p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < p.A.size(); ++i) {
        rhs.noalias() += p.A[i].transpose() * p.b[i] / static_cast<double>(p.A[i].rows());
    }
    rhs /= static_cast<double>(p.A.size());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
    double lmin = eig.eigenvalues().minCoeff();
    double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmin > 0.0) || lmin <= 1e-12 * lmax)
        throw NumericError(fmt::format(
            "singular-system: pooled Gram matrix has eigenvalue range [{}, {}]", lmin, lmax));
    return G.ldlt().solve(rhs);
}

SmoothnessConstants smoothness_constants(const LeastSquaresProblem& p) {
    SmoothnessConstants c;
    for (std::size_t i = 0; i < p.A.size(); ++i) {
        Eigen::MatrixXd H = p.A[i].transpose() * p.A[i] / static_cast<double>(p.A[i].rows());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
        c.L = std::max(c.L, eig.eigenvalues().maxCoeff());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(average_hessian(p),
                                                       Eigen::EigenvaluesOnly);
    c.mu = eig.eigenvalues().minCoeff();
    if (!(c.mu > 0.0))
        throw NumericError(fmt::format(
            "singular-system: average Hessian not positive definite (min eigenvalue {})",
            c.mu));
    c.kappa = c.L / c.mu;
    return c;
}

double calibrate_omega(double target_kappa, int n_clients, int dim, int per_client,
                       double noise_var, const RngStream& data_rng) {
    if (target_kappa < 1.0)
        throw ConfigError("calibrate_omega: condition numbers are >= 1");

    // Every evaluation restarts from a copy of data_rng, so the draws match
    // the instance the caller will generate and kappa(omega) is a smooth
    // increasing function of omega alone.
    auto kappa_at = [&](double omega) {
        RngStream r = data_rng;
        LeastSquaresProblem p =
            generate_ls_problem(n_clients, dim, per_client, omega, noise_var, r);
        return smoothness_constants(p).kappa;
    };
    auto within = [&](double kappa) {
        return std::abs(kappa - target_kappa) <= 0.1 * target_kappa;
    };

    double lo = 0.0, hi = 0.999;
    double klo = kappa_at(lo);
    if (within(klo)) return lo;
    double khi = kappa_at(hi);
    if (within(khi)) return hi;
    if (target_kappa < klo || target_kappa > khi)
        throw NumericError(fmt::format(
            "unreachable-kappa: target {} outside attainable range [{}, {}]",
            target_kappa, klo, khi));

    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        double k = kappa_at(mid);
        if (within(k)) return mid;
        (k < target_kappa ? lo : hi) = mid;
    }
    throw NumericError(fmt::format(
        "unreachable-kappa: bisection failed to land within 10% of {}", target_kappa));
}

LeastSquaresObjective::LeastSquaresObjective(LeastSquaresProblem p)
    : problem_(std::move(p)) {
    Eigen::Index rows = 0;
    for (const auto& A : problem_.A) rows = std::max(rows, A.rows());
    residual_.resize(rows);
}

double LeastSquaresObjective::loss(int client, const Eigen::VectorXd& x) const {
    const auto& A = problem_.A[static_cast<std::size_t>(client)];
    const auto& b = problem_.b[static_cast<std::size_t>(client)];
    auto r = residual_.head(A.rows());
    r.noalias() = A * x;
    r -= b;
    return 0.5 * r.squaredNorm() / static_cast<double>(A.rows());
}

void LeastSquaresObjective::full_gradient(int client, const Eigen::VectorXd& x,
                                          Eigen::VectorXd& out) const {
    const auto& A = problem_.A[static_cast<std::size_t>(client)];
    const auto& b = problem_.b[static_cast<std::size_t>(client)];
    auto r = residual_.head(A.rows());
    r.noalias() = A * x;
    r -= b;
    out.noalias() = A.transpose() * r;
    out /= static_cast<double>(A.rows());
}

void LeastSquaresObjective::stochastic_gradient(int client, const Eigen::VectorXd& x,
                                                int batch, RngStream& rng,
                                                Eigen::VectorXd& out) const {
    if (batch <= 0) {
        full_gradient(client, x, out);
        return;
    }
    const auto& A = problem_.A[static_cast<std::size_t>(client)];
    const auto& b = problem_.b[static_cast<std::size_t>(client)];
    const auto rows = static_cast<std::uint64_t>(A.rows());
    out.setZero(x.size());
    for (int s = 0; s < batch; ++s) {
        // i.i.d. uniform with replacement: unbiased for the full gradient.
        auto r = static_cast<Eigen::Index>(rng.uniform_int(rows));
        double err = A.row(r).dot(x) - b(r);
        out.noalias() += err * A.row(r).transpose();
    }
    out /= static_cast<double>(batch);
}

// ---------------------------------------------------------------------------
// Gaussian-blob softmax task

BlobTask generate_blob_task(int n_clients, int n_subnets, int num_classes,
                            int per_client, int palette_size, double spread,
                            RngStream& rng) {
    if (n_clients < 1 || num_classes < 1 || per_client < 1)
        throw ConfigError("generate_blob_task: counts must be >= 1");
    if (palette_size < 1 || palette_size > num_classes)
        throw ConfigError("generate_blob_task: palette size must be in [1, num_classes]");
    if (n_subnets < 1 || n_subnets > n_clients)
        throw ConfigError("generate_blob_task: subnets must be in [1, n_clients]");

    BlobTask t;
    t.num_classes = num_classes;
    t.centroids.resize(num_classes, t.feature_dim);
    for (int c = 0; c < num_classes; ++c)
        for (int f = 0; f < t.feature_dim; ++f) t.centroids(c, f) = spread * rng.normal();

    for (int i = 0; i < n_clients; ++i) {
        int base = static_cast<int>(static_cast<long long>(i) * num_classes / n_clients);
        std::vector<int> palette(static_cast<std::size_t>(palette_size));
        for (int j = 0; j < palette_size; ++j)
            palette[static_cast<std::size_t>(j)] = (base + j) % num_classes;
        t.palettes.push_back(std::move(palette));
        t.subnet_of_client.push_back(
            static_cast<int>(static_cast<long long>(i) * n_subnets / n_clients));

        Eigen::MatrixXd X(per_client, t.feature_dim);
        std::vector<int> y(static_cast<std::size_t>(per_client));
        for (int s = 0; s < per_client; ++s) {
            int label = t.palettes.back()[static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::uint64_t>(palette_size)))];
            y[static_cast<std::size_t>(s)] = label;
            for (int f = 0; f < t.feature_dim; ++f)
                X(s, f) = t.centroids(label, f) + rng.normal();
        }
        t.features.push_back(std::move(X));
        t.labels.push_back(std::move(y));
    }
    return t;
}

namespace {

// Softmax probabilities for one sample; logits shifted by their max.
Eigen::VectorXd softmax_probs(const Eigen::VectorXd& logits) {
    Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
    Eigen::VectorXd expv = shifted.array().exp();
    return expv / expv.sum();
}

Eigen::VectorXd augmented_sample(const BlobTask& task, int client, int s) {
    Eigen::VectorXd xa(task.feature_dim + 1);
    xa.head(task.feature_dim) =
        task.features[static_cast<std::size_t>(client)].row(s).transpose();
    xa(task.feature_dim) = 1.0; // bias input
    return xa;
}

} // namespace

Eigen::MatrixXd softmax_gradient(const BlobTask& task, int client,
                                 const Eigen::MatrixXd& weights,
                                 const std::vector<int>& sample_indices) {
    if (sample_indices.empty())
        throw std::invalid_argument("softmax_gradient: empty sample set");
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(task.num_classes, task.feature_dim + 1);
    for (int s : sample_indices) {
        Eigen::VectorXd xa = augmented_sample(task, client, s);
        Eigen::VectorXd probs = softmax_probs(weights * xa);
        probs(task.labels[static_cast<std::size_t>(client)][static_cast<std::size_t>(s)]) -= 1.0;
        grad.noalias() += probs * xa.transpose();
    }
    return grad / static_cast<double>(sample_indices.size());
}

BlobObjective::BlobObjective(BlobTask task) : task_(std::move(task)) {}

int BlobObjective::dimension() const {
    return task_.num_classes * (task_.feature_dim + 1);
}

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>;

} // namespace

double BlobObjective::loss(int client, const Eigen::VectorXd& x) const {
    RowMajorMap W(x.data(), task_.num_classes, task_.feature_dim + 1);
    const auto& labels = task_.labels[static_cast<std::size_t>(client)];
    double total = 0.0;
    for (int s = 0; s < static_cast<int>(labels.size()); ++s) {
        Eigen::VectorXd logits = W * augmented_sample(task_, client, s);
        double mx = logits.maxCoeff();
        double lse = mx + std::log((logits.array() - mx).exp().sum());
        total += lse - logits(labels[static_cast<std::size_t>(s)]);
    }
    return total / static_cast<double>(labels.size());
}

void BlobObjective::full_gradient(int client, const Eigen::VectorXd& x,
                                  Eigen::VectorXd& out) const {
    RowMajorMap W(x.data(), task_.num_classes, task_.feature_dim + 1);
    std::vector<int> all(task_.labels[static_cast<std::size_t>(client)].size());
    for (std::size_t s = 0; s < all.size(); ++s) all[s] = static_cast<int>(s);
    Eigen::MatrixXd g = softmax_gradient(task_, client, W, all);
    out.resize(dimension());
    for (int c = 0; c < g.rows(); ++c)
        out.segment(c * g.cols(), g.cols()) = g.row(c).transpose();
}

void BlobObjective::stochastic_gradient(int client, const Eigen::VectorXd& x, int batch,
                                        RngStream& rng, Eigen::VectorXd& out) const {
    if (batch <= 0) {
        full_gradient(client, x, out);
        return;
    }
    RowMajorMap W(x.data(), task_.num_classes, task_.feature_dim + 1);
    const auto rows =
        static_cast<std::uint64_t>(task_.labels[static_cast<std::size_t>(client)].size());
    std::vector<int> idx(static_cast<std::size_t>(batch));
    for (int s = 0; s < batch; ++s)
        idx[static_cast<std::size_t>(s)] = static_cast<int>(rng.uniform_int(rows));
    Eigen::MatrixXd g = softmax_gradient(task_, client, W, idx);
    out.resize(dimension());
    for (int c = 0; c < g.rows(); ++c)
        out.segment(c * g.cols(), g.cols()) = g.row(c).transpose();
}

} // namespace sdgt
