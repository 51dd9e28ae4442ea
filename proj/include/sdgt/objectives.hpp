// Client objectives.
//
// Two tasks are provided:
//  * LeastSquaresObjective - strongly convex quadratic per client,
//    f_i(x) = (1/(2|D_i|)) ||A_i x - b_i||^2, with AR(1)-correlated feature
//    rows so the global condition number kappa can be steered through the
//    correlation parameter omega.
//  * BlobObjective - multinomial softmax regression on Gaussian class blobs
//    with per-client label palettes; palette-adjacent clients share subnets,
//    which creates controlled cross-subnet heterogeneity.
//
// Both expose full and minibatch stochastic gradients through the common
// Objective interface.  Stochastic draws consume a caller-supplied stream so
// runs stay reproducible.
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "sdgt/rng.hpp"

namespace sdgt {

class Objective {
public:
    virtual ~Objective() = default;
    virtual int dimension() const = 0;
    virtual int num_clients() const = 0;
    virtual double loss(int client, const Eigen::VectorXd& x) const = 0;
    virtual void full_gradient(int client, const Eigen::VectorXd& x,
                               Eigen::VectorXd& out) const = 0;
    // Minibatch gradient over `batch` samples drawn uniformly with
    // replacement from the client's dataset; batch <= 0 means full gradient.
    virtual void stochastic_gradient(int client, const Eigen::VectorXd& x, int batch,
                                     RngStream& rng, Eigen::VectorXd& out) const = 0;

    double global_loss(const Eigen::VectorXd& x) const;
    void global_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
};

// ---------------------------------------------------------------------------
// Least squares task

struct LeastSquaresProblem {
    std::vector<Eigen::MatrixXd> A; // per-client |D_i| x d feature matrices
    std::vector<Eigen::VectorXd> b; // per-client targets
    Eigen::VectorXd ground_truth;   // x0 used to synthesize b
    double omega = 0.0;             // AR(1) feature correlation in [0, 1)
    double noise_var = 0.0;         // variance of the target noise
};

// Feature rows follow a stationary AR(1) chain across coordinates:
//   a_1 = z_1 / sqrt(1 - omega^2),  a_{l+1} = omega a_l + z_{l+1},  z ~ N(0,1),
// so every coordinate has variance 1/(1 - omega^2) and neighbors correlate
// at omega.
// Targets are b = A x0 + noise with x0 ~ N(0, I).
// Throws ConfigError("invalid-omega") unless 0 <= omega < 1.
LeastSquaresProblem generate_ls_problem(int n_clients, int dim, int per_client,
                                        double omega, double noise_var, RngStream& rng);

// Exact minimizer of the average objective via the normal equations.
// Throws NumericError("singular-system") when the pooled Gram matrix is
// numerically singular.
Eigen::VectorXd ls_optimum(const LeastSquaresProblem& p);

struct SmoothnessConstants {
    double L = 0.0;     // max_i lambda_max(A_i^T A_i) / |D_i|
    double mu = 0.0;    // lambda_min of the average Hessian
    double kappa = 0.0; // L / mu
};

SmoothnessConstants smoothness_constants(const LeastSquaresProblem& p);

// Find omega in [0, 0.999] whose realized condition number is within 10% of
// target_kappa, by bisection on a fixed problem instance: every evaluation
// regenerates the problem from a copy of `data_rng`, so kappa(omega) is a
// deterministic increasing function and the calibrated instance coincides
// with the one the caller will generate from the same stream.
// Throws NumericError("unreachable-kappa") if the target lies outside
// [kappa(0), kappa(0.999)] and cannot be bracketed.
double calibrate_omega(double target_kappa, int n_clients, int dim, int per_client,
                       double noise_var, const RngStream& data_rng);

class LeastSquaresObjective : public Objective {
public:
    explicit LeastSquaresObjective(LeastSquaresProblem p);

    int dimension() const override { return static_cast<int>(problem_.ground_truth.size()); }
    int num_clients() const override { return static_cast<int>(problem_.A.size()); }
    double loss(int client, const Eigen::VectorXd& x) const override;
    void full_gradient(int client, const Eigen::VectorXd& x,
                       Eigen::VectorXd& out) const override;
    void stochastic_gradient(int client, const Eigen::VectorXd& x, int batch,
                             RngStream& rng, Eigen::VectorXd& out) const override;

    const LeastSquaresProblem& problem() const { return problem_; }

private:
    LeastSquaresProblem problem_;
    mutable Eigen::VectorXd residual_; // scratch, sized max |D_i|
};

// ---------------------------------------------------------------------------
// Gaussian-blob softmax task

struct BlobTask {
    int num_classes = 0;
    int feature_dim = 2;                  // blob space is planar
    Eigen::MatrixXd centroids;            // num_classes x feature_dim
    std::vector<Eigen::MatrixXd> features; // per client: samples x feature_dim
    std::vector<std::vector<int>> labels;  // per client
    std::vector<std::vector<int>> palettes; // class palette per client
    std::vector<int> subnet_of_client;     // palette-adjacency grouping
};

// Centroids ~ N(0, spread^2 I); each client draws labels from a contiguous
// palette of `palette_size` classes anchored at floor(i * C / n), so clients
// with identical or adjacent palettes are consecutive; consecutive clients
// are grouped into `n_subnets` equal chunks.  Samples are centroid + N(0, I).
BlobTask generate_blob_task(int n_clients, int n_subnets, int num_classes,
                            int per_client, int palette_size, double spread,
                            RngStream& rng);

// Mean cross-entropy gradient of the weight matrix (num_classes x
// (feature_dim + 1), last column the bias) over the given sample indices.
Eigen::MatrixXd softmax_gradient(const BlobTask& task, int client,
                                 const Eigen::MatrixXd& weights,
                                 const std::vector<int>& sample_indices);

class BlobObjective : public Objective {
public:
    explicit BlobObjective(BlobTask task);

    int dimension() const override;
    int num_clients() const override { return static_cast<int>(task_.features.size()); }
    double loss(int client, const Eigen::VectorXd& x) const override;
    void full_gradient(int client, const Eigen::VectorXd& x,
                       Eigen::VectorXd& out) const override;
    void stochastic_gradient(int client, const Eigen::VectorXd& x, int batch,
                             RngStream& rng, Eigen::VectorXd& out) const override;

    const BlobTask& task() const { return task_; }

private:
    BlobTask task_;
};

} // namespace sdgt
