// Acceptance gate for the dual-tracking toolkit.  Each criterion runs as its
// own process:  ./acceptance <1..8>  prints exactly one line,
//
//   CRITERION <k>: PASS — <measured details>
//   CRITERION <k>: FAIL — <measured details>
//
// and exits 0 or 1.  Tolerances are pinned inline next to each check; the
// details string always carries the measured values so a failure is
// diagnosable from the ctest log alone.

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "sdgt/algorithms.hpp"
#include "sdgt/analysis.hpp"
#include "sdgt/control.hpp"
#include "sdgt/objectives.hpp"
#include "sdgt/rng.hpp"
#include "sdgt/runner.hpp"
#include "sdgt/topology.hpp"

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace sdgt;

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "; ";
        out += parts[i];
    }
    return out;
}

// A fully assembled least-squares experiment: random geometric subnets plus a
// condition-number-calibrated problem, derived from one master seed the same
// way the experiment harness derives them.
struct LsInstance {
    NetworkTopology topo;
    std::unique_ptr<LeastSquaresObjective> obj;
    VectorXd optimum;
    SmoothnessConstants constants;
    double omega = 0.0;
    double f_star = 0.0;
    double initial_gap = 0.0; // at the all-zeros start
};

LsInstance make_ls_instance(std::uint64_t seed, const std::vector<int>& subnet_sizes,
                            const std::vector<int>& sample_sizes, int dim, int per_client,
                            double target_kappa, double noise_var) {
    LsInstance inst;
    RngStream master(seed);
    inst.topo = build_random_network(subnet_sizes, sample_sizes, 5.0, 0.5, 3.5, master);
    RngStream data = master.substream("data");
    inst.omega = calibrate_omega(target_kappa, inst.topo.n, dim, per_client, noise_var, data);
    LeastSquaresProblem prob =
        generate_ls_problem(inst.topo.n, dim, per_client, inst.omega, noise_var, data);
    inst.constants = smoothness_constants(prob);
    inst.optimum = ls_optimum(prob);
    inst.obj = std::make_unique<LeastSquaresObjective>(std::move(prob));
    inst.f_star = inst.obj->global_loss(inst.optimum);
    inst.initial_gap = inst.obj->global_loss(VectorXd::Zero(dim)) - inst.f_star;
    return inst;
}

// ---------------------------------------------------------------------------
// Criterion 1: geometric decay of the optimality gap on the synthetic
// least-squares task (n=30 in six subnets, K=40, gamma=1e-4, condition
// number ~80, full-batch gradients) at 20%, 40% and 100% sampling.

bool criterion1(std::string& details) {
    const std::vector<int> subnets(6, 5);
    auto inst = make_ls_instance(1, subnets, std::vector<int>(6, 5), 200, 30, 80.0, 0.04);

    struct Rate {
        const char* label;
        int h;
    };
    const Rate rates[] = {{"20%", 1}, {"40%", 2}, {"100%", 5}};

    bool ok = true;
    std::vector<std::string> parts;
    parts.push_back(fmt::format("kappa={:.1f}", inst.constants.kappa));
    for (const Rate& r : rates) {
        NetworkTopology topo =
            assemble_network(inst.topo.mixing, std::vector<int>(6, r.h));
        RunOptions opt;
        opt.gamma = 1e-4;
        opt.rounds = 5000;
        opt.k = 40;
        opt.batch = 0;
        opt.seed = 1;
        opt.optimum = &inst.optimum;
        opt.stop_gap = 1e-8 * inst.initial_gap; // stop early if the target is reached
        auto recs = run_sdgt(*inst.obj, topo, opt);

        std::vector<double> gaps;
        gaps.reserve(recs.size());
        for (const auto& rec : recs) gaps.push_back(rec.gap);
        RateFit fit = geometric_rate_fit(gaps, 0.5); // fit over the last 50%

        const double ratio = recs.back().gap / inst.initial_gap;
        const bool fit_ok = fit.rate < 1.0 && fit.r_squared >= 0.98;
        const bool gap_ok = ratio <= 1e-8;
        ok = ok && fit_ok && gap_ok;
        parts.push_back(fmt::format("{}: c={:.6f} r2={:.5f}{}, final/initial={:.2e}{}",
                                    r.label, fit.rate, fit.r_squared,
                                    fit_ok ? "" : " [need c<1, r2>=0.98]", ratio,
                                    gap_ok ? "" : " [need <=1e-8]"));
    }
    details = join(parts);
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 2: baseline separation at condition number ~800 and 40% sampling.
// The tracker-free average plateaus (final gap >= 100x ours); the
// control-variate baseline decays geometrically but needs >= 1.2x our rounds
// to reach gap 1e-4.  All orderings must hold on three seeds.

bool criterion2(std::string& details) {
    const std::vector<int> subnets(6, 5);
    const std::vector<int> h40(6, 2);
    const int T = 20000;

    bool ok = true;
    std::vector<std::string> parts;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto inst = make_ls_instance(seed, subnets, h40, 200, 30, 800.0, 0.04);
        RunOptions opt;
        opt.gamma = 1e-4;
        opt.rounds = T;
        opt.k = 40;
        opt.batch = 0;
        opt.seed = seed;
        opt.optimum = &inst.optimum;

        auto gt = run_sdgt(*inst.obj, inst.topo, opt);
        auto fed = run_sd_fedavg(*inst.obj, inst.topo, opt);

        int r_gt = -1;
        for (const auto& rec : gt)
            if (rec.gap <= 1e-4) {
                r_gt = rec.t;
                break;
            }
        const double gap_gt = gt.back().gap;
        const double gap_fed = fed.back().gap;
        const bool sep_ok = r_gt > 0 && gap_fed >= 100.0 * gap_gt;

        // The control-variate baseline only needs to run until 1.2x our
        // crossing round: reaching gap 1e-4 before that refutes the ordering,
        // and not reaching it within the cap confirms it.
        bool slow_ok = false;
        bool geo_ok = false;
        std::string slow_note = "dual-tracking never reached 1e-4";
        if (r_gt > 0) {
            const int cap = static_cast<int>(std::ceil(1.2 * r_gt));
            RunOptions sopt = opt;
            sopt.rounds = cap;
            sopt.stop_gap = 1e-4;
            auto sc = run_scaffold(*inst.obj, inst.topo, sopt);
            std::vector<double> sgaps;
            sgaps.reserve(sc.size());
            for (const auto& rec : sc) sgaps.push_back(rec.gap);
            geo_ok = geometric_rate_fit(sgaps, 0.2).rate < 1.0;
            if (sc.back().gap <= 1e-4) {
                slow_ok = static_cast<double>(sc.back().t) >= 1.2 * r_gt;
                slow_note = fmt::format("rounds to 1e-4: {} vs ours {} (ratio {:.3f}{})",
                                        sc.back().t, r_gt,
                                        static_cast<double>(sc.back().t) / r_gt,
                                        slow_ok ? "" : ", need >=1.2");
            } else {
                slow_ok = true;
                slow_note = fmt::format("rounds to 1e-4: >{} vs ours {} (censored pass)",
                                        cap, r_gt);
            }
        }
        ok = ok && sep_ok && slow_ok && geo_ok;
        parts.push_back(fmt::format(
            "seed {}: plateau/final={:.1e}/{:.1e} ({:.0f}x{}), {}{}", seed, gap_fed,
            gap_gt, gap_fed / gap_gt, sep_ok ? "" : ", need >=100x", slow_note,
            geo_ok ? "" : " [no geometric decay]"));
    }
    details = join(parts);
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 3: the one-round contraction certificate holds at half the
// admissible step for 100 random parameter tuples, in under a second.

bool criterion3(std::string& details) {
    RngStream rng(7);
    const auto start = std::chrono::steady_clock::now();

    bool ok = true;
    double worst_slack = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        BoundParams bp;
        bp.p = rng.uniform(0.1, 1.0);
        bp.q = rng.uniform(0.1, 1.0);
        bp.K = 1 + static_cast<int>(rng.uniform_int(20));
        bp.L = rng.uniform(0.5, 10.0);
        bp.mu = bp.L * (1.0 - rng.uniform()); // in (0, L]
        bp.sigma2 = 0.0;
        bp.gamma = 0.0; // auto: half the admissible bound
        ContractionCertificate cert = build_certificate(bp);
        const double slack = cert.norm_A - cert.contraction_target;
        worst_slack = std::max(worst_slack, slack);
        if (!(cert.norm_A <= cert.contraction_target * (1.0 + 1e-12))) ok = false;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= 1.0) ok = false;
    details = fmt::format(
        "100 tuples at gamma=0.5*gamma_bar: worst ||A||_1 minus target = {:.3e} "
        "(tol 1e-12 rel), elapsed {:.3f}s{}",
        worst_slack, secs, secs < 1.0 ? "" : " [need <1s]");
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: exact invariants on a 3-subnet, 30-client run.  Partial
// sampling + minibatch gradients: per-subnet z sums stay zero and every
// mixing block is doubly stochastic and contraction-verified.  Full sampling
// + exact gradients: y sums to zero and the server move equals the mean
// client report, round for round.

bool criterion4(std::string& details) {
    const std::vector<int> subnets{10, 10, 10};
    auto inst = make_ls_instance(4, subnets, {3, 4, 5}, 40, 30, 80.0, 0.04);
    const double gamma = 1e-4;
    const int K = 5;
    const int T = 200;
    const int dim = inst.obj->dimension();

    bool ok = true;
    std::vector<std::string> parts;

    // Mixing blocks: doubly stochastic within 1e-12, contraction on 100
    // random vectors per subnet.
    {
        double worst_stoch = 0.0;
        int contraction_failures = 0;
        RngStream wrng(404);
        for (int s = 0; s < inst.topo.num_subnets(); ++s) {
            const MatrixXd& W = inst.topo.mixing[static_cast<std::size_t>(s)];
            for (int r = 0; r < W.rows(); ++r) {
                worst_stoch = std::max(worst_stoch, std::abs(W.row(r).sum() - 1.0));
                worst_stoch = std::max(worst_stoch, std::abs(W.col(r).sum() - 1.0));
            }
            if (W.minCoeff() < 0.0) ok = false;
            RngStream sub = wrng.substream("wcheck", static_cast<std::uint64_t>(s));
            for (int trial = 0; trial < 100; ++trial) {
                MatrixXd X(W.rows(), 1);
                for (int r = 0; r < W.rows(); ++r) X(r, 0) = sub.normal();
                if (!verify_mixing_contraction(W, X, inst.topo.rho[static_cast<std::size_t>(s)]))
                    ++contraction_failures;
            }
        }
        if (worst_stoch > 1e-12 || contraction_failures > 0) ok = false;
        parts.push_back(fmt::format("mixing: stochasticity dev {:.1e} (tol 1e-12), "
                                    "contraction failures {}/300",
                                    worst_stoch, contraction_failures));
    }

    // Partial sampling, minibatch gradients: z conservation per subnet.
    {
        RngStream master(4);
        GradientEvaluator grads(*inst.obj, 5, master);
        RngStream sampling = master.substream("sampling");
        SdgtState st = sdgt_init(VectorXd::Zero(dim), *inst.obj, inst.topo, grads);
        double worst_z = 0.0;
        for (int t = 1; t <= T; ++t) {
            for (int k = 0; k < K; ++k) within_subnet_round(st, inst.topo, grads, gamma);
            update_z_terms(st, inst.topo, K, gamma);
            auto sampled = sample_clients(inst.topo, inst.topo.sample_sizes, sampling);
            global_aggregate(st, inst.topo, sampled, K, gamma);
            for (int s = 0; s < inst.topo.num_subnets(); ++s) {
                VectorXd zsum = VectorXd::Zero(dim);
                double scale = 0.0;
                for (int li = 0; li < subnets[static_cast<std::size_t>(s)]; ++li) {
                    const VectorXd& z =
                        st.clients[static_cast<std::size_t>(inst.topo.offsets[static_cast<std::size_t>(s)] + li)].z;
                    zsum += z;
                    scale += z.norm();
                }
                worst_z = std::max(worst_z, zsum.norm() / (1.0 + scale));
            }
        }
        if (worst_z > 1e-10) ok = false;
        parts.push_back(fmt::format("stochastic partial run: worst per-subnet "
                                    "|sum z|/scale {:.1e} (tol 1e-10)",
                                    worst_z));
    }

    // Full sampling, exact gradients: y conservation and the server identity
    //   x_g(t) = x_g(t-1) + mean_i(x_i_end - x_i_start + K*gamma*y_i).
    {
        NetworkTopology full = assemble_network(inst.topo.mixing, subnets);
        RngStream master(5);
        GradientEvaluator grads(*inst.obj, 0, master);
        RngStream sampling = master.substream("sampling");
        SdgtState st = sdgt_init(VectorXd::Zero(dim), *inst.obj, full, grads);
        const int n = full.n;
        double worst_id = 0.0;
        double worst_y = 0.0;
        for (int t = 1; t <= T; ++t) {
            const VectorXd xg_prev = st.server.x_g;
            for (int k = 0; k < K; ++k) within_subnet_round(st, full, grads, gamma);
            update_z_terms(st, full, K, gamma);

            VectorXd pred = VectorXd::Zero(dim);
            for (int i = 0; i < n; ++i) {
                const ClientState& c = st.clients[static_cast<std::size_t>(i)];
                pred += c.x - c.x_start + K * gamma * c.y;
            }
            pred = xg_prev + pred / n;

            auto sampled = sample_clients(full, full.sample_sizes, sampling);
            global_aggregate(st, full, sampled, K, gamma);

            worst_id = std::max(worst_id,
                                (st.server.x_g - pred).norm() / (1.0 + pred.norm()));
            VectorXd ysum = VectorXd::Zero(dim);
            double yscale = 0.0;
            for (int i = 0; i < n; ++i) {
                ysum += st.clients[static_cast<std::size_t>(i)].y;
                yscale += st.clients[static_cast<std::size_t>(i)].y.norm();
            }
            worst_y = std::max(worst_y, ysum.norm() / (1.0 + yscale));
        }
        if (worst_id > 1e-10 || worst_y > 1e-10) ok = false;
        parts.push_back(fmt::format("deterministic full-sampling run: server "
                                    "identity dev {:.1e}, |sum y|/scale {:.1e} "
                                    "(tol 1e-10)",
                                    worst_id, worst_y));
    }

    details = join(parts);
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 5: structural reductions.  (a) Singleton subnets keep z at exact
// zero.  (b) One complete-graph subnet with K=1 keeps psi at exact zero and
// reproduces a standalone adapt-then-combine gradient-tracking trajectory.

bool criterion5(std::string& details) {
    bool ok = true;
    std::vector<std::string> parts;

    // (a) every client its own subnet, full sampling.
    {
        const int n = 8;
        const int dim = 20;
        RngStream master(6);
        NetworkTopology topo = build_random_network(std::vector<int>(n, 1),
                                                    std::vector<int>(n, 1), 5.0, 0.5,
                                                    3.5, master);
        RngStream data = master.substream("data");
        LeastSquaresProblem prob = generate_ls_problem(n, dim, 25, 0.3, 0.1, data);
        LeastSquaresObjective obj(std::move(prob));

        GradientEvaluator grads(obj, 0, master);
        RngStream sampling = master.substream("sampling");
        SdgtState st = sdgt_init(VectorXd::Zero(dim), obj, topo, grads);
        const double gamma = 0.005;
        const int K = 3;
        double worst = 0.0;
        for (int t = 1; t <= 100; ++t) {
            for (int k = 0; k < K; ++k) within_subnet_round(st, topo, grads, gamma);
            update_z_terms(st, topo, K, gamma);
            auto sampled = sample_clients(topo, topo.sample_sizes, sampling);
            global_aggregate(st, topo, sampled, K, gamma);
            for (const ClientState& c : st.clients) worst = std::max(worst, c.z.norm());
        }
        if (worst != 0.0) ok = false;
        parts.push_back(fmt::format("singleton subnets: max |z| over 100 rounds = {:g} "
                                    "(must be exactly 0)",
                                    worst));
    }

    // (b) one complete-graph subnet, K=1, full sampling, against an
    // independently coded gradient-tracking loop:
    //   x_i <- sum_j W_ij (x_j - gamma s_j)
    //   s_i <- sum_j W_ij s_j + grad_i(x_new) - grad_i(x_old)
    {
        const int n = 8;
        const int dim = 20;
        RngStream master(16);
        RngStream data = master.substream("data");
        LeastSquaresProblem prob = generate_ls_problem(n, dim, 25, 0.3, 0.1, data);
        LeastSquaresObjective obj(std::move(prob));

        const MatrixXd W = MatrixXd::Constant(n, n, 1.0 / n);
        NetworkTopology topo = assemble_network({W}, {n});
        GradientEvaluator grads(obj, 0, master);
        SdgtState st = sdgt_init(VectorXd::Zero(dim), obj, topo, grads);
        std::vector<std::vector<int>> all(1);
        for (int i = 0; i < n; ++i) all[0].push_back(i);

        const double gamma = 0.02;
        std::vector<VectorXd> rx(n, VectorXd::Zero(dim)), rs(n), half(n), new_x(n),
            new_s(n);
        VectorXd g(dim);
        for (int i = 0; i < n; ++i) {
            obj.full_gradient(i, rx[static_cast<std::size_t>(i)], g);
            rs[static_cast<std::size_t>(i)] = g;
        }

        double worst_diff = 0.0;
        double worst_psi = 0.0;
        for (int t = 1; t <= 100; ++t) {
            within_subnet_round(st, topo, grads, gamma);
            update_z_terms(st, topo, 1, gamma);
            global_aggregate(st, topo, all, 1, gamma);
            worst_psi = std::max(worst_psi, st.server.psi[0].norm());

            for (int i = 0; i < n; ++i)
                half[static_cast<std::size_t>(i)] =
                    rx[static_cast<std::size_t>(i)] - gamma * rs[static_cast<std::size_t>(i)];
            for (int i = 0; i < n; ++i) {
                VectorXd nx = VectorXd::Zero(dim), ns = VectorXd::Zero(dim);
                for (int j = 0; j < n; ++j) {
                    nx += W(i, j) * half[static_cast<std::size_t>(j)];
                    ns += W(i, j) * rs[static_cast<std::size_t>(j)];
                }
                obj.full_gradient(i, nx, g);
                ns += g;
                obj.full_gradient(i, rx[static_cast<std::size_t>(i)], g);
                ns -= g;
                new_x[static_cast<std::size_t>(i)] = std::move(nx);
                new_s[static_cast<std::size_t>(i)] = std::move(ns);
            }
            rx.swap(new_x);
            rs.swap(new_s);

            for (int i = 0; i < n; ++i)
                worst_diff = std::max(worst_diff,
                                      (st.clients[static_cast<std::size_t>(i)].x -
                                       rx[static_cast<std::size_t>(i)])
                                          .norm());
        }
        if (worst_psi != 0.0 || worst_diff > 1e-10) ok = false;
        parts.push_back(fmt::format("single subnet, K=1: max |psi| = {:g} (must be "
                                    "exactly 0), max trajectory deviation from the "
                                    "tracking reference = {:.1e} (tol 1e-10)",
                                    worst_psi, worst_diff));
    }

    details = join(parts);
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 6: the schedule solver against a dense brute-force oracle, the
// tightness of the sampling-level relaxation, and energy monotonicity in the
// energy weight.

bool criterion6(std::string& details) {
    bool ok = true;
    std::vector<std::string> parts;

    // 100 random instances against a 10x denser grid over every K.
    {
        RngStream rng(2024);
        const int k_max = 30;
        double worst_excess = 0.0;
        double worst_tight = 0.0;
        int floor_saturated = 0;
        for (int instance = 0; instance < 100; ++instance) {
            ControlLambdas l;
            l.l1 = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
            l.l2 = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
            l.l3 = std::exp(rng.uniform(std::log(1e-6), std::log(1.0)));
            ControlCosts c;
            const int S = 1 + static_cast<int>(rng.uniform_int(4));
            for (int s = 0; s < S; ++s) c.energy.push_back(rng.uniform(1.0, 100.0));
            c.delta = std::exp(rng.uniform(std::log(1e-3), std::log(2.0)));
            std::vector<int> sizes;
            for (int s = 0; s < S; ++s) sizes.push_back(2 + static_cast<int>(rng.uniform_int(12)));
            const double h = std::exp(rng.uniform(std::log(1e-4), std::log(10.0)));

            ControlSolution sol = solve_control(h, l, c, sizes, k_max);

            double best = std::numeric_limits<double>::infinity();
            for (int K = 1; K <= k_max; ++K)
                for (int j = 1; j <= 2000; ++j)
                    best = std::min(best,
                                    control_objective(j / 2000.0, K, h, l, c, sizes));
            worst_excess = std::max(worst_excess, sol.objective / best - 1.0);
            if (!(sol.objective <= best * 1.01 + 1e-12)) ok = false;

            // Tightness of the relaxed sampling level: every skip fraction is
            // the largest feasible one, and min_s(1 - beta_s^2) returns the
            // solver's p except when the one-client-per-subnet floor binds
            // everywhere (then it equals the floor's own level).
            auto tight = beta_for_p(sol.p, sizes);
            for (std::size_t s = 0; s < tight.size(); ++s)
                if (std::abs(sol.beta[s] - tight[s]) > 1e-12) ok = false;
            double realized = 1.0;
            double floor_level = 1.0;
            bool floored = true;
            for (std::size_t s = 0; s < sizes.size(); ++s) {
                realized = std::min(realized, 1.0 - sol.beta[s] * sol.beta[s]);
                const double cap = (sizes[s] - 1.0) / sizes[s];
                floor_level = std::min(floor_level, 1.0 - cap * cap);
                if (sol.beta[s] < cap - 1e-12) floored = false;
            }
            const double target = floored ? std::max(sol.p, floor_level) : sol.p;
            worst_tight = std::max(worst_tight, std::abs(realized - target));
            if (std::abs(realized - target) > 1e-12) ok = false;
            if (floored && floor_level > sol.p + 1e-12) ++floor_saturated;
        }
        parts.push_back(fmt::format("oracle: worst objective excess {:.2e} (tol 1%), "
                                    "worst tightness dev {:.1e} (tol 1e-12, sampling "
                                    "floor bound everywhere on {}/100 instances)",
                                    worst_excess, worst_tight, floor_saturated));
    }

    // Larger energy weight never buys more energy.
    {
        ControlLambdas l{1.0, 1.0, 0.0};
        ControlCosts c;
        c.energy = {5.0, 2.0, 8.0};
        c.delta = 0.05;
        const std::vector<int> sizes{4, 6, 10};
        const double h = 0.5;
        double prev = std::numeric_limits<double>::infinity();
        bool monotone = true;
        for (int i = 0; i < 10; ++i) {
            l.l3 = std::pow(10.0, -4.0 + 4.5 * i / 9.0);
            ControlSolution sol = solve_control(h, l, c, sizes, 30);
            double spend = 0.0;
            for (std::size_t s = 0; s < sizes.size(); ++s)
                spend += (1.0 - sol.beta[s]) * c.energy[s] + sol.K * c.delta * c.energy[s];
            if (spend > prev * (1.0 + 1e-12)) monotone = false;
            prev = spend;
        }
        if (!monotone) ok = false;
        parts.push_back(fmt::format("energy-weight sweep: spend monotone "
                                    "non-increasing over 10 points = {}",
                                    monotone));
    }

    details = join(parts);
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 7: the adaptive schedule against a fixed 40%-sampling, K=3
// schedule at matched cumulative energy.  Cheap gossip (delta=0.01) must win
// outright; expensive gossip (delta=1) must stay within 2x.  Three seeds.

bool criterion7(std::string& details) {
    const std::vector<int> subnets{10, 10, 10};
    const std::vector<int> fixed_h{4, 4, 4};
    const int T = 2200;

    bool ok = true;
    std::vector<std::string> parts;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto inst = make_ls_instance(seed, subnets, fixed_h, 200, 30, 80.0, 0.04);
        ControlCosts costs;
        RngStream energy = RngStream(seed).substream("energy");
        for (std::size_t s = 0; s < subnets.size(); ++s)
            costs.energy.push_back(energy.uniform(1.0, 100.0));

        for (double delta : {0.01, 1.0}) {
            costs.delta = delta;

            RunOptions fixed_opt;
            fixed_opt.gamma = 1e-4;
            fixed_opt.rounds = T;
            fixed_opt.k = 3;
            fixed_opt.batch = 0;
            fixed_opt.seed = seed;
            fixed_opt.optimum = &inst.optimum;
            fixed_opt.costs = &costs;
            auto fixed = run_sdgt(*inst.obj, inst.topo, fixed_opt);

            ControllerConfig controller;
            controller.lambdas = ControlLambdas{1.0, 0.1, 1e-5};
            controller.k_max = 50;
            controller.cadence = 1;
            controller.initial_k = 1;
            controller.initial_sample_sizes = {2, 2, 2};
            RunOptions ctrl_opt = fixed_opt;
            ctrl_opt.k = 1;
            ctrl_opt.controller = &controller;
            auto ctrl = run_sdgt(*inst.obj, inst.topo, ctrl_opt);

            // Compare gaps at the largest energy budget both runs spent.
            const auto total = [](const RoundRecord& r) {
                return r.ds_energy + r.d2d_energy;
            };
            const double budget = std::min(total(fixed.back()), total(ctrl.back()));
            const auto gap_at = [&](const std::vector<RoundRecord>& recs) {
                double gap = std::numeric_limits<double>::quiet_NaN();
                for (const auto& rec : recs) {
                    if (total(rec) > budget * (1.0 + 1e-12)) break;
                    gap = rec.gap;
                }
                return gap;
            };
            const double gap_fixed = gap_at(fixed);
            const double gap_ctrl = gap_at(ctrl);
            const double ratio = gap_ctrl / gap_fixed;

            bool check;
            if (delta == 0.01)
                check = ratio <= 1.0;
            else
                check = ratio >= 0.5 && ratio <= 2.0;
            ok = ok && check;
            parts.push_back(fmt::format("seed {} delta={}: adaptive/fixed gap ratio "
                                        "{:.3f}{}",
                                        seed, delta, ratio,
                                        check ? ""
                                              : (delta == 0.01 ? " [need <=1]"
                                                               : " [need within 2x]")));
        }
    }
    details = join(parts);
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 8: explicit scope statement.

bool criterion8(std::string& details) {
    details =
        "image-benchmark accuracy curves (MNIST, CIFAR-10, CIFAR-100) are "
        "intentionally not reproduced by this toolkit; criteria 1, 2 and 7 on the "
        "synthetic least-squares task plus the invariant suites (criteria 4-5) "
        "stand in for them";
    return true;
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <criterion 1..8>\n");
        return 2;
    }
    const int crit = std::atoi(argv[1]);
    bool pass = false;
    std::string details;
    try {
        switch (crit) {
            case 1: pass = criterion1(details); break;
            case 2: pass = criterion2(details); break;
            case 3: pass = criterion3(details); break;
            case 4: pass = criterion4(details); break;
            case 5: pass = criterion5(details); break;
            case 6: pass = criterion6(details); break;
            case 7: pass = criterion7(details); break;
            case 8: pass = criterion8(details); break;
            default:
                std::fprintf(stderr, "usage: acceptance <criterion 1..8>\n");
                return 2;
        }
    } catch (const std::exception& e) {
        pass = false;
        details = fmt::format("unexpected exception: {}", e.what());
    }
    fmt::print("CRITERION {}: {} — {}\n", crit, pass ? "PASS" : "FAIL", details);
    return pass ? 0 : 1;
}
