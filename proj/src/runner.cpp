#include "sdgt/runner.hpp"

#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "sdgt/algorithms.hpp"
#include "sdgt/errors.hpp"

namespace sdgt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void validate_common(const Objective& obj, const NetworkTopology& topo,
                     const RunOptions& opt) {
    if (obj.num_clients() != topo.n)
        throw ConfigError(fmt::format("run: objective has {} clients, topology has {}",
                                      obj.num_clients(), topo.n));
    if (!(opt.gamma > 0.0)) throw ConfigError("run: gamma must be positive");
    if (opt.rounds < 0) throw ConfigError("run: rounds must be >= 0");
    if (opt.k < 1 && !opt.controller) throw ConfigError("run: k must be >= 1");
    if (opt.costs && opt.costs->energy.size() != static_cast<std::size_t>(topo.num_subnets()))
        throw ConfigError("run: one energy cost per subnet required");
    if (opt.stop_gap >= 0.0 && !opt.optimum)
        throw ConfigError("run: stop_gap needs a known optimum");
    if (opt.x0 && opt.x0->size() != obj.dimension())
        throw ConfigError("run: x0 dimension mismatch");
    if (opt.optimum && opt.optimum->size() != obj.dimension())
        throw ConfigError("run: optimum dimension mismatch");
}

double realized_p(const std::vector<int>& h, const std::vector<int>& m) {
    double p = 1.0;
    for (std::size_t s = 0; s < h.size(); ++s) {
        double beta = 1.0 - static_cast<double>(h[s]) / static_cast<double>(m[s]);
        p = std::min(p, 1.0 - beta * beta);
    }
    return p;
}

// Gap/grad_norm at the current global model; caches F(optimum).
struct GapEvaluator {
    const Objective& obj;
    const Eigen::VectorXd* optimum;
    double f_star;
    Eigen::VectorXd grad;

    GapEvaluator(const Objective& o, const Eigen::VectorXd* opt)
        : obj(o), optimum(opt),
          f_star(opt ? o.global_loss(*opt) : std::numeric_limits<double>::quiet_NaN()) {}

    void fill(const Eigen::VectorXd& x, RoundRecord& rec) {
        rec.gap = optimum ? obj.global_loss(x) - f_star
                          : std::numeric_limits<double>::quiet_NaN();
        obj.global_gradient(x, grad);
        rec.grad_norm = grad.squaredNorm();
    }
};

} // namespace

std::vector<RoundRecord> run_sdgt(const Objective& obj, const NetworkTopology& topo,
                                  const RunOptions& opt) {
    validate_common(obj, topo, opt);
    if (opt.controller && !opt.costs)
        throw ConfigError("run: the controller needs a cost model");

    const auto start = Clock::now();
    RngStream master(opt.seed);
    GradientEvaluator grads(obj, opt.batch, master);
    RngStream sampling = master.substream("sampling");

    const Eigen::VectorXd x0 =
        opt.x0 ? *opt.x0 : Eigen::VectorXd::Zero(obj.dimension()).eval();
    SdgtState st = sdgt_init(x0, obj, topo, grads);
    GapEvaluator gap_eval(obj, opt.optimum);

    // Current schedule; the controller may change it between rounds.
    std::vector<int> h = topo.sample_sizes;
    int K = opt.k;
    if (opt.controller) {
        if (opt.controller->initial_k < 1 || opt.controller->initial_k > opt.controller->k_max)
            throw ConfigError("run: initial_k outside [1, k_max]");
        if (opt.controller->cadence < 1) throw ConfigError("run: cadence must be >= 1");
        K = opt.controller->initial_k;
        if (!opt.controller->initial_sample_sizes.empty()) {
            if (opt.controller->initial_sample_sizes.size() !=
                static_cast<std::size_t>(topo.num_subnets()))
                throw ConfigError("run: one initial sample size per subnet required");
            h = opt.controller->initial_sample_sizes;
        }
    }
    double p_now = realized_p(h, topo.subnet_sizes);

    std::vector<RoundRecord> records;
    records.reserve(static_cast<std::size_t>(opt.rounds));
    std::vector<Eigen::VectorXd> end_models(static_cast<std::size_t>(topo.n));
    std::vector<Eigen::VectorXd> psi_prev;
    double ds_cum = 0.0, d2d_cum = 0.0;

    for (int t = 1; t <= opt.rounds; ++t) {
        st.delta_accum = 0.0;
        for (int k = 0; k < K; ++k) within_subnet_round(st, topo, grads, opt.gamma);
        update_z_terms(st, topo, K, opt.gamma);

        auto sampled = sample_clients(topo, h, sampling);
        for (int i = 0; i < topo.n; ++i)
            end_models[static_cast<std::size_t>(i)] = st.clients[static_cast<std::size_t>(i)].x;
        psi_prev = st.server.psi;
        global_aggregate(st, topo, sampled, K, opt.gamma);

        RoundRecord rec;
        rec.t = t;
        gap_eval.fill(st.server.x_g, rec);
        rec.delta_t = st.delta_accum / static_cast<double>(topo.n);
        rec.gamma_t = dispersion(end_models, st.server.x_g);
        {
            std::vector<const Eigen::VectorXd*> Y, Z;
            Y.reserve(st.clients.size());
            Z.reserve(st.clients.size());
            for (const auto& c : st.clients) {
                Y.push_back(&c.y);
                Z.push_back(&c.z);
            }
            std::tie(rec.y_t, rec.z_t) =
                tracking_residuals(Y, Z, st.server.x_g, obj, topo);
        }
        rec.k_t = K;
        rec.p_t = p_now;
        rec.h_s = h;
        if (opt.costs) {
            auto [ds, d2d] =
                round_energy(h, topo.subnet_sizes, opt.costs->energy, K, opt.costs->delta);
            ds_cum += ds;
            d2d_cum += d2d;
        }
        rec.ds_energy = ds_cum;
        rec.d2d_energy = d2d_cum;
        rec.wall_time_s = seconds_since(start);
        records.push_back(std::move(rec));

        if (opt.controller) {
            double y_hat = estimate_y_hat(psi_prev, st.server.psi);
            std::vector<std::vector<Eigen::VectorXd>> sampled_models(sampled.size());
            for (std::size_t s = 0; s < sampled.size(); ++s)
                for (int j : sampled[s])
                    sampled_models[s].push_back(end_models[static_cast<std::size_t>(j)]);
            double gamma_hat = estimate_gamma_hat(sampled_models, st.server.x_g);
            double h_hat = update_h_hat(t, opt.controller->lambdas.l1, K, opt.gamma, p_now,
                                        y_hat, gamma_hat);
            if (t % opt.controller->cadence == 0) {
                ControlSolution sol =
                    solve_control(h_hat, opt.controller->lambdas, *opt.costs,
                                  topo.subnet_sizes, opt.controller->k_max);
                AppliedControl applied = apply_control(sol.beta, topo.subnet_sizes);
                h = applied.sample_sizes;
                p_now = applied.realized_p;
                K = sol.K;
            }
        }

        if (opt.stop_gap >= 0.0 && records.back().gap <= opt.stop_gap) break;
    }
    return records;
}

std::vector<RoundRecord> run_sd_fedavg(const Objective& obj, const NetworkTopology& topo,
                                       const RunOptions& opt) {
    validate_common(obj, topo, opt);
    if (opt.controller)
        throw ConfigError("run: the controller applies to the dual-tracking method only");

    const auto start = Clock::now();
    RngStream master(opt.seed);
    GradientEvaluator grads(obj, opt.batch, master);
    RngStream sampling = master.substream("sampling");
    GapEvaluator gap_eval(obj, opt.optimum);

    const auto d = obj.dimension();
    const Eigen::VectorXd x0 = opt.x0 ? *opt.x0 : Eigen::VectorXd::Zero(d).eval();
    std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(topo.n), x0);
    std::vector<Eigen::VectorXd> half(static_cast<std::size_t>(topo.n),
                                      Eigen::VectorXd(d));
    Eigen::VectorXd x_g = x0, grad_tmp(d);
    const int K = opt.k;

    std::vector<RoundRecord> records;
    records.reserve(static_cast<std::size_t>(opt.rounds));
    double ds_cum = 0.0, d2d_cum = 0.0;

    for (int t = 1; t <= opt.rounds; ++t) {
        double delta_accum = 0.0;
        for (int k = 0; k < K; ++k) {
            for (int i = 0; i < topo.n; ++i) {
                delta_accum += (x[static_cast<std::size_t>(i)] - x_g).squaredNorm();
                grads.gradient(i, x[static_cast<std::size_t>(i)], grad_tmp);
                half[static_cast<std::size_t>(i)] =
                    x[static_cast<std::size_t>(i)] - opt.gamma * grad_tmp;
            }
            for (int s = 0; s < topo.num_subnets(); ++s) {
                const int off = topo.offsets[static_cast<std::size_t>(s)];
                const int m = topo.subnet_sizes[static_cast<std::size_t>(s)];
                const Eigen::MatrixXd& W = topo.mixing[static_cast<std::size_t>(s)];
                for (int li = 0; li < m; ++li) {
                    Eigen::VectorXd& out = x[static_cast<std::size_t>(off + li)];
                    out.setZero();
                    for (int lj = 0; lj < m; ++lj)
                        out.noalias() += W(li, lj) * half[static_cast<std::size_t>(off + lj)];
                }
            }
        }

        auto sampled = sample_clients(topo, topo.sample_sizes, sampling);
        std::vector<Eigen::VectorXd> end_models = x;
        x_g.setZero();
        for (int s = 0; s < topo.num_subnets(); ++s) {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
            for (int j : sampled[static_cast<std::size_t>(s)])
                mean += x[static_cast<std::size_t>(j)];
            x_g += mean / static_cast<double>(sampled[static_cast<std::size_t>(s)].size());
        }
        x_g /= static_cast<double>(topo.num_subnets());
        for (const auto& ids : sampled)
            for (int j : ids) x[static_cast<std::size_t>(j)] = x_g;

        RoundRecord rec;
        rec.t = t;
        gap_eval.fill(x_g, rec);
        rec.delta_t = delta_accum / static_cast<double>(topo.n);
        rec.gamma_t = dispersion(end_models, x_g);
        {
            // Tracker-free: the residual formulas apply with zero trackers.
            std::vector<const Eigen::VectorXd*> none(static_cast<std::size_t>(topo.n),
                                                     nullptr);
            std::tie(rec.y_t, rec.z_t) = tracking_residuals(none, none, x_g, obj, topo);
        }
        rec.k_t = K;
        rec.p_t = topo.p;
        rec.h_s = topo.sample_sizes;
        if (opt.costs) {
            auto [ds, d2d] = round_energy(topo.sample_sizes, topo.subnet_sizes,
                                          opt.costs->energy, K, opt.costs->delta);
            ds_cum += ds;
            d2d_cum += d2d;
        }
        rec.ds_energy = ds_cum;
        rec.d2d_energy = d2d_cum;
        rec.wall_time_s = seconds_since(start);
        records.push_back(std::move(rec));

        if (opt.stop_gap >= 0.0 && records.back().gap <= opt.stop_gap) break;
    }
    return records;
}

std::vector<RoundRecord> run_scaffold(const Objective& obj, const NetworkTopology& topo,
                                      const RunOptions& opt) {
    validate_common(obj, topo, opt);
    if (opt.controller)
        throw ConfigError("run: the controller applies to the dual-tracking method only");

    const auto start = Clock::now();
    RngStream master(opt.seed);
    GradientEvaluator grads(obj, opt.batch, master);
    RngStream sampling = master.substream("sampling");
    GapEvaluator gap_eval(obj, opt.optimum);

    const auto d = obj.dimension();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd x = opt.x0 ? *opt.x0 : zero;
    Eigen::VectorXd c = zero, grad_tmp(d), y(d), dy_sum(d), dc_sum(d);
    std::vector<Eigen::VectorXd> ci(static_cast<std::size_t>(topo.n), zero);
    const int K = opt.k;
    const double kg = static_cast<double>(K) * opt.gamma;

    std::vector<RoundRecord> records;
    records.reserve(static_cast<std::size_t>(opt.rounds));
    double ds_cum = 0.0;

    for (int t = 1; t <= opt.rounds; ++t) {
        auto sampled = sample_clients(topo, topo.sample_sizes, sampling);
        int n_sel = 0;
        for (const auto& ids : sampled) n_sel += static_cast<int>(ids.size());

        double delta_accum = 0.0, gamma_accum = 0.0;
        dy_sum.setZero();
        dc_sum.setZero();
        std::vector<Eigen::VectorXd> end_models;
        end_models.reserve(static_cast<std::size_t>(n_sel));
        for (const auto& ids : sampled) {
            for (int i : ids) {
                y = x;
                for (int k = 0; k < K; ++k) {
                    delta_accum += (y - x).squaredNorm();
                    grads.gradient(i, y, grad_tmp);
                    y -= opt.gamma *
                         (grad_tmp - ci[static_cast<std::size_t>(i)] + c);
                }
                // Variate refresh from the model displacement (option II).
                Eigen::VectorXd ci_new =
                    ci[static_cast<std::size_t>(i)] - c + (x - y) / kg;
                dy_sum += y - x;
                dc_sum += ci_new - ci[static_cast<std::size_t>(i)];
                ci[static_cast<std::size_t>(i)] = std::move(ci_new);
                end_models.push_back(y);
            }
        }
        x += dy_sum / static_cast<double>(n_sel);
        c += dc_sum / static_cast<double>(topo.n);
        for (const auto& m : end_models) gamma_accum += (m - x).squaredNorm();

        RoundRecord rec;
        rec.t = t;
        gap_eval.fill(x, rec);
        rec.delta_t = delta_accum / static_cast<double>(n_sel);
        rec.gamma_t = gamma_accum / static_cast<double>(n_sel);
        rec.y_t = std::numeric_limits<double>::quiet_NaN();
        rec.z_t = std::numeric_limits<double>::quiet_NaN();
        rec.k_t = K;
        rec.p_t = topo.p;
        rec.h_s = topo.sample_sizes;
        if (opt.costs) {
            auto [ds, d2d] = round_energy(topo.sample_sizes, topo.subnet_sizes,
                                          opt.costs->energy, /*K=*/0, opt.costs->delta);
            (void)d2d;
            ds_cum += ds;
        }
        rec.ds_energy = ds_cum;
        rec.d2d_energy = 0.0; // no gossip in this baseline
        rec.wall_time_s = seconds_since(start);
        records.push_back(std::move(rec));

        if (opt.stop_gap >= 0.0 && records.back().gap <= opt.stop_gap) break;
    }
    return records;
}

} // namespace sdgt
