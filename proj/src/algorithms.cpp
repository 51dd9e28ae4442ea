#include "sdgt/algorithms.hpp"

#include <fmt/format.h>

#include "sdgt/errors.hpp"

namespace sdgt {

GradientEvaluator::GradientEvaluator(const Objective& obj, int batch,
                                     const RngStream& master)
    : obj_(&obj), batch_(batch) {
    const int n = obj.num_clients();
    minibatch_.reserve(static_cast<std::size_t>(n));
    init_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        minibatch_.push_back(master.substream("minibatch", static_cast<std::uint64_t>(i)));
        init_.push_back(master.substream("init-noise", static_cast<std::uint64_t>(i)));
    }
}

void GradientEvaluator::gradient(int client, const Eigen::VectorXd& x,
                                 Eigen::VectorXd& out) {
    obj_->stochastic_gradient(client, x, batch_, minibatch_[static_cast<std::size_t>(client)],
                              out);
}

void GradientEvaluator::init_gradient(int client, const Eigen::VectorXd& x,
                                      Eigen::VectorXd& out) {
    obj_->stochastic_gradient(client, x, batch_, init_[static_cast<std::size_t>(client)], out);
}

SdgtState sdgt_init(const Eigen::VectorXd& x0, const Objective& obj,
                    const NetworkTopology& topo, GradientEvaluator& grads) {
    if (obj.num_clients() != topo.n)
        throw ConfigError(fmt::format("sdgt_init: objective has {} clients, topology has {}",
                                      obj.num_clients(), topo.n));
    const int n = topo.n;
    const auto d = x0.size();

    std::vector<Eigen::VectorXd> g(static_cast<std::size_t>(n));
    Eigen::VectorXd global_mean = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) {
        grads.init_gradient(i, x0, g[static_cast<std::size_t>(i)]);
        global_mean += g[static_cast<std::size_t>(i)];
    }
    global_mean /= static_cast<double>(n);

    SdgtState st;
    st.clients.resize(static_cast<std::size_t>(n));
    st.half.assign(static_cast<std::size_t>(n), Eigen::VectorXd(d));
    st.mixed.assign(static_cast<std::size_t>(n), Eigen::VectorXd(d));
    st.grad_tmp.resize(d);
    for (int s = 0; s < topo.num_subnets(); ++s) {
        const int off = topo.offsets[static_cast<std::size_t>(s)];
        const int m = topo.subnet_sizes[static_cast<std::size_t>(s)];
        Eigen::VectorXd subnet_mean = Eigen::VectorXd::Zero(d);
        for (int j = 0; j < m; ++j) subnet_mean += g[static_cast<std::size_t>(off + j)];
        subnet_mean /= static_cast<double>(m);
        for (int j = 0; j < m; ++j) {
            ClientState& c = st.clients[static_cast<std::size_t>(off + j)];
            c.x = x0;
            c.x_start = x0;
            c.y = global_mean - subnet_mean;
            c.z = subnet_mean - g[static_cast<std::size_t>(off + j)];
            c.acc = Eigen::VectorXd::Zero(d);
        }
    }
    st.server.x_g = x0;
    st.server.psi.assign(static_cast<std::size_t>(topo.num_subnets()),
                         Eigen::VectorXd::Zero(d));
    return st;
}

void within_subnet_round(SdgtState& st, const NetworkTopology& topo,
                         GradientEvaluator& grads, double gamma) {
    const int n = topo.n;
    for (int i = 0; i < n; ++i) {
        ClientState& c = st.clients[static_cast<std::size_t>(i)];
        st.delta_accum += (c.x - st.server.x_g).squaredNorm();
        grads.gradient(i, c.x, st.grad_tmp);
        st.half[static_cast<std::size_t>(i)] = c.x - gamma * (st.grad_tmp + c.y + c.z);
    }
    for (int s = 0; s < topo.num_subnets(); ++s) {
        const int off = topo.offsets[static_cast<std::size_t>(s)];
        const int m = topo.subnet_sizes[static_cast<std::size_t>(s)];
        const Eigen::MatrixXd& W = topo.mixing[static_cast<std::size_t>(s)];
        for (int li = 0; li < m; ++li) {
            Eigen::VectorXd& out = st.mixed[static_cast<std::size_t>(off + li)];
            out.setZero();
            for (int lj = 0; lj < m; ++lj)
                out.noalias() += W(li, lj) * st.half[static_cast<std::size_t>(off + lj)];
        }
    }
    for (int i = 0; i < n; ++i) {
        ClientState& c = st.clients[static_cast<std::size_t>(i)];
        c.acc += st.half[static_cast<std::size_t>(i)] - st.mixed[static_cast<std::size_t>(i)];
        c.acc += gamma * c.y;
        c.x = st.mixed[static_cast<std::size_t>(i)];
    }
    ++st.acc_rounds;
}

void update_z_terms(SdgtState& st, const NetworkTopology& topo, int K, double gamma) {
    if (K != st.acc_rounds)
        throw NumericError(fmt::format(
            "accumulator-mismatch: z refresh for K={} but {} inner rounds accumulated", K,
            st.acc_rounds));
    if (gamma <= 0.0) throw ConfigError("update_z_terms: gamma must be positive");
    const double scale = 1.0 / (static_cast<double>(K) * gamma);
    for (int s = 0; s < topo.num_subnets(); ++s) {
        const int off = topo.offsets[static_cast<std::size_t>(s)];
        const int m = topo.subnet_sizes[static_cast<std::size_t>(s)];
        const Eigen::MatrixXd& W = topo.mixing[static_cast<std::size_t>(s)];
        for (int li = 0; li < m; ++li) {
            Eigen::VectorXd& out = st.mixed[static_cast<std::size_t>(off + li)];
            out.setZero();
            for (int lj = 0; lj < m; ++lj)
                out.noalias() +=
                    W(li, lj) * st.clients[static_cast<std::size_t>(off + lj)].acc;
        }
        for (int li = 0; li < m; ++li) {
            ClientState& c = st.clients[static_cast<std::size_t>(off + li)];
            c.z += scale * (c.acc - st.mixed[static_cast<std::size_t>(off + li)]);
        }
    }
    for (auto& c : st.clients) c.acc.setZero();
    st.acc_rounds = 0;
}

std::vector<std::vector<int>> sample_clients(const NetworkTopology& topo,
                                             const std::vector<int>& sample_sizes,
                                             RngStream& rng) {
    if (static_cast<int>(sample_sizes.size()) != topo.num_subnets())
        throw ConfigError("sample_clients: one sample size per subnet required");
    std::vector<std::vector<int>> out(sample_sizes.size());
    for (int s = 0; s < topo.num_subnets(); ++s) {
        const int m = topo.subnet_sizes[static_cast<std::size_t>(s)];
        const int h = sample_sizes[static_cast<std::size_t>(s)];
        if (h < 1 || h > m)
            throw ConfigError(fmt::format(
                "sample_clients: sample size {} out of range [1,{}] for subnet {}", h, m, s));
        std::vector<int> local = rng.sample_without_replacement(m, h);
        auto& ids = out[static_cast<std::size_t>(s)];
        ids.reserve(static_cast<std::size_t>(h));
        for (int li : local) ids.push_back(topo.offsets[static_cast<std::size_t>(s)] + li);
    }
    return out;
}

void global_aggregate(SdgtState& st, const NetworkTopology& topo,
                      const std::vector<std::vector<int>>& sampled, int K,
                      double gamma) {
    const int S = topo.num_subnets();
    if (static_cast<int>(sampled.size()) != S)
        throw ConfigError("global_aggregate: one sample set per subnet required");
    if (K < 1 || gamma <= 0.0)
        throw ConfigError("global_aggregate: need K >= 1 and gamma > 0");
    const double kg = static_cast<double>(K) * gamma;
    const auto d = st.server.x_g.size();

    // Subnet-balanced mean of the sampled reports x - x_start + K*gamma*y.
    std::vector<Eigen::VectorXd> subnet_mean(static_cast<std::size_t>(S));
    Eigen::VectorXd global_move = Eigen::VectorXd::Zero(d);
    for (int s = 0; s < S; ++s) {
        const auto& ids = sampled[static_cast<std::size_t>(s)];
        if (ids.empty())
            throw ConfigError(fmt::format("global_aggregate: subnet {} sampled no clients", s));
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        for (int j : ids) {
            if (j < 0 || j >= topo.n || topo.subnet_of(j) != s)
                throw ConfigError(fmt::format(
                    "global_aggregate: client {} is not in subnet {}", j, s));
            const ClientState& c = st.clients[static_cast<std::size_t>(j)];
            mean += c.x - c.x_start + kg * c.y;
        }
        mean /= static_cast<double>(ids.size());
        subnet_mean[static_cast<std::size_t>(s)] = std::move(mean);
        global_move += subnet_mean[static_cast<std::size_t>(s)];
    }
    global_move /= static_cast<double>(S);

    st.server.x_g += global_move;
    for (int s = 0; s < S; ++s) {
        st.server.psi[static_cast<std::size_t>(s)] =
            (subnet_mean[static_cast<std::size_t>(s)] - global_move) / kg;
        for (int j : sampled[static_cast<std::size_t>(s)]) {
            ClientState& c = st.clients[static_cast<std::size_t>(j)];
            c.x = st.server.x_g;
            c.y = st.server.psi[static_cast<std::size_t>(s)];
        }
    }
    for (auto& c : st.clients) c.x_start = c.x;
}

} // namespace sdgt
