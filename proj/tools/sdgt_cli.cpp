// Command line front end.
//
//   sdgt_cli run <config.json>          one experiment -> CSV + metadata
//   sdgt_cli sweep <sweep.json>         Cartesian parameter sweep -> summary.csv
//   sdgt_cli check-bounds <params.json> contraction certificate report
//   sdgt_cli control-demo <config.json> adaptive-controller run with a summary
//
// Exit codes: 0 success, 1 certificate violation (check-bounds only),
// 2 configuration error, 3 numerical failure.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>

#include "CLI11.hpp"
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "sdgt/errors.hpp"
#include "sdgt/harness.hpp"

namespace {

void dump_topology(const sdgt::ExperimentConfig& cfg, const std::string& out_dir) {
    sdgt::RngStream master(cfg.seed);
    std::vector<sdgt::GeometricGraph> graphs;
    sdgt::NetworkTopology topo = sdgt::build_random_network(
        cfg.topology.subnet_sizes, cfg.topology.sample_sizes, cfg.topology.area_side,
        cfg.topology.radius_min, cfg.topology.radius_max, master, &graphs);
    sdgt::Json j;
    j["p"] = topo.p;
    j["q"] = topo.q;
    j["rho"] = topo.rho;
    for (std::size_t s = 0; s < graphs.size(); ++s) {
        sdgt::Json sub;
        for (Eigen::Index i = 0; i < graphs[s].positions.rows(); ++i)
            sub["positions"].push_back(
                {graphs[s].positions(i, 0), graphs[s].positions(i, 1)});
        for (Eigen::Index i = 0; i < graphs[s].radii.size(); ++i)
            sub["radii"].push_back(graphs[s].radii(i));
        sub["neighbors"] = graphs[s].neighbors;
        const Eigen::MatrixXd& W = topo.mixing[s];
        for (Eigen::Index r = 0; r < W.rows(); ++r) {
            sdgt::Json row = sdgt::Json::array();
            for (Eigen::Index c = 0; c < W.cols(); ++c) row.push_back(W(r, c));
            sub["mixing"].push_back(row);
        }
        j["subnets"].push_back(sub);
    }
    const auto path = std::filesystem::path(out_dir) / (cfg.name + ".topology.json");
    std::ofstream out(path);
    if (!out)
        throw sdgt::ConfigError(fmt::format("cannot open '{}' for writing", path.string()));
    out << j.dump(2) << "\n";
    fmt::print("wrote {}\n", path.string());
}

void print_run_summary(const sdgt::ExperimentResult& result, const std::string& out_dir,
                       const std::string& name) {
    fmt::print("wrote {0}/{1}.csv and {0}/{1}.meta.json\n", out_dir, name);
    if (result.records.empty()) {
        fmt::print("no rounds executed\n");
        return;
    }
    const auto& last = result.records.back();
    fmt::print("rounds completed: {}\n", last.t);
    fmt::print("final gap: {}  final grad norm: {}\n", last.gap, last.grad_norm);
}

int run_command(const std::string& config_path, const std::string& out_dir,
                bool seed_set, std::uint64_t seed, bool with_topology_dump) {
    sdgt::ExperimentConfig cfg = sdgt::load_config(config_path);
    if (seed_set) cfg.seed = seed;
    sdgt::ExperimentResult result = sdgt::run_and_write(cfg, out_dir);
    print_run_summary(result, out_dir, cfg.name);
    if (with_topology_dump) dump_topology(cfg, out_dir);
    return 0;
}

int sweep_command(const std::string& sweep_path, const std::string& out_dir, int jobs,
                  bool seed_set, std::uint64_t seed) {
    sdgt::SweepSpec spec = sdgt::load_sweep(sweep_path);
    if (seed_set) spec.template_config["seed"] = seed;
    auto cells = sdgt::run_sweep(spec, out_dir, jobs);
    int failed = 0;
    for (const auto& cell : cells)
        if (cell.status != "ok") ++failed;
    fmt::print("{} cells, {} failed; wrote {}/summary.csv\n", cells.size(), failed,
               out_dir);
    return 0;
}

int check_bounds_command(const std::string& params_path) {
    sdgt::ContractionCertificate cert = sdgt::check_bounds_file(params_path);
    fmt::print("{}", sdgt::format_certificate(cert));
    return cert.contracts ? 0 : 1;
}

int control_demo_command(const std::string& config_path, const std::string& out_dir,
                         bool seed_set, std::uint64_t seed) {
    sdgt::ExperimentConfig cfg = sdgt::load_config(config_path);
    if (!cfg.controller.present)
        throw sdgt::ConfigError("config-invalid: control-demo needs a controller block");
    if (seed_set) cfg.seed = seed;
    sdgt::ExperimentResult result = sdgt::run_and_write(cfg, out_dir);
    print_run_summary(result, out_dir, cfg.name);
    if (!result.records.empty()) {
        const auto& recs = result.records;
        const std::size_t tail = std::min<std::size_t>(recs.size(), 50);
        double mean_k = 0.0, mean_p = 0.0;
        for (std::size_t i = recs.size() - tail; i < recs.size(); ++i) {
            mean_k += recs[i].k_t;
            mean_p += recs[i].p_t;
        }
        mean_k /= static_cast<double>(tail);
        mean_p /= static_cast<double>(tail);
        const auto& last = recs.back();
        fmt::print("controller: mean K over last {} rounds = {:.2f}, mean p = {:.3f}\n",
                   tail, mean_k, mean_p);
        fmt::print("final schedule: K={} p={:.3f} h=[{}]\n", last.k_t, last.p_t,
                   fmt::join(last.h_s, ";"));
        fmt::print("cumulative energy: device-to-server {:.3f}, gossip {:.3f}\n",
                   last.ds_energy, last.d2d_energy);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-decentralized federated optimization simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "runs";
    std::uint64_t seed = 0;
    int jobs = 1;
    bool topo_dump = false;

    CLI::App* run = app.add_subcommand("run", "Run one experiment from a JSON config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    auto* run_seed = run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out-dir", out_dir, "output directory (default: runs)");
    run->add_flag("--dump-topology", topo_dump,
                  "also write the generated graphs and mixing matrices");

    CLI::App* sweep = app.add_subcommand("sweep", "Run a Cartesian parameter sweep");
    sweep->add_option("sweep", config_path, "sweep spec (JSON)")->required();
    auto* sweep_seed = sweep->add_option("--seed", seed, "override the template seed");
    sweep->add_option("--out-dir", out_dir, "output directory (default: runs)");
    sweep->add_option("--jobs", jobs, "parallel runs (default: 1)");

    CLI::App* bounds =
        app.add_subcommand("check-bounds", "Evaluate the contraction certificate");
    bounds->add_option("params", config_path, "parameter tuple (JSON)")->required();

    CLI::App* demo =
        app.add_subcommand("control-demo", "Run with the adaptive controller");
    demo->add_option("config", config_path, "experiment config (JSON)")->required();
    auto* demo_seed = demo->add_option("--seed", seed, "override the config seed");
    demo->add_option("--out-dir", out_dir, "output directory (default: runs)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (run->parsed())
            return run_command(config_path, out_dir, run_seed->count() > 0, seed, topo_dump);
        if (sweep->parsed())
            return sweep_command(config_path, out_dir, jobs, sweep_seed->count() > 0, seed);
        if (bounds->parsed()) return check_bounds_command(config_path);
        return control_demo_command(config_path, out_dir, demo_seed->count() > 0, seed);
    } catch (const sdgt::ConfigError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    } catch (const sdgt::NumericError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 3;
    }
}
