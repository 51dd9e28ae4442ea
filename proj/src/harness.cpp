#include "sdgt/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "sdgt/errors.hpp"

namespace sdgt {

namespace fs = std::filesystem;

namespace {

// Strict field reader: every key must be consumed, leftovers are errors.
class Fields {
public:
    Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object())
            throw ConfigError(fmt::format("config-invalid: {} must be an object", where_));
    }

    bool has(const char* key) {
        if (j_.contains(key)) {
            seen_.insert(key);
            return true;
        }
        return false;
    }

    const Json& node(const char* key) {
        if (!has(key))
            throw ConfigError(fmt::format("config-invalid: {}.{} is required", where_, key));
        return j_.at(key);
    }

    template <typename T>
    T req(const char* key) {
        return convert<T>(node(key), key);
    }

    template <typename T>
    T opt(const char* key, T fallback) {
        if (!has(key)) return fallback;
        return convert<T>(j_.at(key), key);
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key()))
                throw ConfigError(fmt::format("config-invalid: unknown key {}.{}", where_,
                                              item.key()));
        }
    }

    const std::string& where() const { return where_; }

private:
    template <typename T>
    T convert(const Json& v, const char* key) {
        try {
            return v.get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(fmt::format("config-invalid: {}.{} has the wrong type",
                                          where_, key));
        }
    }

    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

std::vector<int> sizes_from_fraction(double fraction, const std::vector<int>& subnet_sizes,
                                     const std::string& what) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ConfigError(fmt::format("config-invalid: {} must be in (0,1]", what));
    std::vector<int> h;
    h.reserve(subnet_sizes.size());
    for (int m : subnet_sizes) {
        int v = static_cast<int>(std::floor(fraction * static_cast<double>(m) + 0.5));
        h.push_back(std::max(1, std::min(m, v)));
    }
    return h;
}

} // namespace

ExperimentConfig parse_config(const Json& j) {
    ExperimentConfig cfg;
    Fields f(j, "config");

    cfg.schema_version = f.req<int>("schema_version");
    if (cfg.schema_version != 1)
        throw ConfigError(fmt::format("config-invalid: unsupported schema_version {}",
                                      cfg.schema_version));
    cfg.algorithm = f.req<std::string>("algorithm");
    if (cfg.algorithm != "sdgt" && cfg.algorithm != "sd_fedavg" &&
        cfg.algorithm != "scaffold")
        throw ConfigError(fmt::format("config-invalid: unknown algorithm '{}'",
                                      cfg.algorithm));
    cfg.name = f.opt<std::string>("name", "run");
    cfg.seed = f.req<std::uint64_t>("seed");
    cfg.rounds = f.req<int>("rounds");
    if (cfg.rounds < 0) throw ConfigError("config-invalid: rounds must be >= 0");
    cfg.gamma = f.req<double>("gamma");
    if (!(cfg.gamma > 0.0)) throw ConfigError("config-invalid: gamma must be > 0");
    cfg.batch = f.opt<int>("batch", 0);
    if (cfg.batch < 0) throw ConfigError("config-invalid: batch must be >= 0");
    cfg.stop_gap = f.opt<double>("stop_gap", -1.0);

    const bool has_k = f.has("k");
    const bool has_controller = f.has("controller");
    if (has_k == has_controller)
        throw ConfigError("config-invalid: exactly one of k / controller is required");
    if (has_k) {
        cfg.k = j.at("k").get<int>();
        if (cfg.k < 1) throw ConfigError("config-invalid: k must be >= 1");
    }
    if (has_controller && cfg.algorithm != "sdgt")
        throw ConfigError("config-invalid: only algorithm 'sdgt' supports a controller");

    {
        Fields t(f.node("topology"), "topology");
        cfg.topology.subnet_sizes = t.req<std::vector<int>>("subnet_sizes");
        if (cfg.topology.subnet_sizes.empty())
            throw ConfigError("config-invalid: topology.subnet_sizes must be nonempty");
        for (int m : cfg.topology.subnet_sizes)
            if (m < 1) throw ConfigError("config-invalid: subnet sizes must be >= 1");
        cfg.topology.area_side = t.opt<double>("area_side", 5.0);
        cfg.topology.radius_min = t.opt<double>("radius_min", 0.5);
        cfg.topology.radius_max = t.opt<double>("radius_max", 3.5);
        const bool sizes = t.has("sample_sizes");
        const bool frac = t.has("sample_fraction");
        if (sizes == frac)
            throw ConfigError(
                "config-invalid: exactly one of topology.sample_sizes / "
                "topology.sample_fraction is required");
        if (sizes) {
            cfg.topology.sample_sizes =
                f.node("topology").at("sample_sizes").get<std::vector<int>>();
            if (cfg.topology.sample_sizes.size() != cfg.topology.subnet_sizes.size())
                throw ConfigError(
                    "config-invalid: one topology.sample_sizes entry per subnet required");
        } else {
            cfg.topology.sample_fraction =
                f.node("topology").at("sample_fraction").get<double>();
            cfg.topology.sample_sizes = sizes_from_fraction(
                cfg.topology.sample_fraction, cfg.topology.subnet_sizes,
                "topology.sample_fraction");
        }
        t.finish();
    }

    {
        Fields o(f.node("objective"), "objective");
        std::string kind = o.req<std::string>("kind");
        if (kind == "least_squares") {
            cfg.objective.kind = ObjectiveSpec::Kind::LeastSquares;
            cfg.objective.dimension = o.opt<int>("dimension", 200);
            cfg.objective.per_client = o.opt<int>("per_client", 30);
            cfg.objective.noise_var = o.opt<double>("noise_var", 0.04);
            const bool has_omega = o.has("omega");
            const bool has_kappa = o.has("target_kappa");
            if (has_omega == has_kappa)
                throw ConfigError(
                    "config-invalid: exactly one of objective.omega / "
                    "objective.target_kappa is required");
            if (has_omega) cfg.objective.omega = f.node("objective").at("omega").get<double>();
            else cfg.objective.target_kappa =
                     f.node("objective").at("target_kappa").get<double>();
        } else if (kind == "blobs") {
            cfg.objective.kind = ObjectiveSpec::Kind::Blobs;
            cfg.objective.classes = o.opt<int>("classes", 10);
            cfg.objective.per_client = o.opt<int>("per_client", 32);
            cfg.objective.palette_size = o.opt<int>("palette_size", 1);
            cfg.objective.spread = o.opt<double>("spread", 3.0);
        } else {
            throw ConfigError(fmt::format("config-invalid: unknown objective.kind '{}'", kind));
        }
        o.finish();
    }

    if (f.has("costs")) {
        Fields c(f.node("costs"), "costs");
        cfg.costs.present = true;
        const bool fixed = c.has("energy");
        const bool ranged = c.has("energy_range");
        if (fixed == ranged)
            throw ConfigError(
                "config-invalid: exactly one of costs.energy / costs.energy_range is required");
        if (fixed) {
            cfg.costs.energy = f.node("costs").at("energy").get<std::vector<double>>();
            if (cfg.costs.energy.size() != cfg.topology.subnet_sizes.size())
                throw ConfigError("config-invalid: one costs.energy entry per subnet required");
            for (double e : cfg.costs.energy)
                if (!(e >= 0.0)) throw ConfigError("config-invalid: energies must be >= 0");
        } else {
            auto range = f.node("costs").at("energy_range").get<std::vector<double>>();
            if (range.size() != 2 || !(range[0] >= 0.0) || !(range[1] >= range[0]))
                throw ConfigError("config-invalid: costs.energy_range must be [lo, hi]");
            cfg.costs.ranged = true;
            cfg.costs.range_lo = range[0];
            cfg.costs.range_hi = range[1];
        }
        cfg.costs.delta = c.opt<double>("delta", 0.0);
        if (cfg.costs.delta < 0.0)
            throw ConfigError("config-invalid: costs.delta must be >= 0");
        c.finish();
    }

    if (has_controller) {
        Fields c(f.node("controller"), "controller");
        cfg.controller.present = true;
        cfg.controller.lambdas.l1 = c.req<double>("lambda1");
        cfg.controller.lambdas.l2 = c.req<double>("lambda2");
        cfg.controller.lambdas.l3 = c.req<double>("lambda3");
        cfg.controller.k_max = c.opt<int>("k_max", 50);
        cfg.controller.cadence = c.opt<int>("cadence", 1);
        cfg.controller.initial_k = c.opt<int>("initial_k", 1);
        if (cfg.controller.k_max < 1 || cfg.controller.cadence < 1 ||
            cfg.controller.initial_k < 1 ||
            cfg.controller.initial_k > cfg.controller.k_max)
            throw ConfigError("config-invalid: controller k_max/cadence/initial_k out of range");
        const bool init_sizes = c.has("initial_sample_sizes");
        const bool init_frac = c.has("initial_sample_fraction");
        if (init_sizes && init_frac)
            throw ConfigError(
                "config-invalid: give at most one of controller.initial_sample_sizes / "
                "controller.initial_sample_fraction");
        if (init_sizes) {
            cfg.controller.initial_sample_sizes =
                f.node("controller").at("initial_sample_sizes").get<std::vector<int>>();
            if (cfg.controller.initial_sample_sizes.size() !=
                cfg.topology.subnet_sizes.size())
                throw ConfigError(
                    "config-invalid: one controller.initial_sample_sizes entry per subnet");
        } else if (init_frac) {
            cfg.controller.initial_sample_fraction =
                f.node("controller").at("initial_sample_fraction").get<double>();
            cfg.controller.initial_sample_sizes = sizes_from_fraction(
                cfg.controller.initial_sample_fraction, cfg.topology.subnet_sizes,
                "controller.initial_sample_fraction");
        }
        if (!cfg.costs.present)
            throw ConfigError("config-invalid: the controller requires a costs block");
        c.finish();
    }

    f.finish();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("config-invalid: cannot open '{}'", path));
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("config-invalid: {}: {}", path, e.what()));
    }
    return parse_config(j);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    RngStream master(cfg.seed);

    NetworkTopology topo = build_random_network(
        cfg.topology.subnet_sizes, cfg.topology.sample_sizes, cfg.topology.area_side,
        cfg.topology.radius_min, cfg.topology.radius_max, master);

    std::unique_ptr<Objective> obj;
    Eigen::VectorXd optimum;
    bool have_optimum = false;
    Json meta_objective;
    double gamma_bar = -1.0;
    int gamma_bar_k = -1;

    if (cfg.objective.kind == ObjectiveSpec::Kind::LeastSquares) {
        RngStream data = master.substream("data");
        double omega = cfg.objective.omega;
        if (omega < 0.0)
            omega = calibrate_omega(cfg.objective.target_kappa, topo.n,
                                    cfg.objective.dimension, cfg.objective.per_client,
                                    cfg.objective.noise_var, data);
        LeastSquaresProblem prob =
            generate_ls_problem(topo.n, cfg.objective.dimension, cfg.objective.per_client,
                                omega, cfg.objective.noise_var, data);
        SmoothnessConstants sc = smoothness_constants(prob);
        optimum = ls_optimum(prob);
        have_optimum = true;
        obj = std::make_unique<LeastSquaresObjective>(std::move(prob));
        gamma_bar_k = cfg.k > 0 ? cfg.k : cfg.controller.k_max;
        gamma_bar = admissible_step_size(topo.p, topo.q, gamma_bar_k, sc.L, sc.mu);
        meta_objective = {{"kind", "least_squares"},
                          {"dimension", cfg.objective.dimension},
                          {"per_client", cfg.objective.per_client},
                          {"noise_var", cfg.objective.noise_var},
                          {"omega", omega},
                          {"L", sc.L},
                          {"mu", sc.mu},
                          {"kappa", sc.kappa},
                          {"f_star", obj->global_loss(optimum)}};
    } else {
        RngStream data = master.substream("data");
        BlobTask task = generate_blob_task(topo.n, topo.num_subnets(),
                                           cfg.objective.classes, cfg.objective.per_client,
                                           cfg.objective.palette_size, cfg.objective.spread,
                                           data);
        std::vector<int> grouped(static_cast<std::size_t>(topo.num_subnets()), 0);
        for (int s : task.subnet_of_client) ++grouped[static_cast<std::size_t>(s)];
        if (grouped != cfg.topology.subnet_sizes)
            throw ConfigError(fmt::format(
                "config-invalid: blob palette grouping needs balanced subnets; "
                "grouping gives [{}] but topology.subnet_sizes is [{}]",
                fmt::join(grouped, ","), fmt::join(cfg.topology.subnet_sizes, ",")));
        obj = std::make_unique<BlobObjective>(std::move(task));
        meta_objective = {{"kind", "blobs"},
                          {"classes", cfg.objective.classes},
                          {"per_client", cfg.objective.per_client},
                          {"palette_size", cfg.objective.palette_size},
                          {"spread", cfg.objective.spread},
                          {"dimension", obj->dimension()}};
    }

    ControlCosts costs;
    if (cfg.costs.present) {
        if (cfg.costs.ranged) {
            RngStream e = master.substream("energy");
            for (std::size_t s = 0; s < cfg.topology.subnet_sizes.size(); ++s)
                costs.energy.push_back(e.uniform(cfg.costs.range_lo, cfg.costs.range_hi));
        } else {
            costs.energy = cfg.costs.energy;
        }
        costs.delta = cfg.costs.delta;
    }

    ControllerConfig controller;
    if (cfg.controller.present) {
        controller.lambdas = cfg.controller.lambdas;
        controller.k_max = cfg.controller.k_max;
        controller.cadence = cfg.controller.cadence;
        controller.initial_k = cfg.controller.initial_k;
        controller.initial_sample_sizes = cfg.controller.initial_sample_sizes;
    }

    RunOptions opt;
    opt.gamma = cfg.gamma;
    opt.rounds = cfg.rounds;
    opt.k = cfg.k > 0 ? cfg.k : 1;
    opt.batch = cfg.batch;
    opt.seed = cfg.seed;
    opt.optimum = have_optimum ? &optimum : nullptr;
    opt.costs = cfg.costs.present ? &costs : nullptr;
    opt.controller = cfg.controller.present ? &controller : nullptr;
    opt.stop_gap = cfg.stop_gap;

    ExperimentResult result;
    if (cfg.algorithm == "sdgt") result.records = run_sdgt(*obj, topo, opt);
    else if (cfg.algorithm == "sd_fedavg") result.records = run_sd_fedavg(*obj, topo, opt);
    else result.records = run_scaffold(*obj, topo, opt);

    Json meta;
    meta["schema_version"] = 1;
    meta["algorithm"] = cfg.algorithm;
    meta["name"] = cfg.name;
    meta["seed"] = cfg.seed;
    meta["rounds_requested"] = cfg.rounds;
    meta["rounds_completed"] = static_cast<int>(result.records.size());
    meta["gamma"] = cfg.gamma;
    if (cfg.k > 0) meta["k"] = cfg.k;
    meta["batch"] = cfg.batch;
    meta["topology"] = {{"subnet_sizes", topo.subnet_sizes},
                        {"sample_sizes", topo.sample_sizes},
                        {"rho", topo.rho},
                        {"p", topo.p},
                        {"q", topo.q},
                        {"area_side", cfg.topology.area_side},
                        {"radius_min", cfg.topology.radius_min},
                        {"radius_max", cfg.topology.radius_max}};
    meta["objective"] = meta_objective;
    if (cfg.costs.present)
        meta["costs"] = {{"energy", costs.energy}, {"delta", costs.delta}};
    if (cfg.controller.present)
        meta["controller"] = {{"lambda1", controller.lambdas.l1},
                              {"lambda2", controller.lambdas.l2},
                              {"lambda3", controller.lambdas.l3},
                              {"k_max", controller.k_max},
                              {"cadence", controller.cadence},
                              {"initial_k", controller.initial_k},
                              {"initial_sample_sizes", controller.initial_sample_sizes}};
    if (gamma_bar >= 0.0) {
        meta["gamma_bar"] = gamma_bar;
        meta["gamma_bar_k"] = gamma_bar_k;
    }
    if (!result.records.empty()) {
        meta["final_gap"] = result.records.back().gap;
        meta["final_grad_norm"] = result.records.back().grad_norm;
    }
    result.metadata = std::move(meta);
    return result;
}

void write_records_csv(const std::vector<RoundRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError(fmt::format("cannot open '{}' for writing", path));
    out << "t,gap,grad_norm,delta_t,gamma_t,y_t,z_t,k_t,p_t,h_s,ds_energy,d2d_energy,"
           "wall_time_s\n";
    for (const auto& r : records) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.t, r.gap,
                           r.grad_norm, r.delta_t, r.gamma_t, r.y_t, r.z_t, r.k_t, r.p_t,
                           fmt::format("{}", fmt::join(r.h_s, ";")), r.ds_energy,
                           r.d2d_energy, r.wall_time_s);
    }
    if (!out) throw ConfigError(fmt::format("write failed for '{}'", path));
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double to_double(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw ConfigError(fmt::format("bad numeric field '{}'", s));
    return v;
}

} // namespace

std::vector<RoundRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(fmt::format("'{}' is empty", path));
    const std::string expected =
        "t,gap,grad_norm,delta_t,gamma_t,y_t,z_t,k_t,p_t,h_s,ds_energy,d2d_energy,"
        "wall_time_s";
    if (line != expected)
        throw ConfigError(fmt::format("'{}' has an unexpected header", path));
    std::vector<RoundRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 13)
            throw ConfigError(fmt::format("'{}': expected 13 fields, got {}", path,
                                          fields.size()));
        RoundRecord r;
        r.t = static_cast<int>(to_double(fields[0]));
        r.gap = to_double(fields[1]);
        r.grad_norm = to_double(fields[2]);
        r.delta_t = to_double(fields[3]);
        r.gamma_t = to_double(fields[4]);
        r.y_t = to_double(fields[5]);
        r.z_t = to_double(fields[6]);
        r.k_t = static_cast<int>(to_double(fields[7]));
        r.p_t = to_double(fields[8]);
        for (const auto& h : split(fields[9], ';'))
            if (!h.empty()) r.h_s.push_back(static_cast<int>(to_double(h)));
        r.ds_energy = to_double(fields[10]);
        r.d2d_energy = to_double(fields[11]);
        r.wall_time_s = to_double(fields[12]);
        records.push_back(std::move(r));
    }
    return records;
}

ExperimentResult run_and_write(const ExperimentConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    ExperimentResult result = run_experiment(cfg);
    const std::string base = (fs::path(out_dir) / cfg.name).string();
    write_records_csv(result.records, base + ".csv");
    std::ofstream meta(base + ".meta.json");
    if (!meta) throw ConfigError(fmt::format("cannot open '{}.meta.json' for writing", base));
    meta << result.metadata.dump(2) << "\n";
    return result;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepSpec parse_sweep(const Json& j) {
    Fields f(j, "sweep");
    SweepSpec spec;
    spec.template_config = f.node("template");
    parse_config(spec.template_config); // validate the template eagerly
    const Json& axes = f.node("axes");
    if (!axes.is_object() || axes.empty())
        throw ConfigError("config-invalid: sweep.axes must be a nonempty object");
    for (const auto& item : axes.items()) {
        if (!item.value().is_array() || item.value().empty())
            throw ConfigError(fmt::format(
                "config-invalid: sweep.axes.{} must be a nonempty array", item.key()));
        spec.axes.emplace_back(item.key(), item.value());
    }
    spec.threshold = f.opt<double>("threshold", -1.0);
    f.finish();
    return spec;
}

SweepSpec load_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("config-invalid: cannot open '{}'", path));
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("config-invalid: {}: {}", path, e.what()));
    }
    return parse_sweep(j);
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

int first_round_at_or_below(const std::vector<RoundRecord>& records, double threshold) {
    if (threshold < 0.0) return -1;
    for (const auto& r : records)
        if (r.gap <= threshold) return r.t;
    return -1;
}

} // namespace

std::vector<SweepCell> run_sweep(const SweepSpec& spec, const std::string& out_dir,
                                 int jobs) {
    if (jobs < 1) throw ConfigError("run_sweep: jobs must be >= 1");
    fs::create_directories(out_dir);

    std::size_t total = 1;
    for (const auto& axis : spec.axes) total *= axis.second.size();

    std::vector<SweepCell> cells(total);
    auto run_cell = [&](std::size_t idx) {
        SweepCell& cell = cells[idx];
        cell.index = static_cast<int>(idx);
        Json cfg_json = spec.template_config;
        // Row-major decode: the first listed axis varies slowest.
        std::size_t rem = idx;
        for (std::size_t a = spec.axes.size(); a-- > 0;) {
            const auto& [path, values] = spec.axes[a];
            std::size_t v = rem % values.size();
            rem /= values.size();
            std::string ptr = "/" + path;
            for (auto& c : ptr)
                if (c == '.') c = '/';
            cfg_json[Json::json_pointer(ptr)] = values[v];
            cell.axis_values[path] = values[v];
        }
        if (spec.threshold >= 0.0) cfg_json["stop_gap"] = spec.threshold;
        try {
            ExperimentConfig cfg = parse_config(cfg_json);
            cfg.name = fmt::format("cell_{:03d}", idx);
            ExperimentResult result = run_and_write(cfg, out_dir);
            cell.completed_rounds = static_cast<int>(result.records.size());
            cell.final_gap = result.records.empty()
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : result.records.back().gap;
            cell.rounds_to_threshold =
                first_round_at_or_below(result.records, spec.threshold);
            cell.csv_file = cfg.name + ".csv";
        } catch (const std::exception& e) {
            cell.status = e.what();
        }
    };

    if (jobs == 1) {
        for (std::size_t i = 0; i < total; ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= total) return;
                run_cell(i);
            }
        };
        std::vector<std::thread> pool;
        const int width = std::min<int>(jobs, static_cast<int>(total));
        pool.reserve(static_cast<std::size_t>(width));
        for (int w = 0; w < width; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::ofstream summary(fs::path(out_dir) / "summary.csv");
    if (!summary) throw ConfigError("cannot open summary.csv for writing");
    summary << "cell";
    for (const auto& axis : spec.axes) summary << "," << csv_escape(axis.first);
    summary << ",status,completed_rounds,final_gap,rounds_to_threshold,csv\n";
    for (const auto& cell : cells) {
        summary << cell.index;
        for (const auto& axis : spec.axes)
            summary << "," << csv_escape(cell.axis_values.at(axis.first).dump());
        summary << fmt::format(",{},{},{},{},{}\n", csv_escape(cell.status),
                               cell.completed_rounds, cell.final_gap,
                               cell.rounds_to_threshold, csv_escape(cell.csv_file));
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Certificate checking

ContractionCertificate check_bounds(const Json& params) {
    Fields f(params, "params");
    BoundParams bp;
    bp.p = f.req<double>("p");
    bp.q = f.req<double>("q");
    bp.K = f.req<int>("K");
    bp.L = f.req<double>("L");
    bp.mu = f.req<double>("mu");
    bp.sigma2 = f.req<double>("sigma2");
    bp.n = f.opt<int>("n", 1);
    bool corrected = f.opt<bool>("corrected", true);
    bp.gamma = 0.0;
    if (f.has("gamma")) {
        const Json& g = params.at("gamma");
        if (g.is_string()) {
            if (g.get<std::string>() != "auto")
                throw ConfigError("config-invalid: params.gamma must be a number or \"auto\"");
        } else {
            bp.gamma = g.get<double>();
            if (!(bp.gamma > 0.0))
                throw ConfigError("config-invalid: params.gamma must be > 0");
        }
    }
    f.finish();
    return build_certificate(bp, corrected);
}

ContractionCertificate check_bounds_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("config-invalid: cannot open '{}'", path));
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("config-invalid: {}: {}", path, e.what()));
    }
    return check_bounds(j);
}

std::string format_certificate(const ContractionCertificate& cert) {
    const auto& prm = cert.params;
    std::string out;
    out += fmt::format("p={} q={} K={} L={} mu={} sigma2={} n={}\n", prm.p, prm.q, prm.K,
                       prm.L, prm.mu, prm.sigma2, prm.n);
    out += fmt::format("gamma = {}  (admissible bound = {})\n", prm.gamma, cert.gamma_bar);
    out += fmt::format("||A||_1 = {}  target = {}\n", cert.norm_A, cert.contraction_target);
    out += fmt::format("contraction: {}\n", cert.contracts ? "HOLDS" : "FAILS");
    out += fmt::format("steady state = [{}, {}, {}, {}]  l1 = {}\n", cert.steady_state(0),
                       cert.steady_state(1), cert.steady_state(2), cert.steady_state(3),
                       cert.steady_state_norm);
    return out;
}

} // namespace sdgt
