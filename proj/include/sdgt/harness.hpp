// Experiment harness: JSON configuration, run orchestration, CSV/metadata
// output, parameter sweeps, and the certificate checker backing the CLI.
//
// Configs are strict: unknown keys anywhere are rejected so typos fail fast.
// Every run writes <out_dir>/<name>.csv (one row per round) plus
// <out_dir>/<name>.meta.json with the derived quantities of the realized
// instance (smoothness constants, mixing gaps, sampling levels, step bound).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdgt/runner.hpp"

namespace sdgt {

using Json = nlohmann::ordered_json;

struct TopologySpec {
    std::vector<int> subnet_sizes;
    double area_side = 5.0;
    double radius_min = 0.5;
    double radius_max = 3.5;
    std::vector<int> sample_sizes;  // exactly one of sample_sizes /
    double sample_fraction = -1.0;  // sample_fraction is given
};

struct ObjectiveSpec {
    enum class Kind { LeastSquares, Blobs };
    Kind kind = Kind::LeastSquares;
    // least squares
    int dimension = 200;
    int per_client = 30;
    double noise_var = 0.04;
    double omega = -1.0;        // exactly one of omega / target_kappa
    double target_kappa = -1.0;
    // blobs
    int classes = 10;
    int palette_size = 1;
    double spread = 3.0;
};

struct CostsSpec {
    bool present = false;
    std::vector<double> energy; // explicit per-subnet costs, or
    bool ranged = false;        // draw E_s uniformly from [range_lo, range_hi]
    double range_lo = 1.0, range_hi = 100.0;
    double delta = 0.0;
};

struct ControllerSpec {
    bool present = false;
    ControlLambdas lambdas;
    int k_max = 50;
    int cadence = 1;
    int initial_k = 1;
    std::vector<int> initial_sample_sizes;
    double initial_sample_fraction = -1.0;
};

struct ExperimentConfig {
    int schema_version = 1;
    std::string algorithm = "sdgt"; // sdgt | sd_fedavg | scaffold
    std::string name = "run";
    std::uint64_t seed = 0;
    int rounds = 1;
    double gamma = 1e-3;
    int k = -1; // exactly one of k / controller
    int batch = 0;
    double stop_gap = -1.0;
    TopologySpec topology;
    ObjectiveSpec objective;
    CostsSpec costs;
    ControllerSpec controller;
};

// Parse and validate; throws ConfigError on unknown keys, missing required
// fields, type mismatches, or inconsistent combinations.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

struct ExperimentResult {
    std::vector<RoundRecord> records;
    Json metadata;
};

// Build the instance (topology, data, costs) from the config's seed and run
// the selected algorithm.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// CSV I/O for round records.  Numbers are written in shortest round-trip
// form, so reading a file back reproduces the records exactly.
void write_records_csv(const std::vector<RoundRecord>& records, const std::string& path);
std::vector<RoundRecord> read_records_csv(const std::string& path);

// Run + write <name>.csv / <name>.meta.json under out_dir; returns the result.
ExperimentResult run_and_write(const ExperimentConfig& cfg, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepCell {
    int index = 0;
    Json axis_values;            // axis path -> value
    std::string status = "ok";   // or the error message
    int completed_rounds = 0;
    double final_gap = 0.0;
    int rounds_to_threshold = -1; // first round with gap <= threshold, -1 if never
    std::string csv_file;         // per-cell records file, empty on failure
};

struct SweepSpec {
    Json template_config;
    std::vector<std::pair<std::string, Json>> axes; // dotted path -> values
    double threshold = -1.0;
};

SweepSpec parse_sweep(const Json& j);
SweepSpec load_sweep(const std::string& path);

// Run the Cartesian product of the axes (optionally in parallel over cells),
// writing per-cell CSVs and summary.csv under out_dir.
std::vector<SweepCell> run_sweep(const SweepSpec& spec, const std::string& out_dir,
                                 int jobs = 1);

// ---------------------------------------------------------------------------
// Certificate checking

// params JSON: {p, q, K, L, mu, sigma2[, n][, gamma]} with gamma either a
// number or the string "auto" (half the admissible bound).
ContractionCertificate check_bounds(const Json& params);
ContractionCertificate check_bounds_file(const std::string& path);

// Human-readable certificate report.
std::string format_certificate(const ContractionCertificate& cert);

} // namespace sdgt
