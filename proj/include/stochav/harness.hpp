/** \file harness.hpp
    \brief Experiment configuration, dispatch, and table serialization.

    One JSON config describes an experiment run; run() dispatches to the
    engine modules and returns a ResultBundle: CSV tables (built in memory,
    full-precision decimals, deterministic bytes) plus a JSON manifest with
    the config echo, flags, summary values, and per-file checksums.
*/
#pragma once

#include "json.hpp"
#include "stochav/diffusion.hpp"

namespace stochav {

using Json = nlohmann::ordered_json;

struct ExperimentConfig {
    std::string experiment = "average";
    std::string model = "r4";
    Vec model_params;
    std::string perturbation = "k1";

    Vec y0;        ///< explicit start; empty = from (actions0, angles0) or model default
    Vec actions0;  ///< start given in the chart
    Vec angles0;

    Vec epsilons = {0.1, 0.05, 0.025, 0.0125};
    double t = 0.5;                ///< horizon (real time for "simulate", rescaled otherwise)
    double dt = 0.0;               ///< explicit step; 0 = policy
    double dt_cap = 1e-3;
    double dt_eps_scale = 0.1;     ///< dt = min(dt_cap, eps^2 * dt_eps_scale)
    double beta = 2.0;
    int n_paths = 200;
    int torus_m = 64;
    int record_samples = 512;

    Vec action_lo, action_hi;      ///< explicit action grid (limit2 / assembly)
    std::vector<int> action_nodes;
    int action_nodes_default = 257;

    double radius = 0.0;           ///< chart ball radius; 0 = half distance to critical set
    double delta = 0.0;            ///< exitprob margin; 0 = radius/4
    double ode_dt = 1e-3;
    double limit_dt = 1e-5;
    std::string scheme = "midpoint";
    std::string limit_form = "stratonovich";
    bool limit_effective = true;   ///< weak2/limit2 simulate generator-matched coefficients

    std::uint64_t seed = 12345;
    int workers = 0;               ///< 0 = hardware concurrency
    std::string out_dir = "out";

    static ExperimentConfig from_json(const Json& j);
    Json to_json() const;
    void validate() const;
};

struct ResultBundle {
    Json manifest;
    /// file name -> file bytes (CSV tables and the diffusion JSON export)
    std::vector<std::pair<std::string, std::string>> files;
};

/// Dispatch to the named experiment and build all output tables.
ResultBundle run(const ExperimentConfig& config);

/// Write every table plus manifest.json (with checksums) under dir.
void emit_tables(const ResultBundle& bundle, const std::string& dir);

/// FNV-1a 64-bit checksum, hex-encoded (manifest file integrity field).
std::string fnv1a64_hex(const std::string& bytes);

/// Full-precision decimal formatting used by every table ("%.17g").
std::string format_double(double v);

/// Serialize a DiffusionModel per the export schema (grid, per-node a,
/// sigma, b row-major, metadata).
Json diffusion_to_json(const DiffusionModel& dm, const ExperimentConfig& config);

}  // namespace stochav
