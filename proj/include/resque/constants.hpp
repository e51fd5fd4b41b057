#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace resque {

/// The framework's unnamed universal constants, exposed as configuration.
/// Every report records the values in effect so guarantees are auditable.
struct Constants {
    double C = 64.0;      // master constant of the private ERM parameter block
    double C_cvx = 8.0;   // convex-stage utility constant
    double C_sc = 32.0;   // strongly-convex-stage utility constant
    double C_ls = 16.0;   // line-search distance constant
    double C_priv = 60.0; // privacy accountant constant
    double C_ba = 8.0;    // ball-acceleration framework constant
    double C_bias = 8.0;  // stochastic-prox bias constant
    double C_var = 512.0; // stochastic-prox variance constant (C_bias^2 + 14 C_sc)

    // Desk-scale execution knobs, all recorded alongside results.
    double stop_A_factor = 2.0;   // certificate stop: A >= stop_A_factor * R^2 / eps
    int ls_replicas = 5;          // aggregation replicas per line-search probe
    int ls_probe_cap = 6;         // max lambda probes per outer iteration
    double movement_tol = 1.0 / 3.0;  // tolerance on the 3r/4 movement window
    std::uint64_t batch_query_cap = 1ull << 20;  // per-minibatch truncation
    std::uint64_t call_query_cap = 1ull << 21;   // per-oracle-call truncation
    int mlmc_level_cap = 16;                     // truncation depth of Geom(1/2) draws
    double t2_floor = 0.0;  // dp driver: escalate the target until T2 >= floor
    int dp_iter_cap = 0;    // dp driver: escalate until expected iterations fit (0 = off)

    void set(const std::string& name, double value) {
        if (name == "C") C = value;
        else if (name == "C_cvx") C_cvx = value;
        else if (name == "C_sc") C_sc = value;
        else if (name == "C_ls") C_ls = value;
        else if (name == "C_priv") C_priv = value;
        else if (name == "C_ba") C_ba = value;
        else if (name == "C_bias") C_bias = value;
        else if (name == "C_var") C_var = value;
        else if (name == "stop_A_factor") stop_A_factor = value;
        else if (name == "ls_replicas") ls_replicas = static_cast<int>(value);
        else if (name == "ls_probe_cap") ls_probe_cap = static_cast<int>(value);
        else if (name == "movement_tol") movement_tol = value;
        else if (name == "batch_query_cap") batch_query_cap = static_cast<std::uint64_t>(value);
        else if (name == "call_query_cap") call_query_cap = static_cast<std::uint64_t>(value);
        else if (name == "mlmc_level_cap") mlmc_level_cap = static_cast<int>(value);
        else if (name == "t2_floor") t2_floor = value;
        else if (name == "dp_iter_cap") dp_iter_cap = static_cast<int>(value);
        else throw std::invalid_argument("unknown constant: " + name);
    }

    std::map<std::string, double> as_map() const {
        return {
            {"C", C},
            {"C_cvx", C_cvx},
            {"C_sc", C_sc},
            {"C_ls", C_ls},
            {"C_priv", C_priv},
            {"C_ba", C_ba},
            {"C_bias", C_bias},
            {"C_var", C_var},
            {"stop_A_factor", stop_A_factor},
            {"ls_replicas", static_cast<double>(ls_replicas)},
            {"ls_probe_cap", static_cast<double>(ls_probe_cap)},
            {"movement_tol", movement_tol},
            {"batch_query_cap", static_cast<double>(batch_query_cap)},
            {"call_query_cap", static_cast<double>(call_query_cap)},
            {"mlmc_level_cap", static_cast<double>(mlmc_level_cap)},
            {"t2_floor", t2_floor},
            {"dp_iter_cap", static_cast<double>(dp_iter_cap)},
        };
    }
};

}  // namespace resque
