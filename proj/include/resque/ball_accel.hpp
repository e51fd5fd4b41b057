#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "resque/aggregate.hpp"
#include "resque/constants.hpp"
#include "resque/ledger.hpp"
#include "resque/rng.hpp"
#include "resque/vec.hpp"

namespace resque {

/// Derived schedule of the outer acceleration loop.
struct BallAccelConfig {
    double L, R, r, eps_opt;
    double C_ba;
    double kappa;        // LR/eps_opt, floored at e
    double K;            // (R/r)^(2/3)
    double lambda_star;  // eps_opt K^2 log^2(kappa) / R^2
    int max_iters;       // ceil(C_ba K log kappa)
    double lambda_min, lambda_max;

    // Execution knobs copied from Constants so the loop is self-contained.
    double stop_A_factor = 2.0;
    int ls_probe_cap = 6;
    double movement_tol = 1.0 / 3.0;
};

inline BallAccelConfig derive_schedule(double L, double R, double r, double eps_opt,
                                       double C_ba) {
    if (!(L > 0.0 && R > 0.0)) throw std::invalid_argument("derive_schedule: L, R must be positive");
    if (!(r > 0.0 && r <= R)) throw std::invalid_argument("derive_schedule: need 0 < r <= R");
    if (!(eps_opt > 0.0 && eps_opt <= L * R))
        throw std::invalid_argument("derive_schedule: need 0 < eps_opt <= L*R");
    if (!(C_ba > 0.0)) throw std::invalid_argument("derive_schedule: C_ba must be positive");

    BallAccelConfig cfg;
    cfg.L = L;
    cfg.R = R;
    cfg.r = r;
    cfg.eps_opt = eps_opt;
    cfg.C_ba = C_ba;
    // kappa floored at e keeps log(kappa) and log^2(kappa) away from 0.
    cfg.kappa = std::max(L * R / eps_opt, std::exp(1.0));
    cfg.K = std::pow(R / r, 2.0 / 3.0);
    const double logk = std::log(cfg.kappa);
    cfg.lambda_star = eps_opt * cfg.K * cfg.K * logk * logk / (R * R);
    cfg.max_iters = static_cast<int>(std::ceil(C_ba * cfg.K * logk));
    cfg.lambda_min = cfg.lambda_star / C_ba;
    cfg.lambda_max = C_ba * L / eps_opt;
    if (!(cfg.lambda_min < cfg.lambda_max))
        throw std::invalid_argument("derive_schedule: empty lambda range");
    return cfg;
}

/// Oracle callbacks of the acceleration loop. Accuracy contracts are the
/// corresponding oracle definitions; they are verified statistically by the
/// acceptance suite, not per call.
struct OracleSuite {
    // (center, lambda) -> point close to the regularized ball minimizer
    std::function<Vec(const Vec&, double)> line_search;
    // (center, lambda, phi) -> point with expected regularized error <= phi
    std::function<Vec(const Vec&, double, double)> ball_opt;
    // (center, lambda, Delta, sigma) -> low-bias, bounded-variance estimate
    std::function<Vec(const Vec&, double, double, double)> stochastic_prox;
};

struct AccelState {
    double A = 0.0;
    Vec x, v;
    int iter = 0;
    std::vector<double> lambda_history;
};

/// Positive root of lambda a^2 = A + a.
inline double ms_coefficient(double A, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("ms_coefficient: lambda must be positive");
    return (1.0 + std::sqrt(1.0 + 4.0 * lambda * A)) / (2.0 * lambda);
}

/// Query point y_lambda: the A-weighted combination of x and v.
inline Vec ms_query_point(const AccelState& s, double lambda) {
    const double a = ms_coefficient(s.A, lambda);
    return lincomb(s.A / (s.A + a), s.x, a / (s.A + a), s.v);
}

/// One accelerated step: x takes the primal point, v the gradient-mapping
/// dual update driven by the (usually low-bias) dual estimate. Both iterates
/// are projected back to the R + r state region.
inline AccelState ms_step(AccelState s, double lambda, const Vec& primal_point,
                          const Vec& dual_estimate, double R, double r) {
    const double a = ms_coefficient(s.A, lambda);
    const Vec y = ms_query_point(s, lambda);
    s.A += a;
    s.x = project_ball0(primal_point, R + r);
    axpy(-a * lambda, sub(y, dual_estimate), s.v);
    s.v = project_ball0(s.v, R);
    s.iter += 1;
    s.lambda_history.push_back(lambda);
    return s;
}

inline AccelState ms_step(AccelState s, double lambda, const Vec& prox_point, double R,
                          double r) {
    return ms_step(std::move(s), lambda, prox_point, prox_point, R, r);
}

struct LineSearchStats {
    std::uint64_t probes = 0;
    std::uint64_t floor_hits = 0;
    std::uint64_t ceil_hits = 0;
};

/// Binary search for lambda such that the prox movement ||prox(y_l) - y_l||
/// lands in the window [3r/4 (1 - tol), r], or lambda reaches the lower end
/// of the range. Doubling search to bracket, then bisection; ties broken
/// toward smaller lambda.
inline double line_search_lambda(const AccelState& state,
                                 const std::function<Vec(const Vec&, double)>& hp_ball_oracle,
                                 const BallAccelConfig& cfg, double warm_lambda,
                                 LineSearchStats* stats = nullptr) {
    const double lo_move = 0.75 * cfg.r * (1.0 - cfg.movement_tol);
    const double hi_move = 0.97 * cfg.r;
    const int cap =
        std::min<int>(cfg.ls_probe_cap,
                      static_cast<int>(std::ceil(std::log2(cfg.lambda_max / cfg.lambda_min))) +
                          static_cast<int>(std::ceil(std::log2(cfg.R / cfg.r))));

    auto clamp = [&](double l) { return std::min(cfg.lambda_max, std::max(cfg.lambda_min, l)); };
    auto movement = [&](double l) {
        const Vec y = ms_query_point(state, l);
        if (stats) stats->probes += 1;
        return dist(hp_ball_oracle(y, l), y);
    };

    double lambda = clamp(warm_lambda);
    double bracket_lo = 0.0, bracket_hi = 0.0;  // movement-too-big / too-small ends
    for (int probe = 0; probe < std::max(1, cap); ++probe) {
        const double m = movement(lambda);
        if (m > hi_move) {
            // ball boundary active: lambda too small
            if (lambda >= cfg.lambda_max) {
                if (stats) stats->ceil_hits += 1;
                return lambda;
            }
            bracket_lo = lambda;
            lambda = (bracket_hi > 0.0) ? clamp(std::sqrt(bracket_lo * bracket_hi))
                                        : clamp(lambda * 4.0);
        } else if (m < lo_move) {
            if (lambda <= cfg.lambda_min) {
                // lower boundary accepted without the movement condition
                if (stats) stats->floor_hits += 1;
                return lambda;
            }
            bracket_hi = lambda;
            lambda = (bracket_lo > 0.0) ? clamp(std::sqrt(bracket_lo * bracket_hi))
                                        : clamp(lambda / 4.0);
        } else {
            return lambda;
        }
    }
    return lambda;
}

struct BallAccelResult {
    Vec x;
    int iters = 0;
    bool hit_iter_cap = false;      // warning flag: no certificate before cap
    bool early_certificate = false; // stopped on A >= stop_A_factor R^2/eps
    LineSearchStats line_search;
    std::uint64_t ball_opt_calls = 0;
    std::uint64_t prox_calls = 0;
    std::vector<double> lambda_history;
};

/// Outer acceleration loop against the three oracle contracts. Per
/// iteration: a lambda line search, one ball-optimization call at accuracy
/// lambda r^2 / (C_ba log^3 kappa), and one stochastic-proximal call at
/// (eps/(C_ba R), eps sqrt(K)/(C_ba R), lambda).
template <typename Observer>
BallAccelResult run_ball_accel(const BallAccelConfig& cfg, const OracleSuite& suite,
                               const Vec& x0, Observer&& observe) {
    AccelState state;
    state.x = project_ball0(x0, cfg.R);
    state.v = state.x;

    BallAccelResult res;
    const double logk = std::log(cfg.kappa);
    const double phi_scale = cfg.C_ba * logk * logk * logk;
    const double delta_req = cfg.eps_opt / (cfg.C_ba * cfg.R);
    const double sigma_req = cfg.eps_opt * std::sqrt(cfg.K) / (cfg.C_ba * cfg.R);
    const double a_stop = cfg.stop_A_factor * cfg.R * cfg.R / cfg.eps_opt;

    double warm_lambda = std::min(cfg.lambda_max, std::max(cfg.lambda_min, cfg.L / cfg.r));
    for (int k = 0; k < cfg.max_iters; ++k) {
        const double lambda =
            line_search_lambda(state, suite.line_search, cfg, warm_lambda, &res.line_search);
        warm_lambda = lambda;
        const Vec y = ms_query_point(state, lambda);
        const Vec xb = suite.ball_opt(y, lambda, lambda * cfg.r * cfg.r / phi_scale);
        res.ball_opt_calls += 1;
        const Vec xp = suite.stochastic_prox(y, lambda, delta_req, sigma_req);
        res.prox_calls += 1;
        state = ms_step(std::move(state), lambda, xb, xp, cfg.R, cfg.r);
        observe(state, lambda);
        if (state.A >= a_stop) {
            res.early_certificate = true;
            break;
        }
    }
    res.hit_iter_cap = !res.early_certificate;
    res.iters = state.iter;
    res.lambda_history = std::move(state.lambda_history);
    res.x = project_ball0(state.x, cfg.R);
    return res;
}

inline BallAccelResult run_ball_accel(const BallAccelConfig& cfg, const OracleSuite& suite,
                                      const Vec& x0) {
    return run_ball_accel(cfg, suite, x0, [](const AccelState&, double) {});
}

struct NonprivateStats {
    std::vector<std::uint64_t> level_queries;  // iterations touching level j
    std::uint64_t cost_truncations = 0;
};

/// Acceleration loop driven by a single ball-optimization callback.
/// Line search oracles are built by aggregating repeated runs at accuracy
/// lambda r^2 / C_ba; the stochastic-proximal role uses the decaying
/// 2^-j accuracy schedule with a randomly truncated telescoping estimator.
template <typename BallOpt>
BallAccelResult run_ball_accel_nonprivate(const BallAccelConfig& cfg, BallOpt&& ball_opt,
                                          const Vec& x0, const Constants& cst, Rng rng,
                                          NonprivateStats* stats = nullptr) {
    const double log_ratio = std::log(cfg.R * cfg.kappa / cfg.r);
    const int j_max = static_cast<int>(std::ceil(std::log2(cfg.K) + cfg.C_ba));
    if (stats) stats->level_queries.assign(static_cast<std::size_t>(j_max) + 1, 0);

    auto level_phi = [&](int j, double lambda) {
        return lambda * cfg.r * cfg.r * std::pow(2.0, -j) / (cfg.C_ba * log_ratio * log_ratio);
    };

    std::uint64_t call_counter = 0;
    OracleSuite suite;
    suite.line_search = [&, reps = std::max(1, cst.ls_replicas)](const Vec& y, double lambda) {
        std::vector<Vec> runs;
        runs.reserve(static_cast<std::size_t>(reps));
        const double phi = lambda * cfg.r * cfg.r / cfg.C_ba;
        for (int i = 0; i < reps; ++i) runs.push_back(ball_opt(y, lambda, phi, ++call_counter));
        return aggregate(runs, cfg.r, nullptr);
    };
    suite.ball_opt = [&](const Vec& y, double lambda, double phi) {
        return ball_opt(y, lambda, phi, ++call_counter);
    };
    suite.stochastic_prox = [&](const Vec& y, double lambda, double, double) {
        int J = rng.geometric_half();
        // Desk-scale cost cap: deep levels cost ~ 2^J base queries; clamp J so
        // a single draw cannot dominate the run (logged truncation).
        const double base_cost = 96.0 * cfg.L * cfg.L / (lambda * level_phi(0, lambda));
        while (J <= j_max &&
               base_cost * std::pow(2.0, J + 1) > static_cast<double>(cst.call_query_cap)) {
            --J;
            if (stats) stats->cost_truncations += 1;
        }
        Vec x0_run = ball_opt(y, lambda, level_phi(0, lambda), ++call_counter);
        if (stats) stats->level_queries[0] += 1;
        if (J < 1 || J > j_max) return x0_run;
        Vec xj = ball_opt(y, lambda, level_phi(J, lambda), ++call_counter);
        Vec xj1 = ball_opt(y, lambda, level_phi(J - 1, lambda), ++call_counter);
        if (stats) {
            stats->level_queries[static_cast<std::size_t>(J)] += 1;
            if (J >= 1) stats->level_queries[static_cast<std::size_t>(J - 1)] += 1;
        }
        axpy(std::pow(2.0, J), sub(xj, xj1), x0_run);
        // keep the combined estimate in the feasible region around y
        return project_ball(x0_run, y, cfg.r);
    };

    return run_ball_accel(cfg, suite, x0);
}

}  // namespace resque
