#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "resque/aggregate.hpp"
#include "resque/ball_accel.hpp"
#include "resque/constants.hpp"
#include "resque/ledger.hpp"
#include "resque/objective.hpp"
#include "resque/privacy.hpp"
#include "resque/rng.hpp"
#include "resque/smoothing.hpp"
#include "resque/vec.hpp"

namespace resque {

// ---------------------------------------------------------------------------
// Subsampled ReSQued PSGD core (convex and regularized epochs)
// ---------------------------------------------------------------------------

struct PsgdSchedule {
    std::uint64_t T = 0;      // gradient budget
    std::uint64_t T_hat = 0;  // 2^floor(log2 T)
    int k = 0;                // number of epochs
    double eta = 0.0;         // base step size
    std::vector<std::uint64_t> T_i;
    std::vector<double> eta_i;
    std::vector<double> sigma_i;  // L eta_i / beta (0 when beta = inf)
};

/// Epoch schedule: T_hat = 2^floor(log2 T), T_i = 2^-i T_hat, eta_i = 4^-i eta,
/// sigma_i = L eta_i / beta, with eta = (r'/L) min(1/sqrt(T), beta/sqrt(d)).
inline PsgdSchedule psgd_schedule(std::uint64_t T, double r_prime, double L, double beta,
                                  int d) {
    PsgdSchedule s;
    s.T = T;
    if (T < 2) return s;  // no epochs
    s.T_hat = 1;
    while (s.T_hat * 2 <= T) s.T_hat *= 2;
    s.k = static_cast<int>(std::round(std::log2(static_cast<double>(s.T_hat))));
    const double beta_term = std::isinf(beta)
                                 ? std::numeric_limits<double>::infinity()
                                 : beta / std::sqrt(static_cast<double>(d));
    s.eta = (r_prime / L) * std::min(1.0 / std::sqrt(static_cast<double>(T)), beta_term);
    for (int i = 1; i <= s.k; ++i) {
        s.T_i.push_back(s.T_hat >> i);
        s.eta_i.push_back(s.eta * std::pow(4.0, -i));
        s.sigma_i.push_back(std::isinf(beta) ? 0.0 : L * s.eta_i.back() / beta);
    }
    return s;
}

/// Injected randomness so coupled neighboring-dataset runs can share the
/// perturbation, index, and noise streams (the drift tests rely on this).
struct PsgdSources {
    std::function<std::size_t(int, std::uint64_t)> index;  // z_{i,j}
    std::function<Vec(int, std::uint64_t)> perturbation;   // xi_{i,j} ~ N(0, rho^2 I)
    std::function<Vec(int)> epoch_noise;                   // standard normal d-vector
};

inline PsgdSources default_psgd_sources(std::uint64_t seed, int d, double rho, std::size_t n) {
    Rng base(seed);
    PsgdSources s;
    s.index = [base, n](int i, std::uint64_t j) {
        Rng r = base.child({1, static_cast<std::uint64_t>(i), j});
        return static_cast<std::size_t>(r.uniform_index(n));
    };
    s.perturbation = [base, d, rho](int i, std::uint64_t j) {
        Rng r = base.child({2, static_cast<std::uint64_t>(i), j});
        return r.gaussian_vec(static_cast<std::size_t>(d), rho);
    };
    s.epoch_noise = [base, d](int i) {
        Rng r = base.child({3, static_cast<std::uint64_t>(i)});
        return r.gaussian_vec(static_cast<std::size_t>(d), 1.0);
    };
    return s;
}

struct PsgdResult {
    Vec x;
    std::uint64_t gradients = 0;
    std::vector<Vec> epoch_outputs;      // x_i (after noise)
    std::vector<Vec> epoch_averages;     // y-bar_i (before noise)
    std::vector<Vec> epoch_last;         // y_{T_i} (last iterate per epoch)
};

/// Epoch loop shared by Algorithms 3 and 4: projected ReSQue PSGD steps with
/// the composite closed form for the lambda/2 ||. - q||^2 term, epoch
/// averaging, and Gaussian noise injection. Records one query batch.
inline PsgdResult psgd_core(const SampledDataset& ds, const Vec& center, double r, double rho,
                            double lambda, const Vec& quad_center, const PsgdSchedule& sched,
                            const Vec& x0, const PsgdSources& src, QueryLedger& queries,
                            std::string_view tag) {
    PsgdResult res;
    res.x = project_ball(x0, center, r);
    if (sched.k == 0) return res;

    std::uint64_t steps = 0;
    for (int i = 1; i <= sched.k; ++i) {
        const std::uint64_t Ti = sched.T_i[static_cast<std::size_t>(i - 1)];
        const double eta = sched.eta_i[static_cast<std::size_t>(i - 1)];
        const double sigma = sched.sigma_i[static_cast<std::size_t>(i - 1)];
        Vec y = res.x;
        Vec sum = zeros(y.size());
        for (std::uint64_t j = 1; j <= Ti; ++j) {
            const std::size_t z = src.index(i, j);
            const Vec xi = src.perturbation(i, j);
            const Vec g = ds.sample_subgradient(z, add(center, xi));
            const Vec est = resque_gradient(y, center, xi, rho, g);
            Vec cand = lincomb(1.0, y, -eta, est);
            if (lambda > 0.0) {
                axpy(eta * lambda, quad_center, cand);
                scale(cand, 1.0 / (1.0 + eta * lambda));
            }
            y = project_ball(cand, center, r);
            axpy(1.0, y, sum);
            ++steps;
        }
        Vec ybar = scaled(sum, 1.0 / static_cast<double>(Ti));
        res.epoch_last.push_back(y);
        res.epoch_averages.push_back(ybar);
        if (sigma > 0.0) axpy(sigma, src.epoch_noise(i), ybar);
        res.x = ybar;
        res.epoch_outputs.push_back(res.x);
    }
    res.gradients = steps;
    queries.add_batch(steps, tag);
    queries.add_comp(steps, 4 * steps);
    return res;
}

namespace detail {

inline void check_psgd_preconditions(const SampledDataset& ds, double r, double rho, double beta,
                                     std::uint64_t T, double delta, double C_priv,
                                     double rprime_over_r) {
    std::ostringstream bad;
    const double n = static_cast<double>(ds.size);
    if (static_cast<double>(ds.size) < C_priv) bad << "n < C_priv; ";
    if (!(static_cast<double>(T) / n <= 1.0 / C_priv)) bad << "T/n <= 1/C_priv violated; ";
    if (!(delta > 0.0 && delta < 1.0 / 6.0)) bad << "delta in (0,1/6) violated; ";
    if (!std::isinf(beta)) {
        const double l1d = std::log(1.0 / delta);
        if (!(beta * beta * l1d * l1d <= 1.0 / C_priv))
            bad << "beta^2 log^2(1/delta) <= 1/C_priv violated; ";
    }
    // rho/r gate, doubled when a wider start bound r' is used
    const double gate = C_priv *
                        std::pow(std::log(std::max(std::log(std::max<double>(T, 2.0)), 1.0) / delta), 2) *
                        std::max(1.0, rprime_over_r);
    if (!(rho / r >= gate))
        bad << "rho/r >= C_priv log^2(log T/delta) violated (rho/r=" << rho / r
            << ", gate=" << gate << "); ";
    const std::string msg = bad.str();
    if (!msg.empty()) throw std::invalid_argument("subsampled solver preconditions: " + msg);
}

inline void record_solver_event(PrivacyLedger* privacy, double beta, std::uint64_t T,
                                std::size_t n, double delta, double C_priv, SolverVariant v,
                                double zeta, double scale, const std::string& label) {
    if (privacy == nullptr) return;
    if (std::isinf(beta))
        throw std::invalid_argument("noise-off mode (beta = inf) cannot record privacy events");
    const SolverRdpSpec spec = solver_rdp_event(beta, static_cast<double>(T),
                                                static_cast<double>(n), delta, C_priv, v, zeta);
    if (!(privacy->alpha() < spec.alpha_max))
        throw std::invalid_argument("ledger alpha outside the admissible range (1, " +
                                    std::to_string(spec.alpha_max) + ")");
    privacy->compose({privacy->alpha(), privacy->alpha() * spec.tau * scale, delta, label});
}

}  // namespace detail

/// Algorithm: subsampled ReSQued ERM solver, convex case. Returns a point of
/// B_center(r); records the solver's RDP event when a privacy ledger is given.
inline Vec subsampled_psgd_convex(const SampledDataset& ds, const Vec& center, double r,
                                  double rho, double beta, std::uint64_t T, std::uint64_t seed,
                                  double event_delta, PrivacyLedger* privacy,
                                  QueryLedger& queries, const Constants& cst = Constants{}) {
    detail::check_psgd_preconditions(ds, r, rho, beta, T, event_delta, cst.C_priv, 1.0);
    const PsgdSchedule sched = psgd_schedule(T, r, ds.lipschitz, beta, ds.dim);
    const PsgdSources src = default_psgd_sources(seed, ds.dim, rho, ds.size);
    detail::record_solver_event(privacy, beta, T, ds.size, event_delta, cst.C_priv,
                                SolverVariant::convex, 0.0, 1.0, "psgd_convex");
    return psgd_core(ds, center, r, rho, 0.0, center, sched, center, src, queries,
                     "psgd_convex")
        .x;
}

/// Algorithm: regularized variant with composite steps, arbitrary start x0
/// with expected distance bound r', and regularizer centered at quad_center.
inline Vec subsampled_psgd_regularized(const SampledDataset& ds, const Vec& center, double r,
                                       double rho, double beta, double lambda,
                                       const Vec& quad_center, std::uint64_t T, double r_prime,
                                       const Vec& x0, std::uint64_t seed, double event_delta,
                                       PrivacyLedger* privacy, QueryLedger& queries,
                                       const Constants& cst = Constants{}) {
    if (!(r_prime >= 0.0 && r_prime <= 2.0 * r))
        throw std::invalid_argument("subsampled_psgd_regularized: need r' in [0, 2r]");
    detail::check_psgd_preconditions(ds, r, rho, beta, T, event_delta, cst.C_priv,
                                     r_prime / r);
    const PsgdSchedule sched = psgd_schedule(T, r_prime, ds.lipschitz, beta, ds.dim);
    const PsgdSources src = default_psgd_sources(seed, ds.dim, rho, ds.size);
    detail::record_solver_event(privacy, beta, T, ds.size, event_delta, cst.C_priv,
                                SolverVariant::convex, 0.0, 1.0, "psgd_regularized");
    return psgd_core(ds, center, r, rho, lambda, quad_center, sched, x0, src, queries,
                     "psgd_regularized")
        .x;
}

struct StrongStageInfo {
    std::vector<double> E;  // E_i, i = 0..k
    std::vector<double> D;  // D_i, i = 0..k
    std::vector<double> beta_i;
    std::vector<std::uint64_t> T_i;
    int k = 0;
};

/// Stage plan of the strongly convex solver: k = ceil(log2 log2 T) stages with
/// beta_{i-1} = 2^((k-i+1)/2) beta, T_{i-1} = 2^(i-1-k) T and shrinking radii
/// r_{i-1} = min(2r, sqrt(2 D_{i-1} / lambda)).
inline StrongStageInfo strong_stage_plan(std::uint64_t T, double beta, double lambda, double L,
                                         int d, double C_cvx) {
    StrongStageInfo info;
    const double lg2T = std::log2(std::max<double>(static_cast<double>(T), 2.0));
    info.k = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(lg2T, 1.0)))));
    const int k = info.k;
    for (int i = 0; i <= k; ++i) {
        const double bi = std::pow(2.0, (k - i) / 2.0) * beta;
        const double Ti = std::pow(2.0, i - k) * static_cast<double>(T);
        info.beta_i.push_back(bi);
        info.T_i.push_back(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(Ti)));
        const double term = std::sqrt(static_cast<double>(d)) / (bi * Ti) + 1.0 / std::sqrt(Ti);
        info.E.push_back(2.0 * C_cvx * C_cvx * L * L / lambda * term * term);
    }
    const double D0 = 2.0 * L * L / lambda;
    for (int i = 0; i <= k; ++i)
        info.D.push_back(4.0 * info.E[static_cast<std::size_t>(i)] *
                         std::pow(D0 / (4.0 * info.E[0]), std::pow(2.0, -i)));
    return info;
}

/// Algorithm: subsampled ReSQued ERM solver, strongly convex case. Runs the
/// stage plan of Algorithm-4 calls; total gradients <= T; records a single
/// composed RDP event (the beta_i^2 T_i^2 sequence telescopes into the stated
/// strongly-convex tau).
inline Vec subsampled_strongly_convex(const SampledDataset& ds, const Vec& center, double r,
                                      double rho, double beta, double lambda,
                                      const Vec& quad_center, std::uint64_t T,
                                      std::uint64_t seed, double event_delta,
                                      PrivacyLedger* privacy, QueryLedger& queries,
                                      const Constants& cst = Constants{}) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("subsampled_strongly_convex: lambda must be positive");
    detail::check_psgd_preconditions(ds, r, rho, beta, T, event_delta, cst.C_priv, 2.0);
    detail::record_solver_event(privacy, beta, T, ds.size, event_delta, cst.C_priv,
                                SolverVariant::strongly_convex, 0.0, 1.0, "strongly_convex");

    const StrongStageInfo plan =
        strong_stage_plan(T, std::isinf(beta) ? 1e12 : beta, lambda, ds.lipschitz, ds.dim,
                          cst.C_cvx);
    Rng rng(seed);
    Vec x = project_ball(quad_center, center, r);
    for (int i = 1; i <= plan.k; ++i) {
        const double bi = std::isinf(beta)
                              ? std::numeric_limits<double>::infinity()
                              : plan.beta_i[static_cast<std::size_t>(i - 1)];
        const std::uint64_t Ti = plan.T_i[static_cast<std::size_t>(i - 1)];
        const double ri =
            std::min(2.0 * r, std::sqrt(2.0 * plan.D[static_cast<std::size_t>(i - 1)] / lambda));
        const PsgdSchedule sched = psgd_schedule(Ti, ri, ds.lipschitz, bi, ds.dim);
        const PsgdSources src =
            default_psgd_sources(rng.child(static_cast<std::uint64_t>(i)).key(), ds.dim, rho,
                                 ds.size);
        x = psgd_core(ds, center, r, rho, lambda, quad_center, sched, x, src, queries,
                      "strongly_convex")
                .x;
    }
    return x;
}

struct MlmcStats {
    std::vector<int> draws;                    // J per loop
    std::vector<std::uint64_t> loop_gradients; // gradients used per loop
    int j_max = 0;
};

/// Per-loop RDP validity data of the bias-reduced estimator; the log
/// argument uses log(log n)/delta and the 2^J scale is applied by the caller.
inline SolverRdpSpec mlmc_loop_rdp(double beta, double T, double n, double delta,
                                   double C_priv) {
    const double llogn =
        std::log(std::max(std::log(std::max(std::log(n), 1.0)), 1.0) / delta);
    const double base = beta * llogn * T / n;
    return {C_priv * base * base, 1.0 / (C_priv * beta * beta * llogn * llogn)};
}

inline int mlmc_level_count(std::size_t n, std::uint64_t T, double C_priv, int level_cap = 16) {
    // T_max = floor(n / C_priv), additionally capped at n (budgets beyond one
    // pass stop improving the top-level run) and by the recorded level cap.
    const double T_max = std::min(static_cast<double>(n) / C_priv, static_cast<double>(n));
    const int j = static_cast<int>(std::floor(std::log2(T_max / static_cast<double>(T))));
    return std::min(j, level_cap);
}

/// One randomly truncated telescoping loop: draws J ~ Geom(1/2) and emits
/// x_0 + 2^J (x_J - x_{J-1}) when J <= j_max, else the base run.
inline Vec mlmc_single_loop(const SampledDataset& ds, const Vec& center, double r, double rho,
                            double beta, double lambda, const Vec& quad_center, std::uint64_t T,
                            int j_max, std::uint64_t seed, double event_delta,
                            QueryLedger& queries, const Constants& cst, int* J_out = nullptr) {
    Rng lrng(seed);
    const int J = lrng.geometric_half();
    if (J_out) *J_out = J;
    auto run = [&](double b, std::uint64_t budget, std::uint64_t tag) {
        return subsampled_strongly_convex(ds, center, r, rho, b, lambda, quad_center, budget,
                                          lrng.child(tag).key(), event_delta, nullptr, queries,
                                          cst);
    };
    if (J > j_max) return run(beta, T, 1);
    Vec x0 = run(beta, T, 1);
    Vec xJ = run(beta * std::pow(2.0, -J / 2.0), T << J, 2);
    Vec xJ1 = run(beta * std::pow(2.0, -(J - 1) / 2.0), T << (J - 1), 3);
    axpy(std::pow(2.0, J), sub(xJ, xJ1), x0);
    return x0;
}

/// Algorithm: bias-reduced stochastic proximal estimator. Averages j_max
/// independent randomly truncated telescoping loops; each loop records the
/// per-loop RDP event (2^J-scaled when J <= j_max).
inline Vec bias_reduced_prox(const SampledDataset& ds, const Vec& center, double r, double rho,
                             double beta, double lambda, const Vec& quad_center,
                             std::uint64_t T, std::uint64_t seed, double event_delta,
                             PrivacyLedger* privacy, QueryLedger& queries,
                             const Constants& cst = Constants{}, MlmcStats* stats = nullptr) {
    if (!(T <= static_cast<std::uint64_t>(
                   std::min(static_cast<double>(ds.size) / (2.0 * cst.C_priv),
                            static_cast<double>(ds.size) / 2.0))))
        throw std::invalid_argument("bias_reduced_prox: requires T <= floor(n / (2 C_priv))");
    const int j_max = mlmc_level_count(ds.size, T, cst.C_priv, cst.mlmc_level_cap);
    if (stats) stats->j_max = j_max;

    Rng rng(seed);
    Vec acc = zeros(static_cast<std::size_t>(ds.dim));
    for (int loop = 1; loop <= j_max; ++loop) {
        const std::uint64_t before = queries.total_queries;
        int J = 0;
        Vec xhat =
            mlmc_single_loop(ds, center, r, rho, beta, lambda, quad_center, T, j_max,
                             rng.child(static_cast<std::uint64_t>(loop)).key(), event_delta,
                             queries, cst, &J);
        if (privacy != nullptr) {
            if (std::isinf(beta))
                throw std::invalid_argument("noise-off mode cannot record privacy events");
            const SolverRdpSpec spec =
                mlmc_loop_rdp(beta, static_cast<double>(T), static_cast<double>(ds.size),
                              event_delta, cst.C_priv);
            if (!(privacy->alpha() < spec.alpha_max))
                throw std::invalid_argument("mlmc loop: ledger alpha outside admissible range");
            const double scale = J <= j_max ? std::pow(2.0, J) : 1.0;
            privacy->compose({privacy->alpha(), privacy->alpha() * spec.tau * scale, event_delta,
                              "mlmc_loop"});
        }
        if (stats) {
            stats->draws.push_back(J);
            stats->loop_gradients.push_back(queries.total_queries - before);
        }
        axpy(1.0, xhat, acc);
    }
    scale(acc, 1.0 / static_cast<double>(j_max));
    return acc;
}

/// Algorithm: high-probability solver. Aggregates k = ceil(20 log(1/zeta))
/// independent strongly convex runs; records one line-search-variant event.
inline Vec high_prob_solver(const SampledDataset& ds, const Vec& center, double r, double rho,
                            double beta, double lambda, const Vec& quad_center, double zeta,
                            std::uint64_t T, std::uint64_t seed, double event_delta,
                            PrivacyLedger* privacy, QueryLedger& queries,
                            const Constants& cst = Constants{}, bool* degraded = nullptr) {
    if (!(zeta > 0.0 && zeta < 1.0))
        throw std::invalid_argument("high_prob_solver: zeta must lie in (0,1)");
    const int k = std::max(1, static_cast<int>(std::ceil(20.0 * std::log(1.0 / zeta))));
    detail::record_solver_event(privacy, beta, T, ds.size, event_delta, cst.C_priv,
                                SolverVariant::line_search, zeta, 1.0, "high_prob");
    Rng rng(seed);
    std::vector<Vec> runs;
    runs.reserve(static_cast<std::size_t>(k));
    for (int i = 1; i <= k; ++i)
        runs.push_back(subsampled_strongly_convex(ds, center, r, rho, beta, lambda, quad_center,
                                                  T, rng.child(static_cast<std::uint64_t>(i)).key(),
                                                  event_delta, nullptr, queries, cst));
    const double b = std::isinf(beta) ? 1.0 : beta;
    const double d = static_cast<double>(ds.dim);
    const double Td = static_cast<double>(T);
    const double Delta = 9.0 * std::sqrt(2.0 * cst.C_sc) * ds.lipschitz / lambda *
                         std::sqrt(d / (b * b * Td * Td) + 1.0 / Td);
    return aggregate(runs, Delta, degraded);
}

// ---------------------------------------------------------------------------
// Private ERM / SCO drivers
// ---------------------------------------------------------------------------

struct DpDriverParams {
    double alpha = 0.0;
    double eps_rdp_pool = 0.0;   // RDP epsilon available for events
    double delta_event_pool = 0.0;
    double delta_prime = 0.0;    // conversion delta'
    double eps_opt = 0.0, rho = 0.0, r = 0.0, beta = 0.0, zeta = 0.0;
    std::uint64_t T1 = 0, T2 = 0, T3 = 0;
    int j_max = 0;
    double t_scale = 1.0;        // feasibility scaling applied to the budgets
    double event_delta = 0.0;
    BallAccelConfig schedule{};
    std::string note;
};

struct DpRunInfo {
    DpDriverParams params{};
    DpGuarantee converted{0.0, 0.0};
    BallAccelResult accel{};
    std::uint64_t gradient_total = 0;
    bool fell_back_single_phase = false;  // dp_sco only
    std::vector<std::size_t> phase_sizes; // dp_sco only
};

namespace detail {

inline double worst_variant_logarg(double T, double n, double delta, double zeta) {
    const double l1 = std::log(1.0 / delta);
    const double l2 = std::log(std::max(std::log(std::max(std::log(std::max(T, 2.0)), 1.0)), 1.0) / delta);
    const double l3 = std::log(std::max(std::log(std::max(T, 2.0) / zeta), 1.0) / delta);
    (void)n;
    return std::max({l1, l2, l3});
}

/// Parameter block of the private ERM driver at a given optimization target.
/// Shapes follow the paper's fixed-parameter display; the budgets are then
/// scaled (uniformly) so the worst-case composed privacy fits the available
/// RDP pool, and an explicit infeasibility error is raised if even unit
/// budgets do not fit.
inline DpDriverParams derive_dp_driver_at(std::size_t n_sz, int d_int, double L, double R,
                                          double eps_dp, double delta, double alpha,
                                          double eps_rdp_pool, double delta_event_pool,
                                          double eps_opt_target, const Constants& cst) {
    const double n = static_cast<double>(n_sz);
    const double d = static_cast<double>(d_int);
    if (!(eps_dp > 0.0 && eps_dp < 1.0 + 1e-12))
        throw std::invalid_argument("dp driver: eps_dp must lie in (0,1]");
    if (!(delta > 0.0 && delta < 1.0 / 6.0))
        throw std::invalid_argument("dp driver: delta must lie in (0,1/6)");
    if (n < cst.C_priv)
        throw std::invalid_argument("dp driver: dataset smaller than C_priv; preconditions of "
                                    "the subsampled solvers cannot hold");

    DpDriverParams p;
    p.alpha = alpha;
    p.eps_rdp_pool = eps_rdp_pool;
    p.delta_event_pool = delta_event_pool;

    const double l1d = std::log(1.0 / delta);
    const double lnd = std::log(n / delta);

    p.eps_opt = eps_opt_target;
    if (p.eps_opt >= L * R) {
        p.eps_opt = L * R;  // kappa floors at e inside the schedule
        p.note += "eps_opt clipped to LR; ";
    }
    p.rho = p.eps_opt / (L * std::sqrt(d));

    // r: the Eq shape or the drift-contract gate, whichever is smaller --
    // but never so small that the schedule's lambda range empties. The
    // feasibility cap keeps lambda_star <= lambda_max/4:
    //   (rho/r) <= [C_ba kappa^(2/3) / (4 d^(2/3) log^2 kappa)]^(3/4).
    const double Tmax_gate = std::max(n / cst.C_priv, 2.0);
    const double drift_gate =
        cst.C_priv * std::pow(std::log(std::max(std::log(Tmax_gate), 1.0) / delta), 2) * 2.0;
    const double kappa0 = std::max(L * R / p.eps_opt, std::exp(1.0));
    const double lk0 = std::log(kappa0);
    const double ratio_feasible = std::pow(
        cst.C_ba * std::pow(kappa0, 2.0 / 3.0) / (4.0 * std::pow(d, 2.0 / 3.0) * lk0 * lk0),
        0.75);
    double ratio = std::max(std::sqrt(cst.C) * lnd * lnd, drift_gate);
    if (ratio > ratio_feasible) {
        ratio = ratio_feasible;
        p.note += "rho/r ratio capped for lambda-range feasibility; ";
    }
    if (ratio < 1.0) ratio = 1.0;  // keep r <= rho (ReSQue displacement contract)
    p.r = p.rho / ratio;
    if (p.r > R) p.r = R;

    p.schedule = derive_schedule(L, R, p.r, p.eps_opt, cst.C_ba);
    p.schedule.stop_A_factor = cst.stop_A_factor;
    p.schedule.ls_probe_cap = cst.ls_probe_cap;
    p.schedule.movement_tol = cst.movement_tol;
    const double kappa = p.schedule.kappa;
    const double K = p.schedule.K;
    const double lk = std::log(kappa);
    const double iters = static_cast<double>(p.schedule.max_iters);

    p.zeta = std::min(0.5, 1.0 / (kappa * cst.C_ba * K * lk));

    // Expected iteration count under the A-growth certificate; the noise of
    // desk-scale oracles compounds across iterations, so configurations may
    // cap it and let the target escalate instead.
    if (cst.dp_iter_cap > 0) {
        const double a_target = cst.stop_A_factor * R * R / p.eps_opt;
        const double expect_iters =
            std::min(iters, 2.0 * std::sqrt(a_target * p.schedule.lambda_min) + 1.0);
        if (expect_iters > static_cast<double>(cst.dp_iter_cap)) {
            std::ostringstream os;
            os << "dp driver infeasible: expected iterations " << expect_iters
               << " exceed the configured cap " << cst.dp_iter_cap;
            throw std::invalid_argument(os.str());
        }
    }

    // Event-level delta: conservative event count (j_max at its upper bound).
    const int j_max_bound =
        std::max(1, static_cast<int>(std::floor(std::log2(std::max(Tmax_gate, 2.0)))));
    const double n_events = iters * (cst.ls_probe_cap + 1.0 + j_max_bound) + 1.0;
    p.event_delta = std::min(delta_event_pool / n_events, 0.99 / 6.0);
    if (!(p.event_delta > 0.0))
        throw std::invalid_argument("dp driver: event delta pool exhausted");

    // beta: shape value clamped into the admissible alpha range for every
    // event variant this run will record.
    p.beta = eps_dp / (cst.C * lnd * std::sqrt(l1d));
    const double worst_log = worst_variant_logarg(Tmax_gate, n, p.event_delta, p.zeta);
    const double beta_cap =
        0.99 / std::sqrt(cst.C_priv * std::max(alpha, 1.0 + 1e-9)) / worst_log;
    if (p.beta > beta_cap) {
        p.beta = beta_cap;
        p.note += "beta clamped to the alpha-range cap; ";
    }

    const double sC = std::sqrt(cst.C);
    auto budget = [&](double denom1, double denom2) {
        return sC * (kappa * std::sqrt(d) / (std::sqrt(K) * p.beta * denom1) +
                     kappa * kappa / (K * denom2));
    };
    double T1 = budget(lk * lk, lk * lk * lk * lnd);
    double T2 = budget(std::sqrt(lk), lk);
    double T3 = budget(1.0, 1.0);

    // Hard gates from the solver preconditions.
    const double cap12 = std::min(std::floor(n / cst.C_priv), n);
    const double cap3 = std::max(1.0, std::min(std::floor(n / (2.0 * cst.C_priv)), n / 2.0));
    if (T1 > cap12 || T2 > cap12 || T3 > cap3) p.note += "T budgets clamped to n/C_priv gates; ";
    T1 = std::max(1.0, std::min(T1, cap12));
    T2 = std::max(1.0, std::min(T2, cap12));
    T3 = std::max(1.0, std::min(T3, cap3));

    // Worst-case privacy reservation per outer iteration, at the deltas the
    // events will actually carry.
    auto iteration_eps = [&](double t1, double t2, double t3) {
        const auto ls = solver_rdp_event(p.beta, t1, n, p.event_delta, cst.C_priv,
                                         SolverVariant::line_search, p.zeta);
        const auto bo = solver_rdp_event(p.beta, t2, n, p.event_delta, cst.C_priv,
                                         SolverVariant::strongly_convex);
        const auto sp = mlmc_loop_rdp(p.beta, t3, n, p.event_delta, cst.C_priv);
        const int jmax = std::max(1, mlmc_level_count(n_sz, static_cast<std::uint64_t>(t3),
                                                      cst.C_priv, cst.mlmc_level_cap));
        const double sp_worst = std::pow(2.0, jmax) * sp.tau * jmax;
        return alpha * (cst.ls_probe_cap * ls.tau + bo.tau + sp_worst);
    };

    double need = iters * iteration_eps(T1, T2, T3);
    if (need > eps_rdp_pool) {
        for (int round = 0; round < 200 && need > eps_rdp_pool; ++round) {
            if (T1 <= 1.0 && T2 <= 1.0 && T3 <= 1.0) break;
            const double scale =
                std::min(0.9, std::sqrt(eps_rdp_pool / need)) * 0.999;
            T1 = std::max(1.0, std::floor(T1 * scale));
            T2 = std::max(1.0, std::floor(T2 * scale));
            T3 = std::max(1.0, std::floor(T3 * scale));
            p.t_scale *= scale;
            need = iters * iteration_eps(T1, T2, T3);
        }
        if (need > eps_rdp_pool) {
            std::ostringstream os;
            os << "dp driver infeasible: even minimal budgets need RDP epsilon " << need
               << " > pool " << eps_rdp_pool << " (n=" << n << ", eps_dp=" << eps_dp
               << ", delta=" << delta << ", iterations=" << iters << ")";
            throw std::invalid_argument(os.str());
        }
        p.note += "budgets scaled down for RDP feasibility; ";
    } else {
        // Privacy headroom: grow the budgets toward the gates so the spend
        // tracks the available pool. Growth favors the ball-optimization and
        // proximal budgets; the line-search replicas only pick lambda, so
        // T1 stays near its formula value.
        bool grew = false;
        for (int round = 0; round < 400; ++round) {
            if (T1 >= cap12 && T2 >= cap12 && T3 >= cap3) break;
            const double t1 = std::min(std::ceil(T1 * 1.05), cap12);
            const double t2 = std::min(std::ceil(T2 * 1.3), cap12);
            const double t3 = std::min(std::ceil(T3 * 1.2), cap3);
            if (iters * iteration_eps(t1, t2, t3) > 0.9 * eps_rdp_pool) break;
            T1 = t1;
            T2 = t2;
            T3 = t3;
            grew = true;
            need = iters * iteration_eps(T1, T2, T3);
        }
        if (grew) p.note += "budgets grown into the RDP headroom; ";
    }

    if (T2 < cst.t2_floor) {
        std::ostringstream os;
        os << "dp driver infeasible: ball-optimization budget T2 = " << T2
           << " below the configured utility floor " << cst.t2_floor;
        throw std::invalid_argument(os.str());
    }
    p.T1 = static_cast<std::uint64_t>(T1);
    p.T2 = static_cast<std::uint64_t>(T2);
    p.T3 = static_cast<std::uint64_t>(T3);
    p.j_max = std::max(1, mlmc_level_count(n_sz, p.T3, cst.C_priv, cst.mlmc_level_cap));

    // The subsampled solvers re-check their own gates per call; surface the
    // binding rho/r conflict here with full context, using the worst-case
    // inner budget (the deepest telescoping level) and the widened-start
    // factor of the regularized solver.
    const double T_wc = std::max({static_cast<double>(p.T1), static_cast<double>(p.T2),
                                  std::pow(2.0, p.j_max) * static_cast<double>(p.T3)});
    const double gate =
        cst.C_priv *
        std::pow(std::log(std::max(std::log(std::max(T_wc, 2.0)), 1.0) / p.event_delta), 2) *
        2.0;
    if (p.rho / p.r < gate) {
        std::ostringstream os;
        os << "dp driver infeasible: operating rho/r = " << p.rho / p.r
           << " cannot satisfy the drift precondition rho/r >= " << gate
           << " while keeping the lambda range nonempty (n=" << n << ", C_priv=" << cst.C_priv
           << "); reduce C_priv or increase n";
        throw std::invalid_argument(os.str());
    }
    return p;
}

/// Target selection: the unregularized rate shape, or the regularized
/// corollary's L^2/lambda rate when lambda_reg > 0; the target is escalated
/// geometrically until the full derivation (budgets, gates, lambda range)
/// is feasible.
inline DpDriverParams derive_dp_driver(std::size_t n_sz, int d_int, double L, double R,
                                       double eps_dp, double delta, double alpha,
                                       double eps_rdp_pool, double delta_event_pool,
                                       const Constants& cst, double lambda_reg = 0.0) {
    const double n = static_cast<double>(n_sz);
    const double d = static_cast<double>(d_int);
    const double l1d = std::log(1.0 / delta);
    const double lnd = std::log(n / delta);
    const double unreg_shape =
        cst.C * L * R *
        (1.0 / std::sqrt(n) +
         std::sqrt(d * l1d) * std::pow(lnd, 1.5) * std::log(n) / (n * eps_dp));
    double target = unreg_shape;
    if (lambda_reg > 0.0) {
        // regularized-corollary rate, floored at the unregularized shape:
        // finer targets than the plain rate only multiply iterations past
        // what desk-scale oracle noise supports
        const double reg_shape =
            cst.C * L * L / lambda_reg *
            (1.0 / n + d * l1d * std::pow(lnd, 3) * std::pow(std::log(n), 2) /
                           (n * n * eps_dp * eps_dp));
        target = std::max(reg_shape, unreg_shape);
    }
    target = std::min(target, L * R);
    std::string last_error;
    for (int attempt = 0; attempt < 64; ++attempt) {
        try {
            DpDriverParams p = derive_dp_driver_at(n_sz, d_int, L, R, eps_dp, delta, alpha,
                                                   eps_rdp_pool, delta_event_pool, target, cst);
            if (attempt > 0) p.note += "eps_opt escalated for feasibility; ";
            return p;
        } catch (const std::invalid_argument& e) {
            last_error = e.what();
            if (target >= L * R) break;
            target = std::min(target * 1.6, L * R);
        }
    }
    throw std::invalid_argument(last_error);
}

struct ErmOracleWiring {
    const SampledDataset* ds;
    DpDriverParams* params;
    PrivacyLedger* privacy;
    QueryLedger* queries;
    const Constants* cst;
    double lambda_reg = 0.0;
    Vec reg_center;
    Rng seed_stream{0};
    std::uint64_t counter = 0;
};

inline OracleSuite make_erm_suite(ErmOracleWiring& w) {
    auto quad = [&w](const Vec& y, double lam_ball, double& lam_tot) {
        lam_tot = lam_ball + w.lambda_reg;
        if (w.lambda_reg == 0.0) return y;
        return lincomb(lam_ball / lam_tot, y, w.lambda_reg / lam_tot, w.reg_center);
    };
    OracleSuite suite;
    suite.line_search = [&w, quad](const Vec& y, double lam) {
        double lt = 0.0;
        const Vec q = quad(y, lam, lt);
        return high_prob_solver(*w.ds, y, w.params->r, w.params->rho, w.params->beta, lt, q,
                                w.params->zeta, w.params->T1,
                                w.seed_stream.child(++w.counter).key(), w.params->event_delta,
                                w.privacy, *w.queries, *w.cst);
    };
    suite.ball_opt = [&w, quad](const Vec& y, double lam, double) {
        double lt = 0.0;
        const Vec q = quad(y, lam, lt);
        return subsampled_strongly_convex(*w.ds, y, w.params->r, w.params->rho, w.params->beta,
                                          lt, q, w.params->T2,
                                          w.seed_stream.child(++w.counter).key(),
                                          w.params->event_delta, w.privacy, *w.queries, *w.cst);
    };
    suite.stochastic_prox = [&w, quad](const Vec& y, double lam, double, double) {
        double lt = 0.0;
        const Vec q = quad(y, lam, lt);
        Vec est = bias_reduced_prox(*w.ds, y, w.params->r, w.params->rho, w.params->beta, lt, q,
                                    w.params->T3, w.seed_stream.child(++w.counter).key(),
                                    w.params->event_delta, w.privacy, *w.queries, *w.cst);
        // the true prox lies in the ball; clamping the telescoped estimate
        // keeps the dual update bounded
        return project_ball(est, y, w.params->r);
    };
    return suite;
}

inline Vec dp_erm_core(const SampledDataset& ds, double eps_dp, double delta, double alpha,
                       double eps_rdp_pool, double delta_event_pool, double lambda_reg,
                       const Vec& x_prime, std::uint64_t seed, PrivacyLedger& privacy,
                       QueryLedger& queries, const Constants& cst, DpRunInfo* info) {
    DpDriverParams params =
        derive_dp_driver(ds.size, ds.dim, ds.lipschitz, ds.radius, eps_dp, delta, alpha,
                         eps_rdp_pool, delta_event_pool, cst, lambda_reg);
    ErmOracleWiring wiring{&ds,     &params, &privacy, &queries, &cst,
                           lambda_reg, x_prime, Rng(seed), 0};
    OracleSuite suite = make_erm_suite(wiring);
    const Vec x0 = project_ball0(x_prime, ds.radius);
    BallAccelResult res = run_ball_accel(params.schedule, suite, x0);
    // Chernoff event on the MLMC draw counts: pure delta, no epsilon.
    privacy.compose({privacy.alpha(), 0.0, params.event_delta, "chernoff_counts"});
    if (info) {
        info->params = params;
        info->accel = res;
        info->gradient_total = queries.total_queries;
    }
    return res.x;
}

}  // namespace detail

/// Private ERM driver: wires the high-probability solver (line search), the
/// strongly convex solver (ball optimization), and the bias-reduced
/// estimator (stochastic proximal) into the acceleration loop. The privacy
/// ledger converts within (eps_dp, delta) by construction of the budgets.
inline Vec dp_erm(const SampledDataset& ds, double eps_dp, double delta,
                  PrivacyLedger& privacy, QueryLedger& queries, std::uint64_t seed,
                  const Constants& cst = Constants{}, DpRunInfo* info = nullptr) {
    const double alpha = privacy.alpha();
    const double delta_prime = delta / 2.0;
    const double eps_pool = eps_dp - std::log(1.0 / delta_prime) / (alpha - 1.0);
    if (!(eps_pool > 0.0))
        throw std::invalid_argument("dp_erm: alpha leaves no RDP budget after conversion");
    const double delta_pool = delta / 2.0 / (1.0 + std::exp(eps_dp));
    Vec out = detail::dp_erm_core(ds, eps_dp, delta, alpha, eps_pool, delta_pool, 0.0,
                                  zeros(static_cast<std::size_t>(ds.dim)), seed, privacy,
                                  queries, cst, info);
    if (info) {
        info->params.delta_prime = delta_prime;
        info->converted = privacy.to_dp(delta_prime);
    }
    return out;
}

/// Ledger alpha per the driver setting: alpha = 4 log(2/delta) / eps_dp.
inline double dp_driver_alpha(double eps_dp, double delta) {
    return 4.0 * std::log(2.0 / delta) / eps_dp;
}

/// Private regularized ERM: same machinery on the lambda-regularized
/// objective centered at x_prime; stage initializers project x_prime.
inline Vec dp_erm_regularized(const SampledDataset& ds, double eps_dp, double delta,
                              double lambda, const Vec& x_prime, PrivacyLedger& privacy,
                              QueryLedger& queries, std::uint64_t seed,
                              const Constants& cst = Constants{}, DpRunInfo* info = nullptr) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("dp_erm_regularized: lambda must be >= 0");
    const double alpha = privacy.alpha();
    const double delta_prime = delta / 2.0;
    const double eps_pool = eps_dp - std::log(1.0 / delta_prime) / (alpha - 1.0);
    if (!(eps_pool > 0.0))
        throw std::invalid_argument("dp_erm_regularized: no RDP budget after conversion");
    const double delta_pool = delta / 2.0 / (1.0 + std::exp(eps_dp));
    Vec out = detail::dp_erm_core(ds, eps_dp, delta, alpha, eps_pool, delta_pool, lambda,
                                  x_prime, seed, privacy, queries, cst, info);
    if (info) {
        info->params.delta_prime = delta_prime;
        info->converted = privacy.to_dp(delta_prime);
    }
    return out;
}

/// Private SCO via iterative localization: phase i solves the lambda_i =
/// lambda_0 2^i regularized ERM on a disjoint chunk of n/2^i samples around
/// the previous iterate, with geometrically split privacy budgets.
inline Vec dp_sco(const SampledDataset& ds, double eps_dp, double delta, PrivacyLedger& privacy,
                  QueryLedger& queries, std::uint64_t seed, const Constants& cst = Constants{},
                  DpRunInfo* info = nullptr) {
    const double alpha = privacy.alpha();
    const double delta_prime = delta / 2.0;
    const double eps_pool_total = eps_dp - std::log(1.0 / delta_prime) / (alpha - 1.0);
    if (!(eps_pool_total > 0.0))
        throw std::invalid_argument("dp_sco: alpha leaves no RDP budget after conversion");
    const double delta_pool_total = delta / 2.0 / (1.0 + std::exp(eps_dp));

    const double lambda0 = ds.lipschitz / (ds.radius * std::sqrt(static_cast<double>(ds.size)));
    Vec x = zeros(static_cast<std::size_t>(ds.dim));

    // Disjoint chunks of size n/2^i while they stay above the solver floor
    // (chunks below 32 samples cannot sustain useful budgets).
    std::vector<std::size_t> sizes;
    std::size_t start = 0;
    for (int i = 1; start < ds.size; ++i) {
        const std::size_t want = ds.size >> i;
        if (static_cast<double>(want) < std::max(cst.C_priv, 32.0)) break;
        sizes.push_back(want);
        start += want;
    }
    if (info) info->phase_sizes = sizes;

    if (sizes.size() < 2) {
        if (info) info->fell_back_single_phase = true;
        DpRunInfo sub_info;
        Vec out = detail::dp_erm_core(ds, eps_dp, delta, alpha, eps_pool_total,
                                      delta_pool_total, lambda0, x, seed, privacy, queries, cst,
                                      info ? &sub_info : nullptr);
        if (info) {
            info->params = sub_info.params;
            info->accel = sub_info.accel;
            info->gradient_total = queries.total_queries;
            info->converted = privacy.to_dp(delta_prime);
        }
        return out;
    }

    // Plan the phase chain upfront: a phase is worth running only if its
    // derived target is feasible and refines its predecessor's. If the chain
    // collapses to fewer than two useful phases, fall back to a single
    // regularized run on the full dataset with the full budget.
    Rng rng(seed);
    std::size_t planned = 0;
    {
        double prev_target = std::numeric_limits<double>::infinity();
        std::size_t probe_start = 0;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            const double share = std::pow(2.0, -static_cast<double>(i + 1));
            const double lambda_i = lambda0 * std::pow(2.0, static_cast<double>(i + 1));
            try {
                const DpDriverParams probe = detail::derive_dp_driver(
                    sizes[i], ds.dim, ds.lipschitz, ds.radius, eps_dp * share, delta * share,
                    alpha, eps_pool_total * share, delta_pool_total * share, cst, lambda_i);
                if (probe.eps_opt > 0.9 * prev_target) break;
                prev_target = probe.eps_opt;
            } catch (const std::invalid_argument&) {
                break;
            }
            probe_start += sizes[i];
            planned = i + 1;
        }
    }

    std::vector<std::size_t> executed;
    if (planned < 2) {
        DpRunInfo sub_info;
        x = detail::dp_erm_core(ds, eps_dp, delta, alpha, eps_pool_total, delta_pool_total,
                                lambda0, x, rng.child(0xfa11).key(), privacy, queries, cst,
                                info ? &sub_info : nullptr);
        executed.push_back(ds.size);
        if (info) info->params = sub_info.params;
    } else {
        start = 0;
        for (std::size_t i = 0; i < planned; ++i) {
            const SampledDataset chunk = ds.slice(start, sizes[i]);
            start += sizes[i];
            const double share = std::pow(2.0, -static_cast<double>(i + 1));
            const double lambda_i = lambda0 * std::pow(2.0, static_cast<double>(i + 1));
            DpRunInfo phase_info;
            x = detail::dp_erm_core(chunk, eps_dp * share, delta * share, alpha,
                                    eps_pool_total * share, delta_pool_total * share, lambda_i,
                                    x, rng.child(i).key(), privacy, queries, cst,
                                    info ? &phase_info : nullptr);
            executed.push_back(sizes[i]);
            if (info && i == 0) info->params = phase_info.params;
        }
    }
    if (info) {
        info->phase_sizes = executed;
        info->fell_back_single_phase = executed.size() < 2;
        info->gradient_total = queries.total_queries;
        info->converted = privacy.to_dp(delta_prime);
    }
    return x;
}

}  // namespace resque
