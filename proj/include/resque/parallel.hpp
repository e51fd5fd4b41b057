#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "resque/ball_accel.hpp"
#include "resque/constants.hpp"
#include "resque/ledger.hpp"
#include "resque/objective.hpp"
#include "resque/smoothing.hpp"
#include "resque/vec.hpp"

namespace resque {

namespace detail {

inline void check_ball_oracle_args(double r, double rho, double lambda, double phi) {
    if (rho != r)
        throw std::invalid_argument("ball oracle: requires rho == r (smoothing radius = ball radius)");
    if (!(lambda > 0.0 && phi > 0.0))
        throw std::invalid_argument("ball oracle: lambda and phi must be positive");
}

/// Queries g at center + xi_i for all pre-sampled xi in one ledger batch.
inline std::vector<Vec> prebatch_gradients(const StochasticGradientOracle& g, const Vec& center,
                                           const std::vector<Vec>& xis, QueryLedger& ledger,
                                           std::string_view tag, const Rng& stream) {
    std::vector<Vec> points;
    points.reserve(xis.size());
    for (const Vec& xi : xis) points.push_back(add(center, xi));
    return oracle_query(g, points, ledger, tag, stream);
}

}  // namespace detail

/// Parallel EpochSGD ball-optimization oracle: a (phi, lambda)-ball oracle
/// for the smoothed objective over B_center(r), with all 2T gradient queries
/// issued as a single batch up front.
inline Vec epoch_sgd(const LipschitzObjective& f, const StochasticGradientOracle& g,
                     const Vec& center, double r, double rho, double lambda, double phi,
                     QueryLedger& ledger, std::uint64_t seed,
                     const Constants& cst = Constants{}) {
    detail::check_ball_oracle_args(r, rho, lambda, phi);
    const double L = f.lipschitz;
    std::uint64_t T =
        static_cast<std::uint64_t>(std::ceil(48.0 * L * L / (lambda * phi)));
    const std::uint64_t cap = std::min(cst.batch_query_cap, cst.call_query_cap);
    if (2 * T > cap) {
        T = cap / 2;
        ledger.truncations += 1;
    }

    Rng rng(seed);
    const std::vector<Vec> xis =
        presample_perturbations(rho, f.dim, 2 * T, rng.child(1).key());
    const std::vector<Vec> grads =
        detail::prebatch_gradients(g, center, xis, ledger, "epoch_sgd", rng.child(2));

    double eta = 1.0 / (4.0 * lambda);
    std::uint64_t T_k = 16;
    Vec x = center;  // x_k^0
    std::uint64_t consumed = 0;
    std::uint64_t steps = 0;
    while (consumed + T_k <= T) {
        // x_k^1: pull toward the regularizer center
        Vec iter = project_ball(lincomb(1.0 / (1.0 + eta * lambda), x,
                                        eta * lambda / (1.0 + eta * lambda), center),
                                center, r);
        ++steps;
        Vec sum = iter;
        for (std::uint64_t t = 1; t < T_k; ++t) {
            const std::uint64_t i = consumed + t;  // global perturbation index
            const Vec est = resque_gradient(iter, center, xis[i - 1], rho, grads[i - 1]);
            Vec z = lincomb(1.0, iter, -eta, est);
            axpy(eta * lambda, center, z);
            scale(z, 1.0 / (1.0 + eta * lambda));
            iter = project_ball(z, center, r);
            axpy(1.0, iter, sum);
            ++steps;
        }
        x = scaled(sum, 1.0 / static_cast<double>(T_k));
        consumed += T_k;
        T_k *= 2;
        eta *= 0.5;
    }
    ledger.add_comp(steps, 4 * steps + consumed);
    return x;
}

/// Parallel AC-SA ball-optimization oracle with the K-round restart schedule;
/// same contract as epoch_sgd with inner sequential depth T*K.
inline Vec ac_sa(const LipschitzObjective& f, const StochasticGradientOracle& g,
                 const Vec& center, double r, double rho, double lambda, double phi,
                 QueryLedger& ledger, std::uint64_t seed, const Constants& cst = Constants{}) {
    detail::check_ball_oracle_args(r, rho, lambda, phi);
    const double L = f.lipschitz;
    if (lambda * r * r <= phi) return center;  // already phi-optimal

    const int K = static_cast<int>(std::ceil(std::log2(lambda * r * r / phi)));
    const std::uint64_t T =
        static_cast<std::uint64_t>(std::ceil(4.0 * std::sqrt(L / (rho * lambda) + 1.0)));
    std::vector<std::uint64_t> N_k(static_cast<std::size_t>(K));
    std::uint64_t N = 0;
    for (int k = 1; k <= K; ++k) {
        double nk = std::ceil(std::pow(2.0, k) * 48.0 * L * L /
                              (lambda * lambda * r * r * static_cast<double>(T)));
        if (nk > static_cast<double>(cst.batch_query_cap)) {
            nk = static_cast<double>(cst.batch_query_cap);
            ledger.truncations += 1;
        }
        N_k[static_cast<std::size_t>(k - 1)] = static_cast<std::uint64_t>(nk);
        N += T * N_k[static_cast<std::size_t>(k - 1)];
    }
    if (N > cst.call_query_cap) {
        // proportional trim of the minibatch schedule (logged truncation)
        const double shrink = static_cast<double>(cst.call_query_cap) / static_cast<double>(N);
        N = 0;
        for (auto& nk : N_k) {
            nk = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
                                                static_cast<double>(nk) * shrink));
            N += T * nk;
        }
        ledger.truncations += 1;
    }

    Rng rng(seed);
    const std::vector<Vec> xis = presample_perturbations(rho, f.dim, N, rng.child(1).key());
    const std::vector<Vec> grads =
        detail::prebatch_gradients(g, center, xis, ledger, "ac_sa", rng.child(2));

    Vec x_ag = center;
    Vec x = center;
    std::uint64_t offset = 0;
    std::uint64_t work = 0;
    for (int k = 1; k <= K; ++k) {
        const std::uint64_t nk = N_k[static_cast<std::size_t>(k - 1)];
        for (std::uint64_t t = 1; t <= T; ++t) {
            const double alpha = 2.0 / static_cast<double>(t + 1);
            const double gamma =
                4.0 * (L / rho + lambda) / (static_cast<double>(t) * static_cast<double>(t + 1));
            const double denom = gamma + (1.0 - alpha * alpha) * lambda;
            const double c_ag = (1.0 - alpha) * (lambda + gamma) / denom;
            const Vec x_md = lincomb(c_ag, x_ag, 1.0 - c_ag, x);

            Vec grad_hat = zeros(x.size());
            for (std::uint64_t n = 0; n < nk; ++n) {
                const std::uint64_t i = offset + n;
                const double w = std::exp(resque_log_weight(x_md, center, xis[i], rho));
                axpy(w, grads[i], grad_hat);
            }
            scale(grad_hat, 1.0 / static_cast<double>(nk));
            offset += nk;

            // closed-form composite step (full strongly-convex part linearized
            // at the md point with weight alpha), then projection onto the ball
            Vec z = scaled(x, gamma + lambda * (1.0 - alpha));
            axpy(alpha * lambda, center, z);
            axpy(-alpha, grad_hat, z);
            scale(z, 1.0 / (gamma + lambda));
            x = project_ball(z, center, r);
            x_ag = lincomb(alpha, x, 1.0 - alpha, x_ag);
            work += nk + 4;
        }
        x = x_ag;  // restart both anchors at the aggregated point
    }
    ledger.add_comp(static_cast<std::uint64_t>(K) * T, work);
    return x_ag;
}

enum class ParallelMethod { epoch_sgd, ac_sa };

inline ParallelMethod parse_parallel_method(const std::string& s) {
    if (s == "epoch_sgd") return ParallelMethod::epoch_sgd;
    if (s == "ac_sa") return ParallelMethod::ac_sa;
    throw std::invalid_argument("unknown parallel method: " + s);
}

struct ParallelRunInfo {
    BallAccelConfig schedule{};
    BallAccelResult accel{};
    NonprivateStats levels{};
    bool trivial = false;  // eps_opt > LR shortcut
};

/// End-to-end parallel SCO driver: smooths at r = rho = eps/( sqrt(d) L )
/// (internal target tripled to absorb the smoothing bias) and runs the
/// acceleration loop on ball oracles with pre-batched ReSQue queries.
inline Vec solve_parallel(const LipschitzObjective& f, const StochasticGradientOracle& g,
                          double eps_opt, ParallelMethod method, QueryLedger& ledger,
                          std::uint64_t seed, const Constants& cst = Constants{},
                          ParallelRunInfo* info = nullptr) {
    const double L = f.lipschitz, R = f.radius;
    const std::size_t d = static_cast<std::size_t>(f.dim);
    if (eps_opt > L * R) {
        if (info) info->trivial = true;
        return zeros(d);  // the origin is trivially eps-optimal
    }
    const double eps_in = eps_opt / 3.0;
    const double r = eps_in / (std::sqrt(static_cast<double>(d)) * L);

    BallAccelConfig cfg = derive_schedule(L, R, r, eps_in, cst.C_ba);
    cfg.stop_A_factor = cst.stop_A_factor;
    cfg.ls_probe_cap = cst.ls_probe_cap;
    cfg.movement_tol = cst.movement_tol;

    Rng rng(seed);
    auto ball = [&](const Vec& y, double lambda, double phi, std::uint64_t counter) {
        const std::uint64_t sub_seed = rng.child(counter).key();
        if (method == ParallelMethod::epoch_sgd)
            return epoch_sgd(f, g, y, r, r, lambda, phi, ledger, sub_seed, cst);
        return ac_sa(f, g, y, r, r, lambda, phi, ledger, sub_seed, cst);
    };

    NonprivateStats stats;
    BallAccelResult res =
        run_ball_accel_nonprivate(cfg, ball, zeros(d), cst, rng.child(0x6d6c6d63), &stats);
    if (info) {
        info->schedule = cfg;
        info->levels = std::move(stats);
        info->accel = res;
    }
    return res.x;
}

}  // namespace resque
