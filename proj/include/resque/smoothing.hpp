#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "resque/objective.hpp"
#include "resque/rng.hpp"
#include "resque/vec.hpp"

namespace resque {

/// log of gamma_rho(u) / gamma_rho(v) for the N(0, rho^2 I) density:
/// (||v||^2 - ||u||^2) / (2 rho^2). Exact arithmetic identity.
inline double log_density_ratio(const Vec& u, const Vec& v, double rho) {
    if (!(rho > 0.0)) throw std::domain_error("log_density_ratio: rho must be positive");
    return (norm2(v) - norm2(u)) / (2.0 * rho * rho);
}

/// i.i.d. N(0, rho^2 I_d) perturbations; deterministic given (seed, count).
inline std::vector<Vec> presample_perturbations(double rho, int d, std::size_t count,
                                                std::uint64_t seed) {
    if (!(rho > 0.0)) throw std::domain_error("presample_perturbations: rho must be positive");
    std::vector<Vec> xs;
    xs.reserve(count);
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i)
        xs.push_back(rng.child(i).gaussian_vec(static_cast<std::size_t>(d), rho));
    return xs;
}

/// Log of the reweighting factor gamma_rho(x - center - xi) / gamma_rho(xi).
/// Callers are expected to keep ||x - center|| <= rho; displacements beyond
/// 10 rho indicate a contract violation and raise instead of returning an
/// astronomically weighted estimate.
inline double resque_log_weight(const Vec& x, const Vec& center, const Vec& xi, double rho) {
    Vec u = sub(x, center);
    if (norm(u) > 10.0 * rho)
        throw std::domain_error("resque weight: displacement exceeds 10*rho");
    axpy(-1.0, xi, u);
    return log_density_ratio(u, xi, rho);
}

/// ReSQue estimator: weight * g(center + xi), where g_at_perturbed was
/// evaluated at center + xi.
inline Vec resque_gradient(const Vec& x, const Vec& center, const Vec& xi, double rho,
                           const Vec& g_at_perturbed) {
    return scaled(g_at_perturbed, std::exp(resque_log_weight(x, center, xi, rho)));
}

/// Exact p-th moment of the ReSQue weight at displacement v:
/// exp((p^2 - p) ||v||^2 / (2 rho^2)).
inline double weight_moment_exact(const Vec& v, double rho, double p) {
    if (!(rho > 0.0)) throw std::domain_error("weight_moment_exact: rho must be positive");
    return std::exp((p * p - p) * norm2(v) / (2.0 * rho * rho));
}

/// Pointwise convolution gap bound: |f_rho - f| <= L rho sqrt(d).
inline double smoothing_bias_bound(double L, double rho, int d) {
    return L * rho * std::sqrt(static_cast<double>(d));
}

/// The Gaussian convolution of an L-Lipschitz f is (L/rho)-smooth.
inline double smoothness_constant(double L, double rho) { return L / rho; }

/// Gaussian convolution view of an objective, with Monte Carlo access to
/// values and gradients (the direct, non-reweighted estimators used as
/// independent references in tests).
struct SmoothedObjective {
    LipschitzObjective base;
    double rho;

    SmoothedObjective(LipschitzObjective base_, double rho_) : base(std::move(base_)), rho(rho_) {
        if (!(rho > 0.0)) throw std::domain_error("SmoothedObjective: rho must be positive");
    }

    double mc_value(const Vec& x, std::size_t samples, Rng& rng) const {
        double s = 0.0;
        Vec y = x;
        for (std::size_t i = 0; i < samples; ++i) {
            for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + rho * rng.normal();
            s += base.value(y);
        }
        return s / static_cast<double>(samples);
    }

    /// Direct smoothed gradient: mean of subgradients at Gaussian offsets.
    Vec mc_gradient(const Vec& x, std::size_t samples, Rng& rng) const {
        Vec g = zeros(x.size());
        Vec y = x;
        for (std::size_t i = 0; i < samples; ++i) {
            for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + rho * rng.normal();
            axpy(1.0, base.subgradient(y), g);
        }
        scale(g, 1.0 / static_cast<double>(samples));
        return g;
    }
};

/// One ReSQue draw; the perturbation is recorded for coupling-based tests.
struct ResqueSample {
    Vec xi;
    double log_weight;
    Vec grad_at_perturbed;
    Vec estimate;
};

/// ReSQue estimator of radius rho anchored at a center point.
struct ResqueSampler {
    Vec center;
    double rho;
    StochasticGradientOracle gradient_source;

    ResqueSample sample(const Vec& x, Rng& rng) const {
        ResqueSample s;
        s.xi = rng.gaussian_vec(center.size(), rho);
        Vec query = add(center, s.xi);
        s.grad_at_perturbed = gradient_source.sample(query, rng);
        s.log_weight = resque_log_weight(x, center, s.xi, rho);
        s.estimate = scaled(s.grad_at_perturbed, std::exp(s.log_weight));
        return s;
    }
};

}  // namespace resque
