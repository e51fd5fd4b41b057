#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "resque/ledger.hpp"
#include "resque/rng.hpp"
#include "resque/vec.hpp"

namespace resque {

/// Convex L-Lipschitz objective over the ball of radius R, queried through
/// values and subgradients. `optimum` is carried for test fixtures only.
struct LipschitzObjective {
    int dim = 0;
    double lipschitz = 1.0;
    double radius = 1.0;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> subgradient;
    std::optional<Vec> optimum;
};

/// Unbiased stochastic gradient oracle with E||g||^2 <= second_moment_bound.
struct StochasticGradientOracle {
    std::function<Vec(const Vec&, Rng&)> sample;
    double second_moment_bound = 1.0;  // L^2
};

/// Finite-sum objective: empirical risk is the mean of per-sample losses.
struct SampledDataset {
    int dim = 0;
    std::size_t size = 0;  // n
    double lipschitz = 1.0;
    double radius = 1.0;
    std::function<double(std::size_t, const Vec&)> sample_value;
    std::function<Vec(std::size_t, const Vec&)> sample_subgradient;

    double empirical_value(const Vec& x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < size; ++i) s += sample_value(i, x);
        return s / static_cast<double>(size);
    }

    Vec empirical_subgradient(const Vec& x) const {
        Vec g = zeros(static_cast<std::size_t>(dim));
        for (std::size_t i = 0; i < size; ++i) axpy(1.0, sample_subgradient(i, x), g);
        scale(g, 1.0 / static_cast<double>(size));
        return g;
    }

    /// A view over a contiguous index range [begin, begin+count).
    SampledDataset slice(std::size_t begin, std::size_t count) const {
        if (begin + count > size) throw std::invalid_argument("dataset slice out of range");
        SampledDataset out = *this;
        out.size = count;
        out.sample_value = [base = sample_value, begin](std::size_t i, const Vec& x) {
            return base(begin + i, x);
        };
        out.sample_subgradient = [base = sample_subgradient, begin](std::size_t i, const Vec& x) {
            return base(begin + i, x);
        };
        return out;
    }
};

enum class SyntheticKind { distance_to_point, max_linear, abs_regression };

inline SyntheticKind parse_synthetic_kind(std::string_view s) {
    if (s == "distance_to_point") return SyntheticKind::distance_to_point;
    if (s == "max_linear") return SyntheticKind::max_linear;
    if (s == "abs_regression") return SyntheticKind::abs_regression;
    throw std::invalid_argument("unknown synthetic objective kind: " + std::string(s));
}

struct AbsRegressionProblem {
    SampledDataset dataset;
    LipschitzObjective erm_objective;  // value/subgradient of the empirical risk
    Vec generating_point;
    std::vector<double> noise;  // per-sample label noise
    double mean_abs_noise = 0.0;
};

/// |<a_i, x> - b_i| losses with ||a_i|| = 1, b_i = <a_i, x_gen> + noise_i.
/// Passing `generating_point` draws fresh samples from the same population
/// (held-out evaluation sets).
inline AbsRegressionProblem make_abs_regression(int d, std::size_t n, std::uint64_t seed,
                                                const Vec* generating_point = nullptr) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    Rng rng(seed);
    Rng arng = rng.child(1), brng = rng.child(2), xrng = rng.child(3);

    Vec x_gen;
    if (generating_point != nullptr) {
        x_gen = *generating_point;
    } else {
        x_gen = xrng.unit_sphere(static_cast<std::size_t>(d));
        scale(x_gen, 0.6);
    }

    auto features = std::make_shared<std::vector<Vec>>();
    auto labels = std::make_shared<std::vector<double>>();
    std::vector<double> noise(n);
    double mean_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec a = arng.unit_sphere(static_cast<std::size_t>(d));
        noise[i] = 0.2 * (2.0 * brng.uniform() - 1.0);
        mean_abs += std::abs(noise[i]);
        labels->push_back(dot(a, x_gen) + noise[i]);
        features->push_back(std::move(a));
    }
    mean_abs /= static_cast<double>(n);

    SampledDataset ds;
    ds.dim = d;
    ds.size = n;
    ds.lipschitz = 1.0;
    ds.radius = 1.0;
    ds.sample_value = [features, labels](std::size_t i, const Vec& x) {
        return std::abs(dot((*features)[i], x) - (*labels)[i]);
    };
    ds.sample_subgradient = [features, labels, d](std::size_t i, const Vec& x) {
        const double residual = dot((*features)[i], x) - (*labels)[i];
        if (residual == 0.0) return zeros(static_cast<std::size_t>(d));
        return scaled((*features)[i], residual > 0.0 ? 1.0 : -1.0);
    };

    LipschitzObjective erm;
    erm.dim = d;
    erm.lipschitz = 1.0;
    erm.radius = 1.0;
    auto ds_copy = std::make_shared<SampledDataset>(ds);
    erm.value = [ds_copy](const Vec& x) { return ds_copy->empirical_value(x); };
    erm.subgradient = [ds_copy](const Vec& x) { return ds_copy->empirical_subgradient(x); };

    return {std::move(ds), std::move(erm), std::move(x_gen), std::move(noise), mean_abs};
}

/// Synthetic test objectives with L = 1, R = 1 and known optimum.
inline LipschitzObjective make_synthetic_objective(SyntheticKind kind, int d, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    Rng rng(seed);
    LipschitzObjective f;
    f.dim = d;
    f.lipschitz = 1.0;
    f.radius = 1.0;

    switch (kind) {
        case SyntheticKind::distance_to_point: {
            Vec xstar = rng.unit_sphere(static_cast<std::size_t>(d));
            scale(xstar, 0.8 * rng.uniform());
            f.value = [xstar](const Vec& x) { return dist(x, xstar); };
            f.subgradient = [xstar, d](const Vec& x) {
                const double dd = dist(x, xstar);
                // zero vector is a valid subgradient at the kink
                if (dd == 0.0) return zeros(static_cast<std::size_t>(d));
                return scaled(sub(x, xstar), 1.0 / dd);
            };
            f.optimum = xstar;
            return f;
        }
        case SyntheticKind::max_linear: {
            // max_i |<a_i, x - x*>| : minimum 0 at x*, pieces have unit slope.
            const std::size_t pieces = 4;
            Vec xstar = rng.unit_sphere(static_cast<std::size_t>(d));
            scale(xstar, 0.7 * rng.uniform());
            auto dirs = std::make_shared<std::vector<Vec>>();
            for (std::size_t i = 0; i < pieces; ++i)
                dirs->push_back(rng.unit_sphere(static_cast<std::size_t>(d)));
            f.value = [dirs, xstar](const Vec& x) {
                const Vec w = sub(x, xstar);
                double best = 0.0;
                for (const Vec& a : *dirs) best = std::max(best, std::abs(dot(a, w)));
                return best;
            };
            f.subgradient = [dirs, xstar, d](const Vec& x) {
                const Vec w = sub(x, xstar);
                double best = 0.0;
                Vec g = zeros(static_cast<std::size_t>(d));
                for (const Vec& a : *dirs) {
                    const double v = dot(a, w);
                    if (std::abs(v) > best) {
                        best = std::abs(v);
                        g = scaled(a, v >= 0.0 ? 1.0 : -1.0);
                    }
                }
                return g;
            };
            f.optimum = xstar;
            return f;
        }
        case SyntheticKind::abs_regression: {
            auto problem = make_abs_regression(d, 128, seed);
            return problem.erm_objective;
        }
    }
    throw std::invalid_argument("unknown synthetic objective kind");
}

/// Deterministic-subgradient oracle for an objective.
inline StochasticGradientOracle exact_gradient_oracle(const LipschitzObjective& f) {
    StochasticGradientOracle g;
    g.sample = [sub = f.subgradient](const Vec& x, Rng&) { return sub(x); };
    g.second_moment_bound = f.lipschitz * f.lipschitz;
    return g;
}

/// Uniformly subsampled per-sample gradients: unbiased for the empirical risk.
inline StochasticGradientOracle subsampled_oracle(const SampledDataset& ds) {
    StochasticGradientOracle g;
    g.sample = [grad = ds.sample_subgradient, n = ds.size](const Vec& x, Rng& rng) {
        return grad(rng.uniform_index(n), x);
    };
    g.second_moment_bound = ds.lipschitz * ds.lipschitz;
    return g;
}

/// Submit a batch of oracle queries. Appends exactly one ledger batch;
/// per-point substreams are derived from (stream, batch ordinal, index) so
/// evaluation order does not affect results.
inline std::vector<Vec> oracle_query(const StochasticGradientOracle& oracle,
                                     std::span<const Vec> points, QueryLedger& ledger,
                                     std::string_view tag, const Rng& stream) {
    std::vector<Vec> out;
    out.reserve(points.size());
    if (points.empty()) return out;
    const std::uint64_t batch_ordinal = ledger.query_depth();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!all_finite(points[i])) throw std::invalid_argument("oracle_query: non-finite point");
        Rng sub = stream.child({batch_ordinal, static_cast<std::uint64_t>(i)});
        out.push_back(oracle.sample(points[i], sub));
    }
    ledger.add_batch(points.size(), tag);
    return out;
}

}  // namespace resque
