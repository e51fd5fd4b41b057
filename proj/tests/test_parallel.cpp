#include <catch2/catch_amalgamated.hpp>

#include "resque/parallel.hpp"
#include "support/test_oracles.hpp"

using namespace resque;

namespace {

// Linear objective: the smoothed function equals the base exactly, so the
// regularized ball optimum has a closed form.
struct LinearFixture {
    Vec slope;
    LipschitzObjective objective() const {
        LipschitzObjective f;
        f.dim = static_cast<int>(slope.size());
        f.lipschitz = norm(slope);
        f.radius = 1.0;
        f.value = [s = slope](const Vec& x) { return dot(s, x); };
        f.subgradient = [s = slope](const Vec&) { return s; };
        return f;
    }
    // argmin over B_center(r) of <slope, x> + lambda/2 ||x - center||^2
    Vec ball_optimum(const Vec& center, double r, double lambda) const {
        Vec u = center;
        axpy(-1.0 / lambda, slope, u);
        return project_ball(u, center, r);
    }
    double regularized_value(const Vec& x, const Vec& center, double lambda) const {
        return dot(slope, x) + 0.5 * lambda * dist2(x, center);
    }
};

}  // namespace

TEST_CASE("epoch_sgd ledger contract and degenerate budget") {
    LinearFixture fx{{0.4, -0.3}};
    auto f = fx.objective();
    auto g = exact_gradient_oracle(f);
    QueryLedger ledger;
    const Vec center = {0.1, 0.0};
    const double r = 0.05, lambda = 1.0;

    // T = ceil(48 L^2 / (lambda phi)) = 1 for large phi: the loop degenerates
    const double phi_big = 48.0 * f.lipschitz * f.lipschitz / lambda * 1.0001;
    Vec x = epoch_sgd(f, g, center, r, r, lambda, phi_big, ledger, 7);
    REQUIRE(x == center);
    REQUIRE(ledger.query_depth() == 1);
    REQUIRE(ledger.total_queries == 2);  // 2T with T = 1

    // a real run: exactly one batch of size 2T
    QueryLedger ledger2;
    const double phi = 0.05;
    const std::uint64_t T = static_cast<std::uint64_t>(
        std::ceil(48.0 * f.lipschitz * f.lipschitz / (lambda * phi)));
    epoch_sgd(f, g, center, r, r, lambda, phi, ledger2, 7);
    REQUIRE(ledger2.query_depth() == 1);
    REQUIRE(ledger2.total_queries == 2 * T);

    REQUIRE_THROWS_AS(epoch_sgd(f, g, center, r, 2 * r, lambda, phi, ledger, 7),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(epoch_sgd(f, g, center, r, r, -1.0, phi, ledger, 7),
                      std::invalid_argument);
}

TEST_CASE("epoch_sgd meets the ball oracle contract on the linear fixture") {
    LinearFixture fx{{0.8, -0.6, 0.0}};
    auto f = fx.objective();
    auto g = exact_gradient_oracle(f);
    const Vec center = {0.0, 0.1, -0.1};
    const double r = 0.05, lambda = 15.0;
    const double phi = lambda * r * r / 16.0;

    const Vec xstar = fx.ball_optimum(center, r, lambda);
    const double vstar = fx.regularized_value(xstar, center, lambda);

    std::vector<double> gaps;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        QueryLedger ledger;
        const Vec x = epoch_sgd(f, g, center, r, r, lambda, phi, ledger, seed);
        REQUIRE(dist(x, center) <= r + 1e-12);
        REQUIRE(ledger.query_depth() == 1);
        gaps.push_back(fx.regularized_value(x, center, lambda) - vstar);
    }
    const auto st = testsupport::mean_stats(gaps);
    REQUIRE(st.mean <= phi);
}

TEST_CASE("ac_sa meets the contract with one batch and T*K sequential depth") {
    LinearFixture fx{{0.5, 0.5, -0.5, 0.2}};
    auto f = fx.objective();
    auto g = exact_gradient_oracle(f);
    const Vec center = {0.05, 0.0, 0.0, -0.05};
    const double r = 0.05, lambda = 15.0;
    const double phi = lambda * r * r / 16.0;
    const double L = f.lipschitz;

    // budgets from the algorithm formulas
    const int K = static_cast<int>(std::ceil(std::log2(lambda * r * r / phi)));
    const std::uint64_t T =
        static_cast<std::uint64_t>(std::ceil(4.0 * std::sqrt(L / (r * lambda) + 1.0)));
    std::uint64_t N = 0;
    for (int k = 1; k <= K; ++k)
        N += T * static_cast<std::uint64_t>(
                     std::ceil(std::pow(2.0, k) * 48.0 * L * L /
                               (lambda * lambda * r * r * static_cast<double>(T))));

    const Vec xstar = fx.ball_optimum(center, r, lambda);
    const double vstar = fx.regularized_value(xstar, center, lambda);

    std::vector<double> gaps;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        QueryLedger ledger;
        const Vec x = ac_sa(f, g, center, r, r, lambda, phi, ledger, seed);
        REQUIRE(dist(x, center) <= r + 1e-12);
        REQUIRE(ledger.query_depth() == 1);
        REQUIRE(ledger.total_queries == N);
        REQUIRE(ledger.comp_depth == static_cast<std::uint64_t>(K) * T);
        gaps.push_back(fx.regularized_value(x, center, lambda) - vstar);
    }
    const auto st = testsupport::mean_stats(gaps);
    REQUIRE(st.mean <= phi);

    // lambda r^2 <= phi short-circuits to the center
    QueryLedger ledger;
    const Vec x0 = ac_sa(f, g, center, r, r, lambda, lambda * r * r * 1.01, ledger, 3);
    REQUIRE(x0 == center);
    REQUIRE(ledger.query_depth() == 0);
}

TEST_CASE("ac_sa md-point coefficients form a convex combination") {
    // replicate the coefficient computation across t and check the sum is 1
    const double lambda = 7.0, L = 1.0, rho = 0.03;
    for (std::uint64_t t = 1; t <= 50; ++t) {
        const double alpha = 2.0 / static_cast<double>(t + 1);
        const double gamma =
            4.0 * (L / rho + lambda) / (static_cast<double>(t) * static_cast<double>(t + 1));
        const double denom = gamma + (1.0 - alpha * alpha) * lambda;
        const double c_ag = (1.0 - alpha) * (lambda + gamma) / denom;
        const double c_x = alpha * ((1.0 - alpha) * lambda + gamma) / denom;
        REQUIRE(alpha > 0.0);
        REQUIRE(alpha <= 1.0);
        REQUIRE(gamma > 0.0);
        REQUIRE(c_ag + c_x == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(c_ag >= 0.0);
    }
}

TEST_CASE("epoch schedule identity: eta_k T_k is constant across epochs") {
    // T_k doubles while eta_k halves, so the product is invariant
    double eta = 1.0 / (4.0 * 3.0);
    std::uint64_t Tk = 16;
    const double first = eta * static_cast<double>(Tk);
    std::uint64_t total = 0;
    const std::uint64_t T = 1000;
    while (total + Tk <= T) {
        REQUIRE(eta * static_cast<double>(Tk) == Catch::Approx(first));
        total += Tk;
        Tk *= 2;
        eta *= 0.5;
    }
    REQUIRE(total <= T);
}

TEST_CASE("solve_parallel: degenerate target returns the origin") {
    auto f = make_synthetic_objective(SyntheticKind::distance_to_point, 3, 2);
    auto g = exact_gradient_oracle(f);
    QueryLedger ledger;
    ParallelRunInfo info;
    const Vec x = solve_parallel(f, g, 1.5, ParallelMethod::epoch_sgd, ledger, 1, Constants{},
                                 &info);
    REQUIRE(info.trivial);
    REQUIRE(norm(x) == 0.0);
    REQUIRE(ledger.total_queries == 0);
}

TEST_CASE("solve_parallel reaches the target with both methods") {
    Constants cst;
    cst.C_ba = 4.0;
    cst.stop_A_factor = 1.2;
    cst.ls_replicas = 3;
    cst.call_query_cap = 1 << 17;
    auto f = make_synthetic_objective(SyntheticKind::distance_to_point, 4, 11);
    auto g = exact_gradient_oracle(f);
    const double eps = 0.25;
    const double fstar = f.value(*f.optimum);

    for (auto method : {ParallelMethod::epoch_sgd, ParallelMethod::ac_sa}) {
        std::vector<double> errs;
        std::uint64_t depth_sum = 0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            QueryLedger ledger;
            const Vec x = solve_parallel(f, g, eps, method, ledger, seed, cst);
            errs.push_back(f.value(x) - fstar);
            depth_sum += ledger.query_depth();
            // monotone, exact ledger accounting
            std::uint64_t total = 0;
            for (const auto& b : ledger.batches) total += b.size;
            REQUIRE(total == ledger.total_queries);
        }
        const auto st = testsupport::mean_stats(errs);
        REQUIRE(st.mean <= eps);
        REQUIRE(depth_sum > 0);
    }
}

TEST_CASE("doubling the budget does not hurt the oracle (monotone utility)") {
    LinearFixture fx{{0.9, 0.1}};
    auto f = fx.objective();
    auto g = exact_gradient_oracle(f);
    const Vec center = {0.0, 0.0};
    const double r = 0.04, lambda = 25.0;
    const Vec xstar = fx.ball_optimum(center, r, lambda);
    const double vstar = fx.regularized_value(xstar, center, lambda);

    auto mean_gap = [&](double phi) {
        std::vector<double> gaps;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            QueryLedger ledger;
            const Vec x = epoch_sgd(f, g, center, r, r, lambda, phi, ledger, seed * 13);
            gaps.push_back(fx.regularized_value(x, center, lambda) - vstar);
        }
        return testsupport::mean_stats(gaps);
    };
    const auto coarse = mean_gap(lambda * r * r / 4.0);
    const auto fine = mean_gap(lambda * r * r / 8.0);
    REQUIRE(fine.mean <= coarse.mean + 2.0 * (fine.se + coarse.se));
}
