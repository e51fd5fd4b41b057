#include <catch2/catch_amalgamated.hpp>

#include "resque/ball_accel.hpp"
#include "support/test_oracles.hpp"

using namespace resque;

namespace {

// Strongly convex quadratic F(x) = (mu/2)||x - c||^2 with closed-form
// ball-regularized prox: the projection of (mu c + lambda y)/(mu + lambda).
struct QuadraticFixture {
    Vec c;
    double mu;
    double r;

    double value(const Vec& x) const { return 0.5 * mu * dist2(x, c); }

    Vec prox(const Vec& y, double lambda) const {
        const Vec unconstrained =
            lincomb(mu / (mu + lambda), c, lambda / (mu + lambda), y);
        return project_ball(unconstrained, y, r);
    }

    OracleSuite exact_suite() const {
        OracleSuite s;
        s.line_search = [this](const Vec& y, double lam) { return prox(y, lam); };
        s.ball_opt = [this](const Vec& y, double lam, double) { return prox(y, lam); };
        s.stochastic_prox = [this](const Vec& y, double lam, double, double) {
            return prox(y, lam);
        };
        return s;
    }
};

}  // namespace

TEST_CASE("derive_schedule arithmetic") {
    // R=1, r=1e-3 gives K = 1000^(2/3) = 100
    auto cfg = derive_schedule(1.0, 1.0, 1e-3, 0.01, 8.0);
    REQUIRE(cfg.K == Catch::Approx(100.0).epsilon(1e-12));

    // degenerate eps_opt = LR floors kappa at e, so log terms stay positive
    auto edge = derive_schedule(1.0, 1.0, 0.5, 1.0, 8.0);
    REQUIRE(edge.kappa == Catch::Approx(std::exp(1.0)).epsilon(1e-12));
    REQUIRE(edge.lambda_star > 0.0);
    REQUIRE(edge.max_iters >= 1);

    // full recomputation at L=1, R=1, r=0.1, eps=0.01
    auto c2 = derive_schedule(1.0, 1.0, 0.1, 0.01, 8.0);
    const double K = std::pow(10.0, 2.0 / 3.0);
    const double lg = std::log(100.0);
    REQUIRE(c2.kappa == Catch::Approx(100.0));
    REQUIRE(c2.K == Catch::Approx(K).epsilon(1e-12));
    REQUIRE(c2.lambda_star == Catch::Approx(0.01 * K * K * lg * lg).epsilon(1e-12));
    REQUIRE(c2.max_iters == static_cast<int>(std::ceil(8.0 * K * lg)));
    REQUIRE(c2.lambda_min == Catch::Approx(c2.lambda_star / 8.0));
    REQUIRE(c2.lambda_max == Catch::Approx(8.0 / 0.01));

    REQUIRE_THROWS_AS(derive_schedule(1.0, 1.0, 0.0, 0.01, 8.0), std::invalid_argument);
    REQUIRE_THROWS_AS(derive_schedule(1.0, 1.0, 2.0, 0.01, 8.0), std::invalid_argument);
    REQUIRE_THROWS_AS(derive_schedule(1.0, 1.0, 0.1, 1.5, 8.0), std::invalid_argument);
}

TEST_CASE("ms_coefficient roots") {
    REQUIRE(ms_coefficient(0.0, 1.0) == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(ms_coefficient(1.0, 1.0) ==
            Catch::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-14));
    // the root solves lambda a^2 = A + a
    const double A = 3.7, lam = 0.9;
    const double a = ms_coefficient(A, lam);
    REQUIRE(lam * a * a == Catch::Approx(A + a).epsilon(1e-12));
    REQUIRE_THROWS_AS(ms_coefficient(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("ms_step updates") {
    AccelState s;
    s.x = {1.0, 0.0};
    s.v = {0.0, 1.0};
    s.A = 1.0;
    const double lam = 1.0;
    const Vec y = ms_query_point(s, lam);
    const double a = ms_coefficient(1.0, 1.0);
    // y is the A-weighted combination of x and v
    REQUIRE(y[0] == Catch::Approx(1.0 / (1.0 + a)));
    REQUIRE(y[1] == Catch::Approx(a / (1.0 + a)));

    const Vec prox = {0.5, 0.5};
    AccelState t = ms_step(s, lam, prox, 10.0, 1.0);
    REQUIRE(t.A == Catch::Approx(1.0 + a));
    REQUIRE(t.x == prox);
    REQUIRE(t.iter == 1);
    // v <- v - a lambda (y - prox)
    for (int c = 0; c < 2; ++c)
        REQUIRE(t.v[c] == Catch::Approx(s.v[c] - a * lam * (y[c] - prox[c])));
}

TEST_CASE("line search movement is monotone and lands in the window") {
    QuadraticFixture quad{{0.6, 0.0, 0.0}, 4.0, 0.02};
    auto cfg = derive_schedule(3.0, 1.0, quad.r, 0.003, 8.0);
    AccelState s;
    s.x = zeros(3);
    s.v = zeros(3);

    auto hp = [&](const Vec& y, double lam) { return quad.prox(y, lam); };

    // movement shrinks as lambda grows (bracketing premise)
    double prev = 1e100;
    for (double lam : {cfg.lambda_min, 4.0 * cfg.lambda_min, 16.0 * cfg.lambda_min,
                       64.0 * cfg.lambda_min}) {
        const Vec y = ms_query_point(s, lam);
        const double m = dist(quad.prox(y, lam), y);
        REQUIRE(m <= prev + 1e-12);
        prev = m;
    }

    LineSearchStats stats;
    const double lam = line_search_lambda(s, hp, cfg, cfg.lambda_max, &stats);
    REQUIRE(lam >= cfg.lambda_min);
    REQUIRE(lam <= cfg.lambda_max);
    const Vec y = ms_query_point(s, lam);
    const double move = dist(quad.prox(y, lam), y);
    const bool in_window = move >= 0.75 * quad.r * (1.0 - cfg.movement_tol) &&
                           move <= quad.r + 1e-12;
    const bool at_floor = lam == cfg.lambda_min;
    REQUIRE((in_window || at_floor));
    REQUIRE(stats.probes <= static_cast<std::uint64_t>(cfg.ls_probe_cap));
}

TEST_CASE("exact-oracle quadratic converges within the iteration budget") {
    const double mu = 2.0, R = 1.0;
    QuadraticFixture quad{{0.55, -0.3, 0.2, 0.1}, mu, 0.05};
    const double L = mu * 2.0 * R;  // gradient bound on B(R + r)
    const double eps = 0.002;
    auto cfg = derive_schedule(L, R, quad.r, eps, 8.0);

    std::vector<double> potentials;
    auto observer = [&](const AccelState& st, double) {
        potentials.push_back(st.A * quad.value(st.x) + dist2(st.v, quad.c));
    };
    auto res = run_ball_accel(cfg, quad.exact_suite(), zeros(4), observer);

    REQUIRE(quad.value(res.x) <= eps);
    REQUIRE(res.iters <= cfg.max_iters);
    // all lambdas in range
    for (double lam : res.lambda_history) {
        REQUIRE(lam >= cfg.lambda_min - 1e-12);
        REQUIRE(lam <= cfg.lambda_max + 1e-12);
    }
    // potential nonincreasing (up to tiny numerical slack) with exact oracles
    for (std::size_t i = 1; i < potentials.size(); ++i)
        REQUIRE(potentials[i] <= potentials[i - 1] * (1.0 + 1e-9) + 1e-9);
}

TEST_CASE("early certificate stops the loop once A is large enough") {
    QuadraticFixture quad{{0.4, 0.1}, 3.0, 0.05};
    auto cfg = derive_schedule(6.0, 1.0, quad.r, 0.01, 8.0);
    auto res = run_ball_accel(cfg, quad.exact_suite(), zeros(2));
    REQUIRE(res.early_certificate);
    REQUIRE(res.iters < cfg.max_iters);
    REQUIRE(quad.value(res.x) <= 0.01);
}

TEST_CASE("nonprivate wiring converges and respects level counts") {
    const double mu = 2.0, R = 1.0;
    QuadraticFixture quad{{0.5, -0.2, 0.3}, mu, 0.04};
    const double L = mu * 2.0 * R;
    const double eps = 0.004;
    auto cfg = derive_schedule(L, R, quad.r, eps, 8.0);
    Constants cst;

    // noisy ball oracle honoring the (phi, lambda) contract:
    // E error <= phi via a point at distance <= sqrt(phi/lambda) of the optimum
    Rng noise(31337);
    auto ball = [&](const Vec& y, double lam, double phi, std::uint64_t) {
        Vec p = quad.prox(y, lam);
        Vec dir = noise.unit_sphere(3);
        axpy(std::sqrt(phi / (mu + lam)) * noise.uniform(), dir, p);
        return project_ball(p, y, quad.r);
    };

    NonprivateStats stats;
    auto res = run_ball_accel_nonprivate(cfg, ball, zeros(3), cst, Rng(5), &stats);
    REQUIRE(quad.value(res.x) <= 2.0 * eps);

    // level-j counts within the Prop-2.7 budget shape
    const double log_ratio = std::log(cfg.R * cfg.kappa / cfg.r);
    const double iters_bound = static_cast<double>(res.iters) + 1.0;
    for (std::size_t j = 1; j < stats.level_queries.size(); ++j) {
        const double cap = cfg.C_ba * cfg.C_ba * std::pow(2.0, -static_cast<double>(j)) *
                               cfg.K * log_ratio +
                           3.0 * std::sqrt(iters_bound) + 8.0;
        REQUIRE(static_cast<double>(stats.level_queries[j]) <= cap);
    }
}

TEST_CASE("iterates stay inside the R + r region") {
    QuadraticFixture quad{{0.7, 0.0}, 5.0, 0.03};
    auto cfg = derive_schedule(10.0, 1.0, quad.r, 0.02, 8.0);
    bool centers_ok = true;
    OracleSuite suite;
    suite.line_search = [&](const Vec& y, double lam) {
        centers_ok = centers_ok && norm(y) <= cfg.R + cfg.r + 1e-9;
        return quad.prox(y, lam);
    };
    suite.ball_opt = [&](const Vec& y, double lam, double) {
        centers_ok = centers_ok && norm(y) <= cfg.R + cfg.r + 1e-9;
        return quad.prox(y, lam);
    };
    suite.stochastic_prox = [&](const Vec& y, double lam, double, double) {
        return quad.prox(y, lam);
    };
    auto res = run_ball_accel(cfg, suite, zeros(2));
    REQUIRE(centers_ok);
    REQUIRE(norm(res.x) <= cfg.R + 1e-12);
}
