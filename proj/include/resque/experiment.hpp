#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "resque/constants.hpp"
#include "resque/dp_solvers.hpp"
#include "resque/parallel.hpp"
#include "resque/privacy.hpp"

namespace resque {

// ---------------------------------------------------------------------------
// Configuration: flat key=value text file, flag overrides win.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string mode;                    // parallel | dp_erm | dp_sco | verify
    std::string problem = "abs_regression";
    int n = 512;
    int d = 4;
    double eps_opt = 0.125;              // parallel mode target
    double eps_dp = 1.0;                 // dp modes
    double delta = 1e-5;
    std::string method = "epoch_sgd";    // parallel mode
    std::string suite;                   // verify mode
    std::vector<std::uint64_t> seeds{1};
    std::uint64_t data_seed = 1;
    bool timing = false;                 // measured wall time breaks rerun byte-identity
    std::string out_path;
    Constants constants;
};

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
    auto as_u64 = [&] { return static_cast<std::uint64_t>(std::stoull(value)); };
    if (key == "mode") cfg.mode = value;
    else if (key == "problem") cfg.problem = value;
    else if (key == "n") cfg.n = std::stoi(value);
    else if (key == "d") cfg.d = std::stoi(value);
    else if (key == "eps_opt") cfg.eps_opt = std::stod(value);
    else if (key == "eps_dp") cfg.eps_dp = std::stod(value);
    else if (key == "delta") cfg.delta = std::stod(value);
    else if (key == "method") cfg.method = value;
    else if (key == "suite") cfg.suite = value;
    else if (key == "data_seed") cfg.data_seed = as_u64();
    else if (key == "timing") cfg.timing = (value == "1" || value == "true");
    else if (key == "out") cfg.out_path = value;
    else if (key == "seeds") {
        cfg.seeds.clear();
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) cfg.seeds.push_back(std::stoull(tok));
        if (cfg.seeds.empty()) throw std::invalid_argument("seeds list is empty");
    } else if (key == "num_seeds") {
        cfg.seeds.clear();
        const std::uint64_t n = as_u64();
        for (std::uint64_t s = 1; s <= n; ++s) cfg.seeds.push_back(s);
    } else {
        cfg.constants.set(key, std::stod(value));  // throws on unknown keys
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    ExperimentConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) apply_config_entry(cfg, key, value);
    }
    if (cfg.mode.empty()) throw std::invalid_argument("config missing required key: mode");
    if (cfg.seeds.empty()) throw std::invalid_argument("config requires at least one seed");
    return cfg;
}

inline int worker_count() {
    if (const char* env = std::getenv("RESQUE_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---------------------------------------------------------------------------
// Run reports
// ---------------------------------------------------------------------------

struct SeedRow {
    std::uint64_t seed = 0;
    double error = 0.0;
    std::uint64_t depth = 0, total = 0, comp_depth = 0, comp_work = 0;
    double eps_total = 0.0, delta_total = 0.0;
    double seconds = 0.0;
};

struct RunReport {
    std::vector<SeedRow> rows;
    double mean_error = 0.0;
    double ci_halfwidth = 0.0;  // 95% normal approximation
    std::string summary;

    void finish() {
        const double n = static_cast<double>(rows.size());
        double m = 0.0;
        for (const auto& r : rows) m += r.error;
        m /= n;
        double var = 0.0;
        for (const auto& r : rows) var += (r.error - m) * (r.error - m);
        var = n > 1 ? var / (n - 1.0) : 0.0;
        mean_error = m;
        ci_halfwidth = 1.96 * std::sqrt(var / n);
    }
};

inline std::string csv_header() {
    return "seed,error,depth,total,comp_depth,comp_work,eps_total,delta_total,seconds";
}

inline std::string to_csv(const RunReport& report) {
    std::ostringstream os;
    os << csv_header() << '\n';
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : report.rows) {
        os << r.seed << ',' << fmt(r.error) << ',' << r.depth << ',' << r.total << ','
           << r.comp_depth << ',' << r.comp_work << ',' << fmt(r.eps_total) << ','
           << fmt(r.delta_total) << ',' << fmt(r.seconds) << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Reference optimum for reporting (polish by averaged projected subgradient)
// ---------------------------------------------------------------------------

inline Vec reference_ball_optimum(const LipschitzObjective& f, int iters = 150000) {
    Vec x = zeros(static_cast<std::size_t>(f.dim));
    Vec sum = x;
    std::uint64_t count = 0;
    for (int t = 1; t <= iters; ++t) {
        Vec g = f.subgradient(x);
        axpy(-2.0 * f.radius / (f.lipschitz * std::sqrt(static_cast<double>(t))), g, x);
        x = project_ball0(x, f.radius);
        if (t > iters / 2) {
            axpy(1.0, x, sum);
            ++count;
        }
    }
    return scaled(sum, 1.0 / static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

namespace detail {

template <typename Fn>
void for_each_seed(const std::vector<std::uint64_t>& seeds, Fn&& fn) {
    const int workers = std::min<int>(worker_count(), static_cast<int>(seeds.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1))
                fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

inline RunReport run_experiment(const ExperimentConfig& cfg) {
    RunReport report;
    report.rows.resize(cfg.seeds.size());

    if (cfg.mode == "parallel") {
        const SyntheticKind kind = parse_synthetic_kind(cfg.problem);
        const ParallelMethod method = parse_parallel_method(cfg.method);
        const LipschitzObjective f = make_synthetic_objective(kind, cfg.d, cfg.data_seed);
        const Vec ref = f.optimum ? *f.optimum : reference_ball_optimum(f);
        const double fstar = f.value(ref);
        detail::for_each_seed(cfg.seeds, [&](std::size_t i) {
            const auto t0 = std::chrono::steady_clock::now();
            QueryLedger ledger;
            StochasticGradientOracle g = exact_gradient_oracle(f);
            const Vec x = solve_parallel(f, g, cfg.eps_opt, method, ledger, cfg.seeds[i],
                                         cfg.constants);
            SeedRow row;
            row.seed = cfg.seeds[i];
            row.error = f.value(x) - fstar;
            const LedgerReport lr = ledger_report(ledger);
            row.depth = lr.query_depth;
            row.total = lr.total_queries;
            row.comp_depth = lr.comp_depth;
            row.comp_work = lr.comp_work;
            if (cfg.timing)
                row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                  .count();
            report.rows[i] = row;
        });
    } else if (cfg.mode == "dp_erm" || cfg.mode == "dp_sco") {
        if (cfg.problem != "abs_regression")
            throw std::invalid_argument("dp modes use the abs_regression problem");
        const bool sco = cfg.mode == "dp_sco";
        const auto prob = make_abs_regression(cfg.d, static_cast<std::size_t>(cfg.n),
                                              cfg.data_seed);
        // held-out sample from the same population, shared across seeds
        const auto holdout =
            make_abs_regression(cfg.d, 4096, cfg.data_seed + 777, &prob.generating_point);
        const double erm_star =
            sco ? 0.0 : prob.erm_objective.value(reference_ball_optimum(prob.erm_objective));
        detail::for_each_seed(cfg.seeds, [&](std::size_t i) {
            const auto t0 = std::chrono::steady_clock::now();
            QueryLedger queries;
            PrivacyLedger privacy(dp_driver_alpha(cfg.eps_dp, cfg.delta));
            DpRunInfo info;
            Vec x;
            if (sco)
                x = dp_sco(prob.dataset, cfg.eps_dp, cfg.delta, privacy, queries, cfg.seeds[i],
                           cfg.constants, &info);
            else
                x = dp_erm(prob.dataset, cfg.eps_dp, cfg.delta, privacy, queries, cfg.seeds[i],
                           cfg.constants, &info);
            SeedRow row;
            row.seed = cfg.seeds[i];
            row.error = sco ? holdout.dataset.empirical_value(x)
                            : prob.erm_objective.value(x) - erm_star;
            const LedgerReport lr = ledger_report(queries);
            row.depth = lr.query_depth;
            row.total = lr.total_queries;
            row.comp_depth = lr.comp_depth;
            row.comp_work = lr.comp_work;
            row.eps_total = info.converted.eps_dp;
            row.delta_total = info.converted.delta;
            if (cfg.timing)
                row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                  .count();
            report.rows[i] = row;
        });
    } else {
        throw std::invalid_argument("run_experiment: unknown mode " + cfg.mode);
    }

    report.finish();
    std::ostringstream sum;
    sum.precision(10);
    sum << "mode=" << cfg.mode << " problem=" << cfg.problem << " seeds=" << cfg.seeds.size()
        << " mean_error=" << report.mean_error << " ci95=" << report.ci_halfwidth << '\n';
    sum << "constants:";
    for (const auto& [k, v] : cfg.constants.as_map()) sum << ' ' << k << '=' << v;
    sum << '\n';
    report.summary = sum.str();

    if (!cfg.out_path.empty()) {
        std::ofstream out(cfg.out_path);
        if (!out) throw std::runtime_error("cannot write output: " + cfg.out_path);
        out << to_csv(report);
        std::ofstream txt(cfg.out_path + ".summary.txt");
        txt << report.summary;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Verification suites (mode=verify): named invariant batteries.
// ---------------------------------------------------------------------------

struct VerifyOutcome {
    std::vector<std::pair<std::string, bool>> checks;
    bool ok() const {
        for (const auto& [name, pass] : checks)
            if (!pass) return false;
        return true;
    }
    void add(const std::string& name, bool pass) { checks.emplace_back(name, pass); }
    std::string render() const {
        std::ostringstream os;
        for (const auto& [name, pass] : checks)
            os << (pass ? "[PASS] " : "[FAIL] ") << name << '\n';
        return os.str();
    }
};

/// Exact-arithmetic identities of the privacy accountant.
inline VerifyOutcome verify_accountant() {
    VerifyOutcome out;
    out.add("gaussian mechanism alpha s^2/(2 sigma^2)",
            gaussian_mechanism_rdp(2.0, 1.0, 1.0) == 1.0);
    out.add("doubling sigma quarters epsilon",
            std::abs(gaussian_mechanism_rdp(3.0, 1.0, 2.0) * 4.0 -
                     gaussian_mechanism_rdp(3.0, 1.0, 1.0)) < 1e-15);
    {
        PrivacyLedger l(2.0);
        l.compose({2.0, 0.1, 1e-6, "a"});
        l.compose({2.0, 0.2, 1e-6, "b"});
        out.add("composition sums", std::abs(l.epsilon_total() - 0.3) < 1e-15 &&
                                        std::abs(l.delta_total() - 2e-6) < 1e-18);
    }
    {
        const auto g = rdp_to_dp(2.0, 0.0, 0.0, std::exp(-1.0));
        out.add("rdp-to-dp at delta=0", std::abs(g.eps_dp - 1.0) < 1e-12);
    }
    out.add("amplification arithmetic",
            std::abs(amplify_subsample(2.0, 0.1, 0.01) - 2.6e-4) < 1e-12);
    bool rejected = false;
    try {
        amplify_subsample(2.0, 0.1, 0.5);
    } catch (const std::domain_error&) {
        rejected = true;
    }
    out.add("amplification rejects s >= 1/40", rejected);
    bool alpha_rejected = false;
    try {
        amplify_subsample(3.0 / 0.1, 0.1, 0.01);
    } catch (const std::domain_error&) {
        alpha_rejected = true;
    }
    out.add("amplification rejects alpha = 3/tau", alpha_rejected);
    out.add("drift coefficient 1500 b^2 beta^2",
            std::abs(drift_rdp_coefficient(0.1, 2) - 60.0) < 1e-12);
    return out;
}

/// ReSQue moment invariants (weight moments and difference moments).
inline VerifyOutcome verify_moments(std::uint64_t seed = 1) {
    VerifyOutcome out;
    const double rho = 0.5;
    Rng rng(seed);
    for (double p : {2.0, 4.0}) {
        Vec v = {rho / p, 0.0, 0.0};
        const double exact = weight_moment_exact(v, rho, p);
        double acc = 0.0;
        const int N = 1000000;
        for (int i = 0; i < N; ++i) {
            const Vec xi = rng.gaussian_vec(3, rho);
            acc += std::pow(std::exp(log_density_ratio(sub(v, xi), xi, rho)), p);
        }
        const double mc = acc / N;
        std::ostringstream name;
        name << "weight moment p=" << p << " within 5% of exact";
        out.add(name.str(), std::abs(mc - exact) <= 0.05 * exact);
    }
    for (double p : {2.0, 4.0}) {
        const Vec x = {rho / (2.0 * p), 0.0, 0.0};
        const Vec xp = {0.0, rho / (2.0 * p), 0.0};
        const double bound = std::pow(24.0 * p * dist(x, xp) / rho, p);
        double acc = 0.0;
        const int N = 200000;
        for (int i = 0; i < N; ++i) {
            const Vec xi = rng.gaussian_vec(3, rho);
            const double wa = std::exp(log_density_ratio(sub(x, xi), xi, rho));
            const double wb = std::exp(log_density_ratio(sub(xp, xi), xi, rho));
            acc += std::pow(std::abs(wa - wb), p);
        }
        std::ostringstream name;
        name << "difference moment p=" << p << " within (24p||x-x'||/rho)^p";
        out.add(name.str(), acc / N <= bound);
    }
    return out;
}

/// Coupled neighboring-dataset drift: per-epoch quantile of ||y_T - y'_T||^2
/// against 1500 b^2 (eta_i L)^2. A positive `ratio` overrides the
/// gate-consistent rho/r with the given operating ratio.
inline VerifyOutcome verify_drift(int trials = 500, std::uint64_t seed = 7,
                                  const std::vector<int>& b_values = {1, 2, 4},
                                  double ratio = 0.0) {
    VerifyOutcome out;
    const int d = 2;
    const std::size_t n = 64;
    auto prob = make_abs_regression(d, n, seed);
    auto neighbor = prob.dataset;
    {
        // replace sample 0
        auto other = make_abs_regression(d, 1, seed + 991);
        auto base_v = prob.dataset.sample_value;
        auto base_g = prob.dataset.sample_subgradient;
        auto alt_v = other.dataset.sample_value;
        auto alt_g = other.dataset.sample_subgradient;
        neighbor.sample_value = [base_v, alt_v](std::size_t i, const Vec& x) {
            return i == 0 ? alt_v(0, x) : base_v(i, x);
        };
        neighbor.sample_subgradient = [base_g, alt_g](std::size_t i, const Vec& x) {
            return i == 0 ? alt_g(0, x) : base_g(i, x);
        };
    }

    const std::uint64_t T = 64;
    const double L = 1.0;
    const double beta = 0.1;
    const double r = 0.005;
    const double delta_test = 1e-3;
    const double gate =
        std::pow(std::log(std::max(std::log(static_cast<double>(T)), 1.0) / delta_test), 2);
    const double rho = ratio > 0.0 ? r * ratio : r * 2.0 * gate;
    const PsgdSchedule sched = psgd_schedule(T, r, L, beta, d);
    const Vec center = zeros(d);

    Rng rng(seed);
    for (int b : b_values) {
        for (int epoch = 0; epoch < sched.k; ++epoch) {
            const std::uint64_t Ti = sched.T_i[static_cast<std::size_t>(epoch)];
            if (Ti < static_cast<std::uint64_t>(b)) continue;
            const double eta_i = sched.eta_i[static_cast<std::size_t>(epoch)];
            const double bound = 1500.0 * static_cast<double>(b) * static_cast<double>(b) *
                                 eta_i * L * eta_i * L;
            double worst = 0.0;
            for (int trial = 0; trial < trials; ++trial) {
                Rng trng = rng.child({static_cast<std::uint64_t>(b),
                                      static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(trial)});
                // b forced hits of the differing index at shared positions
                std::vector<bool> hit(Ti + 1, false);
                for (int placed = 0; placed < b;) {
                    const std::uint64_t pos = 1 + trng.uniform_index(Ti);
                    if (!hit[pos]) {
                        hit[pos] = true;
                        ++placed;
                    }
                }
                Rng zstream = trng.child(1), xistream = trng.child(2), start = trng.child(3);
                PsgdSources src;
                src.index = [&hit, &zstream, n](int, std::uint64_t j) -> std::size_t {
                    if (hit[j]) return 0;
                    return 1 + static_cast<std::size_t>(zstream.uniform_index(n - 1));
                };
                src.perturbation = [&xistream, rho](int, std::uint64_t) {
                    return xistream.gaussian_vec(d, rho);
                };
                src.epoch_noise = [](int) { return zeros(d); };

                Vec y0 = start.gaussian_vec(d, r / 3.0);
                y0 = project_ball(y0, center, r);

                PsgdSchedule one;
                one.T = Ti;
                one.T_hat = Ti;
                one.k = 1;
                one.T_i = {Ti};
                one.eta_i = {eta_i};
                one.sigma_i = {0.0};

                // identical randomness for both datasets: rebuild the streams
                Rng z2 = trng.child(1), x2 = trng.child(2);
                PsgdSources src2;
                src2.index = [&hit, &z2, n](int, std::uint64_t j) -> std::size_t {
                    if (hit[j]) return 0;
                    return 1 + static_cast<std::size_t>(z2.uniform_index(n - 1));
                };
                src2.perturbation = [&x2, rho](int, std::uint64_t) {
                    return x2.gaussian_vec(d, rho);
                };
                src2.epoch_noise = [](int) { return zeros(d); };

                QueryLedger scratch;
                const Vec ya =
                    psgd_core(prob.dataset, center, r, rho, 0.0, center, one, y0, src, scratch,
                              "drift")
                        .epoch_last[0];
                const Vec yb =
                    psgd_core(neighbor, center, r, rho, 0.0, center, one, y0, src2, scratch,
                              "drift")
                        .epoch_last[0];
                worst = std::max(worst, dist2(ya, yb));
            }
            std::ostringstream name;
            name << "drift b=" << b << " epoch " << epoch + 1 << " (T_i=" << Ti
                 << "): max Phi <= 1500 b^2 (eta_i L)^2";
            out.add(name.str(), worst <= bound);
        }
    }
    return out;
}

/// Adversarial aggregation instances: 0.51k inliers within Delta/3 of a
/// hidden point, outliers at distance 10 Delta.
inline VerifyOutcome verify_aggregation(int instances = 1000, std::uint64_t seed = 3) {
    VerifyOutcome out;
    Rng rng(seed);
    int failures = 0;
    for (int inst = 0; inst < instances; ++inst) {
        Rng irng = rng.child(static_cast<std::uint64_t>(inst));
        const int k = 100, d = 5;
        const double Delta = 0.5 + irng.uniform();
        Vec y = irng.gaussian_vec(d, 1.0);
        std::vector<Vec> pts;
        for (int i = 0; i < 60; ++i) {
            Vec p = irng.unit_sphere(d);
            scale(p, Delta / 3.0 * irng.uniform());
            pts.push_back(add(y, p));
        }
        for (int i = 60; i < k; ++i) {
            Vec p = irng.unit_sphere(d);
            scale(p, 10.0 * Delta);
            pts.push_back(add(y, p));
        }
        // shuffle deterministically
        for (int i = k - 1; i > 0; --i)
            std::swap(pts[static_cast<std::size_t>(i)],
                      pts[irng.uniform_index(static_cast<std::uint64_t>(i + 1))]);
        bool degraded = false;
        const Vec z = aggregate(pts, Delta, &degraded);
        if (degraded || dist(z, y) > Delta) ++failures;
    }
    out.add("aggregation returns within Delta on all adversarial instances", failures == 0);

    // trivial cases
    std::vector<Vec> same(10, Vec{1.0, 2.0});
    out.add("identical points return themselves", aggregate(same, 1.0, nullptr) == same[0]);
    std::vector<Vec> single{Vec{3.0, -1.0}};
    out.add("k=1 returns the single point", aggregate(single, 1.0, nullptr) == single[0]);
    return out;
}

/// Telescoping-mean identity and variance scale of the bias-reduced loop on
/// a 1-d fixture.
inline VerifyOutcome verify_mlmc(int loops = 10000, std::uint64_t seed = 5) {
    VerifyOutcome out;
    Constants cst;
    cst.C_priv = 2.0;
    const int d = 1;
    const std::size_t n = 128;
    auto prob = make_abs_regression(d, n, seed);
    const std::uint64_t T = 8;
    const int j_max = mlmc_level_count(n, T, cst.C_priv);

    const double lambda = 2.0;
    const double r = 0.01;
    const double delta_ev = 1e-3;
    const double gate =
        cst.C_priv * 2.0 *
        std::pow(std::log(std::max(std::log(static_cast<double>(T << j_max)), 1.0) / delta_ev), 2);
    const double rho = r * gate;
    const double beta = 0.05;
    const Vec center = zeros(d);

    QueryLedger scratch;
    Rng rng(seed);
    std::vector<double> hats, tops;
    hats.reserve(static_cast<std::size_t>(loops));
    for (int i = 0; i < loops; ++i) {
        const Vec xhat =
            mlmc_single_loop(prob.dataset, center, r, rho, beta, lambda, center, T, j_max,
                             rng.child({1, static_cast<std::uint64_t>(i)}).key(), delta_ev,
                             scratch, cst);
        hats.push_back(xhat[0]);
    }
    const int top_runs = loops / 4;
    for (int i = 0; i < top_runs; ++i) {
        const Vec xt = subsampled_strongly_convex(
            prob.dataset, center, r, rho, beta * std::pow(2.0, -j_max / 2.0), lambda, center,
            T << j_max, rng.child({2, static_cast<std::uint64_t>(i)}).key(), delta_ev, nullptr,
            scratch, cst);
        tops.push_back(xt[0]);
    }
    auto stats = [](const std::vector<double>& xs) {
        double m = 0.0;
        for (double x : xs) m += x;
        m /= static_cast<double>(xs.size());
        double v = 0.0;
        for (double x : xs) v += (x - m) * (x - m);
        v /= static_cast<double>(xs.size() - 1);
        return std::pair<double, double>{m, v};
    };
    const auto [mh, vh] = stats(hats);
    const auto [mt, vt] = stats(tops);
    const double se = std::sqrt(vh / hats.size() + vt / tops.size());
    out.add("telescoping mean matches the top-level mean within 3 SE",
            std::abs(mh - mt) <= 3.0 * se);

    const double formula = cst.C_var * 1.0 / (lambda * lambda) *
                           (1.0 / (beta * beta * static_cast<double>(T) * static_cast<double>(T)) +
                            1.0 / static_cast<double>(T));
    out.add("single-loop variance below the variance formula", vh <= formula);
    return out;
}

inline VerifyOutcome verify_drift_at_ratio(int trials, std::uint64_t seed, double ratio) {
    return verify_drift(trials, seed, {1, 2, 4}, ratio);
}

inline VerifyOutcome verify_suite(const std::string& name) {
    if (name == "accountant") return verify_accountant();
    if (name == "moments") return verify_moments();
    if (name == "drift") return verify_drift();
    if (name == "aggregation") return verify_aggregation();
    if (name == "mlmc") return verify_mlmc();
    throw std::invalid_argument("unknown verify suite: " + name +
                                " (expected moments|drift|aggregation|accountant|mlmc)");
}

}  // namespace resque
