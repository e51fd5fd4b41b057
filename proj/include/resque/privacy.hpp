#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace resque {

/// One approximate-RDP event: the mechanism satisfies (alpha, epsilon, delta)-RDP.
struct RdpEvent {
    double alpha;
    double epsilon;
    double delta;
    std::string label;
};

struct DpGuarantee {
    double eps_dp;
    double delta;
};

/// alpha-Renyi divergence of two Gaussians with common isotropic covariance:
/// alpha * sensitivity^2 / (2 sigma^2).
inline double gaussian_mechanism_rdp(double alpha, double sensitivity, double sigma) {
    if (!(sigma > 0.0)) throw std::domain_error("gaussian_mechanism_rdp: sigma must be positive");
    if (!(alpha > 1.0)) throw std::domain_error("gaussian_mechanism_rdp: alpha must exceed 1");
    return alpha * sensitivity * sensitivity / (2.0 * sigma * sigma);
}

/// (alpha, eps, delta)-RDP to (eps_dp, delta')-DP:
/// eps_dp = eps + log(1/delta')/(alpha-1), total delta = delta' + (1+e^eps_dp) delta.
inline DpGuarantee rdp_to_dp(double alpha, double epsilon, double delta, double delta_prime) {
    if (!(alpha > 1.0)) throw std::domain_error("rdp_to_dp: alpha must exceed 1");
    if (!(delta_prime > 0.0 && delta_prime < 1.0))
        throw std::domain_error("rdp_to_dp: delta_prime must lie in (0,1)");
    const double eps_dp = epsilon + std::log(1.0 / delta_prime) / (alpha - 1.0);
    return {eps_dp, delta_prime + (1.0 + std::exp(eps_dp)) * delta};
}

/// Amplification by subsampling (with replacement): from pairwise divergence
/// alpha*tau to 13 s^2 alpha tau. The parameter ranges are hard validity
/// conditions of the underlying statement, not tolerances.
inline double amplify_subsample(double alpha, double tau, double s) {
    if (!(tau <= 1.0 / 3.0)) throw std::domain_error("amplify_subsample: requires tau <= 1/3");
    if (!(s > 0.0 && s < 1.0 / 40.0))
        throw std::domain_error("amplify_subsample: requires s in (0, 1/40)");
    if (!(alpha > 1.0 && alpha < 3.0 / tau))
        throw std::domain_error("amplify_subsample: requires alpha in (1, 3/tau)");
    return 13.0 * s * s * alpha * tau;
}

/// Per-alpha coefficient of the conditional drift guarantee with b hits of
/// the differing index: 1500 beta^2 b^2.
inline double drift_rdp_coefficient(double beta, int b) {
    if (b < 0) throw std::domain_error("drift_rdp_coefficient: b must be nonnegative");
    if (!(beta > 0.0)) throw std::domain_error("drift_rdp_coefficient: beta must be positive");
    return 1500.0 * beta * beta * static_cast<double>(b) * static_cast<double>(b);
}

enum class SolverVariant { convex, strongly_convex, line_search };

/// Validity data of the subsampled solvers' RDP guarantee: the event is
/// (alpha, alpha*tau, delta)-RDP for any alpha in (1, alpha_max).
struct SolverRdpSpec {
    double tau;
    double alpha_max;
};

namespace detail {
inline double log_floor1(double x) { return std::log(std::max(x, 1.0)); }
}  // namespace detail

/// tau and the admissible alpha range for one subsampled solver call.
/// convex:           tau = C_priv (beta log(1/delta) T/n)^2
/// strongly_convex:  log argument becomes log(log T)/delta
/// line_search:      tau gains a log(1/zeta) factor; log argument log(T/zeta)/delta
inline SolverRdpSpec solver_rdp_event(double beta, double T, double n, double delta,
                                      double C_priv, SolverVariant variant, double zeta = 0.0) {
    std::ostringstream bad;
    if (!(T / n <= 1.0 / C_priv)) bad << "T/n <= 1/C_priv violated (T/n=" << T / n << "); ";
    if (!(delta > 0.0 && delta < 1.0 / 6.0)) bad << "delta in (0, 1/6) violated; ";
    double log_arg = 0.0;
    double scale = 1.0;
    switch (variant) {
        case SolverVariant::convex:
            log_arg = std::log(1.0 / delta);
            break;
        case SolverVariant::strongly_convex:
            log_arg = std::log(detail::log_floor1(detail::log_floor1(T)) / delta);
            break;
        case SolverVariant::line_search:
            if (!(zeta > 0.0 && zeta < 1.0)) bad << "zeta in (0,1) required; ";
            else {
                log_arg = std::log(detail::log_floor1(T / zeta) / delta);
                scale = std::log(1.0 / zeta);
            }
            break;
    }
    if (!(beta * beta * log_arg * log_arg <= 1.0 / C_priv))
        bad << "beta^2 log^2 <= 1/C_priv violated (lhs=" << beta * beta * log_arg * log_arg
            << "); ";
    const std::string msg = bad.str();
    if (!msg.empty()) throw std::domain_error("solver_rdp_event: " + msg);
    const double base = beta * log_arg * T / n;
    return {C_priv * scale * base * base, 1.0 / (C_priv * beta * beta * log_arg * log_arg)};
}

/// Ordered approximate-RDP ledger at a single fixed alpha. Composition is
/// componentwise summation; conversion to DP goes through rdp_to_dp.
class PrivacyLedger {
public:
    explicit PrivacyLedger(double alpha) : alpha_(alpha) {
        if (!(alpha > 1.0)) throw std::domain_error("PrivacyLedger: alpha must exceed 1");
    }

    double alpha() const { return alpha_; }
    const std::vector<RdpEvent>& events() const { return events_; }

    void compose(RdpEvent event) {
        if (event.alpha != alpha_)
            throw std::invalid_argument("PrivacyLedger: heterogeneous-alpha composition rejected");
        if (!(event.delta >= 0.0 && event.delta < 1.0))
            throw std::invalid_argument("PrivacyLedger: event delta out of range");
        if (!(event.epsilon >= 0.0))
            throw std::invalid_argument("PrivacyLedger: event epsilon must be nonnegative");
        events_.push_back(std::move(event));
    }

    double epsilon_total() const {
        double s = 0.0;
        for (const auto& e : events_) s += e.epsilon;
        return s;
    }

    double delta_total() const {
        double s = 0.0;
        for (const auto& e : events_) s += e.delta;
        return s;
    }

    DpGuarantee to_dp(double delta_prime) const {
        return rdp_to_dp(alpha_, epsilon_total(), delta_total(), delta_prime);
    }

    /// Line-oriented text report: one `label alpha epsilon delta` row per
    /// event, a totals line, and the converted DP guarantee.
    std::string serialize(double delta_prime) const {
        std::ostringstream os;
        os.precision(17);
        for (const auto& e : events_)
            os << e.label << ' ' << e.alpha << ' ' << e.epsilon << ' ' << e.delta << '\n';
        os << "total " << alpha_ << ' ' << epsilon_total() << ' ' << delta_total() << '\n';
        const DpGuarantee g = to_dp(delta_prime);
        os << "dp " << g.eps_dp << ' ' << g.delta << " delta_prime " << delta_prime << '\n';
        return os.str();
    }

private:
    double alpha_;
    std::vector<RdpEvent> events_;
};

}  // namespace resque
