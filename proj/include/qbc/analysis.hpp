#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qbc/quantum.hpp"

namespace qbc::analysis {

// Optimal unambiguous-discrimination rate for equal priors.
inline double p_usd(double cos_a) {
    if (!(cos_a > 0.0 && cos_a < 1.0)) throw std::invalid_argument("p_usd: need 0 < cosA < 1");
    return 1.0 - cos_a;
}

inline double clamp01(double x) {
    if (x < 0.0 && x > -1e-12) return 0.0;
    if (x > 1.0 && x < 1.0 + 1e-12) return 1.0;
    return x;
}

// log C(n,k)
inline double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// log-space sum of binomial point masses for k in [k_lo, k_hi]
inline double binomial_range_prob(int n, int k_lo, int k_hi, double p) {
    const double lp = std::log(p), lq = std::log1p(-p);
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
    for (int k = k_lo; k <= k_hi; ++k) {
        terms.push_back(log_choose(n, k) + k * lp + (n - k) * lq);
        max_term = std::max(max_term, terms.back());
    }
    if (!(max_term > -std::numeric_limits<double>::infinity())) return 0.0;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    return std::exp(max_term) * acc;
}

// P[Bin(n, p) > n0], accurate when small (log-space summation).
inline double concealing_upper_tail(int n, int n0, double p) {
    if (n < 1 || n0 < 0 || n0 >= n) throw std::invalid_argument("concealing_upper_tail: need 0 <= n0 < n");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("concealing_upper_tail: need 0 < p < 1");
    return clamp01(binomial_range_prob(n, n0 + 1, n, p));
}

// Binomial CDF P[Bin(n, p) <= n0], stable to n = 1e4: the smaller tail is
// summed so the result never drifts past the [0, 1] boundary.
inline double concealing_exact(int n, int n0, double p) {
    if (n < 1 || n0 < 0 || n0 >= n) throw std::invalid_argument("concealing_exact: need 0 <= n0 < n");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("concealing_exact: need 0 < p < 1");
    if (static_cast<double>(n0) >= n * p)
        return clamp01(1.0 - binomial_range_prob(n, n0 + 1, n, p));
    return clamp01(binomial_range_prob(n, 0, n0, p));
}

// Per-string escape base is sin^2 A in the quoted binding bound and
// cos^2 A by direct evaluation of the verification measurement; both
// minimum-m variants are reported.
struct BindingM {
    int m_sin2 = 0;
    int m_cos2 = 0;
};

inline int min_m_for_escape(double base, double alpha) {
    // smallest m with base^m < e^{-alpha}
    int m = static_cast<int>(std::floor(alpha / -std::log(base))) + 1;
    while (m > 1 && std::pow(base, m - 1) < std::exp(-alpha)) --m;
    while (std::pow(base, m) >= std::exp(-alpha)) ++m;
    return m;
}

inline BindingM binding_min_m(double alpha, double cos_a) {
    if (!(alpha > 0.0)) throw std::invalid_argument("binding_min_m: need alpha > 0");
    if (!(cos_a > 0.0 && cos_a < 1.0)) throw std::invalid_argument("binding_min_m: need 0 < cosA < 1");
    const double c2 = cos_a * cos_a;
    return BindingM{min_m_for_escape(1.0 - c2, alpha), min_m_for_escape(c2, alpha)};
}

// Failure probability of the one-lying-qubit probe attack:
// sum_k C(m,k) (1/2)^m [1 - (cos^2 A)^{m-k}]  ==  1 - ((1+cos^2 A)/2)^m.
inline double probe_failure_sum(int m, double cos_a) {
    if (m < 1) throw std::invalid_argument("probe_failure_sum: need m >= 1");
    const double c2 = cos_a * cos_a;
    double term = std::pow(0.5, m);  // C(m,0) (1/2)^m
    double acc = 0.0;
    for (int k = 0; k <= m; ++k) {
        acc += term * (1.0 - std::pow(c2, m - k));
        term *= static_cast<double>(m - k) / static_cast<double>(k + 1);
    }
    return acc;
}

inline double probe_failure_prob(int m, double cos_a) {
    if (m < 1) throw std::invalid_argument("probe_failure_prob: need m >= 1");
    const double c2 = cos_a * cos_a;
    const double closed = 1.0 - std::pow(0.5 * (1.0 + c2), m);
    if (m <= 64 && std::abs(closed - probe_failure_sum(m, cos_a)) > 1e-12)
        throw std::logic_error("probe_failure_prob: closed form and binomial sum disagree");
    return closed;
}

// Normal-approximation parameters for the concealing tail.
struct DmlParams {
    double lambda = 0.0, lambda1 = 0.0, lambda2 = 0.0;
};

inline DmlParams dml_params(int n, int n0, double p) {
    DmlParams d;
    d.lambda = static_cast<double>(n0) / (n * p);
    d.lambda1 = std::sqrt(p / (1.0 - p));
    d.lambda2 = (d.lambda - 1.0) * d.lambda1;
    return d;
}

// De Moivre-Laplace value (1/2)[erf(l1 sqrt(n/2)) + erf(l2 sqrt(n/2))].
inline double concealing_dml(int n, int n0, double p) {
    const DmlParams d = dml_params(n, n0, p);
    return 0.5 * (std::erf(d.lambda1 * std::sqrt(n / 2.0)) + std::erf(d.lambda2 * std::sqrt(n / 2.0)));
}

// The leading-order tail expression is evaluated under both readings: as
// printed, and as the complement of the printed value. The comparison
// suite reports which one tracks the exact CDF.
struct TailReadings {
    double as_printed = 0.0;
    double complement = 0.0;
};

inline TailReadings concealing_asymptotic(int n, int n0, double p) {
    const DmlParams d = dml_params(n, n0, p);
    if (!(d.lambda2 > 0.0)) throw std::domain_error("concealing_asymptotic: requires lambda2 > 0");
    const double v = 1.0 / std::sqrt(2.0 * M_PI * n) *
                     ((1.0 / d.lambda1) * std::exp(-0.5 * d.lambda1 * d.lambda1 * n) +
                      (1.0 / d.lambda2) * std::exp(-0.5 * d.lambda2 * d.lambda2 * n));
    return TailReadings{v, 1.0 - v};
}

// P_A = 1 - (p^{(n0)})^m: chance that at least one of m strings reveals
// more than n0 components to an unambiguous-discrimination receiver.
inline double bob_cheat_prob(int n, int n0, double p, int m) {
    if (m < 1) throw std::invalid_argument("bob_cheat_prob: need m >= 1");
    return clamp01(1.0 - std::pow(concealing_exact(n, n0, p), m));
}

// Complement of the beta threshold, 1 - (1 - e^-beta)^(1/m), evaluated in
// expm1/log1p space so it stays representable for beta far beyond the
// point where (1 - e^-beta) rounds to 1.
inline double beta_threshold_complement(double beta, int m) {
    return -std::expm1(std::log1p(-std::exp(-beta)) / m);
}

// Smallest n (with n0 = n - gap) satisfying p^{(n0)} > (1 - e^{-beta})^(1/m),
// compared in complement space: P[Bin > n0] < 1 - (1 - e^-beta)^(1/m).
inline std::optional<int> min_n_for_beta(double beta, int m, double p, int gap, int n_max = 1'000'000) {
    if (!(beta > 0.0) || m < 1 || gap < 1) throw std::invalid_argument("min_n_for_beta: bad parameters");
    const double complement = beta_threshold_complement(beta, m);
    for (int n = gap + 1; n <= n_max; ++n)
        if (concealing_upper_tail(n, n - gap, p) < complement) return n;
    return std::nullopt;
}

// Per-qubit-averaged trace distance between two blobs whose key strings
// differ in exactly one position per string: sinA / n. The closed form is
// cross-checked against an eigenvalue evaluation of the per-string
// single-qubit operator differences.
inline double blob_trace_distance(const StatePair& pair, int n, int m,
                                  const std::vector<int>& diff_pos,
                                  const std::vector<std::uint8_t>& flip_from) {
    if (n < 1 || m < 1) throw std::invalid_argument("blob_trace_distance: need n, m >= 1");
    if (static_cast<int>(diff_pos.size()) != m || static_cast<int>(flip_from.size()) != m)
        throw std::invalid_argument("blob_trace_distance: pattern must list exactly one position per string");
    for (int pos : diff_pos)
        if (pos < 0 || pos >= n) throw std::invalid_argument("blob_trace_distance: position out of range");

    const DensityOp r0 = DensityOp::pure(pair.psi0);
    const DensityOp r1 = DensityOp::pure(pair.psi1);
    double numeric = 0.0;
    for (int j = 0; j < m; ++j) {
        const double sign = flip_from[static_cast<std::size_t>(j)] == 0 ? 1.0 : -1.0;
        DensityOp diff(2);
        for (std::size_t k = 0; k < diff.m.size(); ++k) diff.m[k] = sign * (r0.m[k] - r1.m[k]);
        for (double ev : hermitian_eigenvalues(diff)) numeric += std::abs(ev);
    }
    numeric /= 2.0 * m * n;
    const double analytic = pair.sin_a() / n;
    if (std::abs(numeric - analytic) > 1e-12)
        throw std::logic_error("blob_trace_distance: analytic and eigenvalue routes disagree");
    return analytic;
}

// P[Bin(n, q) wins a majority vote], ties split by a fair coin.
inline double majority_success(int n, double q) {
    double term = std::pow(1.0 - q, n);  // k = 0
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        if (2 * k > n) acc += term;
        else if (2 * k == n) acc += 0.5 * term;
        term *= static_cast<double>(n - k) / static_cast<double>(k + 1) * (q / (1.0 - q));
    }
    return clamp01(acc);
}

}  // namespace qbc::analysis
