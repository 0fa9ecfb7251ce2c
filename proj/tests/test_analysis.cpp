#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qbc/analysis.hpp"
#include "oracles.hpp"

using namespace qbc;
namespace an = qbc::analysis;
using Catch::Approx;

TEST_CASE("discrimination rate and its window") {
    REQUIRE(an::p_usd(0.8) == Approx(0.2).margin(1e-15));
    REQUIRE(an::p_usd(0.999999) < 1e-5);
    REQUIRE_THROWS_AS(an::p_usd(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(an::p_usd(1.0), std::invalid_argument);

    // delta = 0.1 confines the rate to [1 - sqrt(0.9), 1 - sqrt(0.6)]
    const double lo = 1.0 - std::sqrt(0.9), hi = 1.0 - std::sqrt(0.6);
    for (double c2 = 0.6; c2 <= 0.9 + 1e-12; c2 += 0.01) {
        const double p = an::p_usd(std::sqrt(c2));
        REQUIRE(p >= lo - 1e-12);
        REQUIRE(p <= hi + 1e-12);
    }
}

TEST_CASE("minimum string count for the binding level") {
    SECTION("frozen case: escape base 1/2, alpha = 10") {
        const an::BindingM bm = an::binding_min_m(10.0, std::sqrt(0.5));
        REQUIRE(bm.m_sin2 == 15);  // 0.5^14 > e^-10 >= 0.5^15
        REQUIRE(bm.m_cos2 == 15);  // symmetric at cos^2 A = 1/2
        REQUIRE(std::pow(0.5, bm.m_sin2) < std::exp(-10.0));
        REQUIRE(std::pow(0.5, bm.m_sin2 - 1) >= std::exp(-10.0));
    }

    SECTION("postcondition across a parameter grid") {
        for (double alpha : {0.5, 3.0, 12.0, 25.0})
            for (double cos_a : {0.75, 0.8, 0.9, std::sqrt(0.75)}) {
                const an::BindingM bm = an::binding_min_m(alpha, cos_a);
                const double s2 = 1.0 - cos_a * cos_a, c2 = cos_a * cos_a;
                REQUIRE(std::pow(s2, bm.m_sin2) < std::exp(-alpha));
                REQUIRE((bm.m_sin2 == 1 || std::pow(s2, bm.m_sin2 - 1) >= std::exp(-alpha)));
                REQUIRE(std::pow(c2, bm.m_cos2) < std::exp(-alpha));
                REQUIRE((bm.m_cos2 == 1 || std::pow(c2, bm.m_cos2 - 1) >= std::exp(-alpha)));
            }
    }

    SECTION("vanishing confidence needs a single string") {
        REQUIRE(an::binding_min_m(1e-9, 0.8).m_sin2 == 1);
    }

    SECTION("linearity in alpha") {
        const an::BindingM a20 = an::binding_min_m(20.0, 0.8);
        const an::BindingM a40 = an::binding_min_m(40.0, 0.8);
        const double ratio = static_cast<double>(a40.m_sin2) / a20.m_sin2;
        REQUIRE(ratio == Approx(2.0).margin(0.1));
    }
}

TEST_CASE("steering-attack failure probability") {
    REQUIRE(an::probe_failure_prob(1, std::sqrt(0.75)) == Approx(0.125).margin(1e-12));
    REQUIRE(an::probe_failure_prob(8, std::sqrt(0.75)) ==
            Approx(0.6563910841941833).margin(1e-12));
    REQUIRE(an::probe_failure_prob(5, 0.99999) < 1e-3);

    SECTION("binomial sum equals the closed form to 1e-12 up to m = 64") {
        for (int m : {1, 2, 3, 8, 16, 33, 64})
            for (double cos_a : {0.75, 0.8, std::sqrt(0.75), 0.9}) {
                const double closed = 1.0 - std::pow(0.5 * (1.0 + cos_a * cos_a), m);
                REQUIRE(an::probe_failure_sum(m, cos_a) == Approx(closed).margin(1e-12));
                REQUIRE(an::probe_failure_prob(m, cos_a) == Approx(closed).margin(0.0));
            }
    }
}

TEST_CASE("exact concealing tail") {
    REQUIRE(an::concealing_exact(10, 0, 0.2) == Approx(0.10737418240000006).margin(1e-13));
    REQUIRE(an::concealing_exact(10, 9, 0.5) == Approx(0.9990234375).margin(1e-13));

    SECTION("matches the direct-product oracle") {
        for (int n : {5, 12, 25})
            for (int n0 : {0, 1, n / 2, n - 1})
                for (double p : {0.1, 0.2, 0.5, 0.8})
                    REQUIRE(an::concealing_exact(n, n0, p) ==
                            Approx(oracle::binom_cdf(n, n0, p)).margin(1e-12));
    }

    SECTION("survives n = 10000 in log space") {
        const double v = an::concealing_exact(10000, 3000, 0.2);
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        // 3000 sits far above the mean 2000: the complement is minuscule
        // but still resolved in log space
        const double tail = an::concealing_upper_tail(10000, 3000, 0.2);
        REQUIRE(tail > 0.0);
        REQUIRE(tail < 1e-100);
        REQUIRE(an::concealing_exact(10000, 1900, 0.2) < 0.5);
    }

    REQUIRE_THROWS_AS(an::concealing_exact(10, 10, 0.2), std::invalid_argument);
}

TEST_CASE("normal approximation of the concealing tail") {
    SECTION("parameters reproduce the standard score") {
        for (int n : {50, 400})
            for (int n0 : {10, 15, 30})
                for (double p : {0.2, 0.3}) {
                    const an::DmlParams d = an::dml_params(n, n0, p);
                    const double standard = (n0 - n * p) / std::sqrt(n * p * (1.0 - p));
                    REQUIRE(d.lambda2 * std::sqrt(n) == Approx(standard).margin(1e-12));
                }
    }

    SECTION("close to exact for large n") {
        const double exact = an::concealing_exact(400, 120, 0.2);
        const double dml = an::concealing_dml(400, 120, 0.2);
        REQUIRE(std::abs(dml - exact) < 0.01);
    }

    SECTION("median case sits near one half") {
        REQUIRE(an::concealing_dml(400, 80, 0.2) == Approx(0.5).margin(1e-6));
    }

    SECTION("approximation error decreases with n at fixed shape") {
        double prev = 1.0;
        for (int n : {50, 200, 800}) {
            const int n0 = (3 * n) / 10;
            const double err = std::abs(an::concealing_dml(n, n0, 0.2) - an::concealing_exact(n, n0, 0.2));
            REQUIRE(err < prev + 1e-12);
            prev = err;
        }
    }
}

TEST_CASE("leading-order tail readings") {
    SECTION("the complement reading tracks the exact value; as printed it does not") {
        const double exact = an::concealing_exact(400, 120, 0.2);
        const an::TailReadings t = an::concealing_asymptotic(400, 120, 0.2);
        REQUIRE(std::abs(t.complement - exact) < 0.02);
        REQUIRE(t.as_printed < 1e-5);
        REQUIRE(std::abs(t.as_printed - exact) > 0.9);
    }

    SECTION("exponent equals the squared erf argument") {
        const an::DmlParams d = an::dml_params(400, 120, 0.2);
        const double erf_arg = d.lambda2 * std::sqrt(400 / 2.0);
        REQUIRE(0.5 * d.lambda2 * d.lambda2 * 400 == Approx(erf_arg * erf_arg).margin(1e-12));
    }

    SECTION("complement reading is monotone in n0") {
        double prev = -1.0;
        for (int n0 : {90, 100, 110, 120, 130, 140}) {
            const double v = an::concealing_asymptotic(400, n0, 0.2).complement;
            REQUIRE(v > prev);
            prev = v;
        }
    }

    SECTION("below the mean the expansion has no positive decay rate") {
        REQUIRE_THROWS_AS(an::concealing_asymptotic(400, 60, 0.2), std::domain_error);
    }
}

TEST_CASE("receiver cheat bound and the minimum string length") {
    REQUIRE(an::bob_cheat_prob(10, 8, 0.2, 1) ==
            Approx(1.0 - an::concealing_exact(10, 8, 0.2)).margin(1e-15));

    SECTION("threshold postcondition") {
        for (double beta : {5.0, 10.0})
            for (int gap : {2, 3}) {
                const auto n = an::min_n_for_beta(beta, 4, 0.2, gap);
                REQUIRE(n.has_value());
                // direct form, valid at moderate beta
                const double threshold = std::pow(-std::expm1(-beta), 1.0 / 4.0);
                REQUIRE(an::concealing_exact(*n, *n - gap, 0.2) > threshold);
                REQUIRE(an::concealing_exact(*n - 1, *n - 1 - gap, 0.2) <= threshold);
            }
        // complement form handles beta where 1 - e^-beta rounds to 1
        for (double beta : {30.0, 60.0}) {
            const auto n = an::min_n_for_beta(beta, 4, 0.2, 2);
            REQUIRE(n.has_value());
            const double complement = an::beta_threshold_complement(beta, 4);
            REQUIRE(an::concealing_upper_tail(*n, *n - 2, 0.2) < complement);
            REQUIRE(an::concealing_upper_tail(*n - 1, *n - 3, 0.2) >= complement);
        }
    }

    SECTION("upper tail agrees with the direct-product oracle") {
        for (int n : {5, 12, 25})
            for (int n0 : {0, 1, n / 2, n - 1})
                for (double p : {0.1, 0.2, 0.5, 0.8})
                    REQUIRE(an::concealing_upper_tail(n, n0, p) ==
                            Approx(1.0 - oracle::binom_cdf(n, n0, p)).margin(1e-12));
    }

    SECTION("approximately linear in beta") {
        const auto n30 = an::min_n_for_beta(30.0, 4, 0.2, 2);
        const auto n60 = an::min_n_for_beta(60.0, 4, 0.2, 2);
        REQUIRE(n30.has_value());
        REQUIRE(n60.has_value());
        REQUIRE(static_cast<double>(*n60) / *n30 == Approx(2.0).margin(0.3));
    }

    SECTION("a cap renders the threshold unattainable") {
        REQUIRE_FALSE(an::min_n_for_beta(50.0, 4, 0.2, 2, 10).has_value());
    }
}

TEST_CASE("per-qubit blob trace distance") {
    const StatePair pair = make_state_pair(0.8, 0.1);

    SECTION("frozen value and m-independence") {
        const std::vector<int> pos1{0, 2, 3};
        const std::vector<std::uint8_t> dir1{0, 1, 0};
        REQUIRE(an::blob_trace_distance(pair, 4, 3, pos1, dir1) == Approx(0.15).margin(1e-12));
        for (int m : {1, 3, 7}) {
            std::vector<int> pos(static_cast<std::size_t>(m), 1);
            std::vector<std::uint8_t> dir(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) dir[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(j & 1);
            REQUIRE(an::blob_trace_distance(pair, 4, m, pos, dir) == Approx(0.15).margin(1e-12));
        }
    }

    SECTION("log-log slope is -1") {
        double prev_log_v = 0.0, prev_log_n = 0.0;
        bool first = true;
        for (int n : {10, 100, 1000, 10000}) {
            const std::vector<int> pos{0};
            const std::vector<std::uint8_t> dir{0};
            const double v = an::blob_trace_distance(pair, n, 1, pos, dir);
            if (!first) {
                const double slope = (std::log(v) - prev_log_v) / (std::log(n) - prev_log_n);
                REQUIRE(slope == Approx(-1.0).margin(0.01));
            }
            prev_log_v = std::log(v);
            prev_log_n = std::log(static_cast<double>(n));
            first = false;
        }
    }

    SECTION("pattern violations are parameter errors") {
        REQUIRE_THROWS_AS(an::blob_trace_distance(pair, 4, 3, {0, 1}, {0, 0, 0}), std::invalid_argument);
        REQUIRE_THROWS_AS(an::blob_trace_distance(pair, 4, 2, {0, 4}, {0, 0}), std::invalid_argument);
    }
}

TEST_CASE("majority vote success over noisy copies") {
    const double q = std::pow(std::cos(M_PI / 8.0), 2);
    REQUIRE(an::majority_success(1, q) == Approx(0.8535533905932737).margin(1e-12));
    REQUIRE(an::majority_success(5, q) == Approx(0.9750873686097116).margin(1e-12));
    REQUIRE(an::majority_success(15, q) == Approx(0.9994839875765457).margin(1e-12));
    // agreement with the direct-product oracle, even n included
    for (int n : {1, 2, 4, 6, 15}) {
        double expect = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double pm = oracle::binom_pmf(n, k, q);
            if (2 * k > n) expect += pm;
            else if (2 * k == n) expect += 0.5 * pm;
        }
        REQUIRE(an::majority_success(n, q) == Approx(expect).margin(1e-12));
    }
}
