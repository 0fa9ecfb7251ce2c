#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "qbc/boolfn.hpp"
#include "oracles.hpp"

using namespace qbc;
using Catch::Approx;

namespace {

BoolFn parity_fn(int n) {
    std::vector<std::uint8_t> tt(1u << n);
    for (std::uint32_t a = 0; a < tt.size(); ++a) tt[a] = static_cast<std::uint8_t>(std::popcount(a) & 1);
    return BoolFn(n, std::move(tt));
}

BoolFn random_fn(int n, Rng& rng) {
    std::vector<std::uint8_t> tt(1u << n);
    for (auto& v : tt) v = static_cast<std::uint8_t>(rng.bit());
    return BoolFn(n, std::move(tt));
}

// in-test spectrum by direct summation, the slow route
std::vector<int> walsh_direct(const BoolFn& f) {
    const std::uint32_t size = 1u << f.n();
    std::vector<int> w(size, 0);
    for (std::uint32_t u = 0; u < size; ++u)
        for (std::uint32_t a = 0; a < size; ++a)
            w[u] += ((f(a) ^ (std::popcount(u & a) & 1)) != 0) ? -1 : 1;
    return w;
}

}  // namespace

TEST_CASE("spectrum basics") {
    SECTION("constant zero, n = 2") {
        const BoolFn f(2, {0, 0, 0, 0});
        REQUIRE(f.walsh().w[0] == 4);
        for (std::uint32_t u = 1; u < 4; ++u) REQUIRE(f.walsh().w[u] == 0);
        REQUIRE(f.ci_order() == 2);  // constants get n by convention
    }

    SECTION("two-variable parity concentrates on the full mask") {
        const BoolFn f = parity_fn(2);
        const auto direct = walsh_direct(f);
        for (std::uint32_t u = 0; u < 4; ++u) REQUIRE(f.walsh().w[u] == direct[u]);
        REQUIRE(std::abs(f.walsh().w[3]) == 4);
        REQUIRE(f.walsh().w[0] == 0);
        REQUIRE(f.walsh().w[1] == 0);
        REQUIRE(f.walsh().w[2] == 0);
    }

    SECTION("butterfly equals direct summation and Parseval holds, random n = 8") {
        Rng rng(0xB00F);
        for (int rep = 0; rep < 100; ++rep) {
            const BoolFn f = random_fn(8, rng);
            REQUIRE(f.walsh().parseval_sum() == (1ll << 16));
            if (rep < 5) {
                const auto direct = walsh_direct(f);
                for (std::uint32_t u = 0; u < 256; ++u) REQUIRE(f.walsh().w[u] == direct[u]);
            }
        }
    }
}

TEST_CASE("correlation-immunity order") {
    REQUIRE(parity_fn(6).ci_order() == 5);

    // dictatorship depends on one variable
    std::vector<std::uint8_t> tt(16);
    for (std::uint32_t a = 0; a < 16; ++a) tt[a] = (a >> 3) & 1;  // a1
    REQUIRE(BoolFn(4, std::move(tt)).ci_order() == 0);

    SECTION("matches the brute-force independence oracle on all n = 2, 3 functions") {
        for (int n : {2, 3}) {
            const std::uint32_t size = 1u << n;
            for (std::uint64_t code = 0; code < (1ull << size); ++code) {
                std::vector<std::uint8_t> table(size);
                for (std::uint32_t a = 0; a < size; ++a)
                    table[a] = static_cast<std::uint8_t>((code >> a) & 1);
                const int brute = oracle::brute_force_ci_order(n, table);
                REQUIRE(BoolFn(n, std::move(table)).ci_order() == brute);
            }
        }
    }

    SECTION("matches the oracle on random n = 4 functions") {
        Rng rng(0xC1C1);
        for (int rep = 0; rep < 500; ++rep) {
            const BoolFn f = random_fn(4, rng);
            REQUIRE(f.ci_order() == oracle::brute_force_ci_order(4, f.table()));
        }
    }

    SECTION("invariant under complement and variable permutation") {
        Rng rng(0x9E12);
        for (int rep = 0; rep < 20; ++rep) {
            const BoolFn f = random_fn(8, rng);
            std::vector<std::uint8_t> comp(f.table());
            for (auto& v : comp) v ^= 1u;
            REQUIRE(BoolFn(8, std::move(comp)).ci_order() == f.ci_order());

            std::array<int, 8> perm;
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = 7; i > 0; --i)
                std::swap(perm[static_cast<std::size_t>(i)],
                          perm[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
            std::vector<std::uint8_t> permuted(256);
            for (std::uint32_t a = 0; a < 256; ++a) {
                std::uint32_t b = 0;
                for (int k = 0; k < 8; ++k)
                    if ((a >> k) & 1u) b |= 1u << perm[static_cast<std::size_t>(k)];
                permuted[b] = f.table()[a];
            }
            REQUIRE(BoolFn(8, std::move(permuted)).ci_order() == f.ci_order());
        }
    }
}

TEST_CASE("balancedness") {
    REQUIRE(is_balanced(parity_fn(3)));
    REQUIRE(is_balanced(parity_fn(6)));
    REQUIRE_FALSE(is_balanced(BoolFn(2, {1, 1, 1, 1})));
    Rng rng(0xBA1A);
    for (int rep = 0; rep < 100; ++rep) {
        const BoolFn f = random_fn(8, rng);
        std::uint32_t ones = 0;
        for (std::uint8_t v : f.table()) ones += v;
        REQUIRE(is_balanced(f) == (ones == 128));
        REQUIRE((f.walsh().w[0] == 0) == is_balanced(f));
    }
}

TEST_CASE("preimage sampling") {
    Rng rng(0x5A3E);

    SECTION("parity preimages have the right weight parity") {
        const BoolFn f = parity_fn(4);
        for (int rep = 0; rep < 500; ++rep) {
            const Bits a = sample_preimage(f, 0, rng);
            REQUIRE(hamming_weight(a) % 2 == 0);
            REQUIRE(f.eval_bits(a) == 0);
            const Bits b = sample_preimage(f, 1, rng);
            REQUIRE(f.eval_bits(b) == 1);
        }
    }

    SECTION("empty preimage is a domain error") {
        const BoolFn zero(3, std::vector<std::uint8_t>(8, 0));
        REQUIRE_THROWS_AS(sample_preimage(zero, 1, rng), std::domain_error);
    }

    SECTION("uniformity over the preimage set, chi-square at p > 0.001") {
        const BoolFn f = parity_fn(6);
        const auto& pre = f.preimage(0);
        REQUIRE(pre.size() == 32);
        std::vector<std::uint64_t> counts(32, 0);
        const std::uint64_t draws = 100000;
        for (std::uint64_t t = 0; t < draws; ++t) {
            const std::uint32_t idx = bits_to_index(sample_preimage(f, 0, rng));
            const auto it = std::lower_bound(pre.begin(), pre.end(), idx);
            REQUIRE(it != pre.end());
            ++counts[static_cast<std::size_t>(it - pre.begin())];
        }
        // chi-square critical value, 31 degrees of freedom at 0.999
        REQUIRE(oracle::chi_square_uniform(counts, draws) < 61.098306);
    }
}

TEST_CASE("construction of correlation-immune functions") {
    SECTION("linear mask hits the order exactly") {
        const BoolFn f = make_ci_function(8, 5, CiKind::linear_mask);
        REQUIRE(f.ci_order() == 5);
        REQUIRE(is_balanced(f));
        REQUIRE(f.affine());
    }

    SECTION("n0 = n - 1 yields full parity") {
        const BoolFn f = make_ci_function(6, 5, CiKind::linear_mask);
        REQUIRE(f.table() == parity_fn(6).table());
    }

    SECTION("direct-sum construction is balanced, nonlinear and certified") {
        const BoolFn f = make_ci_function(4, 1, CiKind::recursive);
        REQUIRE(is_balanced(f));
        REQUIRE_FALSE(f.affine());
        REQUIRE(f.ci_order() >= 1);
        REQUIRE(oracle::brute_force_ci_order(4, f.table()) == f.ci_order());

        const BoolFn g = make_ci_function(9, 4, CiKind::recursive);
        REQUIRE(is_balanced(g));
        REQUIRE_FALSE(g.affine());
        REQUIRE(g.ci_order() >= 4);
    }

    SECTION("unsatisfiable parameters are rejected") {
        REQUIRE_THROWS_AS(make_ci_function(4, 0, CiKind::linear_mask), std::invalid_argument);
        REQUIRE_THROWS_AS(make_ci_function(4, 4, CiKind::linear_mask), std::invalid_argument);
        REQUIRE_THROWS_AS(make_ci_function(4, 2, CiKind::recursive), std::invalid_argument);
    }
}

TEST_CASE("exhaustive search over small arities") {
    SECTION("n = 3 balanced order-2: exactly the two parity functions") {
        const auto found = search_ci(3, 2, true);
        REQUIRE(found.size() == 2);
        const BoolFn p = parity_fn(3);
        std::vector<std::uint8_t> pc(p.table());
        for (auto& v : pc) v ^= 1u;
        const bool first_is_parity = found[0].table() == p.table();
        REQUIRE((first_is_parity ? found[1].table() : found[0].table()) == pc);
        REQUIRE((first_is_parity ? found[0].table() : found[1].table()) == p.table());
    }

    SECTION("n = 2 order-0 balanced: all six balanced functions") {
        const auto found = search_ci(2, 0, true);
        REQUIRE(found.size() == 6);
        for (const auto& f : found) {
            REQUIRE(is_balanced(f));
            REQUIRE(oracle::brute_force_ci_order(2, f.table()) == f.ci_order());
        }
    }

    SECTION("n > 4 is rejected") { REQUIRE_THROWS_AS(search_ci(5, 1, true), std::invalid_argument); }
}

TEST_CASE("hex import and export") {
    const BoolFn p2 = parity_fn(2);
    REQUIRE(p2.to_hex() == "6");  // 0110
    REQUIRE(BoolFn::from_hex(2, "6").table() == p2.table());

    const BoolFn p6 = parity_fn(6);
    const BoolFn round = BoolFn::from_hex(6, p6.to_hex());
    REQUIRE(round.table() == p6.table());
    REQUIRE(round.ci_order() == 5);

    REQUIRE_THROWS_AS(BoolFn::from_hex(4, "zz"), std::invalid_argument);
    REQUIRE_THROWS_AS(BoolFn::from_hex(4, "a"), std::invalid_argument);  // too short
    REQUIRE_THROWS_AS(BoolFn(3, std::vector<std::uint8_t>(7, 0)), std::invalid_argument);
    REQUIRE_THROWS_AS(BoolFn(21, std::vector<std::uint8_t>(8, 0)), std::invalid_argument);
}
