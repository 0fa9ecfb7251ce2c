#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qbc/bits.hpp"
#include "qbc/rng.hpp"

namespace qbc {

// Signed Walsh spectrum W(u) = sum_a (-1)^{F(a) xor <u,a>}, indexed by the
// mask u under the same MSB-first convention as truth-table inputs.
struct WalshSpectrum {
    int n = 0;
    std::vector<std::int32_t> w;

    std::int64_t parseval_sum() const {
        std::int64_t s = 0;
        for (std::int32_t c : w) s += static_cast<std::int64_t>(c) * c;
        return s;
    }
};

// Boolean function on n inputs as a full truth table. Immutable after
// construction; the spectrum, correlation-immunity order and preimage
// lists are computed eagerly so all queries are read-only.
class BoolFn {
public:
    static constexpr int kMinArity = 2;
    static constexpr int kMaxArity = 20;

    BoolFn(int n, std::vector<std::uint8_t> table) : n_(n), tt_(std::move(table)) {
        if (n_ < kMinArity || n_ > kMaxArity)
            throw std::invalid_argument("BoolFn: arity must be in [2, 20]");
        if (tt_.size() != (1u << n_))
            throw std::invalid_argument("BoolFn: table length must be exactly 2^n");
        for (auto& v : tt_) v &= 1u;
        build();
    }

    static BoolFn from_hex(int n, std::string_view hex) {
        Bits bits = hex_to_bits(hex, 1 << n);
        return BoolFn(n, std::vector<std::uint8_t>(bits.begin(), bits.end()));
    }

    std::string to_hex() const { return bits_to_hex(Bits(tt_.begin(), tt_.end())); }

    int n() const { return n_; }
    int operator()(std::uint32_t input_index) const { return tt_[input_index]; }
    int eval_bits(const Bits& a) const { return tt_[bits_to_index(a)]; }
    const std::vector<std::uint8_t>& table() const { return tt_; }

    const WalshSpectrum& walsh() const { return walsh_; }
    int ci_order() const { return ci_; }
    bool balanced() const { return ones_ == (1u << (n_ - 1)); }
    std::uint32_t ones_count() const { return ones_; }
    const std::vector<std::uint32_t>& preimage(int b) const { return preim_[static_cast<std::size_t>(b & 1)]; }

    // True iff the function is F(a) = <mask,a> xor c for some mask, c.
    bool affine() const {
        std::uint32_t nonzero = 0;
        for (std::int32_t c : walsh_.w)
            if (c != 0) ++nonzero;
        return nonzero == 1;
    }

private:
    void build() {
        ones_ = 0;
        for (std::uint8_t v : tt_) ones_ += v;
        preim_[0].reserve(tt_.size() - ones_);
        preim_[1].reserve(ones_);
        for (std::uint32_t a = 0; a < tt_.size(); ++a) preim_[tt_[a]].push_back(a);

        walsh_.n = n_;
        walsh_.w.resize(tt_.size());
        for (std::uint32_t a = 0; a < tt_.size(); ++a) walsh_.w[a] = tt_[a] ? -1 : 1;
        for (std::uint32_t len = 1; len < tt_.size(); len <<= 1)
            for (std::uint32_t i = 0; i < tt_.size(); i += len << 1)
                for (std::uint32_t j = i; j < i + len; ++j) {
                    const std::int32_t x = walsh_.w[j], y = walsh_.w[j + len];
                    walsh_.w[j] = x + y;
                    walsh_.w[j + len] = x - y;
                }

        // Xiao-Massey: CI order = (min weight of a nonzero off-origin
        // spectrum coefficient) - 1; constant functions get n.
        int min_wt = n_ + 1;
        for (std::uint32_t u = 1; u < tt_.size(); ++u)
            if (walsh_.w[u] != 0) min_wt = std::min(min_wt, std::popcount(u));
        ci_ = min_wt - 1 > n_ ? n_ : min_wt - 1;
    }

    int n_;
    std::vector<std::uint8_t> tt_;
    std::uint32_t ones_ = 0;
    WalshSpectrum walsh_;
    int ci_ = 0;
    std::array<std::vector<std::uint32_t>, 2> preim_;
};

inline WalshSpectrum walsh_transform(const BoolFn& f) { return f.walsh(); }
inline int ci_order(const BoolFn& f) { return f.ci_order(); }
inline bool is_balanced(const BoolFn& f) { return f.balanced(); }

// Uniform sample from F^{-1}(b).
inline Bits sample_preimage(const BoolFn& f, int b, Rng& rng) {
    const auto& list = f.preimage(b);
    if (list.empty()) throw std::domain_error("sample_preimage: empty preimage");
    return index_to_bits(list[rng.below(list.size())], f.n());
}

enum class CiKind { linear_mask, recursive };

// linear_mask: F(a) = <c,a> with weight(c) = n0+1; CI order exactly n0.
// recursive:   balanced nonlinear direct sum  F(x,y) = G(x) xor H(y) with
//              G = parity of the first n0 inputs and H balanced nonlinear
//              on the rest (needs n - n0 >= 3); CI order >= n0.
inline BoolFn make_ci_function(int n, int n0, CiKind kind) {
    if (n < BoolFn::kMinArity || n > BoolFn::kMaxArity)
        throw std::invalid_argument("make_ci_function: arity out of range");
    if (n0 < 1 || n0 > n - 1)
        throw std::invalid_argument("make_ci_function: need 1 <= n0 <= n-1");
    std::vector<std::uint8_t> tt(1u << n);
    if (kind == CiKind::linear_mask) {
        const std::uint32_t mask = ((1u << (n0 + 1)) - 1u) << (n - n0 - 1);  // a1..a_{n0+1}
        for (std::uint32_t a = 0; a < tt.size(); ++a)
            tt[a] = static_cast<std::uint8_t>(std::popcount(a & mask) & 1);
        BoolFn f(n, std::move(tt));
        if (f.ci_order() != n0) throw std::logic_error("make_ci_function: certification failed");
        return f;
    }
    if (n - n0 < 3)
        throw std::invalid_argument("make_ci_function: recursive kind needs n - n0 >= 3");
    // bit k of the index is input a_{n-k}
    const int p1 = n - n0;              // lowest bit of the parity block a_1..a_{n0}
    const int q1 = n - n0 - 1;          // a_{n0+1}
    const int q2 = n - n0 - 2;          // a_{n0+2}
    const std::uint32_t tail_mask = (1u << (n - n0 - 2)) - 1u;  // a_{n0+3}..a_n
    for (std::uint32_t a = 0; a < tt.size(); ++a) {
        const int g = std::popcount(a >> p1) & 1;
        const int h = (((a >> q1) & 1u) & ((a >> q2) & 1u)) ^ (std::popcount(a & tail_mask) & 1);
        tt[a] = static_cast<std::uint8_t>(g ^ static_cast<int>(h));
    }
    BoolFn f(n, std::move(tt));
    if (f.ci_order() < n0 || !f.balanced() || f.affine())
        throw std::logic_error("make_ci_function: certification failed");
    return f;
}

// Exhaustive search over all 2^(2^n) functions, n <= 4.
inline std::vector<BoolFn> search_ci(int n, int n0, bool balanced) {
    if (n > 4) throw std::invalid_argument("search_ci: n must be <= 4");
    if (n < BoolFn::kMinArity) throw std::invalid_argument("search_ci: n must be >= 2");
    const std::uint32_t size = 1u << n;
    std::vector<BoolFn> out;
    for (std::uint64_t code = 0; code < (1ull << size); ++code) {
        std::vector<std::uint8_t> tt(size);
        for (std::uint32_t a = 0; a < size; ++a) tt[a] = static_cast<std::uint8_t>((code >> a) & 1u);
        BoolFn f(n, std::move(tt));
        if (f.balanced() != balanced) continue;
        if (f.ci_order() >= n0) out.push_back(std::move(f));
    }
    return out;
}

}  // namespace qbc
