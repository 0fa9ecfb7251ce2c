#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qbc/rng.hpp"

namespace qbc {

// A classical bit string a = (a1, a2, ..., an), a[0] = a1.
using Bits = std::vector<std::uint8_t>;

// Index convention used throughout (truth tables, preimage lists, hex
// import/export): a1 is the most significant bit of the index.
inline std::uint32_t bits_to_index(const Bits& a) {
    std::uint32_t idx = 0;
    for (std::uint8_t b : a) idx = (idx << 1) | (b & 1u);
    return idx;
}

inline Bits index_to_bits(std::uint32_t idx, int n) {
    Bits a(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) a[static_cast<std::size_t>(k)] = (idx >> (n - 1 - k)) & 1u;
    return a;
}

inline Bits random_bits(int n, Rng& rng) {
    Bits a(static_cast<std::size_t>(n));
    for (auto& b : a) b = static_cast<std::uint8_t>(rng.bit());
    return a;
}

inline int hamming_weight(const Bits& a) {
    int w = 0;
    for (std::uint8_t b : a) w += b & 1;
    return w;
}

inline int hamming_distance(const Bits& a, const Bits& b) {
    if (a.size() != b.size()) throw std::invalid_argument("hamming_distance: length mismatch");
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] ^ b[i]) & 1;
    return d;
}

// Hex form: the bit sequence is packed big-endian, first bit into the
// most significant position of the first hex digit; right-padded with
// zeros to a multiple of 4. hex_to_bits needs the bit count to trim.
inline std::string bits_to_hex(const Bits& a) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    int nibble = 0, filled = 0;
    for (std::uint8_t b : a) {
        nibble = (nibble << 1) | (b & 1);
        if (++filled == 4) {
            out.push_back(digits[nibble]);
            nibble = 0;
            filled = 0;
        }
    }
    if (filled > 0) out.push_back(digits[nibble << (4 - filled)]);
    return out;
}

inline Bits hex_to_bits(std::string_view hex, int nbits) {
    Bits a;
    a.reserve(static_cast<std::size_t>(nbits));
    for (char c : hex) {
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else throw std::invalid_argument("hex_to_bits: invalid hex digit");
        for (int k = 3; k >= 0; --k)
            if (static_cast<int>(a.size()) < nbits) a.push_back(static_cast<std::uint8_t>((v >> k) & 1));
    }
    if (static_cast<int>(a.size()) < nbits) throw std::invalid_argument("hex_to_bits: string too short");
    return a;
}

// FNV-1a, used for key/basis digests in transcripts. Not cryptographic.
inline std::uint64_t fnv1a(const Bits& a, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (std::uint8_t b : a) {
        h ^= (b & 1u);
        h *= 0x100000001B3ULL;
    }
    // fold in a terminator so ("01","0") != ("0","10")
    h ^= 0xFFu;
    h *= 0x100000001B3ULL;
    return h;
}

inline std::uint64_t fnv1a_strings(const std::vector<Bits>& strings) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const Bits& s : strings) h = fnv1a(s, h);
    return h;
}

}  // namespace qbc
