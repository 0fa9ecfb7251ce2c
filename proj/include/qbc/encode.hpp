#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qbc/bits.hpp"
#include "qbc/boolfn.hpp"
#include "qbc/quantum.hpp"
#include "qbc/rng.hpp"

namespace qbc {

enum class Encoder : std::uint8_t {
    simple,           // one state per message bit, two-state alphabet
    basis_committed,  // committed bit selects the coding basis, payload random
    keyed,            // data bit repeated under per-position random bases
    two_state_blob,   // preimage strings of F in the two-state alphabet
    four_state_blob,  // preimage strings of F in the four-state alphabet
};

inline const char* encoder_name(Encoder e) {
    switch (e) {
        case Encoder::simple: return "simple";
        case Encoder::basis_committed: return "basis-committed";
        case Encoder::keyed: return "keyed";
        case Encoder::two_state_blob: return "blob2";
        case Encoder::four_state_blob: return "blob4";
    }
    return "?";
}

struct BlobMeta {
    Encoder encoder = Encoder::simple;
    int m = 0, n = 0;
    double cos_a = 0.0;  // 0 when the four-state alphabet is used
    std::uint64_t key_hash = 0, basis_hash = 0;
};

// A slot register is either an owned pure state or one factor of a shared
// joint register (entangled attack blobs reference the latter).
struct SlotRef {
    std::shared_ptr<JointState> joint;
    int factor = 0;
};

using SlotReg = std::variant<PureState, SlotRef>;

struct Blob {
    BlobMeta meta;
    std::vector<SlotReg> slots;  // row-major, m strings of n qubits

    SlotReg& slot(int i, int j) { return slots[static_cast<std::size_t>(i) * meta.n + j]; }
    const SlotReg& slot(int i, int j) const { return slots[static_cast<std::size_t>(i) * meta.n + j]; }
};

inline int measure_slot(SlotReg& reg, const Basis& basis, Rng& rng) {
    if (auto* pure = std::get_if<PureState>(&reg)) return projective_measure(*pure, basis, rng);
    auto& ref = std::get<SlotRef>(reg);
    return ref.joint->measure_factor(ref.factor, basis, rng);
}

// Measure in {claimed, claimed^perp}; true iff the slot passes as claimed.
inline bool verify_slot_is(SlotReg& reg, const PureState& claimed, Rng& rng) {
    return measure_slot(reg, Basis::of(claimed), rng) == 0;
}

struct CommitKey {
    std::vector<Bits> a_strings;
    std::vector<Bits> basis_strings;  // empty for two-state encoders
};

// ---------------------------------------------------------------------------

// Each message bit becomes one signal state of the pair.
inline Blob encode_simple(const Bits& a, const StatePair& pair) {
    Blob blob;
    blob.meta = BlobMeta{Encoder::simple, 1, static_cast<int>(a.size()), pair.cos_a,
                         fnv1a_strings({a}), 0};
    blob.slots.reserve(a.size());
    for (std::uint8_t bit : a) blob.slots.emplace_back(pair.state(bit));
    return blob;
}

// Block i carries the random payload a^(i) coded in the basis chosen by
// message bit a_i (four-state alphabet).
inline Blob encode_basis_committed_with(const Bits& a, const std::vector<Bits>& payloads) {
    const int k = static_cast<int>(a.size());
    if (static_cast<int>(payloads.size()) != k)
        throw std::invalid_argument("encode_basis_committed_with: one payload string per bit");
    const int n = payloads.empty() ? 0 : static_cast<int>(payloads.front().size());
    Blob blob;
    blob.meta = BlobMeta{Encoder::basis_committed, k, n, 0.0, fnv1a_strings(payloads), fnv1a_strings({a})};
    blob.slots.reserve(static_cast<std::size_t>(k) * n);
    for (int i = 0; i < k; ++i) {
        if (static_cast<int>(payloads[static_cast<std::size_t>(i)].size()) != n)
            throw std::invalid_argument("encode_basis_committed_with: ragged payloads");
        for (int j = 0; j < n; ++j)
            blob.slots.emplace_back(conjugate_coding_state(a[static_cast<std::size_t>(i)], payloads[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
    }
    return blob;
}

inline std::pair<Blob, CommitKey> encode_basis_committed(const Bits& a, int n, Rng& rng) {
    CommitKey key;
    key.a_strings.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) key.a_strings.push_back(random_bits(n, rng));
    return {encode_basis_committed_with(a, key.a_strings), std::move(key)};
}

// Data bit a_i repeated n times, each copy coded in a random basis.
inline Blob encode_keyed_with(const Bits& a, const std::vector<Bits>& basis_keys) {
    const int k = static_cast<int>(a.size());
    if (static_cast<int>(basis_keys.size()) != k)
        throw std::invalid_argument("encode_keyed_with: one basis string per bit");
    const int n = basis_keys.empty() ? 0 : static_cast<int>(basis_keys.front().size());
    Blob blob;
    blob.meta = BlobMeta{Encoder::keyed, k, n, 0.0, fnv1a_strings({a}), fnv1a_strings(basis_keys)};
    blob.slots.reserve(static_cast<std::size_t>(k) * n);
    for (int i = 0; i < k; ++i) {
        if (static_cast<int>(basis_keys[static_cast<std::size_t>(i)].size()) != n)
            throw std::invalid_argument("encode_keyed_with: ragged basis strings");
        for (int j = 0; j < n; ++j)
            blob.slots.emplace_back(conjugate_coding_state(basis_keys[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], a[static_cast<std::size_t>(i)]));
    }
    return blob;
}

inline std::pair<Blob, std::vector<Bits>> encode_keyed(const Bits& a, int n, Rng& rng) {
    std::vector<Bits> keys;
    keys.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) keys.push_back(random_bits(n, rng));
    return {encode_keyed_with(a, keys), std::move(keys)};
}

// ---------------------------------------------------------------------------
// Commitment blobs keyed by F-preimages
// ---------------------------------------------------------------------------

inline Blob blob2_encode_with(const std::vector<Bits>& keys, const StatePair& pair) {
    if (keys.empty()) throw std::invalid_argument("blob2_encode_with: need m >= 1 strings");
    const int n = static_cast<int>(keys.front().size());
    Blob blob;
    blob.meta = BlobMeta{Encoder::two_state_blob, static_cast<int>(keys.size()), n, pair.cos_a,
                         fnv1a_strings(keys), 0};
    blob.slots.reserve(keys.size() * static_cast<std::size_t>(n));
    for (const Bits& key : keys) {
        if (static_cast<int>(key.size()) != n) throw std::invalid_argument("blob2_encode_with: ragged keys");
        for (std::uint8_t bit : key) blob.slots.emplace_back(pair.state(bit));
    }
    return blob;
}

inline std::pair<Blob, CommitKey> blob2_encode(int b, const BoolFn& f, int m,
                                               const StatePair& pair, Rng& rng) {
    if (m < 1) throw std::invalid_argument("blob2_encode: need m >= 1");
    CommitKey key;
    key.a_strings.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) key.a_strings.push_back(sample_preimage(f, b, rng));
    return {blob2_encode_with(key.a_strings, pair), std::move(key)};
}

inline Blob blob4_encode_with(const CommitKey& key) {
    if (key.a_strings.empty() || key.a_strings.size() != key.basis_strings.size())
        throw std::invalid_argument("blob4_encode_with: need matching key and basis strings");
    const int n = static_cast<int>(key.a_strings.front().size());
    Blob blob;
    blob.meta = BlobMeta{Encoder::four_state_blob, static_cast<int>(key.a_strings.size()), n, 0.0,
                         fnv1a_strings(key.a_strings), fnv1a_strings(key.basis_strings)};
    blob.slots.reserve(key.a_strings.size() * static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < key.a_strings.size(); ++i) {
        if (key.a_strings[i].size() != static_cast<std::size_t>(n) || key.basis_strings[i].size() != static_cast<std::size_t>(n))
            throw std::invalid_argument("blob4_encode_with: ragged strings");
        for (int j = 0; j < n; ++j)
            blob.slots.emplace_back(conjugate_coding_state(key.basis_strings[i][static_cast<std::size_t>(j)], key.a_strings[i][static_cast<std::size_t>(j)]));
    }
    return blob;
}

inline std::pair<Blob, CommitKey> blob4_encode(int b, const BoolFn& f, int m, Rng& rng) {
    if (m < 1) throw std::invalid_argument("blob4_encode: need m >= 1");
    CommitKey key;
    key.a_strings.reserve(static_cast<std::size_t>(m));
    key.basis_strings.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        key.a_strings.push_back(sample_preimage(f, b, rng));
        key.basis_strings.push_back(random_bits(f.n(), rng));
    }
    return {blob4_encode_with(key), std::move(key)};
}

// ---------------------------------------------------------------------------
// Concatenated multi-bit commitments: independent blobs, independent keys
// ---------------------------------------------------------------------------

enum class ConcatMode { two_state, four_state };

inline std::vector<std::pair<Blob, CommitKey>> strong_concat(const Bits& data, ConcatMode mode,
                                                             const BoolFn& f, int m,
                                                             const StatePair* pair, Rng& rng) {
    if (mode == ConcatMode::two_state && pair == nullptr)
        throw std::invalid_argument("strong_concat: two-state mode needs a state pair");
    std::vector<std::pair<Blob, CommitKey>> out;
    out.reserve(data.size());
    for (std::uint8_t b : data) {
        if (mode == ConcatMode::two_state) out.push_back(blob2_encode(b, f, m, *pair, rng));
        else out.push_back(blob4_encode(b, f, m, rng));
    }
    return out;
}

}  // namespace qbc
