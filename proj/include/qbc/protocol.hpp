#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qbc/encode.hpp"

namespace qbc {

using ordered_json = nlohmann::ordered_json;

enum class Scheme : std::uint8_t { b92bc, bb84bc, otbc };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::b92bc: return "b92bc";
        case Scheme::bb84bc: return "bb84bc";
        case Scheme::otbc: return "otbc";
    }
    return "?";
}

inline Scheme scheme_from_name(const std::string& s) {
    if (s == "b92bc") return Scheme::b92bc;
    if (s == "bb84bc") return Scheme::bb84bc;
    if (s == "otbc") return Scheme::otbc;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct SessionConfig {
    Scheme scheme = Scheme::b92bc;
    int n = 0, m = 0, n0 = 0;
    double cos_a = 0.0, delta = 0.0;  // used by b92bc and otbc
    BoolFn f;
    std::uint64_t seed = 1;

    bool uses_pair() const { return scheme != Scheme::bb84bc; }
    StatePair pair() const { return make_state_pair(cos_a, delta); }
};

// n0 must be the certified order of F, and n0 < n-1 (full-parity functions
// are excluded from protocol use by policy).
inline void validate_config(const SessionConfig& cfg) {
    if (cfg.m < 1) throw std::invalid_argument("config: need m >= 1");
    if (cfg.f.n() != cfg.n) throw std::invalid_argument("config: F arity != n");
    if (cfg.f.ci_order() != cfg.n0)
        throw std::invalid_argument("config: n0 does not match certified CI order of F");
    if (cfg.n0 >= cfg.n - 1)
        throw std::invalid_argument("config: policy requires n0 < n - 1");
    if (cfg.f.preimage(0).empty() || cfg.f.preimage(1).empty())
        throw std::invalid_argument("config: F must attain both values");
    if (cfg.uses_pair()) (void)cfg.pair();  // throws when the overlap window is violated
}

// Default F for a given (n, n0): the weight-(n0+1) linear mask.
inline SessionConfig make_session_config(Scheme scheme, int n, int m, int n0, double cos_a,
                                         double delta, std::uint64_t seed) {
    SessionConfig cfg{scheme, n, m, n0, cos_a, delta, make_ci_function(n, n0, CiKind::linear_mask), seed};
    validate_config(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Transcripts
// ---------------------------------------------------------------------------

struct Verdict {
    bool accepted = false;
    int bit = 0;
    std::string reason;                    // set on reject
    std::vector<std::uint8_t> per_string;  // 1 = string verified
};

struct TranscriptMsg {
    std::string phase, kind;
    ordered_json payload;
};

struct Transcript {
    std::string session;
    std::string scheme;
    std::vector<TranscriptMsg> messages;
    std::optional<Verdict> verdict;

    void add(std::string phase, std::string kind, ordered_json payload) {
        messages.push_back(TranscriptMsg{std::move(phase), std::move(kind), std::move(payload)});
    }

    // Canonical single-line form; field order is fixed by construction.
    std::string canonical_text() const {
        ordered_json j;
        j["session"] = session;
        j["scheme"] = scheme;
        j["messages"] = ordered_json::array();
        for (const auto& msg : messages) {
            ordered_json e;
            e["phase"] = msg.phase;
            e["kind"] = msg.kind;
            e["payload"] = msg.payload;
            j["messages"].push_back(std::move(e));
        }
        return j.dump();
    }
};

inline std::string hex_u64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

inline std::string session_id_for(std::uint64_t seed) {
    return hex_u64(splitmix64(seed ^ 0x5E5510ULL));
}

inline ordered_json blob_descriptor(const BlobMeta& meta) {
    ordered_json d;
    d["encoder"] = encoder_name(meta.encoder);
    d["m"] = meta.m;
    d["n"] = meta.n;
    d["cosA"] = meta.cos_a;
    d["key_hash"] = hex_u64(meta.key_hash);
    d["basis_hash"] = hex_u64(meta.basis_hash);
    return d;
}

inline ordered_json strings_payload(int claimed_bit, const std::vector<Bits>& strings) {
    ordered_json p;
    p["bit"] = claimed_bit;
    p["strings"] = ordered_json::array();
    for (const Bits& s : strings) p["strings"].push_back(bits_to_hex(s));
    return p;
}

inline ordered_json verdict_payload(const Verdict& v) {
    ordered_json p;
    p["accepted"] = v.accepted;
    p["bit"] = v.bit;
    p["per_string"] = ordered_json::array();
    for (std::uint8_t ok : v.per_string) p["per_string"].push_back(ok != 0);
    p["reason"] = v.reason;
    return p;
}

// ---------------------------------------------------------------------------
// Open messages (classical)
// ---------------------------------------------------------------------------

struct OpenMsg {
    int claimed_bit = 0;
    std::vector<Bits> strings;  // key strings (b92bc/otbc) or basis strings (bb84bc)
};

enum class VerifyStrategy : std::uint8_t { projective, usd };

// ---------------------------------------------------------------------------
// Two-state scheme
// ---------------------------------------------------------------------------

struct AliceB92 {
    SessionConfig cfg;
    int bit = 0;
    std::vector<Bits> keys;
};

inline std::pair<AliceB92, Blob> b92_commit(int b, const SessionConfig& cfg, Rng& rng) {
    validate_config(cfg);
    auto [blob, key] = blob2_encode(b, cfg.f, cfg.m, cfg.pair(), rng);
    return {AliceB92{cfg, b, std::move(key.a_strings)}, std::move(blob)};
}

inline OpenMsg b92_open(const AliceB92& alice) { return OpenMsg{alice.bit, alice.keys}; }

// Measures slot (i, j) in {claimed state, orthogonal}; any orthogonal
// outcome fails string i. The usd strategy instead discriminates each
// slot and fails the string on an identification contradicting the claim.
// Accepts iff every string verifies and every F(a^(i)) equals the claim.
inline Verdict b92_verify(Blob& blob, const OpenMsg& open, const BoolFn& f, Rng& rng,
                          VerifyStrategy strategy = VerifyStrategy::projective) {
    Verdict v;
    v.bit = open.claimed_bit;
    if (static_cast<int>(open.strings.size()) != blob.meta.m) {
        v.reason = "open message string count mismatch";
        return v;
    }
    const StatePair pair = pair_from_overlap(blob.meta.cos_a);
    const Povm2 usd = usd_povm_elems(usd_povm(pair));
    v.per_string.assign(static_cast<std::size_t>(blob.meta.m), 1);
    bool all_pass = true;
    for (int i = 0; i < blob.meta.m; ++i) {
        const Bits& claimed = open.strings[static_cast<std::size_t>(i)];
        if (static_cast<int>(claimed.size()) != blob.meta.n) {
            v.reason = "open message string length mismatch";
            return v;
        }
        bool pass = true;
        for (int j = 0; j < blob.meta.n; ++j) {
            const int claim_bit = claimed[static_cast<std::size_t>(j)];
            auto& reg = blob.slot(i, j);
            if (strategy == VerifyStrategy::projective) {
                if (!verify_slot_is(reg, pair.state(claim_bit), rng)) pass = false;
            } else {
                int out;
                if (auto* pure = std::get_if<PureState>(&reg)) out = povm_measure(*pure, usd, rng);
                else {
                    auto& ref = std::get<SlotRef>(reg);
                    out = povm_measure_factor(*ref.joint, ref.factor, usd, rng);
                }
                if (out < 2 && out != claim_bit) pass = false;
            }
        }
        v.per_string[static_cast<std::size_t>(i)] = pass ? 1 : 0;
        all_pass = all_pass && pass;
        if (f.eval_bits(claimed) != open.claimed_bit) {
            v.reason = "opened string has wrong F value";
            return v;
        }
    }
    if (!all_pass) {
        v.reason = "physical verification failed";
        return v;
    }
    v.accepted = true;
    return v;
}

// ---------------------------------------------------------------------------
// Four-state scheme
// ---------------------------------------------------------------------------

struct AliceBB84 {
    SessionConfig cfg;
    int bit = 0;
    CommitKey key;
};

inline std::pair<AliceBB84, Blob> bb84_commit(int b, const SessionConfig& cfg, Rng& rng) {
    validate_config(cfg);
    auto [blob, key] = blob4_encode(b, cfg.f, cfg.m, rng);
    return {AliceBB84{cfg, b, std::move(key)}, std::move(blob)};
}

// Only the basis strings are unveiled.
inline OpenMsg bb84_open(const AliceBB84& alice) { return OpenMsg{alice.bit, alice.key.basis_strings}; }

// Bob measures slot (i, j) in the unveiled basis, reconstructs each a^(i)
// and accepts iff every F(a^(i)) equals the claimed bit.
inline Verdict bb84_verify(Blob& blob, const OpenMsg& open, const BoolFn& f, Rng& rng) {
    Verdict v;
    v.bit = open.claimed_bit;
    if (static_cast<int>(open.strings.size()) != blob.meta.m) {
        v.reason = "open message string count mismatch";
        return v;
    }
    v.per_string.assign(static_cast<std::size_t>(blob.meta.m), 1);
    bool all_pass = true;
    for (int i = 0; i < blob.meta.m; ++i) {
        const Bits& bases = open.strings[static_cast<std::size_t>(i)];
        if (static_cast<int>(bases.size()) != blob.meta.n) {
            v.reason = "open message string length mismatch";
            return v;
        }
        Bits measured(static_cast<std::size_t>(blob.meta.n));
        for (int j = 0; j < blob.meta.n; ++j)
            measured[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(measure_slot(
                blob.slot(i, j), conjugate_coding_basis(bases[static_cast<std::size_t>(j)]), rng));
        const bool pass = f.eval_bits(measured) == open.claimed_bit;
        v.per_string[static_cast<std::size_t>(i)] = pass ? 1 : 0;
        all_pass = all_pass && pass;
    }
    if (!all_pass) {
        v.reason = "measured string has wrong F value";
        return v;
    }
    v.accepted = true;
    return v;
}

// ---------------------------------------------------------------------------
// Oblivious transfer and the storage-free commitment built on it
// ---------------------------------------------------------------------------

inline Blob ot_send(const Bits& a, const StatePair& pair) { return encode_simple(a, pair); }

struct OtReceipt {
    std::vector<std::int8_t> bits;  // -1 unknown, else the identified bit

    int known_count() const {
        int c = 0;
        for (std::int8_t b : bits) c += b >= 0;
        return c;
    }
};

inline OtReceipt ot_receive(Blob& blob, const StatePair& pair, Rng& rng) {
    OtReceipt r;
    r.bits.reserve(blob.slots.size());
    for (auto& reg : blob.slots) {
        const auto& pure = std::get<PureState>(reg);
        const UsdOutcome out = usd_measure(pure, pair, rng);
        r.bits.push_back(out.known ? static_cast<std::int8_t>(out.bit) : std::int8_t{-1});
    }
    return r;
}

struct AliceOtbc {
    SessionConfig cfg;
    int bit = 0;
    std::vector<Bits> keys;
};

struct BobOtbc {
    std::vector<OtReceipt> receipts;
};

// Commit = m oblivious transfers; Bob keeps only classical receipts.
inline std::pair<AliceOtbc, BobOtbc> otbc_commit(int b, const SessionConfig& cfg, Rng& alice_rng,
                                                 Rng& bob_rng) {
    validate_config(cfg);
    const StatePair pair = cfg.pair();
    AliceOtbc alice{cfg, b, {}};
    BobOtbc bob;
    for (int i = 0; i < cfg.m; ++i) {
        alice.keys.push_back(sample_preimage(cfg.f, b, alice_rng));
        Blob blob = ot_send(alice.keys.back(), pair);
        bob.receipts.push_back(ot_receive(blob, pair, bob_rng));
    }
    return {std::move(alice), std::move(bob)};
}

inline OpenMsg otbc_open(const AliceOtbc& alice) { return OpenMsg{alice.bit, alice.keys}; }

// Every identified receipt position must match the unveiled string, then
// all F values must equal the claimed bit.
inline Verdict otbc_verify(const BobOtbc& bob, const OpenMsg& open, const BoolFn& f) {
    Verdict v;
    v.bit = open.claimed_bit;
    if (open.strings.size() != bob.receipts.size()) {
        v.reason = "open message string count mismatch";
        return v;
    }
    v.per_string.assign(bob.receipts.size(), 1);
    for (std::size_t i = 0; i < bob.receipts.size(); ++i) {
        const auto& receipt = bob.receipts[i].bits;
        const Bits& claimed = open.strings[i];
        if (claimed.size() != receipt.size()) {
            v.reason = "open message string length mismatch";
            return v;
        }
        for (std::size_t j = 0; j < receipt.size(); ++j)
            if (receipt[j] >= 0 && receipt[j] != claimed[j]) {
                v.per_string[i] = 0;
                v.reason = "receipt mismatch at string " + std::to_string(i) + ", position " +
                           std::to_string(j);
                return v;
            }
        if (f.eval_bits(claimed) != open.claimed_bit) {
            v.reason = "opened string has wrong F value";
            return v;
        }
    }
    v.accepted = true;
    return v;
}

// ---------------------------------------------------------------------------
// Honest end-to-end sessions with transcripts
// ---------------------------------------------------------------------------

inline Transcript run_honest_session(const SessionConfig& cfg, int b) {
    validate_config(cfg);
    Rng alice_rng(derive_seed(cfg.seed, kAliceStream));
    Rng bob_rng(derive_seed(cfg.seed, kBobStream));
    Transcript t;
    t.session = session_id_for(cfg.seed);
    t.scheme = scheme_name(cfg.scheme);

    Verdict verdict;
    if (cfg.scheme == Scheme::b92bc) {
        auto [alice, blob] = b92_commit(b, cfg, alice_rng);
        t.add("commit", "prepare", blob_descriptor(blob.meta));
        const OpenMsg open = b92_open(alice);
        t.add("open", "open", strings_payload(open.claimed_bit, open.strings));
        verdict = b92_verify(blob, open, cfg.f, bob_rng);
    } else if (cfg.scheme == Scheme::bb84bc) {
        auto [alice, blob] = bb84_commit(b, cfg, alice_rng);
        t.add("commit", "prepare", blob_descriptor(blob.meta));
        const OpenMsg open = bb84_open(alice);
        t.add("open", "open", strings_payload(open.claimed_bit, open.strings));
        verdict = bb84_verify(blob, open, cfg.f, bob_rng);
    } else {
        auto [alice, bob] = otbc_commit(b, cfg, alice_rng, bob_rng);
        ordered_json d;
        d["encoder"] = "ot";
        d["m"] = cfg.m;
        d["n"] = cfg.n;
        d["cosA"] = cfg.cos_a;
        d["key_hash"] = hex_u64(fnv1a_strings(alice.keys));
        d["basis_hash"] = hex_u64(0);
        t.add("commit", "prepare", d);
        const OpenMsg open = otbc_open(alice);
        t.add("open", "open", strings_payload(open.claimed_bit, open.strings));
        verdict = otbc_verify(bob, open, cfg.f);
    }
    t.add("open", "verdict", verdict_payload(verdict));
    t.verdict = verdict;
    return t;
}

// ---------------------------------------------------------------------------
// Coin flipping on top of a commitment scheme
// ---------------------------------------------------------------------------

struct CoinFlip {
    bool aborted = false;
    int result = 0;
    int alice_bit = 0, bob_bit = 0;
};

// Bob's announcement policy. The honest policy draws a fresh coin; a
// curious policy may measure the held blob (sacrificing verification).
struct HonestBobCoin {
    int operator()(Blob* /*held*/, const SessionConfig& /*cfg*/, Rng& rng) const { return rng.bit(); }
};

// Alice commits a random r_A; Bob announces r_B after the commit message;
// Alice opens; the flip is r_A xor r_B, aborted on Reject or refusal.
template <class BobAnnounce = HonestBobCoin>
CoinFlip coin_flip(const SessionConfig& cfg, Rng& alice_rng, Rng& bob_rng,
                   BobAnnounce announce = {}, bool alice_refuses = false) {
    validate_config(cfg);
    CoinFlip flip;
    flip.alice_bit = alice_rng.bit();

    Verdict verdict;
    if (cfg.scheme == Scheme::b92bc) {
        auto [alice, blob] = b92_commit(flip.alice_bit, cfg, alice_rng);
        flip.bob_bit = announce(&blob, cfg, bob_rng);
        if (alice_refuses) {
            flip.aborted = true;
            return flip;
        }
        verdict = b92_verify(blob, b92_open(alice), cfg.f, bob_rng);
    } else if (cfg.scheme == Scheme::bb84bc) {
        auto [alice, blob] = bb84_commit(flip.alice_bit, cfg, alice_rng);
        flip.bob_bit = announce(&blob, cfg, bob_rng);
        if (alice_refuses) {
            flip.aborted = true;
            return flip;
        }
        verdict = bb84_verify(blob, bb84_open(alice), cfg.f, bob_rng);
    } else {
        auto [alice, bob] = otbc_commit(flip.alice_bit, cfg, alice_rng, bob_rng);
        flip.bob_bit = announce(nullptr, cfg, bob_rng);
        if (alice_refuses) {
            flip.aborted = true;
            return flip;
        }
        verdict = otbc_verify(bob, otbc_open(alice), cfg.f);
    }
    if (!verdict.accepted) {
        flip.aborted = true;
        return flip;
    }
    flip.result = flip.alice_bit ^ flip.bob_bit;
    return flip;
}

}  // namespace qbc
