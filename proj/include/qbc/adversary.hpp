#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qbc/protocol.hpp"

namespace qbc {

// Aggregated empirical outcome of an attack strategy, comparable to the
// closed-form prediction. z is computed from the binomial standard error
// of the prediction.
struct AttackReport {
    std::string strategy;
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    std::uint64_t units = 0;           // finer-grain denominator (strings/components)
    std::uint64_t unit_successes = 0;  // matching numerator
    double predicted = std::numeric_limits<double>::quiet_NaN();
    std::map<std::string, double> extra;

    double mean() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
    double unit_mean() const { return units ? static_cast<double>(unit_successes) / units : 0.0; }

    double z() const {
        if (!(predicted > 0.0) || !(predicted < 1.0) || trials == 0) {
            if (trials == 0) return 0.0;
            return mean() == predicted ? 0.0 : std::numeric_limits<double>::infinity();
        }
        const double se = std::sqrt(predicted * (1.0 - predicted) / static_cast<double>(trials));
        return (mean() - predicted) / se;
    }
};

// ---------------------------------------------------------------------------
// Receiver-side concealing attacks
// ---------------------------------------------------------------------------

// Exact number of inputs consistent with the identified components, split
// by function value. Integer arithmetic; the correlation-immunity
// statement "posterior is exactly 1/2" is the equality
// counts[1] * |F^-1(0)| == counts[0] * |F^-1(1)|.
inline std::array<std::int64_t, 2> posterior_counts(const BoolFn& f,
                                                    const std::vector<std::int8_t>& known) {
    const int n = f.n();
    if (n > 16) throw std::invalid_argument("posterior_counts: enumeration capped at n = 16");
    if (static_cast<int>(known.size()) != n)
        throw std::invalid_argument("posterior_counts: component vector length != n");
    std::uint32_t base = 0;
    std::vector<int> free_pos;
    for (int k = 0; k < n; ++k) {
        const int pos = n - 1 - k;
        if (known[static_cast<std::size_t>(k)] < 0) free_pos.push_back(pos);
        else base |= static_cast<std::uint32_t>(known[static_cast<std::size_t>(k)] & 1) << pos;
    }
    std::array<std::int64_t, 2> counts{0, 0};
    const std::uint32_t combos = 1u << free_pos.size();
    for (std::uint32_t c = 0; c < combos; ++c) {
        std::uint32_t idx = base;
        for (std::size_t t = 0; t < free_pos.size(); ++t)
            idx |= ((c >> t) & 1u) << free_pos[static_cast<std::size_t>(t)];
        ++counts[static_cast<std::size_t>(f(idx))];
    }
    return counts;
}

struct UsdGuessResult {
    int guess = 0;
    bool informative = false;  // some string's posterior differs from 1/2 (exact check)
    bool tie_coin = false;
    int max_known = 0;
    std::vector<std::array<std::int64_t, 2>> per_string_counts;
};

// Discriminates every slot, then forms the exact Bayes posterior over the
// committed bit from the identified components of each string.
inline UsdGuessResult bob_usd_guess(Blob& blob, const BoolFn& f, const StatePair& pair, Rng& rng) {
    UsdGuessResult r;
    const auto f0 = static_cast<std::int64_t>(f.preimage(0).size());
    const auto f1 = static_cast<std::int64_t>(f.preimage(1).size());
    long double loglik[2] = {0.0L, 0.0L};
    for (int i = 0; i < blob.meta.m; ++i) {
        std::vector<std::int8_t> known(static_cast<std::size_t>(blob.meta.n), -1);
        int known_count = 0;
        for (int j = 0; j < blob.meta.n; ++j) {
            const auto& pure = std::get<PureState>(blob.slot(i, j));
            const UsdOutcome out = usd_measure(pure, pair, rng);
            if (out.known) {
                known[static_cast<std::size_t>(j)] = static_cast<std::int8_t>(out.bit);
                ++known_count;
            }
        }
        r.max_known = std::max(r.max_known, known_count);
        const auto counts = posterior_counts(f, known);
        r.per_string_counts.push_back(counts);
        if (counts[1] * f0 != counts[0] * f1) r.informative = true;
        for (int v = 0; v < 2; ++v) {
            const std::int64_t c = counts[static_cast<std::size_t>(v)];
            const std::int64_t tot = v == 0 ? f0 : f1;
            loglik[v] += c == 0 ? -std::numeric_limits<long double>::infinity()
                                : std::log(static_cast<long double>(c)) - std::log(static_cast<long double>(tot));
        }
    }
    if (!r.informative || loglik[0] == loglik[1]) {
        r.tie_coin = true;
        r.guess = rng.bit();
    } else {
        r.guess = loglik[1] > loglik[0] ? 1 : 0;
    }
    return r;
}

struct BreidbartGuessResult {
    int guess = 0;
    bool tie_coin = false;
    std::vector<Bits> measured;  // raw per-slot outcomes, for component-rate scoring
};

// Measures every slot in the intermediate basis (or, for the variant, in
// uniformly random coding bases) and forms the posterior under the
// per-component error model q = cos^2(pi/8) (0.75 for the variant).
inline BreidbartGuessResult bob_breidbart_guess(Blob& blob, const BoolFn& f, Rng& rng,
                                                bool random_basis_variant = false) {
    const int n = blob.meta.n;
    if (n > 16) throw std::invalid_argument("bob_breidbart_guess: enumeration capped at n = 16");
    const double q = random_basis_variant ? 0.75 : std::pow(std::cos(M_PI / 8.0), 2);
    const double ratio = (1.0 - q) / q;
    BreidbartGuessResult r;
    long double loglik[2] = {0.0L, 0.0L};
    for (int i = 0; i < blob.meta.m; ++i) {
        Bits c(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            auto& reg = blob.slot(i, j);
            if (random_basis_variant) {
                c[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(
                    measure_slot(reg, conjugate_coding_basis(rng.bit()), rng));
            } else {
                c[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(
                    measure_slot(reg, breidbart_basis(), rng));
            }
        }
        const std::uint32_t c_idx = bits_to_index(c);
        // Pr[c | b=v] = (1/|F^-1(v)|) sum_{a: F(a)=v} q^(n-d) (1-q)^d
        double w[2] = {0.0, 0.0};
        const double qn = std::pow(q, n);
        for (std::uint32_t a = 0; a < (1u << n); ++a)
            w[f(a)] += qn * std::pow(ratio, std::popcount(a ^ c_idx));
        for (int v = 0; v < 2; ++v) {
            const double total = static_cast<double>(f.preimage(v).size());
            loglik[v] += w[v] <= 0.0 ? -std::numeric_limits<long double>::infinity()
                                     : static_cast<long double>(std::log(w[v] / total));
        }
        r.measured.push_back(std::move(c));
    }
    if (loglik[0] == loglik[1]) {
        r.tie_coin = true;
        r.guess = rng.bit();
    } else {
        r.guess = loglik[1] > loglik[0] ? 1 : 0;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Committer-side binding attacks
// ---------------------------------------------------------------------------

// A minimal steering pair: strings a (F=0) and a xor e_j (F=1).
struct SteeringPair {
    Bits string_for[2];
    int flip_pos = 0;
};

inline SteeringPair find_steering_pair(const BoolFn& f, Rng& rng) {
    const int n = f.n();
    for (int tries = 0; tries < 4096 * n; ++tries) {
        Bits a = sample_preimage(f, 0, rng);
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        Bits b = a;
        b[static_cast<std::size_t>(j)] ^= 1u;
        if (f.eval_bits(b) == 1) return SteeringPair{{std::move(a), std::move(b)}, j};
    }
    throw std::domain_error("find_steering_pair: no single-flip value change found");
}

struct ProbeAttackOutcome {
    bool success = false;
    int strings_lied = 0;
    Verdict verdict;
};

// One probe qubit per string, entangled across the two branch values at
// the flip position. At open Alice measures her probes, learns each
// string's collapsed value, and unveils a one-position lie for every
// string that collapsed against the target.
inline ProbeAttackOutcome alice_probe_attack_b92(const SessionConfig& cfg, int target_bit,
                                                 Rng& rng) {
    validate_config(cfg);
    const StatePair pair = cfg.pair();
    Blob blob;
    blob.meta = BlobMeta{Encoder::two_state_blob, cfg.m, cfg.n, pair.cos_a, 0, 0};
    std::vector<SteeringPair> pairs;
    std::vector<std::shared_ptr<JointState>> probes;
    for (int i = 0; i < cfg.m; ++i) {
        SteeringPair sp = find_steering_pair(cfg.f, rng);
        auto joint = std::make_shared<JointState>(probe_pair_state(
            pair.state(sp.string_for[0][static_cast<std::size_t>(sp.flip_pos)]),
            pair.state(sp.string_for[1][static_cast<std::size_t>(sp.flip_pos)])));
        for (int j = 0; j < cfg.n; ++j) {
            if (j == sp.flip_pos) blob.slots.emplace_back(SlotRef{joint, 1});
            else blob.slots.emplace_back(pair.state(sp.string_for[0][static_cast<std::size_t>(j)]));
        }
        pairs.push_back(std::move(sp));
        probes.push_back(std::move(joint));
    }

    // open phase: measure probes, lie minimally where the collapse is wrong
    OpenMsg open;
    open.claimed_bit = target_bit;
    ProbeAttackOutcome out;
    for (int i = 0; i < cfg.m; ++i) {
        const int collapsed = probes[static_cast<std::size_t>(i)]->measure_factor(0, computational_basis(), rng);
        if (collapsed == target_bit) {
            open.strings.push_back(pairs[static_cast<std::size_t>(i)].string_for[collapsed]);
        } else {
            open.strings.push_back(pairs[static_cast<std::size_t>(i)].string_for[1 - collapsed]);
            ++out.strings_lied;
        }
    }
    Rng bob_rng(splitmix64(rng.next()));
    out.verdict = b92_verify(blob, open, cfg.f, bob_rng);
    out.success = out.verdict.accepted;
    return out;
}

enum class FalseBasisStrategy : std::uint8_t { uniform_false, probe_collapse };

struct FalseBasisOutcome {
    bool success = false;
    int per_string_successes = 0;
    int m = 0;
};

// uniform_false: commit honestly to 1 - target, then unveil the
// complement basis set; every measured component turns uniform.
// probe_collapse: one probe qubit per string; unveil a false basis only
// at the flip position of strings that collapsed against the target.
inline FalseBasisOutcome alice_false_basis_attack_bb84(const SessionConfig& cfg, int target_bit,
                                                       FalseBasisStrategy strategy, Rng& rng) {
    validate_config(cfg);
    FalseBasisOutcome out;
    out.m = cfg.m;
    Rng bob_rng(splitmix64(rng.next()));

    if (strategy == FalseBasisStrategy::uniform_false) {
        auto [alice, blob] = bb84_commit(1 - target_bit, cfg, rng);
        OpenMsg open;
        open.claimed_bit = target_bit;
        for (const Bits& bases : alice.key.basis_strings) {
            Bits flipped = bases;
            for (auto& b : flipped) b ^= 1u;
            open.strings.push_back(std::move(flipped));
        }
        const Verdict v = bb84_verify(blob, open, cfg.f, bob_rng);
        for (std::uint8_t ok : v.per_string) out.per_string_successes += ok;
        out.success = v.accepted;
        return out;
    }

    Blob blob;
    blob.meta = BlobMeta{Encoder::four_state_blob, cfg.m, cfg.n, 0.0, 0, 0};
    std::vector<SteeringPair> pairs;
    std::vector<Bits> bases;
    std::vector<std::shared_ptr<JointState>> probes;
    for (int i = 0; i < cfg.m; ++i) {
        SteeringPair sp = find_steering_pair(cfg.f, rng);
        Bits basis_string = random_bits(cfg.n, rng);
        const int beta = basis_string[static_cast<std::size_t>(sp.flip_pos)];
        auto joint = std::make_shared<JointState>(probe_pair_state(
            conjugate_coding_state(beta, sp.string_for[0][static_cast<std::size_t>(sp.flip_pos)]),
            conjugate_coding_state(beta, sp.string_for[1][static_cast<std::size_t>(sp.flip_pos)])));
        for (int j = 0; j < cfg.n; ++j) {
            if (j == sp.flip_pos) blob.slots.emplace_back(SlotRef{joint, 1});
            else blob.slots.emplace_back(conjugate_coding_state(
                     basis_string[static_cast<std::size_t>(j)], sp.string_for[0][static_cast<std::size_t>(j)]));
        }
        pairs.push_back(std::move(sp));
        bases.push_back(std::move(basis_string));
        probes.push_back(std::move(joint));
    }

    OpenMsg open;
    open.claimed_bit = target_bit;
    for (int i = 0; i < cfg.m; ++i) {
        const int collapsed = probes[static_cast<std::size_t>(i)]->measure_factor(0, computational_basis(), rng);
        Bits unveil = bases[static_cast<std::size_t>(i)];
        if (collapsed != target_bit) unveil[static_cast<std::size_t>(pairs[static_cast<std::size_t>(i)].flip_pos)] ^= 1u;
        open.strings.push_back(std::move(unveil));
    }
    const Verdict v = bb84_verify(blob, open, cfg.f, bob_rng);
    for (std::uint8_t ok : v.per_string) out.per_string_successes += ok;
    out.success = v.accepted;
    return out;
}

// ---------------------------------------------------------------------------
// Entanglement attack on the basis-committed encoder
// ---------------------------------------------------------------------------

// Bob's verification of a basis-committed blob: each slot is measured in
// the claimed-state basis; any orthogonal outcome fails the block.
inline bool basis_committed_verify(Blob& blob, const Bits& claimed_a,
                                   const std::vector<Bits>& payloads, Rng& rng) {
    if (static_cast<int>(claimed_a.size()) != blob.meta.m ||
        static_cast<int>(payloads.size()) != blob.meta.m)
        throw std::invalid_argument("basis_committed_verify: open message shape mismatch");
    for (int i = 0; i < blob.meta.m; ++i)
        for (int j = 0; j < blob.meta.n; ++j) {
            const PureState claim = conjugate_coding_state(
                claimed_a[static_cast<std::size_t>(i)], payloads[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            if (!verify_slot_is(blob.slot(i, j), claim, rng)) return false;
        }
    return true;
}

// Alice sends halves of maximally entangled pairs; at open she measures
// her halves in the basis matching the value she now wants and unveils
// the induced payload. Verification passes with certainty either way.
inline bool epr_attack_basis_committed(int k, int n, int target_bit, Rng& rng) {
    Blob blob;
    blob.meta = BlobMeta{Encoder::basis_committed, k, n, 0.0, 0, 0};
    std::vector<std::shared_ptr<JointState>> halves;
    for (int i = 0; i < k * n; ++i) {
        auto joint = std::make_shared<JointState>(epr_pair());
        blob.slots.emplace_back(SlotRef{joint, 1});
        halves.push_back(std::move(joint));
    }
    const Basis alice_basis = conjugate_coding_basis(target_bit);
    Bits claimed_a(static_cast<std::size_t>(k), static_cast<std::uint8_t>(target_bit));
    std::vector<Bits> payloads(static_cast<std::size_t>(k), Bits(static_cast<std::size_t>(n)));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < n; ++j)
            payloads[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(
                halves[static_cast<std::size_t>(i) * n + j]->measure_factor(0, alice_basis, rng));
    Rng bob_rng(splitmix64(rng.next()));
    return basis_committed_verify(blob, claimed_a, payloads, bob_rng);
}

// Honest commitment, then an attempt to re-open every block as the other
// value; each slot survives with probability 1/2.
inline bool honest_reopen_basis_committed(int k, int n, Rng& rng) {
    Bits a = random_bits(k, rng);
    auto [blob, key] = encode_basis_committed(a, n, rng);
    Bits flipped = a;
    for (auto& b : flipped) b ^= 1u;
    std::vector<Bits> claimed_payloads;
    for (int i = 0; i < k; ++i) claimed_payloads.push_back(random_bits(n, rng));
    Rng bob_rng(splitmix64(rng.next()));
    return basis_committed_verify(blob, flipped, claimed_payloads, bob_rng);
}

// ---------------------------------------------------------------------------
// Breidbart majority recovery of the keyed encoder
// ---------------------------------------------------------------------------

struct KeyedRecovery {
    int correct_bits = 0;
    int total_bits = 0;
};

// All n copies of each data bit are measured in the intermediate basis
// before any basis string is revealed; a majority vote decides each bit.
inline KeyedRecovery breidbart_recover_keyed(Blob& blob, const Bits& truth, Rng& rng) {
    if (static_cast<int>(truth.size()) != blob.meta.m)
        throw std::invalid_argument("breidbart_recover_keyed: truth length mismatch");
    KeyedRecovery r;
    r.total_bits = blob.meta.m;
    for (int i = 0; i < blob.meta.m; ++i) {
        int votes = 0;
        for (int j = 0; j < blob.meta.n; ++j)
            votes += measure_slot(blob.slot(i, j), breidbart_basis(), rng);
        int guess;
        if (2 * votes == blob.meta.n) guess = rng.bit();
        else guess = 2 * votes > blob.meta.n ? 1 : 0;
        r.correct_bits += guess == truth[static_cast<std::size_t>(i)];
    }
    return r;
}

// ---------------------------------------------------------------------------
// No-signaling: the receiver's reduced state is unchanged by any
// committer-side measurement, outcome-averaged. Exact check.
// ---------------------------------------------------------------------------

inline double nosignal_deviation(const JointState& joint, int probe_factor, const Basis& probe_basis,
                                 int keep_factor) {
    const DensityOp before = partial_trace_keep(joint, keep_factor);
    const DensityOp after = averaged_reduced_after_measurement(joint, probe_factor, probe_basis, keep_factor);
    return max_abs_diff(before, after);
}

// Sweeps the attack-relevant joint states and probe bases; returns the
// worst deviation found.
inline double nosignal_worst_case(const SessionConfig& cfg) {
    std::vector<JointState> states;
    if (cfg.uses_pair()) {
        const StatePair pair = cfg.pair();
        states.push_back(probe_entangle(pair));
        states.push_back(probe_pair_state(pair.psi1, pair.psi0));
    }
    states.push_back(epr_pair());
    for (int beta = 0; beta < 2; ++beta)
        states.push_back(probe_pair_state(conjugate_coding_state(beta, 0), conjugate_coding_state(beta, 1)));
    const Basis bases[] = {computational_basis(), hadamard_basis(), breidbart_basis()};
    double worst = 0.0;
    for (const JointState& joint : states)
        for (const Basis& basis : bases)
            worst = std::max(worst, nosignal_deviation(joint, 0, basis, 1));
    return worst;
}

// ---------------------------------------------------------------------------
// Curious coin-flip receiver: announce the discrimination-based guess
// ---------------------------------------------------------------------------

struct UsdCuriousBobCoin {
    int operator()(Blob* held, const SessionConfig& cfg, Rng& rng) const {
        if (held == nullptr) return rng.bit();
        UsdGuessResult g = bob_usd_guess(*held, cfg.f, cfg.pair(), rng);
        return g.guess;
    }
};

}  // namespace qbc
