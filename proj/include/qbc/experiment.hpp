#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qbc/adversary.hpp"
#include "qbc/analysis.hpp"
#include "qbc/protocol.hpp"

namespace qbc::mc {

using Params = std::map<std::string, double>;

struct TrialOutcome {
    std::uint64_t numer = 0;
    std::uint64_t denom = 1;
};

struct TrialStats {
    std::uint64_t trials = 0;      // configured trial count
    std::uint64_t units = 0;       // aggregated denominator (= trials unless per-component)
    std::uint64_t successes = 0;   // aggregated numerator
    double mean = 0.0;
    double stderr_ = 0.0;          // sqrt(mean(1-mean)/units)
    double predicted = std::numeric_limits<double>::quiet_NaN();
    double z = 0.0;
    double seconds = 0.0;
};

inline double z_score(double mean, double predicted, std::uint64_t units) {
    if (units == 0 || std::isnan(predicted)) return 0.0;
    if (!(predicted > 0.0) || !(predicted < 1.0))
        return mean == predicted ? 0.0 : std::numeric_limits<double>::infinity();
    return (mean - predicted) / std::sqrt(predicted * (1.0 - predicted) / static_cast<double>(units));
}

using TrialFn = std::function<TrialOutcome(Rng&)>;

struct ExperimentDef {
    std::string id;
    std::string description;
    Params defaults;
    std::function<double(const Params&)> predicted;
    // Builds the per-trial closure once; the closure must be safe to call
    // concurrently with distinct Rng streams.
    std::function<TrialFn(const Params&)> make_trial;
};

inline double param(const Params& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end()) throw std::invalid_argument("missing parameter: " + key);
    return it->second;
}

inline int iparam(const Params& p, const std::string& key) {
    const double v = param(p, key);
    const int i = static_cast<int>(std::llround(v));
    if (std::abs(v - i) > 1e-9) throw std::invalid_argument("parameter must be an integer: " + key);
    return i;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace detail {

struct SessionCtx {
    SessionConfig cfg;
    int b = 1;
};

inline std::shared_ptr<const SessionCtx> session_ctx(Scheme scheme, const Params& p,
                                                     const char* bit_key = nullptr) {
    SessionConfig cfg = make_session_config(
        scheme, iparam(p, "n"), iparam(p, "m"), iparam(p, "n0"),
        scheme == Scheme::bb84bc ? 0.8 : param(p, "cosA"),
        scheme == Scheme::bb84bc ? 0.1 : param(p, "delta"), 1);
    return std::make_shared<const SessionCtx>(SessionCtx{std::move(cfg), bit_key ? iparam(p, bit_key) : 0});
}

inline std::map<std::string, ExperimentDef> build_registry() {
    std::map<std::string, ExperimentDef> reg;
    auto add = [&reg](ExperimentDef def) { reg[def.id] = std::move(def); };

    const double kBreidbartRate = std::pow(std::cos(M_PI / 8.0), 2);

    add({"usd-rate", "identification rate of the two-state discriminator",
         {{"cosA", 0.8}, {"delta", 0.1}},
         [](const Params& p) { return analysis::p_usd(param(p, "cosA")); },
         [](const Params& p) -> TrialFn {
             const StatePair pair = make_state_pair(param(p, "cosA"), param(p, "delta"));
             return [pair](Rng& rng) -> TrialOutcome {
                 const int bit = rng.bit();
                 const UsdOutcome out = usd_measure(pair.state(bit), pair, rng);
                 if (out.known && out.bit != bit)
                     throw std::logic_error("usd-rate: misidentification (zero-error contract broken)");
                 return {out.known ? 1u : 0u, 1};
             };
         }});

    add({"usd-error-rate", "misidentification rate of the discriminator (must be zero)",
         {{"cosA", 0.8}, {"delta", 0.1}},
         [](const Params&) { return 0.0; },
         [](const Params& p) -> TrialFn {
             const StatePair pair = make_state_pair(param(p, "cosA"), param(p, "delta"));
             return [pair](Rng& rng) -> TrialOutcome {
                 const int bit = rng.bit();
                 const UsdOutcome out = usd_measure(pair.state(bit), pair, rng);
                 return {out.known && out.bit != bit ? 1u : 0u, 1};
             };
         }});

    add({"breidbart-rate", "per-component recovery rate of the intermediate-basis measurement",
         {},
         [kBreidbartRate](const Params&) { return kBreidbartRate; },
         [](const Params&) -> TrialFn {
             return [](Rng& rng) -> TrialOutcome {
                 const int basis = rng.bit(), bit = rng.bit();
                 PureState s = conjugate_coding_state(basis, bit);
                 return {breidbart_measure(s, rng) == bit ? 1u : 0u, 1};
             };
         }});

    add({"random-basis-rate", "per-component recovery rate of uniformly chosen coding bases",
         {},
         [](const Params&) { return 0.75; },
         [](const Params&) -> TrialFn {
             return [](Rng& rng) -> TrialOutcome {
                 const int basis = rng.bit(), bit = rng.bit();
                 PureState s = conjugate_coding_state(basis, bit);
                 return {projective_measure(s, conjugate_coding_basis(rng.bit()), rng) == bit ? 1u : 0u, 1};
             };
         }});

    const Params honest_defaults{{"n", 6}, {"m", 5}, {"n0", 4}, {"cosA", 0.8}, {"delta", 0.1}, {"b", 1}};
    add({"honest-b92", "honest two-state commitment sessions",
         honest_defaults,
         [](const Params&) { return 1.0; },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::b92bc, p, "b");
             return [ctx](Rng& rng) -> TrialOutcome {
                 auto [alice, blob] = b92_commit(ctx->b, ctx->cfg, rng);
                 const Verdict v = b92_verify(blob, b92_open(alice), ctx->cfg.f, rng);
                 return {v.accepted && v.bit == ctx->b ? 1u : 0u, 1};
             };
         }});

    add({"honest-bb84", "honest four-state commitment sessions",
         {{"n", 6}, {"m", 5}, {"n0", 4}, {"b", 1}},
         [](const Params&) { return 1.0; },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::bb84bc, p, "b");
             return [ctx](Rng& rng) -> TrialOutcome {
                 auto [alice, blob] = bb84_commit(ctx->b, ctx->cfg, rng);
                 const Verdict v = bb84_verify(blob, bb84_open(alice), ctx->cfg.f, rng);
                 return {v.accepted && v.bit == ctx->b ? 1u : 0u, 1};
             };
         }});

    add({"honest-otbc", "honest oblivious-transfer commitment sessions",
         honest_defaults,
         [](const Params&) { return 1.0; },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::otbc, p, "b");
             return [ctx](Rng& rng) -> TrialOutcome {
                 Rng bob_rng(splitmix64(rng.next()));
                 auto [alice, bob] = otbc_commit(ctx->b, ctx->cfg, rng, bob_rng);
                 const Verdict v = otbc_verify(bob, otbc_open(alice), ctx->cfg.f);
                 return {v.accepted && v.bit == ctx->b ? 1u : 0u, 1};
             };
         }});

    add({"probe-attack-b92", "one-probe-per-string steering attack on the two-state scheme",
         {{"n", 6}, {"m", 8}, {"n0", 4}, {"cosA", std::sqrt(0.75)}, {"delta", 0.25}, {"target", 1}},
         [](const Params& p) {
             const double c2 = param(p, "cosA") * param(p, "cosA");
             return std::pow(0.5 * (1.0 + c2), iparam(p, "m"));
         },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::b92bc, p, "target");
             return [ctx](Rng& rng) -> TrialOutcome {
                 return {alice_probe_attack_b92(ctx->cfg, ctx->b, rng).success ? 1u : 0u, 1};
             };
         }});

    add({"bb84-false-uniform", "complement-basis unveiling on the four-state scheme",
         {{"n", 6}, {"m", 4}, {"n0", 4}, {"target", 1}},
         [](const Params& p) { return std::pow(0.5, iparam(p, "m")); },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::bb84bc, p, "target");
             return [ctx](Rng& rng) -> TrialOutcome {
                 return {alice_false_basis_attack_bb84(ctx->cfg, ctx->b,
                                                       FalseBasisStrategy::uniform_false, rng)
                                 .success
                             ? 1u
                             : 0u,
                         1};
             };
         }});

    add({"bb84-false-probe", "probe-collapse-assisted false bases: per-string success",
         {{"n", 6}, {"m", 4}, {"n0", 4}, {"target", 1}},
         [](const Params&) { return 0.75; },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::bb84bc, p, "target");
             return [ctx](Rng& rng) -> TrialOutcome {
                 const FalseBasisOutcome out = alice_false_basis_attack_bb84(
                     ctx->cfg, ctx->b, FalseBasisStrategy::probe_collapse, rng);
                 return {static_cast<std::uint64_t>(out.per_string_successes),
                         static_cast<std::uint64_t>(out.m)};
             };
         }});

    add({"bb84-false-probe-overall", "probe-collapse-assisted false bases: whole-commitment success",
         {{"n", 6}, {"m", 4}, {"n0", 4}, {"target", 1}},
         [](const Params& p) { return std::pow(0.75, iparam(p, "m")); },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::bb84bc, p, "target");
             return [ctx](Rng& rng) -> TrialOutcome {
                 return {alice_false_basis_attack_bb84(ctx->cfg, ctx->b,
                                                       FalseBasisStrategy::probe_collapse, rng)
                                 .success
                             ? 1u
                             : 0u,
                         1};
             };
         }});

    add({"epr-open-both", "entangled-pair attack on the basis-committed encoder",
         {{"k", 4}, {"n", 5}},
         [](const Params&) { return 1.0; },
         [](const Params& p) -> TrialFn {
             const int k = iparam(p, "k"), n = iparam(p, "n");
             return [k, n](Rng& rng) -> TrialOutcome {
                 return {epr_attack_basis_committed(k, n, rng.bit(), rng) ? 1u : 0u, 1};
             };
         }});

    add({"basis-committed-reopen", "honest basis-committed blob re-opened as the other value",
         {{"k", 5}, {"n", 8}},
         [](const Params& p) { return std::pow(0.5, iparam(p, "k") * iparam(p, "n")); },
         [](const Params& p) -> TrialFn {
             const int k = iparam(p, "k"), n = iparam(p, "n");
             return [k, n](Rng& rng) -> TrialOutcome {
                 return {honest_reopen_basis_committed(k, n, rng) ? 1u : 0u, 1};
             };
         }});

    add({"breidbart-keyed", "majority recovery of the keyed encoder before bases are revealed",
         {{"n", 15}},
         [kBreidbartRate](const Params& p) {
             return analysis::majority_success(iparam(p, "n"), kBreidbartRate);
         },
         [](const Params& p) -> TrialFn {
             const int n = iparam(p, "n");
             return [n](Rng& rng) -> TrialOutcome {
                 Bits a{static_cast<std::uint8_t>(rng.bit())};
                 auto [blob, keys] = encode_keyed(a, n, rng);
                 const KeyedRecovery r = breidbart_recover_keyed(blob, a, rng);
                 return {static_cast<std::uint64_t>(r.correct_bits), 1};
             };
         }});

    const Params guess_defaults{{"n", 10}, {"m", 4}, {"n0", 8}, {"cosA", 0.8}, {"delta", 0.1}};
    add({"usd-guess", "discriminate-and-infer attack: informative correct guesses",
         guess_defaults,
         [](const Params& p) {
             return analysis::bob_cheat_prob(iparam(p, "n"), iparam(p, "n0"),
                                             analysis::p_usd(param(p, "cosA")), iparam(p, "m"));
         },
         [](const Params& p) -> TrialFn {
             SessionConfig cfg = make_session_config(Scheme::b92bc, iparam(p, "n"), iparam(p, "m"),
                                                     iparam(p, "n0"), param(p, "cosA"),
                                                     param(p, "delta"), 1);
             auto ctx = std::make_shared<const SessionConfig>(std::move(cfg));
             return [ctx](Rng& rng) -> TrialOutcome {
                 const int b = rng.bit();
                 auto [blob, key] = blob2_encode(b, ctx->f, ctx->m, ctx->pair(), rng);
                 const UsdGuessResult g = bob_usd_guess(blob, ctx->f, ctx->pair(), rng);
                 return {g.informative && g.guess == b ? 1u : 0u, 1};
             };
         }});

    add({"usd-guess-correct", "discriminate-and-infer attack: raw correct-guess rate",
         guess_defaults,
         [](const Params& p) {
             return 0.5 * (1.0 + analysis::bob_cheat_prob(iparam(p, "n"), iparam(p, "n0"),
                                                          analysis::p_usd(param(p, "cosA")),
                                                          iparam(p, "m")));
         },
         [](const Params& p) -> TrialFn {
             SessionConfig cfg = make_session_config(Scheme::b92bc, iparam(p, "n"), iparam(p, "m"),
                                                     iparam(p, "n0"), param(p, "cosA"),
                                                     param(p, "delta"), 1);
             auto ctx = std::make_shared<const SessionConfig>(std::move(cfg));
             return [ctx](Rng& rng) -> TrialOutcome {
                 const int b = rng.bit();
                 auto [blob, key] = blob2_encode(b, ctx->f, ctx->m, ctx->pair(), rng);
                 const UsdGuessResult g = bob_usd_guess(blob, ctx->f, ctx->pair(), rng);
                 return {g.guess == b ? 1u : 0u, 1};
             };
         }});

    add({"breidbart-guess", "intermediate-basis inference attack on the four-state scheme",
         {{"n", 6}, {"m", 4}, {"n0", 2}},
         [](const Params&) { return std::numeric_limits<double>::quiet_NaN(); },
         [](const Params& p) -> TrialFn {
             SessionConfig cfg = make_session_config(Scheme::bb84bc, iparam(p, "n"), iparam(p, "m"),
                                                     iparam(p, "n0"), 0.8, 0.1, 1);
             auto ctx = std::make_shared<const SessionConfig>(std::move(cfg));
             return [ctx](Rng& rng) -> TrialOutcome {
                 const int b = rng.bit();
                 auto [blob, key] = blob4_encode(b, ctx->f, ctx->m, rng);
                 const BreidbartGuessResult g = bob_breidbart_guess(blob, ctx->f, rng);
                 return {g.guess == b ? 1u : 0u, 1};
             };
         }});

    add({"ot-known-rate", "per-position identification rate of the transfer receiver",
         {{"n", 100}, {"cosA", 0.8}, {"delta", 0.1}},
         [](const Params& p) { return analysis::p_usd(param(p, "cosA")); },
         [](const Params& p) -> TrialFn {
             const StatePair pair = make_state_pair(param(p, "cosA"), param(p, "delta"));
             const int n = iparam(p, "n");
             return [pair, n](Rng& rng) -> TrialOutcome {
                 Bits a = random_bits(n, rng);
                 Blob blob = ot_send(a, pair);
                 const OtReceipt r = ot_receive(blob, pair, rng);
                 for (int j = 0; j < n; ++j)
                     if (r.bits[static_cast<std::size_t>(j)] >= 0 &&
                         r.bits[static_cast<std::size_t>(j)] != a[static_cast<std::size_t>(j)])
                         throw std::logic_error("ot-known-rate: incorrect identified bit");
                 return {static_cast<std::uint64_t>(r.known_count()), static_cast<std::uint64_t>(n)};
             };
         }});

    add({"ot-all-known", "probability the receiver identifies the whole string",
         {{"n", 20}, {"cosA", 0.8}, {"delta", 0.1}},
         [](const Params& p) {
             return std::pow(analysis::p_usd(param(p, "cosA")), iparam(p, "n"));
         },
         [](const Params& p) -> TrialFn {
             const StatePair pair = make_state_pair(param(p, "cosA"), param(p, "delta"));
             const int n = iparam(p, "n");
             return [pair, n](Rng& rng) -> TrialOutcome {
                 Bits a = random_bits(n, rng);
                 Blob blob = ot_send(a, pair);
                 const OtReceipt r = ot_receive(blob, pair, rng);
                 return {r.known_count() == n ? 1u : 0u, 1};
             };
         }});

    add({"b92-lie-one-bit", "one flipped key bit (outside the mask support) in one string",
         {{"n", 6}, {"m", 5}, {"n0", 4}, {"cosA", 0.8}, {"delta", 0.1}},
         [](const Params& p) { return 1.0 - param(p, "cosA") * param(p, "cosA"); },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::b92bc, p);
             return [ctx](Rng& rng) -> TrialOutcome {
                 const int b = rng.bit();
                 auto [alice, blob] = b92_commit(b, ctx->cfg, rng);
                 OpenMsg open = b92_open(alice);
                 open.strings[0][static_cast<std::size_t>(ctx->cfg.n - 1)] ^= 1u;  // outside linear mask
                 const Verdict v = b92_verify(blob, open, ctx->cfg.f, rng);
                 return {v.accepted ? 0u : 1u, 1};
             };
         }});

    add({"b92-lie-usd-verify", "same one-bit lie, discrimination-based verification",
         {{"n", 6}, {"m", 5}, {"n0", 4}, {"cosA", 0.8}, {"delta", 0.1}},
         [](const Params& p) { return 1.0 - param(p, "cosA"); },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::b92bc, p);
             return [ctx](Rng& rng) -> TrialOutcome {
                 const int b = rng.bit();
                 auto [alice, blob] = b92_commit(b, ctx->cfg, rng);
                 OpenMsg open = b92_open(alice);
                 open.strings[0][static_cast<std::size_t>(ctx->cfg.n - 1)] ^= 1u;
                 const Verdict v = b92_verify(blob, open, ctx->cfg.f, rng, VerifyStrategy::usd);
                 return {v.accepted ? 0u : 1u, 1};
             };
         }});

    add({"b92-false-value-open", "open the complement value with one-position lies in every string",
         {{"n", 6}, {"m", 5}, {"n0", 4}, {"cosA", 0.8}, {"delta", 0.1}},
         [](const Params& p) {
             const double c2 = param(p, "cosA") * param(p, "cosA");
             return 1.0 - std::pow(c2, iparam(p, "m"));
         },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::b92bc, p);
             return [ctx](Rng& rng) -> TrialOutcome {
                 const int b = rng.bit();
                 auto [alice, blob] = b92_commit(b, ctx->cfg, rng);
                 OpenMsg open = b92_open(alice);
                 open.claimed_bit = 1 - b;
                 for (Bits& s : open.strings) s[0] ^= 1u;  // first mask position flips F
                 const Verdict v = b92_verify(blob, open, ctx->cfg.f, rng);
                 return {v.accepted ? 0u : 1u, 1};
             };
         }});

    add({"otbc-lie-one-bit", "one flipped position (outside the mask support) in one opened string",
         {{"n", 6}, {"m", 5}, {"n0", 4}, {"cosA", 0.8}, {"delta", 0.1}},
         [](const Params& p) { return analysis::p_usd(param(p, "cosA")); },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::otbc, p);
             return [ctx](Rng& rng) -> TrialOutcome {
                 const int b = rng.bit();
                 Rng bob_rng(splitmix64(rng.next()));
                 auto [alice, bob] = otbc_commit(b, ctx->cfg, rng, bob_rng);
                 OpenMsg open = otbc_open(alice);
                 open.strings[0][static_cast<std::size_t>(ctx->cfg.n - 1)] ^= 1u;
                 const Verdict v = otbc_verify(bob, open, ctx->cfg.f);
                 return {v.accepted ? 0u : 1u, 1};
             };
         }});

    add({"coin-flip", "honest coin flips over the two-state scheme",
         {{"n", 6}, {"m", 5}, {"n0", 4}, {"cosA", 0.8}, {"delta", 0.1}},
         [](const Params&) { return 0.5; },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::b92bc, p);
             return [ctx](Rng& rng) -> TrialOutcome {
                 Rng bob_rng(splitmix64(rng.next()));
                 const CoinFlip flip = coin_flip(ctx->cfg, rng, bob_rng);
                 if (flip.aborted) throw std::logic_error("coin-flip: honest run aborted");
                 return {static_cast<std::uint64_t>(flip.result), 1};
             };
         }});

    add({"coin-flip-curious", "agreement of a curious receiver's announcement with the committed bit",
         {{"n", 6}, {"m", 5}, {"n0", 4}, {"cosA", 0.8}, {"delta", 0.1}},
         [](const Params&) { return 0.5; },
         [](const Params& p) -> TrialFn {
             auto ctx = session_ctx(Scheme::b92bc, p);
             return [ctx](Rng& rng) -> TrialOutcome {
                 Rng bob_rng(splitmix64(rng.next()));
                 const CoinFlip flip = coin_flip(ctx->cfg, rng, bob_rng, UsdCuriousBobCoin{});
                 return {flip.bob_bit == flip.alice_bit ? 1u : 0u, 1};
             };
         }});

    add({"concealing-sim", "strings whose identified-component count stays within the immunity order",
         {{"n", 40}, {"n0", 30}, {"cosA", 0.8}, {"delta", 0.1}},
         [](const Params& p) {
             return analysis::concealing_exact(iparam(p, "n"), iparam(p, "n0"),
                                               analysis::p_usd(param(p, "cosA")));
         },
         [](const Params& p) -> TrialFn {
             const StatePair pair = make_state_pair(param(p, "cosA"), param(p, "delta"));
             const int n = iparam(p, "n"), n0 = iparam(p, "n0");
             return [pair, n, n0](Rng& rng) -> TrialOutcome {
                 int known = 0;
                 for (int j = 0; j < n; ++j) {
                     const int bit = rng.bit();
                     known += usd_measure(pair.state(bit), pair, rng).known;
                 }
                 return {known <= n0 ? 1u : 0u, 1};
             };
         }});

    return reg;
}

}  // namespace detail

inline const std::map<std::string, ExperimentDef>& experiment_registry() {
    static const std::map<std::string, ExperimentDef> reg = detail::build_registry();
    return reg;
}

// ---------------------------------------------------------------------------
// Deterministic parallel runner
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string experiment;
    Params params;                 // merged over the registry defaults
    std::uint64_t trials = 100000;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
}

inline std::string params_string(const Params& p) {
    std::string out;
    for (const auto& [k, v] : p) {
        if (!out.empty()) out += ";";
        out += k + "=" + format_double(v);
    }
    return out;
}

inline const std::string kCsvHeader =
    "experiment,params,trials,units,successes,mean,stderr,predicted,z\n";

struct RunResult {
    TrialStats stats;
    std::string csv_row;  // one CSV line, no header
    nlohmann::ordered_json summary;
};

inline RunResult run_experiment(const ExperimentConfig& cfg) {
    const auto& reg = experiment_registry();
    auto it = reg.find(cfg.experiment);
    if (it == reg.end()) throw std::invalid_argument("unknown experiment: " + cfg.experiment);
    if (cfg.trials < 1) throw std::invalid_argument("run_experiment: trials >= 1 required");
    const ExperimentDef& def = it->second;

    Params params = def.defaults;
    for (const auto& [k, v] : cfg.params) params[k] = v;

    const TrialFn trial = def.make_trial(params);
    const double predicted = def.predicted(params);

    const auto start = std::chrono::steady_clock::now();
    const int workers = std::max(1, cfg.workers);
    std::vector<std::uint64_t> numer(static_cast<std::size_t>(workers), 0);
    std::vector<std::uint64_t> denom(static_cast<std::size_t>(workers), 0);
    std::vector<std::string> errors(static_cast<std::size_t>(workers));

    auto work = [&](int w) {
        const std::uint64_t lo = cfg.trials * static_cast<std::uint64_t>(w) / workers;
        const std::uint64_t hi = cfg.trials * (static_cast<std::uint64_t>(w) + 1) / workers;
        try {
            for (std::uint64_t i = lo; i < hi; ++i) {
                Rng rng(derive_seed(cfg.master_seed, i));
                const TrialOutcome out = trial(rng);
                numer[static_cast<std::size_t>(w)] += out.numer;
                denom[static_cast<std::size_t>(w)] += out.denom;
            }
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(w)] = e.what();
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const std::string& err : errors)
        if (!err.empty()) throw std::runtime_error("experiment trial failed: " + err);

    TrialStats st;
    st.trials = cfg.trials;
    for (int w = 0; w < workers; ++w) {
        st.successes += numer[static_cast<std::size_t>(w)];
        st.units += denom[static_cast<std::size_t>(w)];
    }
    st.mean = st.units ? static_cast<double>(st.successes) / static_cast<double>(st.units) : 0.0;
    st.stderr_ = st.units ? std::sqrt(std::max(0.0, st.mean * (1.0 - st.mean)) / static_cast<double>(st.units)) : 0.0;
    st.predicted = predicted;
    st.z = z_score(st.mean, predicted, st.units);
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    RunResult r;
    r.stats = st;
    r.csv_row = cfg.experiment + "," + params_string(params) + "," + std::to_string(st.trials) + "," +
                std::to_string(st.units) + "," + std::to_string(st.successes) + "," +
                format_double(st.mean) + "," + format_double(st.stderr_) + "," +
                format_double(st.predicted) + "," + format_double(st.z) + "\n";
    r.summary["experiment"] = cfg.experiment;
    nlohmann::ordered_json jp;
    for (const auto& [k, v] : params) jp[k] = v;
    r.summary["params"] = jp;
    r.summary["trials"] = st.trials;
    r.summary["units"] = st.units;
    r.summary["successes"] = st.successes;
    r.summary["mean"] = st.mean;
    r.summary["stderr"] = st.stderr_;
    r.summary["predicted"] = st.predicted;
    r.summary["z"] = st.z;
    r.summary["wall_seconds"] = st.seconds;  // timing lives only in the summary
    return r;
}

}  // namespace qbc::mc
