#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qbc/rng.hpp"

namespace qbc {

using cplx = std::complex<double>;

inline constexpr double kNormTol = 1e-12;   // state normalization tolerance
inline constexpr double kPsdTol  = 1e-10;   // eigenvalue floor for PSD checks
inline constexpr double kProbSnap = 1e-12;  // probabilities this close to {0,1} are snapped

// ---------------------------------------------------------------------------
// Single-qubit pure states
// ---------------------------------------------------------------------------

struct PureState {
    std::array<cplx, 2> a{cplx(1.0, 0.0), cplx(0.0, 0.0)};

    double norm_sq() const { return std::norm(a[0]) + std::norm(a[1]); }

    void renormalize() {
        double n = std::sqrt(norm_sq());
        if (n <= 0.0) throw std::domain_error("PureState: cannot renormalize zero vector");
        a[0] /= n;
        a[1] /= n;
    }

    void require_normalized() const {
        if (std::abs(norm_sq() - 1.0) > kNormTol)
            throw std::invalid_argument("PureState: squared norm differs from 1 beyond 1e-12");
    }
};

inline cplx inner(const PureState& x, const PureState& y) {
    return std::conj(x.a[0]) * y.a[0] + std::conj(x.a[1]) * y.a[1];
}

// State orthogonal to s (unique up to phase).
inline PureState orthogonal(const PureState& s) {
    return PureState{{-std::conj(s.a[1]), std::conj(s.a[0])}};
}

inline PureState ket0() { return PureState{{cplx(1.0), cplx(0.0)}}; }
inline PureState ket1() { return PureState{{cplx(0.0), cplx(1.0)}}; }
inline PureState ket_plus() { return PureState{{cplx(1.0 / std::sqrt(2.0)), cplx(1.0 / std::sqrt(2.0))}}; }
inline PureState ket_minus() { return PureState{{cplx(1.0 / std::sqrt(2.0)), cplx(-1.0 / std::sqrt(2.0))}}; }

// The four-state alphabet: basis 0 -> {|0>,|1>}, basis 1 -> {|+>,|->}.
inline PureState conjugate_coding_state(int basis, int bit) {
    if (basis == 0) return bit == 0 ? ket0() : ket1();
    return bit == 0 ? ket_plus() : ket_minus();
}

// Intermediate (pi/8) basis states.
inline PureState breidbart_state(int bit) {
    const double c = std::cos(M_PI / 8.0), s = std::sin(M_PI / 8.0);
    return bit == 0 ? PureState{{cplx(c), cplx(s)}} : PureState{{cplx(-s), cplx(c)}};
}

// ---------------------------------------------------------------------------
// Orthonormal measurement bases
// ---------------------------------------------------------------------------

struct Basis {
    PureState b0, b1;

    void require_orthonormal() const {
        b0.require_normalized();
        b1.require_normalized();
        if (std::abs(inner(b0, b1)) > kNormTol)
            throw std::invalid_argument("Basis: vectors not orthogonal within 1e-12");
    }

    static Basis of(const PureState& s) { return Basis{s, orthogonal(s)}; }
};

inline Basis computational_basis() { return Basis{ket0(), ket1()}; }
inline Basis hadamard_basis() { return Basis{ket_plus(), ket_minus()}; }
inline Basis conjugate_coding_basis(int basis) { return basis == 0 ? computational_basis() : hadamard_basis(); }
inline Basis breidbart_basis() { return Basis{breidbart_state(0), breidbart_state(1)}; }

// Snap near-degenerate probabilities so eigenstate measurements are exact.
inline double snap_probability(double p) {
    if (p < kProbSnap) return 0.0;
    if (p > 1.0 - kProbSnap) return 1.0;
    return p;
}

// ---------------------------------------------------------------------------
// Nonorthogonal signal pair  |psi_b> = cos(A/2)|0> +/- sin(A/2)|1>
// ---------------------------------------------------------------------------

struct StatePair {
    PureState psi0, psi1;
    double cos_a = 0.0;  // <psi0|psi1>
    double delta = 0.0;

    const PureState& state(int bit) const { return bit == 0 ? psi0 : psi1; }
    double sin_a() const { return std::sqrt(1.0 - cos_a * cos_a); }
    double angle() const { return std::acos(cos_a); }
};

// Canonical gauge for a given overlap, no window check. Verifiers use
// this to rebuild the agreed pair from blob metadata.
inline StatePair pair_from_overlap(double cos_a) {
    if (!(cos_a > 0.0 && cos_a < 1.0))
        throw std::invalid_argument("pair_from_overlap: need 0 < cosA < 1");
    const double half = 0.5 * std::acos(cos_a);
    const double c = std::cos(half), s = std::sin(half);
    StatePair p;
    p.psi0 = PureState{{cplx(c), cplx(s)}};
    p.psi1 = PureState{{cplx(c), cplx(-s)}};
    p.cos_a = cos_a;
    p.delta = 0.0;
    return p;
}

// Constraint: cosA in (0,1), delta in (0, 1/4], 1/2 + delta <= cosA^2 <= 1 - delta.
inline StatePair make_state_pair(double cos_a, double delta) {
    if (!(cos_a > 0.0 && cos_a < 1.0))
        throw std::invalid_argument("make_state_pair: need 0 < cosA < 1");
    if (!(delta > 0.0 && delta <= 0.25))
        throw std::invalid_argument("make_state_pair: need 0 < delta <= 1/4");
    const double c2 = cos_a * cos_a;
    if (c2 < 0.5 + delta - 1e-15)
        throw std::invalid_argument("make_state_pair: violates 1/2 + delta <= cosA^2");
    if (c2 > 1.0 - delta + 1e-15)
        throw std::invalid_argument("make_state_pair: violates cosA^2 <= 1 - delta");
    StatePair p = pair_from_overlap(cos_a);
    p.delta = delta;
    return p;
}

// ---------------------------------------------------------------------------
// Measurements on owned single-qubit registers
// ---------------------------------------------------------------------------

// Projective measurement; collapses the register and renormalizes.
inline int projective_measure(PureState& state, const Basis& basis, Rng& rng) {
    basis.require_orthonormal();
    const double p0 = snap_probability(std::norm(inner(basis.b0, state)));
    int outcome;
    if (p0 >= 1.0) outcome = 0;
    else if (p0 <= 0.0) outcome = 1;
    else outcome = rng.uniform01() < p0 ? 0 : 1;
    state = outcome == 0 ? basis.b0 : basis.b1;
    return outcome;
}

inline int breidbart_measure(PureState& state, Rng& rng) {
    return projective_measure(state, breidbart_basis(), rng);
}

// ---------------------------------------------------------------------------
// Unambiguous state discrimination (symmetric IDP construction)
// ---------------------------------------------------------------------------

struct UsdOutcome {
    bool known = false;  // identified?
    int bit = 0;         // valid only when known
};

// Three POVM elements E0, E1, E? as 2x2 row-major matrices.
// E_b = |psi_{1-b}^perp><psi_{1-b}^perp| / (1 + cosA); E? completes to I.
// With equal priors the identification rate per signal state is 1 - cosA.
struct UsdPovm {
    std::array<std::array<cplx, 4>, 3> elem{};
};

inline UsdPovm usd_povm(const StatePair& pair) {
    const double scale = 1.0 / (1.0 + pair.cos_a);
    UsdPovm povm;
    for (int b = 0; b < 2; ++b) {
        PureState v = orthogonal(pair.state(1 - b));
        auto& e = povm.elem[static_cast<std::size_t>(b)];
        e[0] = scale * v.a[0] * std::conj(v.a[0]);
        e[1] = scale * v.a[0] * std::conj(v.a[1]);
        e[2] = scale * v.a[1] * std::conj(v.a[0]);
        e[3] = scale * v.a[1] * std::conj(v.a[1]);
    }
    auto& q = povm.elem[2];
    q[0] = cplx(1.0) - povm.elem[0][0] - povm.elem[1][0];
    q[1] = -povm.elem[0][1] - povm.elem[1][1];
    q[2] = -povm.elem[0][2] - povm.elem[1][2];
    q[3] = cplx(1.0) - povm.elem[0][3] - povm.elem[1][3];
    return povm;
}

inline UsdOutcome usd_measure(const PureState& state, const StatePair& pair, Rng& rng) {
    const double scale = 1.0 / (1.0 + pair.cos_a);
    double p[2];
    for (int b = 0; b < 2; ++b) {
        const PureState v = orthogonal(pair.state(1 - b));
        p[b] = snap_probability(scale * std::norm(inner(v, state)));
    }
    const double u = rng.uniform01();
    if (u < p[0]) return UsdOutcome{true, 0};
    if (u < p[0] + p[1]) return UsdOutcome{true, 1};
    return UsdOutcome{false, 0};
}

// ---------------------------------------------------------------------------
// Generic single-qubit POVMs (collapse via M_k = sqrt(E_k))
// ---------------------------------------------------------------------------

using Mat2 = std::array<cplx, 4>;  // row-major 2x2

inline PureState apply_mat2(const Mat2& m, const PureState& s) {
    return PureState{{m[0] * s.a[0] + m[1] * s.a[1], m[2] * s.a[0] + m[3] * s.a[1]}};
}

Mat2 mat2_sqrt_psd(const Mat2& e);  // defined after the Eigen helpers below

struct Povm2 {
    std::vector<Mat2> elems;
};

inline Povm2 usd_povm_elems(const UsdPovm& p) {
    return Povm2{{p.elem[0], p.elem[1], p.elem[2]}};
}

// ---------------------------------------------------------------------------
// Density operators (dim 2 or 4)
// ---------------------------------------------------------------------------

struct DensityOp {
    int dim = 2;
    std::vector<cplx> m;  // row-major dim x dim

    DensityOp() : m(4, cplx(0.0)) {}
    explicit DensityOp(int d) : dim(d), m(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), cplx(0.0)) {
        if (d != 2 && d != 4) throw std::invalid_argument("DensityOp: dim must be 2 or 4");
    }

    cplx& at(int i, int j) { return m[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)]; }
    const cplx& at(int i, int j) const { return m[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)]; }

    double trace_real() const {
        double t = 0.0;
        for (int i = 0; i < dim; ++i) t += at(i, i).real();
        return t;
    }

    static DensityOp pure(const PureState& s) {
        DensityOp r(2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                r.at(i, j) = s.a[static_cast<std::size_t>(i)] * std::conj(s.a[static_cast<std::size_t>(j)]);
        return r;
    }
};

inline std::vector<double> hermitian_eigenvalues(int dim, const cplx* rowmajor) {
    Eigen::MatrixXcd h(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) h(i, j) = rowmajor[i * dim + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigenvalues: eigensolver failed");
    std::vector<double> out(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    return out;
}

inline std::vector<double> hermitian_eigenvalues(const DensityOp& rho) {
    return hermitian_eigenvalues(rho.dim, rho.m.data());
}

inline void require_valid_density(const DensityOp& rho) {
    for (int i = 0; i < rho.dim; ++i)
        for (int j = 0; j < rho.dim; ++j)
            if (std::abs(rho.at(i, j) - std::conj(rho.at(j, i))) > kNormTol)
                throw std::invalid_argument("DensityOp: not Hermitian within 1e-12");
    if (std::abs(rho.trace_real() - 1.0) > kNormTol)
        throw std::invalid_argument("DensityOp: trace differs from 1 beyond 1e-12");
    for (double ev : hermitian_eigenvalues(rho))
        if (ev < -kPsdTol) throw std::invalid_argument("DensityOp: negative eigenvalue below -1e-10");
}

// (1/2) tr |rho - sigma| by eigenvalue decomposition of the difference.
inline double trace_distance(const DensityOp& rho, const DensityOp& sigma) {
    if (rho.dim != sigma.dim) throw std::invalid_argument("trace_distance: dimension mismatch");
    DensityOp diff(rho.dim);
    for (std::size_t k = 0; k < rho.m.size(); ++k) diff.m[k] = rho.m[k] - sigma.m[k];
    double sum = 0.0;
    for (double ev : hermitian_eigenvalues(diff)) sum += std::abs(ev);
    return 0.5 * sum;
}

inline double max_abs_diff(const DensityOp& rho, const DensityOp& sigma) {
    if (rho.dim != sigma.dim) throw std::invalid_argument("max_abs_diff: dimension mismatch");
    double d = 0.0;
    for (std::size_t k = 0; k < rho.m.size(); ++k) d = std::max(d, std::abs(rho.m[k] - sigma.m[k]));
    return d;
}

// ---------------------------------------------------------------------------
// Small joint registers (probe (x) signal), up to 4 qubits
// ---------------------------------------------------------------------------

enum class FactorRole : std::uint8_t { probe, signal };

// Factor 0 is the most significant bit of the amplitude index.
struct JointState {
    int num_qubits = 1;
    std::vector<cplx> amp;
    std::vector<FactorRole> roles;

    static constexpr int kMaxQubits = 4;

    JointState(int nq, std::vector<cplx> amplitudes, std::vector<FactorRole> factor_roles)
        : num_qubits(nq), amp(std::move(amplitudes)), roles(std::move(factor_roles)) {
        if (nq < 1 || nq > kMaxQubits) throw std::invalid_argument("JointState: 1..4 qubits");
        if (amp.size() != (1u << nq)) throw std::invalid_argument("JointState: amplitude count != 2^n");
        if (roles.size() != static_cast<std::size_t>(nq)) throw std::invalid_argument("JointState: role per factor required");
        require_normalized();
    }

    double norm_sq() const {
        double n = 0.0;
        for (const cplx& c : amp) n += std::norm(c);
        return n;
    }

    void require_normalized() const {
        if (std::abs(norm_sq() - 1.0) > kNormTol)
            throw std::invalid_argument("JointState: squared norm differs from 1 beyond 1e-12");
    }

    int bitpos(int factor) const { return num_qubits - 1 - factor; }

    static std::uint32_t insert_bit(std::uint32_t rest, int pos, int bitv) {
        const std::uint32_t low = rest & ((1u << pos) - 1u);
        const std::uint32_t high = rest >> pos;
        return (high << (pos + 1)) | (static_cast<std::uint32_t>(bitv) << pos) | low;
    }

    // Projective measurement of one factor in an arbitrary orthonormal
    // basis; collapses the whole register and renormalizes.
    int measure_factor(int factor, const Basis& basis, Rng& rng) {
        basis.require_orthonormal();
        check_factor(factor);
        const int pos = bitpos(factor);
        const std::uint32_t half = static_cast<std::uint32_t>(amp.size() >> 1);
        std::vector<cplx> proj0(half), proj1(half);
        double p0 = 0.0;
        for (std::uint32_t r = 0; r < half; ++r) {
            const cplx a0 = amp[insert_bit(r, pos, 0)];
            const cplx a1 = amp[insert_bit(r, pos, 1)];
            proj0[r] = std::conj(basis.b0.a[0]) * a0 + std::conj(basis.b0.a[1]) * a1;
            proj1[r] = std::conj(basis.b1.a[0]) * a0 + std::conj(basis.b1.a[1]) * a1;
            p0 += std::norm(proj0[r]);
        }
        p0 = snap_probability(p0);
        int outcome;
        if (p0 >= 1.0) outcome = 0;
        else if (p0 <= 0.0) outcome = 1;
        else outcome = rng.uniform01() < p0 ? 0 : 1;

        const std::vector<cplx>& proj = outcome == 0 ? proj0 : proj1;
        const PureState& u = outcome == 0 ? basis.b0 : basis.b1;
        double pnorm = 0.0;
        for (std::uint32_t r = 0; r < half; ++r) pnorm += std::norm(proj[r]);
        const double inv = 1.0 / std::sqrt(pnorm);
        for (std::uint32_t r = 0; r < half; ++r)
            for (int b = 0; b < 2; ++b)
                amp[insert_bit(r, pos, b)] = u.a[static_cast<std::size_t>(b)] * proj[r] * inv;
        return outcome;
    }

    void check_factor(int factor) const {
        if (factor < 0 || factor >= num_qubits)
            throw std::invalid_argument("JointState: bad factor id");
    }
};

// Reduced density operator of one kept factor.
inline DensityOp partial_trace_keep(const JointState& joint, int keep) {
    joint.check_factor(keep);
    const int pos = joint.bitpos(keep);
    const std::uint32_t half = static_cast<std::uint32_t>(joint.amp.size() >> 1);
    DensityOp rho(2);
    for (int b = 0; b < 2; ++b)
        for (int bp = 0; bp < 2; ++bp) {
            cplx acc(0.0);
            for (std::uint32_t r = 0; r < half; ++r)
                acc += joint.amp[JointState::insert_bit(r, pos, b)] *
                       std::conj(joint.amp[JointState::insert_bit(r, pos, bp)]);
            rho.at(b, bp) = acc;
        }
    return rho;
}

// Outcome-averaged reduced state of `keep` after measuring `measured` in
// `basis`: sum_o p_o rho_keep|o. No sampling; exact. Equals the
// pre-measurement reduced state by no-signaling.
inline DensityOp averaged_reduced_after_measurement(const JointState& joint, int measured,
                                                    const Basis& basis, int keep) {
    joint.check_factor(measured);
    joint.check_factor(keep);
    if (measured == keep) throw std::invalid_argument("averaged_reduced_after_measurement: factors must differ");
    basis.require_orthonormal();
    const int pos = joint.bitpos(measured);
    const std::uint32_t half = static_cast<std::uint32_t>(joint.amp.size() >> 1);
    DensityOp total(2);
    for (int o = 0; o < 2; ++o) {
        const PureState& u = o == 0 ? basis.b0 : basis.b1;
        // unnormalized projected register; its reduced op carries weight p_o
        std::vector<cplx> proj(joint.amp.size(), cplx(0.0));
        for (std::uint32_t r = 0; r < half; ++r) {
            const cplx c = std::conj(u.a[0]) * joint.amp[JointState::insert_bit(r, pos, 0)] +
                           std::conj(u.a[1]) * joint.amp[JointState::insert_bit(r, pos, 1)];
            for (int b = 0; b < 2; ++b)
                proj[JointState::insert_bit(r, pos, b)] = u.a[static_cast<std::size_t>(b)] * c;
        }
        const int kpos = joint.bitpos(keep);
        const std::uint32_t khalf = static_cast<std::uint32_t>(joint.amp.size() >> 1);
        for (int b = 0; b < 2; ++b)
            for (int bp = 0; bp < 2; ++bp) {
                cplx acc(0.0);
                for (std::uint32_t r = 0; r < khalf; ++r)
                    acc += proj[JointState::insert_bit(r, kpos, b)] *
                           std::conj(proj[JointState::insert_bit(r, kpos, bp)]);
                total.at(b, bp) += acc;
            }
    }
    return total;
}

// Draw an index with weights p summing to `total`; the fallback for edge
// rounding is the heaviest element, never a zero-weight one.
inline std::size_t sample_index(const std::vector<double>& p, double total, Rng& rng) {
    double u = rng.uniform01() * total;
    std::size_t heaviest = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (u < p[k]) return k;
        u -= p[k];
        if (p[k] > p[heaviest]) heaviest = k;
    }
    return heaviest;
}

inline Mat2 mat2_sqrt_psd(const Mat2& e) {
    Eigen::Matrix2cd h;
    h << e[0], e[1], e[2], e[3];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> solver(h);
    Eigen::Vector2d ev = solver.eigenvalues().cwiseMax(0.0);
    Eigen::Matrix2cd r = solver.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                         solver.eigenvectors().adjoint();
    return Mat2{r(0, 0), r(0, 1), r(1, 0), r(1, 1)};
}

inline int povm_measure(PureState& state, const Povm2& povm, Rng& rng) {
    std::vector<double> p(povm.elems.size());
    double total = 0.0;
    for (std::size_t k = 0; k < povm.elems.size(); ++k) {
        const Mat2& e = povm.elems[k];
        const cplx v = std::conj(state.a[0]) * (e[0] * state.a[0] + e[1] * state.a[1]) +
                       std::conj(state.a[1]) * (e[2] * state.a[0] + e[3] * state.a[1]);
        p[k] = snap_probability(std::max(0.0, v.real()));
        total += p[k];
    }
    const std::size_t outcome = sample_index(p, total, rng);
    state = apply_mat2(mat2_sqrt_psd(povm.elems[outcome]), state);
    state.renormalize();
    return static_cast<int>(outcome);
}

// Apply a 2x2 operator to one factor of a joint register (no renormalization).
inline void apply_mat2_to_factor(JointState& joint, int factor, const Mat2& m) {
    joint.check_factor(factor);
    const int pos = joint.bitpos(factor);
    const std::uint32_t half = static_cast<std::uint32_t>(joint.amp.size() >> 1);
    for (std::uint32_t r = 0; r < half; ++r) {
        const cplx a0 = joint.amp[JointState::insert_bit(r, pos, 0)];
        const cplx a1 = joint.amp[JointState::insert_bit(r, pos, 1)];
        joint.amp[JointState::insert_bit(r, pos, 0)] = m[0] * a0 + m[1] * a1;
        joint.amp[JointState::insert_bit(r, pos, 1)] = m[2] * a0 + m[3] * a1;
    }
}

inline int povm_measure_factor(JointState& joint, int factor, const Povm2& povm, Rng& rng) {
    std::vector<double> p(povm.elems.size());
    std::vector<std::vector<cplx>> collapsed(povm.elems.size());
    double total = 0.0;
    for (std::size_t k = 0; k < povm.elems.size(); ++k) {
        JointState tmp = joint;
        apply_mat2_to_factor(tmp, factor, mat2_sqrt_psd(povm.elems[k]));
        p[k] = snap_probability(tmp.norm_sq());
        collapsed[k] = std::move(tmp.amp);
        total += p[k];
    }
    const std::size_t outcome = sample_index(p, total, rng);
    joint.amp = std::move(collapsed[outcome]);
    const double inv = 1.0 / std::sqrt(joint.norm_sq());
    for (cplx& c : joint.amp) c *= inv;
    return static_cast<int>(outcome);
}

// (|p0>|s0> + |p1>|s1>) / sqrt(2 + 2 Re<p0|p1><s0|s1>), probes |0>,|1>.
// Factor 0 is the probe, factor 1 the signal.
inline JointState probe_pair_state(const PureState& s0, const PureState& s1) {
    const double norm = std::sqrt(2.0);  // orthogonal probes
    std::vector<cplx> amp(4);
    amp[0] = s0.a[0] / norm;  // |0>|0>
    amp[1] = s0.a[1] / norm;  // |0>|1>
    amp[2] = s1.a[0] / norm;  // |1>|0>
    amp[3] = s1.a[1] / norm;  // |1>|1>
    return JointState(2, std::move(amp), {FactorRole::probe, FactorRole::signal});
}

inline JointState probe_entangle(const StatePair& pair) {
    return probe_pair_state(pair.psi0, pair.psi1);
}

// (|00> + |11>)/sqrt(2); factor 0 stays with the committer.
inline JointState epr_pair() {
    const double inv = 1.0 / std::sqrt(2.0);
    std::vector<cplx> amp{cplx(inv), cplx(0.0), cplx(0.0), cplx(inv)};
    return JointState(2, std::move(amp), {FactorRole::probe, FactorRole::signal});
}

}  // namespace qbc
