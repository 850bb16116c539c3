#pragma once

#include "core.hpp"

#include <Eigen/SVD>

#include <bit>
#include <utility>
#include <vector>

namespace qdeco {

// Qubit j of a register lives in bit j of the basis index.
struct SubsystemMask {
    std::uint64_t mask = 0;
    int num_qubits = 0;

    SubsystemMask() = default;
    SubsystemMask(std::uint64_t m, int L) : mask(m), num_qubits(L) {
        if (L < 0 || L > 62) throw InvalidArgument("mask: qubit count out of range");
        if (mask >> L) throw InvalidArgument("invalid mask: bits set outside [0, L)");
    }

    int kept() const { return std::popcount(mask); }
    int traced() const { return num_qubits - kept(); }
    SubsystemMask complement() const { return {((std::uint64_t{1} << num_qubits) - 1) & ~mask, num_qubits}; }
    // Kept qubits are exactly the lowest ones, so reshaping needs no index shuffling.
    bool is_low_block() const { return mask == (std::uint64_t{1} << kept()) - 1; }
};

inline SubsystemMask low_qubits(int k, int L) { return {(std::uint64_t{1} << k) - 1, L}; }

struct SplitIndex {
    std::uint64_t a;
    std::uint64_t b;
    bool operator==(const SplitIndex&) const = default;
};

inline SplitIndex split_index(std::uint64_t mu, int L, const SubsystemMask& m) {
    if (m.num_qubits != L || (m.mask >> L)) throw InvalidArgument("invalid mask: bits set outside [0, L)");
    if (L < 64 && (mu >> L)) throw InvalidArgument("split_index: index out of range");
    std::uint64_t a = 0, b = 0;
    int na = 0, nb = 0;
    for (int j = 0; j < L; ++j) {
        const std::uint64_t bit = (mu >> j) & 1u;
        if ((m.mask >> j) & 1u)
            a |= bit << na++;
        else
            b |= bit << nb++;
    }
    return {a, b};
}

inline std::uint64_t merge_index(std::uint64_t a, std::uint64_t b, const SubsystemMask& m) {
    std::uint64_t mu = 0;
    for (int j = 0; j < m.num_qubits; ++j) {
        if ((m.mask >> j) & 1u) {
            mu |= (a & 1u) << j;
            a >>= 1;
        } else {
            mu |= (b & 1u) << j;
            b >>= 1;
        }
    }
    return mu;
}

class StateVector {
public:
    StateVector() = default;
    explicit StateVector(CVec amp) : amp_(std::move(amp)) {
        const auto n = amp_.size();
        if (n < 2 || (n & (n - 1))) throw InvalidArgument("state length must be a power of two >= 2");
        L_ = std::countr_zero(static_cast<std::uint64_t>(n));
    }

    static StateVector basis(int L, std::uint64_t mu) {
        CVec v = CVec::Zero(Eigen::Index{1} << L);
        v(static_cast<Eigen::Index>(mu)) = 1.0;
        return StateVector(std::move(v));
    }

    int num_qubits() const { return L_; }
    Eigen::Index dim() const { return amp_.size(); }
    const CVec& amplitudes() const { return amp_; }
    CVec& amplitudes() { return amp_; }
    cplx operator[](Eigen::Index i) const { return amp_(i); }

    double norm() const { return amp_.norm(); }
    bool is_normalized(double tol = 1e-10) const { return std::abs(amp_.squaredNorm() - 1.0) <= tol; }
    void renormalize() { amp_ /= amp_.norm(); }

private:
    CVec amp_;
    int L_ = 0;
};

using DensityMatrix = CMat;

inline DensityMatrix projector(const StateVector& psi) { return psi.amplitudes() * psi.amplitudes().adjoint(); }

// Rows indexed by the kept sub-index, columns by the complement sub-index.
inline CMat reshape(const CVec& psi, int L, const SubsystemMask& keep) {
    if (keep.num_qubits != L) throw InvalidArgument("mask/state qubit count mismatch");
    const Eigen::Index da = Eigen::Index{1} << keep.kept();
    const Eigen::Index db = Eigen::Index{1} << keep.traced();
    if (keep.is_low_block()) return Eigen::Map<const CMat>(psi.data(), da, db);
    CMat m(da, db);
    for (Eigen::Index mu = 0; mu < psi.size(); ++mu) {
        const auto s = split_index(static_cast<std::uint64_t>(mu), L, keep);
        m(static_cast<Eigen::Index>(s.a), static_cast<Eigen::Index>(s.b)) = psi(mu);
    }
    return m;
}

inline StateVector tensor_product(const StateVector& a, const StateVector& b, const SubsystemMask& mask) {
    if (mask.kept() != a.num_qubits() || mask.traced() != b.num_qubits())
        throw InvalidArgument("tensor_product: dimension mismatch with mask");
    const int L = mask.num_qubits;
    CVec out(Eigen::Index{1} << L);
    for (Eigen::Index mu = 0; mu < out.size(); ++mu) {
        const auto s = split_index(static_cast<std::uint64_t>(mu), L, mask);
        out(mu) = a[static_cast<Eigen::Index>(s.a)] * b[static_cast<Eigen::Index>(s.b)];
    }
    return StateVector(std::move(out));
}

// Kron with `a` on the low qubits: index = i_a + dim(a) * i_b.
inline CVec kron_low(const CVec& a, const CVec& b) {
    CVec out(a.size() * b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) out.segment(j * a.size(), a.size()) = a * b(j);
    return out;
}

inline DensityMatrix partial_trace(const CVec& psi, int L, const SubsystemMask& keep) {
    if (keep.is_low_block()) {
        const Eigen::Index da = Eigen::Index{1} << keep.kept();
        Eigen::Map<const CMat> m(psi.data(), da, psi.size() / da);
        return m * m.adjoint();
    }
    const CMat m = reshape(psi, L, keep);
    return m * m.adjoint();
}

inline DensityMatrix partial_trace(const StateVector& psi, const SubsystemMask& keep) {
    return partial_trace(psi.amplitudes(), psi.num_qubits(), keep);
}

struct Schmidt {
    RVec coefficients;  // descending, nonnegative
    CMat basis_a;       // columns: Schmidt vectors of the kept subsystem
    CMat basis_b;       // columns: Schmidt vectors of the complement
};

inline Schmidt schmidt_decompose(const StateVector& psi, const SubsystemMask& mask) {
    const CMat m = reshape(psi.amplitudes(), psi.num_qubits(), mask);
    Eigen::BDCSVD<CMat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // Amplitude matrix is U S V^H, so the complement vectors are conj(V) columns.
    return {svd.singularValues(), svd.matrixU(), svd.matrixV().conjugate()};
}

inline StateVector random_state(Eigen::Index dim, Rng& rng) {
    if (dim < 1) throw InvalidArgument("random_state: dim must be >= 1");
    if (dim & (dim - 1)) throw InvalidArgument("random_state: dim must be a power of two for a qubit register");
    CVec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = complex_gaussian(rng);
    v /= v.norm();
    return StateVector(std::move(v));
}

// Same distribution, any length (environment spaces need not be qubit registers).
inline CVec random_vector(Eigen::Index dim, Rng& rng) {
    if (dim < 1) throw InvalidArgument("random_vector: dim must be >= 1");
    CVec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = complex_gaussian(rng);
    return v / v.norm();
}

enum class StateKind { OneQubitGUE, OneQubitGOE, TwoQubitGUE, TwoQubitGOE, GHZ, W };

struct StateParams {
    double theta = 0.0;
    double phi = 0.0;
    double gamma = 0.0;
    int n = 2;
};

namespace detail {
inline void check_range(double x, double lo, double hi, const char* name) {
    constexpr double slack = 1e-12;
    if (!(x >= lo - slack && x <= hi + slack))
        throw InvalidArgument(std::string("parameter out of range: ") + name);
}
}  // namespace detail

// Qubit 1 is bit 0, qubit 2 is bit 1.
inline StateVector canonical_state(StateKind kind, const StateParams& p) {
    using detail::check_range;
    const double s2 = 1.0 / std::sqrt(2.0);
    switch (kind) {
        case StateKind::OneQubitGUE: {
            check_range(p.phi, 0.0, pi / 2, "phi");
            CVec v(2);
            v << std::cos(p.phi), std::sin(p.phi);
            return StateVector(v);
        }
        case StateKind::OneQubitGOE: {
            check_range(p.gamma, -pi / 2, pi / 2, "gamma");
            CVec v(2);
            v << s2, s2 * std::polar(1.0, p.gamma);
            return StateVector(v);
        }
        case StateKind::TwoQubitGUE: {
            check_range(p.theta, 0.0, pi / 4, "theta");
            check_range(p.phi, 0.0, pi / 2, "phi");
            const double ct = std::cos(p.theta), st = std::sin(p.theta);
            const double cp = std::cos(p.phi), sp = std::sin(p.phi);
            CVec v(4);
            v << ct * cp, ct * sp, st * sp, -st * cp;
            return StateVector(v);
        }
        case StateKind::TwoQubitGOE: {
            check_range(p.theta, 0.0, pi / 4, "theta");
            check_range(p.gamma, -pi / 2, pi / 2, "gamma");
            const double ct = std::cos(p.theta), st = std::sin(p.theta);
            const cplx e = std::polar(1.0, p.gamma);
            CVec v(4);
            v << s2 * ct, s2 * ct * e, s2 * st, -s2 * st * e;
            return StateVector(v);
        }
        case StateKind::GHZ: {
            if (p.n < 2 || p.n > 30) throw InvalidArgument("GHZ: n out of range");
            CVec v = CVec::Zero(Eigen::Index{1} << p.n);
            v(0) = s2;
            v(v.size() - 1) = s2;
            return StateVector(v);
        }
        case StateKind::W: {
            if (p.n < 2 || p.n > 30) throw InvalidArgument("W: n out of range");
            CVec v = CVec::Zero(Eigen::Index{1} << p.n);
            for (int j = 0; j < p.n; ++j) v(Eigen::Index{1} << j) = 1.0 / std::sqrt(double(p.n));
            return StateVector(v);
        }
    }
    throw InvalidArgument("unknown state kind");
}

inline StateVector bell_state() {
    CVec v = CVec::Zero(4);
    v(0) = v(3) = 1.0 / std::sqrt(2.0);
    return StateVector(v);
}

}  // namespace qdeco
