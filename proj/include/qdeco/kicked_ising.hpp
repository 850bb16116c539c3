#pragma once

#include "core.hpp"
#include "linalg.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "qstate.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <vector>

namespace qdeco {

using Field = std::array<double, 3>;  // (b_x, b_y, b_z)

enum class Axis { Z, X };

struct Bond {
    int j = 0, k = 1;
    double J = 0.0;
    Axis axis = Axis::Z;
    bool coupling = false;  // central/memory-to-environment link
};

struct KIModel {
    int L = 0;
    std::vector<Bond> bonds;
    std::vector<Field> kicks;  // per site
    std::string tag;

    // Symmetric coupling matrix for one axis, zero diagonal.
    RMat coupling_matrix(Axis a) const {
        RMat m = RMat::Zero(L, L);
        for (const auto& b : bonds)
            if (b.axis == a) m(b.j, b.k) += b.J, m(b.k, b.j) += b.J;
        return m;
    }

    KIModel uncoupled() const {
        KIModel m = *this;
        std::erase_if(m.bonds, [](const Bond& b) { return b.coupling; });
        return m;
    }

    std::vector<Bond> couplings() const {
        std::vector<Bond> out;
        for (const auto& b : bonds)
            if (b.coupling) out.push_back(b);
        return out;
    }

    Eigen::Index dim() const { return Eigen::Index{1} << L; }
};

namespace detail {
inline void check_site(int j, int L) {
    if (j < 0 || j >= L) throw InvalidArgument("site index out of range");
}
inline void check_state(const CVec& psi, int L) {
    if (psi.size() != (Eigen::Index{1} << L)) throw InvalidArgument("state length does not match 2^L");
}
}  // namespace detail

// exp(-i J sz_j sz_k): e^{-iJ} where bits j and k agree, e^{+iJ} otherwise.
inline void apply_ising_phase(CVec& psi, int j, int k, double J) {
    if (j == k) throw InvalidArgument("apply_ising_phase: j and k must differ");
    const auto n = psi.size();
    const cplx same = std::polar(1.0, -J), diff = std::polar(1.0, J);
    for (Eigen::Index mu = 0; mu < n; ++mu) psi(mu) *= (((mu >> j) ^ (mu >> k)) & 1) ? diff : same;
}

// exp(-i J sx_j sx_k) = cos J - i sin J sx_j sx_k.
inline void apply_xx(CVec& psi, int j, int k, double J) {
    if (j == k) throw InvalidArgument("apply_xx: j and k must differ");
    const Eigen::Index flip = (Eigen::Index{1} << j) | (Eigen::Index{1} << k);
    const double c = std::cos(J);
    const cplx s = -I * std::sin(J);
    for (Eigen::Index mu = 0; mu < psi.size(); ++mu) {
        const Eigen::Index nu = mu ^ flip;
        if (nu < mu) continue;
        const cplx a = psi(mu), b = psi(nu);
        psi(mu) = c * a + s * b;
        psi(nu) = c * b + s * a;
    }
}

using Mat2 = Eigen::Matrix2cd;

// exp(-i b.sigma) = cos|b| - i sin|b| (b/|b|).sigma
inline Mat2 kick_matrix(const Field& b) {
    const double n = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    if (n == 0.0) return Mat2::Identity();
    const double c = std::cos(n), s = std::sin(n) / n;
    // SU(2) form [[a, -b*], [b, a*]]. The same matrix is applied every period, so a singular value
    // off by one ulp drifts the norm linearly; the entries are nudged by a few ulps to make
    // |a|^2 + |b|^2 = 1 as exact as long double can tell.
    const std::array<double, 4> x0{c, -s * b[2], s * b[1], -s * b[0]};  // Re a, Im a, Re b, Im b
    std::array<double, 4> x = x0, y{};
    long double best = 1.0L;
    for (int code = 0; code < 625; ++code) {
        long double t = -1.0L;
        for (int k = 0, r = code; k < 4; ++k, r /= 5) {
            double v = x0[std::size_t(k)];
            for (int step = r % 5 - 2; step != 0; step += step > 0 ? -1 : 1)
                v = std::nextafter(v, step > 0 ? 2.0 : -2.0);
            y[std::size_t(k)] = v;
            t += static_cast<long double>(v) * v;
        }
        if (std::abs(t) < best) best = std::abs(t), x = y;
    }
    const cplx a(x[0], x[1]), lo(x[2], x[3]);
    Mat2 m;
    m << a, -std::conj(lo), lo, std::conj(a);
    return m;
}

inline void apply_single(CVec& psi, int j, const Mat2& u) {
    const Eigen::Index bit = Eigen::Index{1} << j;
    for (Eigen::Index mu = 0; mu < psi.size(); ++mu) {
        if (mu & bit) continue;
        const cplx a = psi(mu), b = psi(mu | bit);
        psi(mu) = u(0, 0) * a + u(0, 1) * b;
        psi(mu | bit) = u(1, 0) * a + u(1, 1) * b;
    }
}

inline void apply_kick(CVec& psi, int j, const Field& b) {
    if (j < 0 || (Eigen::Index{1} << j) >= psi.size()) throw InvalidArgument("apply_kick: site out of range");
    if (b[0] == 0.0 && b[1] == 0.0 && b[2] == 0.0) return;
    apply_single(psi, j, kick_matrix(b));
}

// One period: all Ising phases, then all site kicks.
// The zz part is folded into one precomputed diagonal.
class Floquet {
public:
    explicit Floquet(KIModel m) : model_(std::move(m)) {
        if (model_.L < 1 || model_.L > 26) throw InvalidArgument("Floquet: L out of range");
        if (static_cast<int>(model_.kicks.size()) != model_.L) throw InvalidArgument("Floquet: one kick per site");
        // angles are summed first; one polar per entry keeps |phase| = 1 to rounding
        RVec angle = RVec::Zero(model_.dim());
        for (const auto& b : model_.bonds) {
            detail::check_site(b.j, model_.L);
            detail::check_site(b.k, model_.L);
            if (b.j == b.k) throw InvalidArgument("Floquet: bond endpoints must differ");
            if (b.axis != Axis::Z) continue;
            for (Eigen::Index mu = 0; mu < angle.size(); ++mu) angle(mu) += (((mu >> b.j) ^ (mu >> b.k)) & 1) ? b.J : -b.J;
        }
        zphase_.resize(model_.dim());
        for (Eigen::Index mu = 0; mu < angle.size(); ++mu) zphase_(mu) = std::polar(1.0, angle(mu));
        for (const auto& f : model_.kicks) {
            kick_.push_back(kick_matrix(f));
            kick_inv_.push_back(kick_.back().adjoint());
        }
    }

    void step(CVec& psi) const {
        detail::check_state(psi, model_.L);
        psi.array() *= zphase_.array();
        for (const auto& b : model_.bonds)
            if (b.axis == Axis::X) apply_xx(psi, b.j, b.k, b.J);
        for (int j = 0; j < model_.L; ++j)
            if (!is_identity(j)) apply_single(psi, j, kick_[static_cast<std::size_t>(j)]);
    }

    void step_inverse(CVec& psi) const {
        detail::check_state(psi, model_.L);
        for (int j = 0; j < model_.L; ++j)
            if (!is_identity(j)) apply_single(psi, j, kick_inv_[static_cast<std::size_t>(j)]);
        for (const auto& b : model_.bonds)
            if (b.axis == Axis::X) apply_xx(psi, b.j, b.k, -b.J);
        psi.array() *= zphase_.array().conjugate();
    }

    const KIModel& model() const { return model_; }

private:
    bool is_identity(int j) const {
        const auto& f = model_.kicks[static_cast<std::size_t>(j)];
        return f[0] == 0.0 && f[1] == 0.0 && f[2] == 0.0;
    }

    KIModel model_;
    CVec zphase_;
    std::vector<Mat2> kick_, kick_inv_;
};

inline void floquet_step(CVec& psi, const KIModel& model) { Floquet(model).step(psi); }

inline CMat floquet_matrix(const KIModel& model) {
    if (model.L > 12) throw ResourceRefusal("dense Floquet matrix limited to L <= 12");
    const Floquet f(model);
    CMat u(model.dim(), model.dim());
    for (Eigen::Index c = 0; c < model.dim(); ++c) {
        CVec e = CVec::Zero(model.dim());
        e(c) = 1.0;
        f.step(e);
        u.col(c) = e;
    }
    return u;
}

inline RVec floquet_spectrum(const KIModel& model) { return unitary_eigenphases(floquet_matrix(model)); }

// Environment topologies. Sites 0 and 1 are the central pair; the environment occupies sites 2..q_e+1.
enum class EnvKind { A, B, C, D, E, F };

inline EnvKind parse_env_kind(const std::string& s) {
    if (s.size() == 1) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
        if (c >= 'a' && c <= 'f') return static_cast<EnvKind>(c - 'a');
    }
    throw InvalidArgument("unknown environment configuration '" + s + "' (expected a..f)");
}

inline char env_letter(EnvKind k) { return static_cast<char>('a' + static_cast<int>(k)); }

struct EnvConfig {
    EnvKind kind = EnvKind::A;
    int q_e = 0;
    double J_ce_prime = 0.0;
    double J_ce = 0.0;
    double tau_h_estimate = 0.0;
    Config configuration = Config::Spectator;
};

struct KISystem {
    KIModel model;
    EnvConfig env;
};

inline KISystem build_env_config(EnvKind kind, int q_e, double j_prime, const Field& b_c, const Field& b_e,
                                 double j_e = 1.0) {
    if (q_e < 4) throw InvalidArgument("build_env_config: q_e must be >= 4");
    if ((kind == EnvKind::C || kind == EnvKind::F) && (q_e % 2))
        throw InvalidArgument("build_env_config: configurations (c) and (f) split the environment, q_e must be even");
    const int L = q_e + 2, e0 = 2;
    const double n_e = std::ldexp(1.0, q_e);
    KISystem s;
    s.model.L = L;
    s.model.tag = std::string(1, env_letter(kind));
    s.model.kicks.assign(static_cast<std::size_t>(L), b_e);
    s.model.kicks[0] = s.model.kicks[1] = b_c;
    auto& bonds = s.model.bonds;
    auto chain = [&](int first, int len, bool ring) {
        for (int j = first; j < first + len - 1; ++j) bonds.push_back({j, j + 1, j_e});
        if (ring && len > 2) bonds.push_back({first + len - 1, first, j_e});
    };
    auto link = [&](int c, int e) { bonds.push_back({c, e, j_prime, Axis::Z, true}); };
    EnvConfig& env = s.env;
    env.kind = kind;
    env.q_e = q_e;
    env.J_ce_prime = j_prime;
    const int half = q_e / 2;
    switch (kind) {
        case EnvKind::A:
            chain(e0, q_e, false);
            link(1, e0);
            env.J_ce = j_prime, env.tau_h_estimate = n_e, env.configuration = Config::Spectator;
            break;
        case EnvKind::B:
            chain(e0, q_e, false);
            link(1, e0);
            link(0, L - 1);
            env.J_ce = std::sqrt(2.0) * j_prime, env.tau_h_estimate = n_e, env.configuration = Config::JointEnv;
            break;
        case EnvKind::C:
            chain(e0, half, false);
            chain(e0 + half, half, false);
            link(0, e0);
            link(1, e0 + half);
            env.J_ce = std::sqrt(2.0) * j_prime, env.tau_h_estimate = std::sqrt(n_e);
            env.configuration = Config::SeparateEnv;
            break;
        case EnvKind::D:
            chain(e0, q_e, true);
            for (int j = e0; j < L; ++j) link(1, j);
            env.J_ce = std::sqrt(double(q_e)) * j_prime, env.tau_h_estimate = n_e / q_e;
            env.configuration = Config::Spectator;
            break;
        case EnvKind::E:
            chain(e0, q_e, true);
            link(1, e0);
            env.J_ce = j_prime, env.tau_h_estimate = n_e, env.configuration = Config::Spectator;
            break;
        case EnvKind::F:
            chain(e0, half, true);
            chain(e0 + half, half, true);
            for (int j = 0; j < half; ++j) link(0, e0 + j), link(1, e0 + half + j);
            env.J_ce = std::sqrt(double(q_e)) * j_prime, env.tau_h_estimate = 2.0 * std::sqrt(n_e) / q_e;
            env.configuration = Config::SeparateEnv;
            break;
    }
    return s;
}

// Memory qubits on sites 0..n-1, ring on sites n..n+L-1; memory i couples to ring spin positions[i].
inline KIModel build_memory_model(int ring_size, int memory_n, const std::vector<int>& positions, double lambda,
                                  const Field& b, double j_e = 1.0, Axis axis = Axis::X) {
    if (ring_size < 3) throw InvalidArgument("build_memory_model: ring needs at least 3 spins");
    if (memory_n < 1) throw InvalidArgument("build_memory_model: need at least one memory qubit");
    if (static_cast<int>(positions.size()) != memory_n)
        throw InvalidArgument("build_memory_model: one position per memory qubit");
    KIModel m;
    m.L = ring_size + memory_n;
    m.tag = "memory";
    m.kicks.assign(static_cast<std::size_t>(m.L), b);
    for (int j = 0; j < ring_size; ++j) m.bonds.push_back({memory_n + j, memory_n + (j + 1) % ring_size, j_e, axis});
    for (int i = 0; i < memory_n; ++i) {
        const int p = positions[static_cast<std::size_t>(i)];
        if (p < 0 || p >= ring_size) throw InvalidArgument("build_memory_model: position outside the ring");
        m.bonds.push_back({i, memory_n + p, lambda, axis, true});
    }
    return m;
}

// Keeps only the coupling of memory qubit `which`; the others become spectators.
inline KIModel spectator_of(const KIModel& m, int which) {
    KIModel out = m;
    std::erase_if(out.bonds, [&](const Bond& b) { return b.coupling && b.j != which; });
    return out;
}

struct KITrajectory {
    std::vector<int> steps;
    std::vector<double> purity, concurrence, entropy, D;  // concurrence is zero unless two qubits are kept
};

// Repeated Floquet steps; the reduced state of the `kept` low qubits is measured every `stride` steps.
inline KITrajectory evolve_ki(const KIModel& model, CVec psi, int steps, int kept, int stride = 1) {
    if (steps < 0 || stride < 1) throw InvalidArgument("evolve_ki: steps >= 0 and stride >= 1 required");
    if (kept < 1 || kept >= model.L) throw InvalidArgument("evolve_ki: kept qubit count out of range");
    detail::check_state(psi, model.L);
    const Floquet f(model);
    KITrajectory tr;
    auto record = [&](int s) {
        const Observables o = observe(psi, kept);
        tr.steps.push_back(s);
        tr.purity.push_back(o.purity);
        tr.concurrence.push_back(o.concurrence);
        tr.entropy.push_back(o.entropy);
        tr.D.push_back(o.D);
    };
    record(0);
    for (int s = 1; s <= steps; ++s) {
        f.step(psi);
        if (s % stride == 0) record(s);
    }
    return tr;
}

inline void apply_pauli_pair(CVec& psi, const Bond& b) {
    if (b.axis == Axis::Z) {
        for (Eigen::Index mu = 0; mu < psi.size(); ++mu)
            if (((mu >> b.j) ^ (mu >> b.k)) & 1) psi(mu) = -psi(mu);
        return;
    }
    const Eigen::Index flip = (Eigen::Index{1} << b.j) | (Eigen::Index{1} << b.k);
    for (Eigen::Index mu = 0; mu < psi.size(); ++mu) {
        const Eigen::Index nu = mu ^ flip;
        if (nu > mu) std::swap(psi(mu), psi(nu));
    }
}

// Re <psi0| V_i(tau) V_j(tau') |psi0> for tau, tau' = 0..T, with V(tau) = U0^-tau V U0^tau
// and U0 the Floquet operator without coupling bonds.
inline RMat cross_correlation(const KIModel& model, const CVec& psi0, int i, int j, int T) {
    const auto cs = model.couplings();
    if (i < 0 || j < 0 || i >= static_cast<int>(cs.size()) || j >= static_cast<int>(cs.size()))
        throw InvalidArgument("cross_correlation: coupling index out of range");
    if (T < 0) throw InvalidArgument("cross_correlation: T must be >= 0");
    const Floquet u0(model.uncoupled());
    auto heisenberg = [&](const Bond& v) {
        std::vector<CVec> out;
        CVec phi = psi0;
        for (int tau = 0; tau <= T; ++tau) {
            CVec w = phi;
            apply_pauli_pair(w, v);
            for (int s = 0; s < tau; ++s) u0.step_inverse(w);
            out.push_back(std::move(w));
            u0.step(phi);
        }
        return out;
    };
    const auto a = heisenberg(cs[static_cast<std::size_t>(i)]);
    const auto b = i == j ? a : heisenberg(cs[static_cast<std::size_t>(j)]);
    RMat c(T + 1, T + 1);
    for (int x = 0; x <= T; ++x)
        for (int y = 0; y <= T; ++y) c(x, y) = a[static_cast<std::size_t>(x)].dot(b[static_cast<std::size_t>(y)]).real();
    return c;
}

// Kick presets in (x, y, z) components.
namespace presets {
inline constexpr Field chaotic{1.4, 0.0, 1.4};
inline constexpr Field integrable{1.53, 0.0, 0.0};
inline constexpr Field intermediate{1.4, 0.0, 0.8};
inline constexpr Field chaotic_alt{0.9, 0.0, 0.9};  // paired with J = 0.7
inline constexpr double chaotic_alt_J = 0.7;
inline constexpr Field memory_chaotic{0.9, 0.0, 0.9};
}  // namespace presets

// Homogeneous ring with translation and reflection symmetry removed:
// site 0 gets an extra kick and bond (0,1) a different strength.
inline KIModel symmetry_broken_ring(int L, double J, const Field& b, double kick_shift = 0.2, double bond_scale = 0.9) {
    if (L < 3) throw InvalidArgument("symmetry_broken_ring: L must be >= 3");
    KIModel m;
    m.L = L;
    m.tag = "ring";
    m.kicks.assign(static_cast<std::size_t>(L), b);
    m.kicks[0][2] += kick_shift;
    for (int j = 0; j < L; ++j) m.bonds.push_back({j, (j + 1) % L, j == 0 ? J * bond_scale : J});
    return m;
}

}  // namespace qdeco
