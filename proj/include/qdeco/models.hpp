#pragma once

#include "core.hpp"
#include "linalg.hpp"
#include "linear_response.hpp"
#include "metrics.hpp"
#include "qstate.hpp"
#include "rmt.hpp"
#include "stats.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

namespace qdeco {

// Central qubits occupy the low bits of the global index, environments follow:
// mu = q + 2^n (e + N_e e').
struct ModelSpec {
    Config configuration = Config::OneQubit;
    int num_qubits = 1;            // n-qubit configuration only
    Eigen::Index n_env = 64;       // N_e
    Eigen::Index n_env2 = 0;       // second environment (separate configuration); 0 means n_env
    std::vector<double> deltas;    // level splitting per central qubit; missing entries are 0
    std::vector<double> lambdas;   // coupling per coupled qubit
    Ensemble ensemble = Ensemble::GUE;
    bool unfold_environment = true;
    std::uint64_t seed = 0;
};

inline constexpr Eigen::Index max_total_dim = Eigen::Index{1} << 14;

inline int central_qubits(const ModelSpec& s) {
    switch (s.configuration) {
        case Config::OneQubit: return 1;
        case Config::Spectator:
        case Config::SeparateEnv:
        case Config::JointEnv: return 2;
        case Config::NQubit: return s.num_qubits;
    }
    return 0;
}

inline int coupled_qubits(const ModelSpec& s) {
    switch (s.configuration) {
        case Config::OneQubit:
        case Config::Spectator: return 1;
        case Config::SeparateEnv:
        case Config::JointEnv: return 2;
        case Config::NQubit: return s.num_qubits;
    }
    return 0;
}

inline Eigen::Index second_env(const ModelSpec& s) { return s.n_env2 > 0 ? s.n_env2 : s.n_env; }

inline Eigen::Index total_dim(const ModelSpec& s) {
    Eigen::Index d = (Eigen::Index{1} << central_qubits(s)) * s.n_env;
    if (s.configuration == Config::SeparateEnv) d *= second_env(s);
    return d;
}

inline double delta_of(const ModelSpec& s, int q) {
    return q < static_cast<int>(s.deltas.size()) ? s.deltas[static_cast<std::size_t>(q)] : 0.0;
}

inline void validate(const ModelSpec& s) {
    if (s.configuration == Config::NQubit && (s.num_qubits < 1 || s.num_qubits > 10))
        throw InvalidArgument("num_qubits must lie in [1, 10]");
    if (s.n_env < 2) throw InvalidArgument("n_env must be >= 2");
    if (s.configuration == Config::SeparateEnv && second_env(s) < 2) throw InvalidArgument("n_env2 must be >= 2");
    if (static_cast<int>(s.lambdas.size()) != coupled_qubits(s))
        throw InvalidArgument("lambdas: expected " + std::to_string(coupled_qubits(s)) + " coupling(s), got " +
                              std::to_string(s.lambdas.size()));
    for (double l : s.lambdas)
        if (!(l >= 0.0)) throw InvalidArgument("lambdas must be >= 0");
    Eigen::Index cap = 0;
    switch (s.configuration) {
        case Config::OneQubit:
        case Config::Spectator: cap = 2048; break;
        case Config::JointEnv: cap = 512; break;
        case Config::SeparateEnv: cap = 64; break;
        case Config::NQubit: cap = max_total_dim; break;
    }
    if (s.n_env > cap || (s.configuration == Config::SeparateEnv && second_env(s) > cap))
        throw ResourceRefusal("n_env exceeds the cap of " + std::to_string(cap) + " for the " +
                              to_string(s.configuration) + " configuration");
    if (total_dim(s) > max_total_dim)
        throw ResourceRefusal("total dimension " + std::to_string(total_dim(s)) + " exceeds " +
                              std::to_string(max_total_dim) + " (about " +
                              std::to_string(total_dim(s) * total_dim(s) * 16 / (1 << 20)) +
                              " MiB for one dense matrix)");
}

// One independently evolving factor of the Hamiltonian.
struct Block {
    CMat h0;  // uncoupled part
    CMat v;   // coupling, already multiplied by lambda
    CMat h() const { return h0 + v; }
    Eigen::Index dim() const { return h0.rows(); }
};

struct BuiltModel {
    ModelSpec spec;
    std::vector<Block> blocks;         // one block, or two acting on (q0, e) and (q1[, e'])
    std::vector<RVec> env_energies;    // per environment, ascending
    std::vector<double> tau_h;         // per environment
    int n_qubits = 1;

    Eigen::Index dim() const { return total_dim(spec); }

    // Global index of the pair (a, b) of block-local indices.
    Eigen::Index global_index(Eigen::Index a, Eigen::Index b) const {
        if (blocks.size() == 1) return a;
        return (a & 1) + 2 * (b & 1) + 4 * ((a >> 1) + spec.n_env * (b >> 1));
    }

    // Dense global Hamiltonian; test-sized systems only.
    CMat full(bool coupled = true) const {
        if (dim() > 4096) throw ResourceRefusal("dense global Hamiltonian limited to dimension 4096");
        auto part = [&](const Block& b) { return coupled ? b.h() : b.h0; };
        if (blocks.size() == 1) return part(blocks[0]);
        const CMat ha = part(blocks[0]), hb = part(blocks[1]);
        CMat out = CMat::Zero(dim(), dim());
        for (Eigen::Index a = 0; a < ha.rows(); ++a)
            for (Eigen::Index b = 0; b < hb.rows(); ++b) {
                const auto mu = global_index(a, b);
                for (Eigen::Index a2 = 0; a2 < ha.rows(); ++a2) out(global_index(a2, b), mu) += ha(a2, a);
                for (Eigen::Index b2 = 0; b2 < hb.rows(); ++b2) out(global_index(a, b2), mu) += hb(b2, b);
            }
        return out;
    }
};

namespace detail {

inline RVec environment_spectrum(const ModelSpec& s, Eigen::Index n, Rng& rng) {
    const RVec e = s.ensemble == Ensemble::GOE ? eigvalsh(sample_goe(n, rng)) : eigvalsh(sample_gue(n, rng));
    if (!s.unfold_environment) return e;
    // Unit mean spacing, then rescaled so the level spacing is 2 pi / tauH everywhere.
    return unfold(e, static_cast<double>(n)).values * (2.0 * pi / semicircle_heisenberg_time(double(n)));
}

// Adds lambda * V, with V acting on (qubit q, environment), to h over n central qubits.
inline void embed_coupling(CMat& h, const CMat& v, double lambda, int q, int n, Eigen::Index n_env) {
    const Eigen::Index dq = Eigen::Index{1} << n;
    const Eigen::Index bit = Eigen::Index{1} << q;
    for (Eigen::Index rest = 0; rest < dq; ++rest) {
        if (rest & bit) continue;
        for (Eigen::Index c = 0; c < 2 * n_env; ++c) {
            const Eigen::Index col = rest + (c & 1) * bit + dq * (c >> 1);
            for (Eigen::Index r = 0; r < 2 * n_env; ++r) {
                const Eigen::Index row = rest + (r & 1) * bit + dq * (r >> 1);
                h(row, col) += lambda * v(r, c);
            }
        }
    }
}

inline CMat diagonal_part(const RVec& env, const std::vector<double>& deltas, int n) {
    const Eigen::Index dq = Eigen::Index{1} << n;
    RVec d(dq * env.size());
    for (Eigen::Index e = 0; e < env.size(); ++e)
        for (Eigen::Index q = 0; q < dq; ++q) {
            double x = env(e);
            for (int j = 0; j < n; ++j) x += 0.5 * deltas[static_cast<std::size_t>(j)] * (((q >> j) & 1) ? -1.0 : 1.0);
            d(q + dq * e) = x;
        }
    return d.cast<cplx>().asDiagonal();
}

}  // namespace detail

inline BuiltModel build_hamiltonian(const ModelSpec& spec, Rng& rng) {
    validate(spec);
    BuiltModel m;
    m.spec = spec;
    m.n_qubits = central_qubits(spec);
    const int n = m.n_qubits;
    std::vector<double> deltas(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) deltas[static_cast<std::size_t>(q)] = delta_of(spec, q);
    const EnsembleSpec vspec{spec.ensemble, 2 * spec.n_env};

    RVec env = detail::environment_spectrum(spec, spec.n_env, rng);
    m.env_energies.push_back(env);
    m.tau_h.push_back(semicircle_heisenberg_time(double(spec.n_env)));

    switch (spec.configuration) {
        case Config::OneQubit:
        case Config::Spectator:
        case Config::SeparateEnv: {
            Block a;
            a.h0 = detail::diagonal_part(env, {deltas[0]}, 1);
            a.v = spec.lambdas[0] * sample_matrix(vspec, rng);
            m.blocks.push_back(std::move(a));
            if (spec.configuration == Config::Spectator) {
                Block b;
                b.h0 = detail::diagonal_part(RVec::Zero(1), {deltas[1]}, 1);
                b.v = CMat::Zero(2, 2);
                m.blocks.push_back(std::move(b));
            } else if (spec.configuration == Config::SeparateEnv) {
                const Eigen::Index n2 = second_env(spec);
                RVec env2 = detail::environment_spectrum(spec, n2, rng);
                Block b;
                b.h0 = detail::diagonal_part(env2, {deltas[1]}, 1);
                b.v = spec.lambdas[1] * sample_matrix(EnsembleSpec{spec.ensemble, 2 * n2}, rng);
                m.blocks.push_back(std::move(b));
                m.env_energies.push_back(std::move(env2));
                m.tau_h.push_back(semicircle_heisenberg_time(double(n2)));
            }
            break;
        }
        case Config::JointEnv:
        case Config::NQubit: {
            Block a;
            a.h0 = detail::diagonal_part(env, deltas, n);
            a.v = CMat::Zero(a.h0.rows(), a.h0.cols());
            for (int q = 0; q < n; ++q)
                detail::embed_coupling(a.v, sample_matrix(vspec, rng), spec.lambdas[static_cast<std::size_t>(q)], q, n,
                                       spec.n_env);
            m.blocks.push_back(std::move(a));
            break;
        }
    }
    return m;
}

// Dense propagation exp(-iHt) psi0 by a single diagonalization.
inline std::vector<CVec> evolve(const CMat& h, const CVec& psi0, const std::vector<double>& times) {
    if (h.rows() != h.cols() || h.rows() != psi0.size()) throw InvalidArgument("evolve: dimension mismatch");
    if (hermiticity_defect(h) > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()))
        throw InvalidArgument("evolve: Hamiltonian is not Hermitian");
    const Eigh e = eigh(h);
    const CVec c = e.vectors.adjoint() * psi0;
    std::vector<CVec> out;
    out.reserve(times.size());
    for (double t : times) {
        CVec ph(c.size());
        for (Eigen::Index k = 0; k < c.size(); ++k) ph(k) = std::polar(1.0, -e.values(k) * t) * c(k);
        out.push_back(e.vectors * ph);
    }
    return out;
}

// Propagates batches of states through a built model, block by block.
class Evolver {
public:
    explicit Evolver(const BuiltModel& m) : model_(&m) {
        for (const auto& b : m.blocks) {
            const CMat h = b.h();
            if (m.spec.ensemble == Ensemble::GOE)
                eig_.push_back(eigh(RMat(h.real())));
            else
                eig_.push_back(eigh(h));
        }
    }

    using Sink = std::function<void(std::size_t time_index, std::size_t state_index, const CVec& psi)>;

    void run(const std::vector<CVec>& states, const std::vector<double>& times, const Sink& sink) const {
        const auto& m = *model_;
        for (const auto& s : states)
            if (s.size() != m.dim()) throw InvalidArgument("Evolver: state dimension mismatch");
        if (eig_.size() == 1)
            run_single(states, times, sink);
        else
            run_pair(states, times, sink);
    }

    const std::vector<Eigh>& eigensystems() const { return eig_; }

private:
    void run_single(const std::vector<CVec>& states, const std::vector<double>& times, const Sink& sink) const {
        const auto& e = eig_[0];
        const Eigen::Index d = e.values.size();
        const auto m = static_cast<Eigen::Index>(states.size());
        CMat psi0(d, m);
        for (Eigen::Index s = 0; s < m; ++s) psi0.col(s) = states[static_cast<std::size_t>(s)];
        const CMat c = e.vectors.adjoint() * psi0;
        CMat y(d, m), z(d, m);
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            for (Eigen::Index k = 0; k < d; ++k) y.row(k) = c.row(k) * std::polar(1.0, -e.values(k) * times[ti]);
            z.noalias() = e.vectors * y;
            for (Eigen::Index s = 0; s < m; ++s) sink(ti, static_cast<std::size_t>(s), z.col(s));
        }
    }

    void run_pair(const std::vector<CVec>& states, const std::vector<double>& times, const Sink& sink) const {
        const auto& mdl = *model_;
        const auto& ea = eig_[0];
        const auto& eb = eig_[1];
        const Eigen::Index da = ea.values.size(), db = eb.values.size();
        const auto m = static_cast<Eigen::Index>(states.size());
        std::vector<CMat> c(static_cast<std::size_t>(m));
        for (Eigen::Index s = 0; s < m; ++s) {
            CMat mat(da, db);
            for (Eigen::Index b = 0; b < db; ++b)
                for (Eigen::Index a = 0; a < da; ++a) mat(a, b) = states[static_cast<std::size_t>(s)](mdl.global_index(a, b));
            c[static_cast<std::size_t>(s)] = ea.vectors.adjoint() * mat * eb.vectors.conjugate();
        }
        CMat y(da, db * m), z(da, db * m);
        CVec psi(mdl.dim());
        CVec pa(da), pb(db);
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            for (Eigen::Index k = 0; k < da; ++k) pa(k) = std::polar(1.0, -ea.values(k) * times[ti]);
            for (Eigen::Index k = 0; k < db; ++k) pb(k) = std::polar(1.0, -eb.values(k) * times[ti]);
            for (Eigen::Index s = 0; s < m; ++s)
                y.middleCols(s * db, db) = pa.asDiagonal() * c[static_cast<std::size_t>(s)] * pb.asDiagonal();
            z.noalias() = ea.vectors * y;
            for (Eigen::Index s = 0; s < m; ++s) {
                const CMat r = z.middleCols(s * db, db) * eb.vectors.transpose();
                for (Eigen::Index b = 0; b < db; ++b)
                    for (Eigen::Index a = 0; a < da; ++a) psi(mdl.global_index(a, b)) = r(a, b);
                sink(ti, static_cast<std::size_t>(s), psi);
            }
        }
    }

    const BuiltModel* model_;
    std::vector<Eigh> eig_;
};

// Reduced state of the n low qubits of a global vector of any length.
inline DensityMatrix central_rho(const CVec& psi, int n) {
    const Eigen::Index d = Eigen::Index{1} << n;
    Eigen::Map<const CMat> m(psi.data(), d, psi.size() / d);
    return m * m.adjoint();
}

// Reduced state of qubit 0 from an n-qubit density matrix.
inline DensityMatrix first_qubit(const DensityMatrix& rho) {
    DensityMatrix r = DensityMatrix::Zero(2, 2);
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
        for (Eigen::Index j = 0; j < rho.rows(); ++j)
            if ((i >> 1) == (j >> 1)) r(i & 1, j & 1) += rho(i, j);
    return r;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<double> purity, concurrence, entropy, D;
    std::vector<double> purity_std, concurrence_std, entropy_std, D_std;
    bool averaged = false;
    std::size_t realizations = 1;
};

enum class CentralForm { GUEForm, GOEForm, GOERandomGamma, Fixed };

// Initial state of the central qubits.
struct CentralState {
    CentralForm form = CentralForm::GUEForm;
    InitParams params;
    CVec fixed;  // CentralForm::Fixed

    static CentralState gue(double theta, double phi) { return {CentralForm::GUEForm, {theta, phi, 0, 0, 0}, {}}; }
    static CentralState goe(double theta, double gamma) { return {CentralForm::GOEForm, goe_params(theta, gamma), {}}; }
    static CentralState goe_random(double theta) { return {CentralForm::GOERandomGamma, {theta, pi / 4, 0, 0, 0}, {}}; }
    static CentralState of(const StateVector& s) { return {CentralForm::Fixed, {}, s.amplitudes()}; }
};

// Uniform Bloch-sphere direction reduced to the GOE-form angle: sin(gamma) uniform on [-1, 1].
inline double random_gamma(Rng& rng) { return std::asin(2.0 * rng.uniform() - 1.0); }

inline CVec central_vector(const CentralState& c, int n, Rng& rng) {
    if (c.form == CentralForm::Fixed) {
        if (c.fixed.size() != (Eigen::Index{1} << n)) throw InvalidArgument("central state has the wrong dimension");
        return c.fixed;
    }
    StateParams p{c.params.theta, c.params.phi, c.params.gamma, n};
    if (c.form == CentralForm::GOERandomGamma) p.gamma = random_gamma(rng);
    const bool goe = c.form != CentralForm::GUEForm;
    if (n == 1) return canonical_state(goe ? StateKind::OneQubitGOE : StateKind::OneQubitGUE, p).amplitudes();
    if (n == 2) return canonical_state(goe ? StateKind::TwoQubitGOE : StateKind::TwoQubitGUE, p).amplitudes();
    throw InvalidArgument("parametrized central states exist for one or two qubits; pass a fixed state");
}

inline CVec environment_vector(const ModelSpec& s, Rng& rng) {
    CVec e = random_vector(s.n_env, rng);
    if (s.configuration == Config::SeparateEnv) e = kron_low(e, random_vector(second_env(s), rng));
    return e;
}

struct Observables {
    double purity, concurrence, entropy, D;
};

inline Observables observe(const CVec& psi, int n) {
    const DensityMatrix rho = central_rho(psi, n);
    Observables o{purity(rho), 0.0, von_neumann(rho), 0.0};
    if (n == 2) o.concurrence = concurrence(rho);
    o.D = offdiagonal_D(n == 1 ? rho : first_qubit(rho));
    return o;
}

inline Trajectory run_trajectory(const ModelSpec& spec, const CentralState& central, const std::vector<double>& times,
                                 Rng& rng) {
    // same stream layout as one realization of monte_carlo
    const Rng hr = rng.substream(0);
    Rng br = hr.substream(0);
    const BuiltModel m = build_hamiltonian(spec, br);
    Rng sr = hr.substream(1);
    const CVec env = environment_vector(spec, sr);
    Rng cr = sr.substream(0);
    const CVec psi0 = kron_low(central_vector(central, m.n_qubits, cr), env);
    Trajectory tr;
    tr.times = times;
    tr.purity.resize(times.size());
    tr.concurrence.resize(times.size());
    tr.entropy.resize(times.size());
    tr.D.resize(times.size());
    Evolver(m).run({psi0}, times, [&](std::size_t ti, std::size_t, const CVec& psi) {
        const auto o = observe(psi, m.n_qubits);
        tr.purity[ti] = o.purity;
        tr.concurrence[ti] = o.concurrence;
        tr.entropy[ti] = o.entropy;
        tr.D[ti] = o.D;
    });
    return tr;
}

struct MonteCarloOptions {
    int threads = 1;
    bool keep_realizations = false;
    double cp_bin_width = 0.0;  // > 0 also bins every (C, P) sample
};

struct MonteCarloResult {
    Trajectory mean;
    std::vector<Trajectory> realizations;
    std::optional<CPCurve> cp;
};

namespace detail {

struct SeriesStats {
    WelfordSeries p, c, s, d;
    void merge(const SeriesStats& o) { p.merge(o.p), c.merge(o.c), s.merge(o.s), d.merge(o.d); }
};

template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    const int nt = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (nt == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nt));
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
                next = n;
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

// Averages over n_hamiltonians x n_initials realizations for each central state.
// Hamiltonians and environment states are shared across the central states.
inline std::vector<MonteCarloResult> monte_carlo_multi(const ModelSpec& spec, const std::vector<CentralState>& centrals,
                                                       const std::vector<double>& times, int n_hamiltonians,
                                                       int n_initials, Rng& rng, const MonteCarloOptions& opt = {}) {
    if (n_hamiltonians < 1 || n_initials < 1) throw InvalidArgument("monte_carlo: counts must be >= 1");
    if (centrals.empty()) throw InvalidArgument("monte_carlo: no central states");
    validate(spec);
    const int n = central_qubits(spec);
    if (opt.cp_bin_width > 0 && n != 2) throw InvalidArgument("CP curves need a two-qubit configuration");
    const std::size_t nh = static_cast<std::size_t>(n_hamiltonians), ni = static_cast<std::size_t>(n_initials);
    const std::size_t nc = centrals.size(), nt = times.size();

    struct Task {
        std::vector<detail::SeriesStats> stats;
        std::vector<std::vector<Trajectory>> kept;
        std::vector<CPBinner> binners;
    };
    std::vector<Task> tasks(nh);
    const Rng master = rng;
    detail::parallel_for(nh, opt.threads, [&](std::size_t h) {
        Rng hr = master.substream(h);
        Rng build_rng = hr.substream(0);
        const BuiltModel m = build_hamiltonian(spec, build_rng);
        std::vector<CVec> states;
        states.reserve(nc * ni);
        for (std::size_t i = 0; i < ni; ++i) {
            Rng sr = hr.substream(1 + i);
            const CVec env = environment_vector(spec, sr);
            for (std::size_t c = 0; c < nc; ++c) {
                Rng cr = sr.substream(c);
                states.push_back(kron_low(central_vector(centrals[c], n, cr), env));
            }
        }
        std::vector<std::vector<Observables>> obs(nc * ni, std::vector<Observables>(nt));
        Evolver(m).run(states, times, [&](std::size_t ti, std::size_t si, const CVec& psi) { obs[si][ti] = observe(psi, n); });

        Task& task = tasks[h];
        task.stats.resize(nc);
        task.kept.resize(nc);
        task.binners.assign(nc, CPBinner(opt.cp_bin_width > 0 ? opt.cp_bin_width : 1.0));
        for (std::size_t i = 0; i < ni; ++i)
            for (std::size_t c = 0; c < nc; ++c) {
                const auto& o = obs[i * nc + c];
                Trajectory tr;
                tr.times = times;
                for (const auto& x : o) {
                    tr.purity.push_back(x.purity);
                    tr.concurrence.push_back(x.concurrence);
                    tr.entropy.push_back(x.entropy);
                    tr.D.push_back(x.D);
                    if (opt.cp_bin_width > 0) task.binners[c].add(x.concurrence, x.purity);
                }
                auto& st = task.stats[c];
                st.p.add(tr.purity), st.c.add(tr.concurrence), st.s.add(tr.entropy), st.d.add(tr.D);
                if (opt.keep_realizations) task.kept[c].push_back(std::move(tr));
            }
    });

    std::vector<MonteCarloResult> out(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        detail::SeriesStats total;
        CPBinner binner(opt.cp_bin_width > 0 ? opt.cp_bin_width : 1.0);
        for (std::size_t h = 0; h < nh; ++h) {
            total.merge(tasks[h].stats[c]);
            if (opt.cp_bin_width > 0) binner.merge(tasks[h].binners[c]);
            for (auto& tr : tasks[h].kept[c]) out[c].realizations.push_back(std::move(tr));
        }
        auto& mean = out[c].mean;
        mean.times = times;
        mean.purity = total.p.mean(), mean.purity_std = total.p.stddev();
        mean.concurrence = total.c.mean(), mean.concurrence_std = total.c.stddev();
        mean.entropy = total.s.mean(), mean.entropy_std = total.s.stddev();
        mean.D = total.d.mean(), mean.D_std = total.d.stddev();
        mean.averaged = true;
        mean.realizations = total.p.count();
        if (opt.cp_bin_width > 0) out[c].cp = binner.curve();
    }
    return out;
}

inline MonteCarloResult monte_carlo(const ModelSpec& spec, const CentralState& central, const std::vector<double>& times,
                                    int n_hamiltonians, int n_initials, Rng& rng, const MonteCarloOptions& opt = {}) {
    return std::move(monte_carlo_multi(spec, {central}, times, n_hamiltonians, n_initials, rng, opt)[0]);
}

inline CPCurve cp_curve(const ModelSpec& spec, const CentralState& central, const std::vector<double>& times,
                        int n_hamiltonians, int n_initials, Rng& rng, double bin_width = 0.005, int threads = 1) {
    if (central_qubits(spec) != 2) throw InvalidArgument("cp_curve needs a two-qubit configuration");
    MonteCarloOptions opt;
    opt.threads = threads;
    opt.cp_bin_width = bin_width;
    return *monte_carlo(spec, central, times, n_hamiltonians, n_initials, rng, opt).cp;
}

struct UnitalityResult {
    std::vector<Eigen::Index> n_env;
    std::vector<double> times;
    std::vector<std::vector<double>> distance;  // [n_env index][time index], realization mean
};

// (|0>|e0> + |1>|e1>)/sqrt2 with orthonormal environment states; mean Bloch length of qubit 0.
inline UnitalityResult unitality_experiment(ModelSpec spec, const std::vector<double>& times,
                                            const std::vector<Eigen::Index>& n_envs, int n_hamiltonians, int n_initials,
                                            Rng& rng) {
    if (spec.configuration != Config::OneQubit && spec.configuration != Config::Spectator)
        throw InvalidArgument("unitality_experiment needs the one-qubit or spectator configuration");
    UnitalityResult res;
    res.times = times;
    for (std::size_t k = 0; k < n_envs.size(); ++k) {
        spec.n_env = n_envs[k];
        const int n = central_qubits(spec);
        WelfordSeries acc;
        Rng kr = rng.substream(k);
        for (int h = 0; h < n_hamiltonians; ++h) {
            Rng hr = kr.substream(static_cast<std::uint64_t>(h));
            Rng br = hr.substream(0);
            const BuiltModel m = build_hamiltonian(spec, br);
            std::vector<CVec> states;
            for (int i = 0; i < n_initials; ++i) {
                Rng sr = hr.substream(1 + static_cast<std::uint64_t>(i));
                CVec e0 = random_vector(spec.n_env, sr);
                CVec e1 = random_vector(spec.n_env, sr);
                e1 -= e0.dot(e1) * e0;  // dot conjugates its first argument
                e1.normalize();
                CVec psi = CVec::Zero(m.dim());
                const Eigen::Index dq = Eigen::Index{1} << n;
                for (Eigen::Index e = 0; e < spec.n_env; ++e) {
                    psi(dq * e) = e0(e) / std::sqrt(2.0);
                    psi(1 + dq * e) = e1(e) / std::sqrt(2.0);
                }
                states.push_back(std::move(psi));
            }
            std::vector<std::vector<double>> d(states.size(), std::vector<double>(times.size()));
            Evolver(m).run(states, times, [&](std::size_t ti, std::size_t si, const CVec& psi) {
                const DensityMatrix rho = central_rho(psi, n);
                d[si][ti] = unitality_distance(n == 1 ? rho : first_qubit(rho));
            });
            for (const auto& x : d) acc.add(x);
        }
        res.n_env.push_back(n_envs[k]);
        res.distance.push_back(acc.mean());
    }
    return res;
}

}  // namespace qdeco
