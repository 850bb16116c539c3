#include "qdeco/kicked_ising.hpp"

#include <catch_amalgamated.hpp>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

using namespace qdeco;
using Catch::Matchers::WithinAbs;

namespace {

CMat pauli(int a) {
    CMat s(2, 2);
    if (a == 0) s << 0, 1, 1, 0;
    if (a == 1) s << 0, -I, I, 0;
    if (a == 2) s << 1, 0, 0, -1;
    return s;
}

// site j of L little-endian qubits
CMat embed(const CMat& op, int j, int L) {
    const CMat low = CMat::Identity(Eigen::Index{1} << j, Eigen::Index{1} << j);
    const CMat high = CMat::Identity(Eigen::Index{1} << (L - 1 - j), Eigen::Index{1} << (L - 1 - j));
    return Eigen::kroneckerProduct(high, CMat(Eigen::kroneckerProduct(op, low)));
}

CMat dense_kick(const Field& b, int j, int L) {
    const CMat h = b[0] * pauli(0) + b[1] * pauli(1) + b[2] * pauli(2);
    return embed(CMat(-I * h).exp(), j, L);
}

CMat dense_pair(int a, int j, int k, double J, int L) {
    const CMat h = J * embed(pauli(a), j, L) * embed(pauli(a), k, L);
    return CMat(-I * h).exp();
}

CMat dense_floquet(const KIModel& m) {
    const Eigen::Index d = m.dim();
    CMat z = CMat::Identity(d, d), x = CMat::Identity(d, d), k = CMat::Identity(d, d);
    for (const auto& b : m.bonds) {
        if (b.axis == Axis::Z) z = dense_pair(2, b.j, b.k, b.J, m.L) * z;
        if (b.axis == Axis::X) x = dense_pair(0, b.j, b.k, b.J, m.L) * x;
    }
    for (int j = 0; j < m.L; ++j) k = dense_kick(m.kicks[std::size_t(j)], j, m.L) * k;
    return k * x * z;
}

Field random_field(Rng& rng) { return {2 * rng.uniform() - 1, 2 * rng.uniform() - 1, 2 * rng.uniform() - 1}; }

KIModel random_model(int L, Rng& rng) {
    KIModel m;
    m.L = L;
    for (int j = 0; j < L; ++j) m.kicks.push_back(random_field(rng));
    for (int j = 0; j < L; ++j)
        for (int k = j + 1; k < L; ++k)
            if (rng.uniform() < 0.6) m.bonds.push_back({j, k, rng.uniform() - 0.5, rng.uniform() < 0.3 ? Axis::X : Axis::Z});
    return m;
}

// relabels qubit q as perm[q]
CVec permute_sites(const CVec& psi, const std::vector<int>& perm) {
    CVec out(psi.size());
    for (Eigen::Index mu = 0; mu < psi.size(); ++mu) {
        Eigen::Index nu = 0;
        for (std::size_t q = 0; q < perm.size(); ++q) nu |= ((mu >> q) & 1) << perm[q];
        out(nu) = psi(mu);
    }
    return out;
}

}  // namespace

TEST_CASE("Ising phase and kicks match dense operators") {
    Rng rng(1);
    for (int L = 2; L <= 4; ++L)
        for (int j = 0; j < L; ++j) {
            for (int k = 0; k < L; ++k) {
                if (j == k) continue;
                const double J = rng.uniform() * 2 - 1;
                const CVec psi = random_state(Eigen::Index{1} << L, rng).amplitudes();
                CVec a = psi, b = psi;
                apply_ising_phase(a, j, k, J);
                apply_xx(b, j, k, J);
                CHECK((a - dense_pair(2, j, k, J, L) * psi).cwiseAbs().maxCoeff() < 1e-13);
                CHECK((b - dense_pair(0, j, k, J, L) * psi).cwiseAbs().maxCoeff() < 1e-13);
            }
            const Field f = random_field(rng);
            const CVec psi = random_state(Eigen::Index{1} << L, rng).amplitudes();
            CVec a = psi;
            apply_kick(a, j, f);
            CHECK((a - dense_kick(f, j, L) * psi).cwiseAbs().maxCoeff() < 1e-13);
        }
    CVec psi = CVec::Ones(4);
    CHECK_THROWS_AS(apply_ising_phase(psi, 1, 1, 0.3), InvalidArgument);
    CHECK_THROWS_AS(apply_kick(psi, 2, {1, 0, 0}), InvalidArgument);
}

TEST_CASE("kick inverse and the pi/2 z kick") {
    Rng rng(2);
    const CVec psi = random_state(32, rng).amplitudes();
    for (int r = 0; r < 20; ++r) {
        const Field b = random_field(rng);
        CVec a = psi;
        apply_kick(a, r % 5, b);
        apply_kick(a, r % 5, {-b[0], -b[1], -b[2]});
        CHECK((a - psi).cwiseAbs().maxCoeff() < 1e-14);
    }
    // exp(-i pi/2 sz) = -i sz
    const Mat2 u = kick_matrix({0, 0, pi / 2});
    CHECK(std::abs(u(0, 0) - cplx(0, -1)) < 1e-15);
    CHECK(std::abs(u(1, 1) - cplx(0, 1)) < 1e-15);
    CHECK(std::abs(u(0, 1)) < 1e-15);
    const Mat2 k = kick_matrix({0.3, -0.8, 0.5});
    CHECK((k * k.adjoint() - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("Floquet step matches the dense product") {
    Rng rng(3);
    for (int L : {2, 3, 5, 8}) {
        const KIModel m = random_model(L, rng);
        const CMat u = dense_floquet(m);
        CHECK((floquet_matrix(m) - u).cwiseAbs().maxCoeff() < 1e-12);
        const Floquet f(m);
        CVec psi = random_state(m.dim(), rng).amplitudes(), back = psi;
        f.step(back);
        f.step_inverse(back);
        CHECK((back - psi).cwiseAbs().maxCoeff() < 1e-13);
    }
    const auto ring = symmetry_broken_ring(8, 1.0, presets::chaotic);
    CHECK((floquet_matrix(ring) - dense_floquet(ring)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("long evolutions stay normalized") {
    Rng rng(4);
    const Floquet f(symmetry_broken_ring(8, 1.0, presets::chaotic));
    CVec psi = random_state(256, rng).amplitudes();
    for (int s = 0; s < 10000; ++s) f.step(psi);
    CHECK_THAT(psi.norm(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("environment configurations") {
    const auto a = build_env_config(EnvKind::A, 12, 0.01, presets::chaotic, presets::chaotic);
    CHECK(a.model.L == 14);
    CHECK_THAT(a.env.tau_h_estimate, WithinAbs(4096.0, 1e-9));
    CHECK(a.model.couplings().size() == 1);
    const auto d = build_env_config(EnvKind::D, 16, 0.01, presets::chaotic, presets::chaotic);
    CHECK_THAT(d.env.tau_h_estimate, WithinAbs(4096.0, 1e-9));
    CHECK_THAT(d.env.J_ce, WithinAbs(0.04, 1e-12));
    CHECK(d.model.couplings().size() == 16);
    const auto f = build_env_config(EnvKind::F, 12, 0.01, presets::chaotic, presets::chaotic);
    CHECK_THAT(f.env.tau_h_estimate, WithinAbs(2.0 * 64.0 / 12.0, 1e-9));
    CHECK(f.env.configuration == Config::SeparateEnv);
    const auto b = build_env_config(EnvKind::B, 8, 0.01, presets::chaotic, presets::chaotic);
    CHECK_THAT(b.env.J_ce, WithinAbs(std::sqrt(2.0) * 0.01, 1e-15));
    CHECK(b.env.configuration == Config::JointEnv);
    CHECK_THROWS_AS(build_env_config(EnvKind::C, 7, 0.01, presets::chaotic, presets::chaotic), InvalidArgument);
    CHECK_THROWS_AS(build_env_config(EnvKind::A, 3, 0.01, presets::chaotic, presets::chaotic), InvalidArgument);
    CHECK(parse_env_kind("D") == EnvKind::D);
    CHECK_THROWS_AS(parse_env_kind("g"), InvalidArgument);
}

TEST_CASE("ring rotation is a symmetry of configuration (d)") {
    Rng rng(5);
    const int q_e = 6, L = q_e + 2;
    const auto sys = build_env_config(EnvKind::D, q_e, 0.2, presets::chaotic, presets::chaotic);
    std::vector<int> perm(L);
    for (int q = 0; q < L; ++q) perm[std::size_t(q)] = q < 2 ? q : 2 + (q - 2 + 1) % q_e;
    const Floquet f(sys.model);
    CVec a = random_state(Eigen::Index{1} << L, rng).amplitudes();
    CVec b = permute_sites(a, perm);
    for (int s = 0; s < 20; ++s) f.step(a), f.step(b);
    CHECK((permute_sites(a, perm) - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("central z kicks do not change the decoherence") {
    Rng rng(6);
    const auto off = build_env_config(EnvKind::A, 6, 0.3, {0, 0, 0}, presets::chaotic);
    const auto on = build_env_config(EnvKind::A, 6, 0.3, {0, 0, 0.7}, presets::chaotic);
    const CVec psi = kron_low(bell_state().amplitudes(), random_state(64, rng).amplitudes());
    const auto x = evolve_ki(off.model, psi, 50, 2), y = evolve_ki(on.model, psi, 50, 2);
    double moved = 0.0;
    for (std::size_t s = 0; s < x.purity.size(); ++s) {
        CHECK_THAT(x.purity[s], WithinAbs(y.purity[s], 1e-12));
        CHECK_THAT(x.concurrence[s], WithinAbs(y.concurrence[s], 1e-9));
        moved = std::max(moved, 1.0 - x.purity[s]);
    }
    CHECK(moved > 1e-3);
}

TEST_CASE("memory model") {
    Rng rng(7);
    const auto free = build_memory_model(6, 2, {0, 3}, 0.0, presets::memory_chaotic);
    CHECK(free.L == 8);
    const CVec psi = kron_low(bell_state().amplitudes(), random_state(64, rng).amplitudes());
    for (double p : evolve_ki(free, psi, 40, 2).purity) CHECK_THAT(p, WithinAbs(1.0, 1e-12));
    const auto coupled = build_memory_model(6, 2, {0, 3}, 0.2, presets::memory_chaotic);
    CHECK(coupled.couplings().size() == 2);
    CHECK(spectator_of(coupled, 1).couplings().size() == 1);
    CHECK(spectator_of(coupled, 1).couplings()[0].j == 1);
    CHECK(evolve_ki(coupled, psi, 40, 2).purity.back() < 1.0 - 1e-4);
    CHECK_THROWS_AS(build_memory_model(6, 2, {0, 6}, 0.1, presets::memory_chaotic), InvalidArgument);
    CHECK_THROWS_AS(build_memory_model(6, 2, {0}, 0.1, presets::memory_chaotic), InvalidArgument);
    CHECK_THROWS_AS(evolve_ki(coupled, psi, 5, 8), InvalidArgument);

    const auto trs = evolve_ki(coupled, psi, 30, 2, 10);
    CHECK(trs.steps == std::vector<int>{0, 10, 20, 30});
}

TEST_CASE("coupling correlation functions") {
    Rng rng(8);
    const auto m = build_memory_model(6, 2, {0, 3}, 0.1, presets::memory_chaotic);
    const CVec psi = random_state(m.dim(), rng).amplitudes();
    const RMat c = cross_correlation(m, psi, 0, 0, 8);
    for (int t = 0; t <= 8; ++t) CHECK_THAT(c(t, t), WithinAbs(1.0, 1e-12));
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const RMat x = cross_correlation(m, psi, 0, 1, 8);
    CHECK(x.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    CHECK_THROWS_AS(cross_correlation(m, psi, 0, 2, 8), InvalidArgument);
}

TEST_CASE("Floquet spectrum") {
    Rng rng(9);
    const KIModel m = random_model(6, rng);
    const RVec ph = floquet_spectrum(m);
    const CMat u = floquet_matrix(m);
    CHECK((u * u.adjoint() - CMat::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-12);
    cplx tr = 0.0;
    for (Eigen::Index k = 0; k < ph.size(); ++k) {
        CHECK(ph(k) > -pi - 1e-12);
        CHECK(ph(k) <= pi + 1e-12);
        tr += std::polar(1.0, ph(k));
    }
    CHECK(std::abs(tr - u.trace()) < 1e-10);
    std::vector<double> ref;
    const Eigen::ComplexEigenSolver<CMat> es(u);
    for (Eigen::Index k = 0; k < 64; ++k) ref.push_back(std::arg(es.eigenvalues()(k)));
    std::sort(ref.begin(), ref.end());
    for (Eigen::Index k = 0; k < 64; ++k) CHECK_THAT(ph(k), WithinAbs(ref[std::size_t(k)], 1e-9));
    CHECK_THROWS_AS(floquet_matrix(symmetry_broken_ring(13, 1.0, presets::chaotic)), ResourceRefusal);
}
