#include "qdeco/models.hpp"

#include <catch_amalgamated.hpp>
#include <unsupported/Eigen/MatrixFunctions>

using namespace qdeco;
using Catch::Matchers::WithinAbs;

namespace {

ModelSpec spec_of(Config c, Eigen::Index n_env, std::vector<double> lambdas, std::vector<double> deltas = {},
                  Ensemble e = Ensemble::GUE) {
    ModelSpec s;
    s.configuration = c;
    s.n_env = n_env;
    s.lambdas = std::move(lambdas);
    s.deltas = std::move(deltas);
    s.ensemble = e;
    return s;
}

std::vector<double> grid(double t_max, int n) {
    std::vector<double> t;
    for (int k = 0; k < n; ++k) t.push_back(t_max * k / (n - 1));
    return t;
}

}  // namespace

TEST_CASE("uncoupled spectrum is the sum of the parts") {
    Rng rng(1);
    const auto s = spec_of(Config::OneQubit, 16, {0.0}, {0.7});
    const BuiltModel m = build_hamiltonian(s, rng);
    const CMat h = m.full();
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
    std::vector<double> want;
    for (Eigen::Index e = 0; e < 16; ++e) {
        want.push_back(m.env_energies[0](e) + 0.35);
        want.push_back(m.env_energies[0](e) - 0.35);
    }
    std::sort(want.begin(), want.end());
    const RVec got = Eigen::SelfAdjointEigenSolver<CMat>(h).eigenvalues();
    for (std::size_t i = 0; i < want.size(); ++i) CHECK_THAT(got(Eigen::Index(i)), WithinAbs(want[i], 1e-12));
}

TEST_CASE("assembled Hamiltonians are Hermitian") {
    Rng rng(2);
    for (auto c : {Config::OneQubit, Config::Spectator, Config::SeparateEnv, Config::JointEnv}) {
        const int k = c == Config::OneQubit || c == Config::Spectator ? 1 : 2;
        for (auto e : {Ensemble::GOE, Ensemble::GUE}) {
            const BuiltModel m = build_hamiltonian(spec_of(c, 8, std::vector<double>(k, 0.1), {0.3, 0.5}, e), rng);
            const CMat h = m.full();
            CHECK(h.rows() == total_dim(m.spec));
            CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("spectator Hamiltonian traced over the spectator is twice the one-qubit Hamiltonian") {
    Rng a(3), b(3);
    const BuiltModel one = build_hamiltonian(spec_of(Config::OneQubit, 12, {0.2}, {0.4}), a);
    const BuiltModel sp = build_hamiltonian(spec_of(Config::Spectator, 12, {0.2}, {0.4, 0.0}), b);
    const CMat h1 = one.full(), h2 = sp.full();
    // qubit 2 is bit 1 of the global index
    CMat traced = CMat::Zero(h1.rows(), h1.cols());
    for (Eigen::Index i = 0; i < h2.rows(); ++i)
        for (Eigen::Index j = 0; j < h2.cols(); ++j)
            if (((i >> 1) & 1) == ((j >> 1) & 1)) {
                const Eigen::Index ri = (i & 1) | ((i >> 2) << 1), rj = (j & 1) | ((j >> 2) << 1);
                traced(ri, rj) += h2(i, j);
            }
    CHECK((traced - 2.0 * h1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resource caps") {
    Rng rng(4);
    CHECK_THROWS_AS(build_hamiltonian(spec_of(Config::OneQubit, 4096, {0.1}), rng), ResourceRefusal);
    CHECK_THROWS_AS(build_hamiltonian(spec_of(Config::JointEnv, 1024, {0.1, 0.1}), rng), ResourceRefusal);
    CHECK_THROWS_AS(build_hamiltonian(spec_of(Config::SeparateEnv, 128, {0.1, 0.1}), rng), ResourceRefusal);
    ModelSpec big = spec_of(Config::NQubit, 4096, {0.1, 0.1, 0.1});
    big.num_qubits = 3;
    CHECK_THROWS_AS(build_hamiltonian(big, rng), ResourceRefusal);
    try {
        build_hamiltonian(big, rng);
    } catch (const ResourceRefusal& e) {
        CHECK(std::string(e.what()).find("MiB") != std::string::npos);
    }
    CHECK_THROWS_AS(build_hamiltonian(spec_of(Config::OneQubit, 1, {0.1}), rng), InvalidArgument);
    CHECK_THROWS_AS(build_hamiltonian(spec_of(Config::OneQubit, 8, {0.1, 0.2}), rng), InvalidArgument);
    CHECK_THROWS_AS(build_hamiltonian(spec_of(Config::OneQubit, 8, {-0.1}), rng), InvalidArgument);
}

TEST_CASE("dense evolution") {
    Rng rng(5);
    const BuiltModel m = build_hamiltonian(spec_of(Config::OneQubit, 32, {0.1}, {0.5}), rng);
    const CMat h = m.full();
    const CVec psi0 = random_vector(h.rows(), rng);
    const auto times = grid(30.0, 7);
    const auto out = evolve(h, psi0, times);
    CHECK((out[0] - psi0).cwiseAbs().maxCoeff() < 1e-12);
    const double e0 = (psi0.adjoint() * h * psi0)(0).real();
    for (const auto& psi : out) {
        CHECK_THAT(psi.norm(), WithinAbs(1.0, 1e-10));
        CHECK_THAT((psi.adjoint() * h * psi)(0).real(), WithinAbs(e0, 1e-9));
    }
    const Eigen::SelfAdjointEigenSolver<CMat> es(h);
    const CVec v = es.eigenvectors().col(3);
    const double p0 = purity(central_rho(v, 1));
    for (const auto& psi : evolve(h, v, times)) {
        CHECK_THAT(std::abs(psi.dot(v)), WithinAbs(1.0, 1e-10));
        CHECK_THAT(purity(central_rho(psi, 1)), WithinAbs(p0, 1e-10));
    }
    CMat bad = h;
    bad(0, 1) += 1.0;
    CHECK_THROWS_AS(evolve(bad, psi0, times), InvalidArgument);
    CHECK_THROWS_AS(evolve(h, CVec::Zero(3), times), InvalidArgument);
}

TEST_CASE("block evolution matches the dense propagator") {
    Rng rng(6);
    for (auto c : {Config::OneQubit, Config::Spectator, Config::SeparateEnv, Config::JointEnv}) {
        const int k = c == Config::OneQubit || c == Config::Spectator ? 1 : 2;
        const BuiltModel m = build_hamiltonian(spec_of(c, 6, std::vector<double>(k, 0.3), {0.2, 0.9}), rng);
        const CMat h = m.full();
        const CVec psi0 = random_vector(h.rows(), rng);
        const auto times = grid(5.0, 4);
        const auto dense = evolve(h, psi0, times);
        Evolver(m).run({psi0}, times, [&](std::size_t ti, std::size_t, const CVec& psi) {
            CHECK((psi - dense[ti]).cwiseAbs().maxCoeff() < 1e-10);
        });
    }
}

TEST_CASE("forward purity equals echo purity") {
    Rng rng(7);
    const BuiltModel m = build_hamiltonian(spec_of(Config::Spectator, 16, {0.1}, {0.4, 0.8}), rng);
    const CMat h = m.full(true), h0 = m.full(false);
    const CVec psi0 = kron_low(bell_state().amplitudes(), random_vector(16, rng));
    for (int r = 0; r < 5; ++r) {
        const double t = 50.0 * rng.uniform();
        const CMat u = CMat(-I * t * h).exp(), u0 = CMat(-I * t * h0).exp();
        CHECK_THAT(purity(central_rho(u * psi0, 2)), WithinAbs(purity(central_rho(u0.adjoint() * u * psi0, 2)), 1e-10));
    }
}

TEST_CASE("single trajectories") {
    Rng rng(8);
    const auto times = grid(20.0, 11);
    for (double th : {0.0, 0.3, pi / 4}) {
        const auto tr = run_trajectory(spec_of(Config::Spectator, 32, {0.1}), CentralState::gue(th, 0.2), times, rng);
        CHECK_THAT(tr.purity[0], WithinAbs(1.0, 1e-10));
        CHECK_THAT(tr.concurrence[0], WithinAbs(std::sin(2 * th), 1e-10));
    }
    const auto still = run_trajectory(spec_of(Config::JointEnv, 16, {0.0, 0.0}, {0.3, 0.4}), CentralState::of(bell_state()),
                                      times, rng);
    for (double p : still.purity) CHECK_THAT(p, WithinAbs(1.0, 1e-10));
    CHECK_THROWS_AS(run_trajectory(spec_of(Config::JointEnv, 16, {0.1, 0.1}), CentralState::of(StateVector::basis(1, 0)),
                                   times, rng),
                    InvalidArgument);
}

TEST_CASE("global state stays pure") {
    Rng rng(9);
    const BuiltModel m = build_hamiltonian(spec_of(Config::JointEnv, 16, {0.2, 0.1}, {0.1, 0.3}), rng);
    const CVec psi0 = kron_low(bell_state().amplitudes(), random_vector(16, rng));
    Evolver(m).run({psi0}, grid(40.0, 9), [&](std::size_t, std::size_t, const CVec& psi) {
        CHECK_THAT(psi.squaredNorm(), WithinAbs(1.0, 1e-10));
    });
}

TEST_CASE("spectator rotations leave the purity unchanged") {
    Rng rng(10);
    const auto spec = spec_of(Config::Spectator, 32, {0.1}, {0.3, 0.0});
    const CVec psi = canonical_state(StateKind::TwoQubitGUE, {0.3, 0.6, 0, 2}).amplitudes();
    CMat u(2, 2);
    u << std::cos(0.4), -std::sin(0.4) * std::polar(1.0, 0.3), std::sin(0.4), std::cos(0.4) * std::polar(1.0, 0.3);
    CMat u2 = CMat::Zero(4, 4);  // acts on qubit 2 (bit 1)
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int q = 0; q < 2; ++q) u2(q + 2 * a, q + 2 * b) = u(a, b);
    const CVec rotated = u2 * psi;
    const auto times = grid(30.0, 7);
    Rng r1(77), r2(77);
    const auto a = monte_carlo(spec, CentralState::of(StateVector(psi)), times, 3, 3, r1);
    const auto b = monte_carlo(spec, CentralState::of(StateVector(rotated)), times, 3, 3, r2);
    for (std::size_t i = 0; i < times.size(); ++i) CHECK_THAT(a.mean.purity[i], WithinAbs(b.mean.purity[i], 1e-12));
}

TEST_CASE("separate environments keep the cross entanglement fixed") {
    Rng rng(11);
    const Eigen::Index ne = 8;
    const BuiltModel m = build_hamiltonian(spec_of(Config::SeparateEnv, ne, {0.3, 0.2}, {0.2, 0.7}), rng);
    const CVec psi0 =
        kron_low(kron_low(bell_state().amplitudes(), random_vector(ne, rng)), random_vector(ne, rng));
    // subsystem (qubit 1, e) against (qubit 2, e')
    auto cross_purity = [&](const CVec& psi) {
        CMat mat = CMat::Zero(2 * ne, 2 * ne);
        for (Eigen::Index mu = 0; mu < psi.size(); ++mu) {
            const Eigen::Index q0 = mu & 1, q1 = (mu >> 1) & 1, e = (mu >> 2) % ne, e2 = (mu >> 2) / ne;
            mat(q0 + 2 * e, q1 + 2 * e2) = psi(mu);
        }
        return purity(CMat(mat * mat.adjoint()));
    };
    const double p0 = cross_purity(psi0);
    CHECK_THAT(p0, WithinAbs(0.5, 1e-12));
    Evolver(m).run({psi0}, grid(60.0, 7), [&](std::size_t, std::size_t, const CVec& psi) {
        CHECK_THAT(cross_purity(psi), WithinAbs(p0, 1e-10));
    });
}

TEST_CASE("Monte Carlo determinism and merging") {
    const auto spec = spec_of(Config::OneQubit, 32, {0.05}, {0.0});
    const auto times = grid(20.0, 6);
    Rng a(5), b(5), c(5);
    MonteCarloOptions two;
    two.threads = 2;
    const auto x = monte_carlo(spec, CentralState::gue(0, 0.3), times, 4, 3, a);
    const auto y = monte_carlo(spec, CentralState::gue(0, 0.3), times, 4, 3, b);
    const auto z = monte_carlo(spec, CentralState::gue(0, 0.3), times, 4, 3, c, two);
    CHECK(x.mean.purity == y.mean.purity);
    CHECK(x.mean.purity_std == y.mean.purity_std);
    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK_THAT(x.mean.purity[i], WithinAbs(z.mean.purity[i], 1e-12));
        CHECK_THAT(x.mean.purity_std[i], WithinAbs(z.mean.purity_std[i], 1e-12));
    }
    CHECK(x.mean.realizations == 12);

    Rng d(9), e(9);
    const auto one = monte_carlo(spec, CentralState::gue(0, 0.3), times, 1, 1, d);
    const auto single = run_trajectory(spec, CentralState::gue(0, 0.3), times, e);
    CHECK(one.mean.purity == single.purity);
    CHECK_THROWS_AS(monte_carlo(spec, CentralState::gue(0, 0), times, 0, 1, d), InvalidArgument);
}

TEST_CASE("CP curves start at the Bell point") {
    Rng rng(12);
    const auto curve = cp_curve(spec_of(Config::Spectator, 32, {0.1}, {1.0, 1.0}), CentralState::of(bell_state()),
                                grid(50.0, 26), 2, 2, rng, 0.01);
    REQUIRE(!curve.points.empty());
    CHECK_THAT(curve.points.front().purity, WithinAbs(1.0, 0.01));
    CHECK(curve.points.front().concurrence > 0.97);
    for (std::size_t i = 1; i < curve.points.size(); ++i) CHECK(curve.points[i].purity < curve.points[i - 1].purity);
    CHECK_THROWS_AS(cp_curve(spec_of(Config::OneQubit, 32, {0.1}), CentralState::gue(0, 0), grid(1, 2), 1, 1, rng),
                    InvalidArgument);
}

TEST_CASE("unitality experiment") {
    Rng rng(13);
    const auto times = grid(40.0, 5);
    const auto zero = unitality_experiment(spec_of(Config::OneQubit, 16, {0.0}), times, {16, 32}, 2, 2, rng);
    for (const auto& row : zero.distance)
        for (double d : row) CHECK_THAT(d, WithinAbs(0.0, 1e-12));
    const auto res = unitality_experiment(spec_of(Config::OneQubit, 16, {0.3}), times, {16, 64, 256}, 4, 4, rng);
    // late-time distance shrinks as the environment grows
    CHECK(res.distance[2].back() < res.distance[0].back());
    CHECK_THROWS_AS(unitality_experiment(spec_of(Config::JointEnv, 16, {0.1, 0.1}), times, {16}, 1, 1, rng),
                    InvalidArgument);
}
