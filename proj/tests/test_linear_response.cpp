#include "qdeco/linear_response.hpp"

#include <catch_amalgamated.hpp>

using namespace qdeco;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LRConfig config(Config c, int beta, double tau_h, std::vector<double> lambdas) {
    LRConfig out;
    out.configuration = c;
    out.betas = {beta};
    out.tau_h = {tau_h};
    out.lambdas = std::move(lambdas);
    return out;
}

InitParams params(double theta, double phi, double delta = 0.0) {
    InitParams p;
    p.theta = theta;
    p.phi = phi;
    p.delta = delta;
    return p;
}

}  // namespace

TEST_CASE("f(t) for the GUE hole") {
    const double th = 5.0;
    CHECK(f_tauH(0.0, th) == 0.0);
    CHECK_THAT(f_tauH(th, th), WithinAbs(8.0 / 3.0 * th * th, 1e-12));
    const double h = 1e-6;
    CHECK_THAT(f_tauH(th - h, th), WithinAbs(f_tauH(th + h, th), 1e-4));
    const double left = (f_tauH(th, th) - f_tauH(th - h, th)) / h;
    const double right = (f_tauH(th + h, th) - f_tauH(th, th)) / h;
    CHECK_THAT(left, WithinAbs(right, 1e-4));
    CHECK_THROWS_AS(f_tauH(-1.0, th), InvalidArgument);
}

TEST_CASE("geometric factors") {
    CHECK_THAT(g_of(pi / 4), WithinAbs(0.5, 1e-15));
    CHECK_THAT(g_of(0.0), WithinAbs(1.0, 1e-15));
    auto g = geometric_factors(params(0, 0));
    CHECK_THAT(g.g1, WithinAbs(0.0, 1e-15));
    CHECK_THAT(g.g2, WithinAbs(1.0, 1e-15));
    g = geometric_factors(params(pi / 4, pi / 4));
    CHECK_THAT(g.g1, WithinAbs(0.5, 1e-15));
    CHECK_THAT(g.g2, WithinAbs(1.0, 1e-15));

    for (int i = 0; i <= 20; ++i)
        for (int j = 0; j <= 20; ++j) {
            const auto a = geometric_factors(params(pi / 4 * i / 20, pi / 2 * j / 20));
            CHECK(a.g1 >= -1e-15);
            CHECK(a.g1 <= 0.5 + 1e-15);
            CHECK(a.g2 >= 0.5 - 1e-15);
            CHECK(a.g2 <= 1.0 + 1e-15);
            if (i > 0) {
                // more entanglement never makes the pair less susceptible
                const auto b = geometric_factors(params(pi / 4 * (i - 1) / 20, pi / 2 * j / 20));
                CHECK(a.g1 >= b.g1 - 1e-15);
                CHECK(a.g2 >= b.g2 - 1e-15);
            }
        }
}

TEST_CASE("correlation functions") {
    // unentangled pair in an eigenstate of the coupled qubit
    for (double tau : {0.0, 0.7, 3.1}) {
        const auto c = correlations(params(0.0, 0.0, 1.3), tau);
        CHECK_THAT(c.s1, WithinAbs(1.0, 1e-15));
        CHECK_THAT(c.re_c1, WithinAbs(1.0 + std::cos(1.3 * tau), 1e-15));
    }
    for (double gamma : {-1.2, 0.0, 0.4, pi / 2})
        CHECK_THAT(one_minus_s1p_degenerate(g_of(pi / 4), gamma), WithinAbs(0.5, 1e-15));

    // mixed single-qubit state of the GUE-form pair against a dense 2x2 evolution
    for (double theta : {0.0, 0.3, pi / 4})
        for (double phi : {0.0, 0.5, pi / 3})
            for (double tau : {0.0, 0.9, 2.5}) {
                const double delta = 1.7;
                const double c2 = std::cos(theta) * std::cos(theta), s2 = 1 - c2;
                CVec a(2), b(2);
                a << std::cos(phi), std::sin(phi);
                b << std::sin(phi), -std::cos(phi);
                const CMat rho = c2 * a * a.adjoint() + s2 * b * b.adjoint();
                CMat u = CMat::Zero(2, 2);
                u(0, 0) = std::polar(1.0, -delta * tau / 2);
                u(1, 1) = std::polar(1.0, delta * tau / 2);
                const double dense = (u * rho * u.adjoint() * rho).trace().real();
                CHECK_THAT(correlations(params(theta, phi, delta), tau).s1, WithinAbs(dense, 1e-10));
            }
}

TEST_CASE("numerical kernel against closed forms") {
    const double th = 20.0;
    const auto gue = config(Config::OneQubit, 2, th, {0.01});
    for (double t : {0.0, 3.0, 19.0, 20.0, 45.0}) {
        CHECK_THAT(purity_lr(gue, params(0, 0), t), WithinAbs(closed_form(ClosedForm::DegenerateOne, gue, {}, t), 1e-8));
    }
    CHECK(purity_lr(gue, params(0, 0), 0.0) == 1.0);

    const auto goe = config(Config::OneQubit, 1, th, {0.01});
    for (double gamma : {0.0, 0.6, pi / 2})
        for (double t : {2.0, 20.0, 37.0}) {
            const auto p = goe_params(0.0, gamma);
            const double cf = closed_form(ClosedForm::GOEOne, goe, p, t);
            CHECK_THAT(1 - purity_lr(goe, p, t), WithinRel(1 - cf, 1e-6));
        }

    const auto spec_goe = config(Config::Spectator, 1, th, {0.01});
    for (double theta : {0.0, 0.5, pi / 4})
        for (double gamma : {0.0, 1.0})
            for (double t : {5.0, 30.0}) {
                const auto p = goe_params(theta, gamma);
                const double cf = closed_form(ClosedForm::GOESpectator, spec_goe, p, t);
                CHECK_THAT(1 - purity_lr(spec_goe, p, t), WithinRel(1 - cf, 1e-6));
            }

    const auto spec = config(Config::Spectator, 2, th, {0.02});
    for (double theta : {0.0, 0.3, pi / 4}) {
        CHECK_THAT(purity_lr(spec, params(theta, 0.4), 25.0),
                   WithinAbs(closed_form(ClosedForm::SpectatorDegenerate, spec, params(theta, 0.4), 25.0), 1e-8));
    }
}

TEST_CASE("closed form examples") {
    const double th = 10.0, l = 0.02;
    const auto spec = config(Config::Spectator, 2, th, {l});
    for (double t : {1.0, 10.0, 30.0}) {
        const double bell = 1 - closed_form(ClosedForm::SpectatorDegenerate, spec, params(pi / 4, 0), t);
        const double sep = 1 - closed_form(ClosedForm::SpectatorDegenerate, spec, params(0, 0), t);
        CHECK_THAT(bell, WithinRel(1.5 * l * l * f_tauH(t, th), 1e-12));
        CHECK_THAT(sep, WithinRel(l * l * f_tauH(t, th), 1e-12));
        CHECK_THAT(bell / sep, WithinRel(1.5, 1e-12));
    }
    const auto one = config(Config::OneQubit, 2, th, {l});
    for (double t : {1.0, 10.0, 30.0})
        CHECK_THAT(closed_form(ClosedForm::FastOne, one, params(0, 0, 5.0), t), WithinAbs(1 - 2 * l * l * t * th, 1e-14));
}

TEST_CASE("closed forms refuse the wrong regime") {
    const auto one = config(Config::OneQubit, 2, 10.0, {0.01});
    CHECK_THROWS_AS(closed_form(ClosedForm::DegenerateOne, one, params(0, 0, 1.0), 1.0), RegimeMismatch);
    CHECK_THROWS_AS(closed_form(ClosedForm::FastOne, one, params(0, 0, 0.0), 1.0), RegimeMismatch);
    CHECK_THROWS_AS(closed_form(ClosedForm::GOEOne, one, params(0, 0, 0.0), 1.0), RegimeMismatch);
    CHECK_THROWS_AS(closed_form(ClosedForm::SpectatorDegenerate, one, params(0, 0, 0.0), 1.0), RegimeMismatch);
    try {
        closed_form(ClosedForm::DegenerateOne, one, params(0, 0, 1.0), 1.0);
    } catch (const RegimeMismatch& e) {
        CHECK(std::string(e.what()).find("Delta*tauH") != std::string::npos);
    }
}

TEST_CASE("fast limit decays slower than the degenerate one") {
    const double th = 10.0;
    const auto one = config(Config::OneQubit, 2, th, {0.01});
    const auto spec = config(Config::Spectator, 2, th, {0.01});
    for (double t : {0.1, 1.0, 5.0, 10.0, 40.0})
        for (double theta : {0.0, 0.4, pi / 4})
            for (double phi : {0.0, 0.3, pi / 4}) {
                CHECK(closed_form(ClosedForm::FastOne, one, params(0, phi, 5), t) >
                      closed_form(ClosedForm::DegenerateOne, one, params(0, phi, 0), t));
                CHECK(closed_form(ClosedForm::SpectatorFast, spec, params(theta, phi, 5), t) >
                      closed_form(ClosedForm::SpectatorDegenerate, spec, params(theta, phi, 0), t));
            }
}

TEST_CASE("numerical kernel interpolates between the limits") {
    const double th = 10.0, t = 25.0;
    const auto spec = config(Config::Spectator, 2, th, {0.01});
    const auto p_small = params(0.3, 0.5, 1e-6);
    CHECK_THAT(purity_lr(spec, p_small, t),
               WithinAbs(closed_form(ClosedForm::SpectatorDegenerate, spec, params(0.3, 0.5, 0), t), 1e-9));
    const auto p_fast = params(0.3, 0.5, 1e3 / th);
    const double fast = closed_form(ClosedForm::SpectatorFast, spec, p_fast, t);
    CHECK_THAT(1 - purity_lr(spec, p_fast, t), WithinRel(1 - fast, 0.01));
}

TEST_CASE("purity fluctuations over GOE initial states") {
    auto one = config(Config::OneQubit, 1, 10.0, {0.01});
    auto spec = config(Config::Spectator, 1, 10.0, {0.01});
    CHECK_THAT(sigma_purity(spec, goe_params(pi / 4, 0), 3.0), WithinAbs(0.0, 1e-18));
    CHECK_THAT(sigma_purity(spec, goe_params(0, 0), 3.0), WithinAbs(sigma_purity(one, goe_params(0, 0), 3.0), 1e-18));
    // variance of cos(2 gamma) with sin(gamma) uniform
    const double m1 = adaptive_simpson([](double u) { return 0.5 * (1 - 2 * u * u); }, -1, 1, 1e-14);
    const double m2 = adaptive_simpson([](double u) { return 0.5 * std::pow(1 - 2 * u * u, 2); }, -1, 1, 1e-14);
    CHECK_THAT(m2 - m1 * m1, WithinAbs(16.0 / 45.0, 1e-12));
    CHECK_THAT(sigma_purity(one, {}, 2.0) / (1e-4 * 4.0), WithinAbs(std::sqrt(16.0 / 45.0), 1e-12));
    CHECK_THROWS_AS(sigma_purity(config(Config::OneQubit, 2, 10.0, {0.01}), {}, 1.0), RegimeMismatch);
}

TEST_CASE("exponentiation") {
    CHECK(exponentiate(1.0, 0.25) == 1.0);
    CHECK_THAT(exponentiate(-1e9, 0.25), WithinAbs(0.25, 1e-15));
    CHECK_THAT(default_p_infinity(Config::Spectator, pi / 4), WithinAbs(0.25, 1e-15));
    CHECK_THAT(default_p_infinity(Config::OneQubit), WithinAbs(0.5, 1e-15));
    CHECK_THAT(default_p_infinity(Config::JointEnv), WithinAbs(0.25, 1e-15));
    CHECK_THROWS_AS(exponentiate(0.9, 1.0), InvalidArgument);
    for (double p_inf : {0.25, 0.5})
        for (int k = 0; k <= 100; ++k) {
            const double p_lr = 1.0 - 0.1 * k / 100.0;
            const double bound = (1 - p_lr) * (1 - p_lr) / (1 - p_inf);
            CHECK(std::abs(exponentiate(p_lr, p_inf) - p_lr) <= bound + 1e-15);
        }
}

TEST_CASE("concurrence predictions") {
    const std::vector<double> t{0, 1, 2, 3};
    const std::vector<double> ones(4, 1.0);
    for (double c0 : {1.0, 0.6}) {
        for (auto c : concurrence_prediction(t, ones, ConcurrenceMode::Linear, 0.25, c0).concurrence)
            CHECK_THAT(c, WithinAbs(c0, 1e-15));
        for (auto c : concurrence_prediction(t, ones, ConcurrenceMode::WernerC0, 0.25, c0).concurrence)
            CHECK_THAT(c, WithinAbs(c0, 1e-12));
    }
    std::vector<double> times, p_lr;
    for (int k = 0; k <= 400; ++k) {
        times.push_back(k * 0.01);
        p_lr.push_back(1.0 - 0.5 * times.back() * times.back());
    }
    const auto pred = concurrence_prediction(times, p_lr, ConcurrenceMode::Werner, 0.25);
    REQUIRE(!std::isnan(pred.sudden_death));
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double pe = exponentiate(p_lr[i], 0.25);
        if (pe <= 1.0 / 3.0) CHECK(pred.concurrence[i] == 0.0);
        else CHECK(pred.concurrence[i] > 0.0);
    }
    // P_ELR(t*) = 1/3
    const double pe_star = exponentiate(1.0 - 0.5 * pred.sudden_death * pred.sudden_death, 0.25);
    CHECK_THAT(pe_star, WithinAbs(1.0 / 3.0, 1e-3));
}

TEST_CASE("n-qubit sum rule") {
    CHECK(nqubit_sum_rule({{1.0, 0.9, 0.8}}) == std::vector<double>{1.0, 0.9, 0.8});
    for (double p : nqubit_sum_rule({{1, 1}, {1, 1}, {1, 1}})) CHECK(p == 1.0);

    const double th = 8.0;
    const std::vector<double> lambdas{0.01, 0.02, 0.005, 0.01}, p_init{0.5, 0.5, 1.0, 5.0 / 9.0};
    LRConfig n = config(Config::NQubit, 2, th, lambdas);
    n.p_init = p_init;
    for (double t : {1.0, 8.0, 20.0}) {
        std::vector<std::vector<double>> sp;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            auto s = config(Config::Spectator, 2, th, {lambdas[i]});
            // single-qubit purity p_i = g_theta
            const double theta = 0.25 * std::acos(4 * p_init[i] - 3);
            sp.push_back({closed_form(ClosedForm::SpectatorDegenerate, s, params(theta, 0), t)});
        }
        CHECK_THAT(nqubit_sum_rule(sp)[0], WithinAbs(sepgen(t, th, lambdas, p_init), 1e-12));
        CHECK_THAT(purity_lr(n, {}, t), WithinAbs(sepgen(t, th, lambdas, p_init), 1e-8));
    }
}

TEST_CASE("kicked Ising adapted formula") {
    CHECK(rmtki_prediction(0.0, 0.01, 12, 4096, 0.21, true) == 1.0);
    CHECK(rmtki_prediction(0.0, 0.01, 12, 4096, 0.21, false) == 1.0);
    const double jp = 0.001, th = 300.0, a = 0.21;
    const int q = 12;
    const double slope = 3 * a * th * jp * jp / q;
    for (double t : {0.1, 1.0, 3.0}) {
        const double loss = 1 - rmtki_prediction(t, jp, q, th, a, false);
        CHECK_THAT(loss / t, WithinRel(slope, 4.0 * t / (3.0 * th * th) * th + 1e-12));
    }
    CHECK(rmtki_prediction(50.0, jp, q, th, a, true) > rmtki_prediction(50.0, jp, q, th, a, false));
}
