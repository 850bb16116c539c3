#pragma once

#include "core.hpp"
#include "metrics.hpp"
#include "rmt.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qdeco {

// theta: entanglement angle of the pair; phi: orientation of the coupled qubit's Schmidt basis
// relative to the H_1 eigenbasis; gamma: Bloch angle used by the GOE-form states; eta: relative
// phase entering the GOE sum-of-times term; delta: level splitting of H_1.
struct InitParams {
    double theta = 0.0;
    double phi = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
    double delta = 0.0;

    void validate() const {
        constexpr double eps = 1e-12;
        if (theta < -eps || theta > pi / 4 + eps) throw InvalidArgument("theta must lie in [0, pi/4]");
        if (phi < -eps || phi > pi / 2 + eps) throw InvalidArgument("phi must lie in [0, pi/2]");
        if (gamma < -pi / 2 - eps || gamma > pi / 2 + eps) throw InvalidArgument("gamma must lie in [-pi/2, pi/2]");
    }
};

// GOE-form qubit states sit at phi = pi/4 with eta equal to their Bloch angle.
inline InitParams goe_params(double theta, double gamma, double delta = 0.0) {
    return {theta, pi / 4, gamma, gamma, delta};
}

enum class Config { OneQubit, Spectator, SeparateEnv, JointEnv, NQubit };

inline const char* to_string(Config c) {
    switch (c) {
        case Config::OneQubit: return "one-qubit";
        case Config::Spectator: return "spectator";
        case Config::SeparateEnv: return "separate";
        case Config::JointEnv: return "joint";
        case Config::NQubit: return "n-qubit";
    }
    return "?";
}

struct LRConfig {
    Config configuration = Config::OneQubit;
    std::vector<int> betas{2};         // per environment
    std::vector<double> tau_h{1.0};    // per environment
    std::vector<double> lambdas{0.0};  // per coupled qubit
    std::vector<double> p_init;        // n-qubit: initial single-qubit purities
    // Second coupled qubit (separate / joint configurations).
    double delta2 = 0.0;
    double phi2 = 0.0;
    double eta2 = 0.0;
};

inline double f_tauH(double t, double tau_h) {
    if (t < 0) throw InvalidArgument("f_tauH: t must be >= 0");
    const double m = std::min(t, tau_h);
    return 2.0 * t * std::max(t, tau_h) + 2.0 / (3.0 * tau_h) * m * m * m;
}

struct Geometric {
    double g_phi, g_theta, g1, g2;
};

inline double g_of(double angle) { return (3.0 + std::cos(4.0 * angle)) / 4.0; }

inline Geometric geometric_factors_g(double g_theta, double g_phi) {
    return {g_phi, g_theta, g_theta * (1.0 - g_phi) + g_phi * (1.0 - g_theta),
            2.0 * (1.0 - g_theta) - g_phi * (1.0 - 2.0 * g_theta)};
}

inline Geometric geometric_factors(const InitParams& p) { return geometric_factors_g(g_of(p.theta), g_of(p.phi)); }

struct Correlations {
    double re_c1, s1, s1_prime;
};

inline Correlations correlations(const InitParams& p, double tau) {
    const auto g = geometric_factors(p);
    const double base = 1.0 - g.g_theta - g.g_phi + 2.0 * g.g_theta * g.g_phi;
    const double amp = (2.0 * g.g_theta - 1.0) * (1.0 - g.g_phi);
    return {1.0 + std::cos(p.delta * tau), base + amp * std::cos(p.delta * tau),
            base + amp * std::cos(p.delta * tau + 2.0 * p.eta)};
}

// 1 - S1' at Delta = 0 written with the Bloch angle.
inline double one_minus_s1p_degenerate(double g_theta, double gamma) {
    const double s = std::sin(gamma);
    return 1.0 - g_theta + (2.0 * g_theta - 1.0) * s * s;
}

// One coupled qubit whose partner (if any) is a spectator.
struct QubitTerm {
    double lambda = 0.0;
    double tau_h = 1.0;
    int beta = 2;
    double delta = 0.0;
    double g_theta = 1.0;
    double g_phi = 1.0;
    double eta = 0.0;
};

namespace detail {
// int_a^b h(s) ds by composite Simpson with an even number of panels.
template <class F>
double simpson(F&& h, double a, double b, int panels) {
    if (b <= a) return 0.0;
    panels = std::max(2, panels + (panels & 1));
    const double dx = (b - a) / panels;
    double s = h(a) + h(b);
    for (int k = 1; k < panels; ++k) s += h(a + k * dx) * ((k & 1) ? 4.0 : 2.0);
    return s * dx / 3.0;
}

inline int panels_for(double len, double tau_h, double delta) {
    const double by_tau = 2000.0 * len / tau_h;
    const double by_delta = 40.0 * std::abs(delta) * len / (2.0 * pi);
    return static_cast<int>(std::ceil(std::max({by_tau, by_delta, 2.0})));
}
}  // namespace detail

// 1 - P contributed by a single coupled qubit, linear response in lambda.
inline double decay_term(const QubitTerm& q, double t) {
    if (t < 0) throw InvalidArgument("purity_lr: t must be >= 0");
    if (q.tau_h <= 0) throw InvalidArgument("purity_lr: tauH must be > 0");
    if (t == 0.0 || q.lambda == 0.0) return 0.0;
    const auto g = geometric_factors_g(q.g_theta, q.g_phi);
    const double l2 = q.lambda * q.lambda;
    // delta(s / tauH) on the edge of the triangle carries half weight.
    double r = 2.0 * l2 * t * q.tau_h * (g.g1 + g.g2);
    auto h = [&](double s) {
        return (t - s) * (1.0 - b2(q.beta, s / q.tau_h)) * (g.g1 + g.g2 * std::cos(q.delta * s));
    };
    const double knee = std::min(t, q.tau_h);
    double integral = detail::simpson(h, 0.0, knee, detail::panels_for(knee, q.tau_h, q.delta));
    if (t > q.tau_h) integral += detail::simpson(h, q.tau_h, t, detail::panels_for(t - q.tau_h, q.tau_h, q.delta));
    r += 4.0 * l2 * integral;
    if (q.beta == 1) {
        // Sum-of-times term, integrated in closed form over the square.
        const double a = g.g1;
        const double b = (2.0 * q.g_theta - 1.0) * (1.0 - q.g_phi);
        const cplx f = q.delta == 0.0 ? cplx(t, 0.0) : (std::polar(1.0, q.delta * t) - 1.0) / (I * q.delta);
        const double cos_part = (std::polar(1.0, -2.0 * q.eta) * f * f).real();
        r += 2.0 * l2 * (a * t * t - b * cos_part);
    }
    return r;
}

inline std::vector<QubitTerm> lr_terms(const LRConfig& c, const InitParams& p) {
    p.validate();
    auto need = [](bool ok, const char* what) {
        if (!ok) throw InvalidArgument(std::string("invalid LR config: ") + what);
    };
    need(!c.betas.empty() && c.betas.size() == c.tau_h.size(), "betas/tau_h must be non-empty and equal length");
    for (double l : c.lambdas) need(l >= 0.0, "lambda must be >= 0");
    for (double th : c.tau_h) need(th > 0.0, "tauH must be > 0");
    const double gt = g_of(p.theta);
    switch (c.configuration) {
        case Config::OneQubit:
            need(c.lambdas.size() == 1, "one lambda");
            return {{c.lambdas[0], c.tau_h[0], c.betas[0], p.delta, 1.0, g_of(p.phi), p.eta}};
        case Config::Spectator:
            need(c.lambdas.size() == 1, "one lambda");
            return {{c.lambdas[0], c.tau_h[0], c.betas[0], p.delta, gt, g_of(p.phi), p.eta}};
        case Config::SeparateEnv:
            need(c.lambdas.size() == 2 && c.tau_h.size() == 2, "two lambdas and two environments");
            return {{c.lambdas[0], c.tau_h[0], c.betas[0], p.delta, gt, g_of(p.phi), p.eta},
                    {c.lambdas[1], c.tau_h[1], c.betas[1], c.delta2, gt, g_of(c.phi2), c.eta2}};
        case Config::JointEnv:
            need(c.lambdas.size() == 2, "two lambdas");
            return {{c.lambdas[0], c.tau_h[0], c.betas[0], p.delta, gt, g_of(p.phi), p.eta},
                    {c.lambdas[1], c.tau_h[0], c.betas[0], c.delta2, gt, g_of(c.phi2), c.eta2}};
        case Config::NQubit: {
            need(c.lambdas.size() == c.p_init.size() && !c.lambdas.empty(), "one lambda per initial purity");
            need(c.betas[0] == 2, "n-qubit linear response is available for GUE environments");
            std::vector<QubitTerm> out;
            for (std::size_t i = 0; i < c.lambdas.size(); ++i)
                out.push_back({c.lambdas[i], c.tau_h[0], 2, 0.0, c.p_init[i], 1.0, 0.0});
            return out;
        }
    }
    throw InvalidArgument("invalid LR config: unknown configuration");
}

inline double purity_lr(const LRConfig& c, const InitParams& p, double t) {
    double loss = 0.0;
    for (const auto& q : lr_terms(c, p)) loss += decay_term(q, t);
    return 1.0 - loss;
}

enum class ClosedForm {
    DegenerateOne,
    FastOne,
    GOEOne,
    SpectatorDegenerate,
    SpectatorFast,
    GOESpectator,
    SeparateDegenerate,
    SeparateFast,
    JointFast,
};

namespace detail {
inline void need_degenerate(double delta, double tau_h) {
    if (std::abs(delta) * tau_h > 0.1)
        throw RegimeMismatch("degenerate limit requires Delta*tauH << 1 (need <= 0.1, got " +
                             std::to_string(std::abs(delta) * tau_h) + ")");
}
inline void need_fast(double delta, double tau_h) {
    if (std::abs(delta) * tau_h < 10.0)
        throw RegimeMismatch("fast limit requires Delta*tauH >> 1 (need >= 10, got " +
                             std::to_string(std::abs(delta) * tau_h) + ")");
}
inline void need_beta(const LRConfig& c, int beta) {
    for (int b : c.betas)
        if (b != beta)
            throw RegimeMismatch(beta == 2 ? "closed form derived for GUE (beta=2) environments"
                                           : "closed form derived for GOE (beta=1) environments");
}
inline void need_config(const LRConfig& c, Config want) {
    if (c.configuration != want)
        throw RegimeMismatch(std::string("closed form needs the ") + to_string(want) + " configuration");
}
}  // namespace detail

inline double closed_form(ClosedForm which, const LRConfig& c, const InitParams& p, double t) {
    using namespace detail;
    p.validate();
    const double th = c.tau_h.at(0);
    const double l2 = c.lambdas.at(0) * c.lambdas.at(0);
    const double gt = g_of(p.theta), gp = g_of(p.phi);
    const double f = f_tauH(t, th);
    switch (which) {
        case ClosedForm::DegenerateOne:
            need_config(c, Config::OneQubit), need_beta(c, 2), need_degenerate(p.delta, th);
            return 1.0 - l2 * f;
        case ClosedForm::FastOne:
            need_config(c, Config::OneQubit), need_beta(c, 2), need_fast(p.delta, th);
            return 1.0 - l2 * ((1.0 - gp) * f + 2.0 * gp * t * th);
        case ClosedForm::GOEOne:
            need_config(c, Config::OneQubit), need_beta(c, 1), need_degenerate(p.delta, th);
            return 1.0 - l2 * (t * t * (3.0 - std::cos(2.0 * p.gamma)) + 2.0 * t * th -
                               2.0 * b2_double_integral(1, t, th));
        case ClosedForm::SpectatorDegenerate:
            need_config(c, Config::Spectator), need_beta(c, 2), need_degenerate(p.delta, th);
            return 1.0 - l2 * (2.0 - gt) * f;
        case ClosedForm::SpectatorFast: {
            need_config(c, Config::Spectator), need_beta(c, 2), need_fast(p.delta, th);
            const auto g = geometric_factors(p);
            return 1.0 - l2 * (g.g1 * f + 2.0 * th * g.g2 * t);
        }
        case ClosedForm::GOESpectator: {
            need_config(c, Config::Spectator), need_beta(c, 1), need_degenerate(p.delta, th);
            const double c2 = std::cos(2.0 * p.theta), cg = std::cos(p.gamma);
            return 1.0 - l2 * (t * t * (4.0 - 2.0 * c2 * c2 * cg * cg) +
                               (4.0 - 2.0 * gt) * (t * th - b2_double_integral(1, t, th)));
        }
        case ClosedForm::SeparateDegenerate: {
            need_config(c, Config::SeparateEnv), need_beta(c, 2);
            const double th2 = c.tau_h.at(1), l22 = c.lambdas.at(1) * c.lambdas.at(1);
            need_degenerate(p.delta, th), need_degenerate(c.delta2, th2);
            return 1.0 - (2.0 - gt) * (l2 * f + l22 * f_tauH(t, th2));
        }
        case ClosedForm::SeparateFast: {
            need_config(c, Config::SeparateEnv), need_beta(c, 2);
            const double th2 = c.tau_h.at(1), l22 = c.lambdas.at(1) * c.lambdas.at(1);
            need_fast(p.delta, th), need_fast(c.delta2, th2);
            const auto g1 = geometric_factors_g(gt, gp);
            const auto g2 = geometric_factors_g(gt, g_of(c.phi2));
            return 1.0 - l2 * (g1.g1 * f + 2.0 * th * g1.g2 * t) -
                   l22 * (g2.g1 * f_tauH(t, th2) + 2.0 * th2 * g2.g2 * t);
        }
        case ClosedForm::JointFast: {
            need_config(c, Config::JointEnv), need_beta(c, 2);
            need_degenerate(p.delta, th), need_fast(c.delta2, th);
            const double l22 = c.lambdas.at(1) * c.lambdas.at(1);
            const auto g2 = geometric_factors_g(gt, g_of(c.phi2));
            return 1.0 - l2 * (2.0 - gt) * f - l22 * (g2.g1 * f + 2.0 * th * g2.g2 * t);
        }
    }
    throw InvalidArgument("unknown closed form");
}

// Standard deviation of purity over GOE initial-state angles at Delta = 0.
inline double sigma_purity(const LRConfig& c, const InitParams& p, double t) {
    detail::need_beta(c, 1);
    detail::need_degenerate(p.delta, c.tau_h.at(0));
    const double l2 = c.lambdas.at(0) * c.lambdas.at(0);
    const double one = 4.0 / (3.0 * std::sqrt(5.0)) * l2 * t * t;
    if (c.configuration == Config::OneQubit) return one;
    if (c.configuration == Config::Spectator) {
        const double c2 = std::cos(2.0 * p.theta);
        return one * c2 * c2;
    }
    throw RegimeMismatch("sigma_purity is derived for the one-qubit and spectator configurations");
}

inline double exponentiate(double p_lr, double p_inf) {
    if (p_inf >= 1.0) throw InvalidArgument("exponentiate: P_infinity must be < 1");
    return p_inf + (1.0 - p_inf) * std::exp(-(1.0 - p_lr) / (1.0 - p_inf));
}

inline std::vector<double> exponentiate(const std::vector<double>& p_lr, double p_inf) {
    std::vector<double> out(p_lr.size());
    for (std::size_t i = 0; i < p_lr.size(); ++i) out[i] = exponentiate(p_lr[i], p_inf);
    return out;
}

inline double default_p_infinity(Config c, double theta = pi / 4) {
    switch (c) {
        case Config::OneQubit: return 0.5;
        case Config::Spectator: return g_of(theta) / 2.0;
        case Config::SeparateEnv:
        case Config::JointEnv: return 0.25;
        case Config::NQubit: break;
    }
    throw InvalidArgument("no default asymptotic purity for the n-qubit configuration");
}

enum class ConcurrenceMode { Linear, Werner, WernerC0 };

struct ConcurrencePrediction {
    std::vector<double> concurrence;
    double sudden_death = std::numeric_limits<double>::quiet_NaN();  // NaN when C never reaches 0
};

inline ConcurrencePrediction concurrence_prediction(const std::vector<double>& times, const std::vector<double>& p_lr,
                                                    ConcurrenceMode mode, double p_inf = 0.25, double c0 = 1.0) {
    if (times.size() != p_lr.size()) throw InvalidArgument("concurrence_prediction: series length mismatch");
    ConcurrencePrediction out;
    out.concurrence.resize(times.size());
    std::vector<double> level(times.size());  // crosses zero where C dies
    for (std::size_t i = 0; i < times.size(); ++i) {
        switch (mode) {
            case ConcurrenceMode::Linear:
                out.concurrence[i] = std::max(0.0, c0 * p_lr[i]);
                level[i] = p_lr[i];
                break;
            case ConcurrenceMode::Werner: {
                const double pe = exponentiate(p_lr[i], p_inf);
                out.concurrence[i] = werner_curve(pe);
                level[i] = pe - 1.0 / 3.0;
                break;
            }
            case ConcurrenceMode::WernerC0: {
                const double pe = exponentiate(p_lr[i], p_inf);
                out.concurrence[i] = werner_curve_c0(pe, c0);
                level[i] = pe - (5.0 - 2.0 * c0 * c0) / 9.0;
                break;
            }
        }
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (level[i - 1] > 0.0 && level[i] <= 0.0) {
            const double w = level[i - 1] / (level[i - 1] - level[i]);
            out.sudden_death = times[i - 1] + w * (times[i] - times[i - 1]);
            break;
        }
    }
    return out;
}

inline std::vector<double> nqubit_sum_rule(const std::vector<std::vector<double>>& spectator) {
    if (spectator.empty()) throw InvalidArgument("nqubit_sum_rule: no spectator series");
    std::vector<double> p(spectator[0].size(), 1.0);
    for (const auto& s : spectator) {
        if (s.size() != p.size()) throw InvalidArgument("nqubit_sum_rule: series length mismatch");
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= 1.0 - s[k];
    }
    return p;
}

// GUE joint environment, no internal dynamics: P = 1 - f(t) sum_i lambda_i^2 (2 - p_i).
inline double sepgen(double t, double tau_h, const std::vector<double>& lambdas, const std::vector<double>& p_init) {
    if (lambdas.size() != p_init.size()) throw InvalidArgument("sepgen: one lambda per qubit");
    double s = 0.0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) s += lambdas[i] * lambdas[i] * (2.0 - p_init[i]);
    return 1.0 - f_tauH(t, tau_h) * s;
}

inline double rmtki_prediction(double t, double j_prime, int q_e, double tau_h, double alpha, bool include_b2) {
    if (t < 0) throw InvalidArgument("rmtki_prediction: t must be >= 0");
    const double k = j_prime * j_prime / q_e;
    double br = 3.0 * t * tau_h + 4.0 * t * t / tau_h;
    if (include_b2) br -= 3.0 * b2_double_integral(1, t, tau_h) / tau_h;
    return 1.0 - alpha * k * br;
}

}  // namespace qdeco
