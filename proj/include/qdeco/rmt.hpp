#pragma once

#include "core.hpp"
#include "linalg.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <functional>
#include <vector>

namespace qdeco {

enum class Ensemble { GOE, GUE };

inline int beta_of(Ensemble e) { return e == Ensemble::GOE ? 1 : 2; }

// Second moments: GUE <V_ij V_kl> = d_il d_jk; GOE <V_ij V_kl> = d_il d_jk + d_ik d_jl.
enum class Normalization { UnitOffDiagonal };

struct EnsembleSpec {
    Ensemble kind = Ensemble::GUE;
    Eigen::Index dim = 2;
    Normalization normalization = Normalization::UnitOffDiagonal;
};

struct Spectrum {
    RVec energies;  // ascending
    double heisenberg_time = 0.0;
};

inline cplx sample_gaussian(double sigma, cplx x0, Rng& rng) { return complex_gaussian(rng, sigma, x0); }

inline RMat sample_goe(Eigen::Index n, Rng& rng) {
    RMat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = complex_gaussian(rng, std::sqrt(2.0)).real();
        for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = m(j, i) = complex_gaussian(rng).real();
    }
    return m;
}

inline CMat sample_gue(Eigen::Index n, Rng& rng) {
    CMat m(n, n);
    const double s = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = complex_gaussian(rng).real();
        for (Eigen::Index j = i + 1; j < n; ++j) {
            m(i, j) = complex_gaussian(rng, s);
            m(j, i) = std::conj(m(i, j));
        }
    }
    return m;
}

inline CMat sample_matrix(const EnsembleSpec& spec, Rng& rng) {
    if (spec.dim < 2) throw InvalidArgument("ensemble dimension must be >= 2");
    if (spec.kind == Ensemble::GOE) return sample_goe(spec.dim, rng).cast<cplx>();
    return sample_gue(spec.dim, rng);
}

inline double semicircle_radius(double n) { return 2.0 * std::sqrt(n); }

inline double semicircle_density(double e, double n) {
    if (n < 2) throw InvalidArgument("semicircle_density: N must be >= 2");
    const double x = e * e / (4.0 * n);
    return x >= 1.0 ? 0.0 : std::sqrt(n) / pi * std::sqrt(1.0 - x);
}

// Band-centre Heisenberg time 2 pi rho(0) of the semicircle.
inline double semicircle_heisenberg_time(double n) { return 2.0 * std::sqrt(n); }

struct Unfolded {
    RVec values;
    int clamped = 0;  // levels that fell outside the semicircle support
};

inline Unfolded unfold(const RVec& energies, double n) {
    const double ec = semicircle_radius(n);
    Unfolded u{RVec(energies.size()), 0};
    for (Eigen::Index i = 0; i < energies.size(); ++i) {
        double e = energies(i) / ec;
        if (std::abs(e) > 1.0) {
            e = std::copysign(1.0, e);
            ++u.clamped;
        }
        u.values(i) = n / pi * (std::asin(e) + e * std::sqrt(1.0 - e * e));
    }
    return u;
}

inline Unfolded unfold(const RVec& energies) { return unfold(energies, static_cast<double>(energies.size())); }

inline double form_factor(const RVec& energies, double t) {
    if (t < 0) throw InvalidArgument("form_factor: t must be >= 0");
    cplx s = 0.0;
    for (Eigen::Index j = 0; j < energies.size(); ++j) s += std::polar(1.0, t * energies(j));
    return std::norm(s) / static_cast<double>(energies.size());
}

inline double b2(int beta, double t) {
    const double a = std::abs(t);
    if (beta == 2) return a <= 1.0 ? 1.0 - a : 0.0;
    if (beta != 1) throw InvalidArgument("b2: beta must be 1 or 2");
    if (a == 0.0) return 1.0;
    if (a <= 1.0) return 1.0 - 2.0 * a + a * std::log(2.0 * a + 1.0);
    return -1.0 + a * std::log((2.0 * a + 1.0) / (2.0 * a - 1.0));
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                           double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int max_depth = 40) {
    if (b == a) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// GUE: plain double integral of b2. GOE: the same integral times 2.
inline double b2_double_integral(int beta, double t, double tau_h) {
    if (t < 0) throw InvalidArgument("b2_double_integral: t must be >= 0");
    if (tau_h <= 0) throw InvalidArgument("b2_double_integral: tauH must be > 0");
    if (beta == 2) {
        if (t < tau_h) return t * t / 2.0 - t * t * t / (6.0 * tau_h);
        return t * tau_h / 2.0 - tau_h * tau_h / 6.0;
    }
    if (beta != 1) throw InvalidArgument("b2_double_integral: beta must be 1 or 2");
    // Dimensionless x = tau'/tauH; the kink of b2 at x = 1 is kept on a panel edge.
    const double T = t / tau_h;
    auto g = [T](double x) { return (T - x) * b2(1, x); };
    double s = adaptive_simpson(g, 0.0, std::min(T, 1.0), 1e-9);
    if (T > 1.0) s += adaptive_simpson(g, 1.0, T, 1e-9);
    return 2.0 * tau_h * tau_h * s;
}

struct SpacingStats {
    std::vector<double> spacings;
    double brody_omega = 0.0;
};

inline double brody_beta(double w) { return std::pow(boost::math::tgamma((w + 2.0) / (w + 1.0)), w + 1.0); }

inline double brody_density(double s, double w) {
    const double b = brody_beta(w);
    return (w + 1.0) * b * std::pow(s, w) * std::exp(-b * std::pow(s, w + 1.0));
}

// Maximum likelihood over the Brody family; spacings are rescaled to unit mean first.
inline double brody_fit(std::vector<double> s) {
    if (s.size() < 50) throw InvalidArgument("brody_fit: need at least 50 spacings");
    double mean = 0.0;
    for (double x : s) mean += x;
    mean /= static_cast<double>(s.size());
    double sum_log = 0.0;
    for (double& x : s) {
        x = std::max(x / mean, 1e-300);
        sum_log += std::log(x);
    }
    const double n = static_cast<double>(s.size());
    auto nll = [&](double w) {
        const double b = brody_beta(w);
        double sp = 0.0;
        for (double x : s) sp += std::pow(x, w + 1.0);
        return -(n * std::log(w + 1.0) + n * std::log(b) + w * sum_log - b * sp);
    };
    return boost::math::tools::brent_find_minima(nll, -0.5, 2.0, 40).first;
}

inline std::vector<double> nearest_spacings(const RVec& unfolded) {
    std::vector<double> v(unfolded.data(), unfolded.data() + unfolded.size());
    std::sort(v.begin(), v.end());
    std::vector<double> s;
    s.reserve(v.size());
    for (std::size_t i = 1; i < v.size(); ++i) s.push_back(v[i] - v[i - 1]);
    return s;
}

inline SpacingStats spacing_statistics(const RVec& unfolded) {
    if (unfolded.size() < 50) throw InvalidArgument("spacing_statistics: need at least 50 levels");
    SpacingStats st;
    st.spacings = nearest_spacings(unfolded);
    st.brody_omega = brody_fit(st.spacings);
    return st;
}

// Central fraction of a sorted spectrum.
inline RVec bulk(const RVec& sorted, double fraction) {
    const auto n = sorted.size();
    const auto drop = static_cast<Eigen::Index>(std::floor(0.5 * (1.0 - fraction) * static_cast<double>(n)));
    return sorted.segment(drop, n - 2 * drop);
}

inline Spectrum sample_spectrum(const EnsembleSpec& spec, Rng& rng) {
    if (spec.dim < 2) throw InvalidArgument("ensemble dimension must be >= 2");
    RVec e = spec.kind == Ensemble::GOE ? eigvalsh(sample_goe(spec.dim, rng)) : eigvalsh(sample_gue(spec.dim, rng));
    return {std::move(e), semicircle_heisenberg_time(static_cast<double>(spec.dim))};
}

}  // namespace qdeco
