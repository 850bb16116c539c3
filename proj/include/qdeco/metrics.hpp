#pragma once

#include "core.hpp"
#include "qstate.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <vector>

namespace qdeco {

inline double purity(const DensityMatrix& rho) { return rho.cwiseAbs2().sum(); }

// The Wootters values are the singular values of X^T (sy x sy) X with rho = X X^H; this avoids square roots of
// rounding noise in the eigenvalues of rho (sy x sy) rho* (sy x sy).
inline double concurrence(const DensityMatrix& rho) {
    if (rho.rows() != 4 || rho.cols() != 4) throw InvalidArgument("concurrence: need a 4x4 density matrix");
    CMat yy = CMat::Zero(4, 4);
    yy(0, 3) = yy(3, 0) = -1.0;
    yy(1, 2) = yy(2, 1) = 1.0;
    Eigen::SelfAdjointEigenSolver<CMat> es(rho);
    CMat x = CMat::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
        const double d = es.eigenvalues()(i);
        if (d > 1e-13) x.col(i) = std::sqrt(d) * es.eigenvectors().col(i);
    }
    const CMat tau = x.transpose() * yy * x;
    const RVec l = Eigen::JacobiSVD<CMat>(tau).singularValues();
    return std::max(0.0, l(0) - l(1) - l(2) - l(3));
}

inline double concurrence_pure(const StateVector& psi) {
    if (psi.dim() != 4) throw InvalidArgument("concurrence_pure: need a two-qubit state");
    return 2.0 * std::abs(psi[0] * psi[3] - psi[1] * psi[2]);
}

inline double binary_h(double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; }

inline double entropy_from_purity(double p) {
    if (p < 0.5 - 1e-12 || p > 1.0 + 1e-12) throw InvalidArgument("entropy_from_purity: P must lie in [1/2, 1]");
    const double r = std::sqrt(std::clamp(2.0 * p - 1.0, 0.0, 1.0));
    return binary_h(0.5 * (1.0 + r)) + binary_h(0.5 * (1.0 - r));
}

inline double von_neumann(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<CMat> es(rho, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += binary_h(es.eigenvalues()(i));
    return s;
}

inline double eof_from_concurrence(double c) {
    if (c < -1e-12 || c > 1.0 + 1e-12) throw InvalidArgument("eof_from_concurrence: C must lie in [0, 1]");
    const double x = 0.5 * (1.0 + std::sqrt(std::clamp(1.0 - c * c, 0.0, 1.0)));
    return binary_h(x) + binary_h(1.0 - x);
}

inline double offdiagonal_D(const DensityMatrix& rho) {
    if (rho.rows() != 2) throw InvalidArgument("offdiagonal_D: need a 2x2 density matrix");
    return 4.0 * std::norm(rho(0, 1));
}

inline double unitality_distance(const DensityMatrix& rho) {
    if (rho.rows() != 2) throw InvalidArgument("unitality_distance: need a 2x2 density matrix");
    const double z = (rho(0, 0) - rho(1, 1)).real();
    return std::sqrt(z * z + 4.0 * std::norm(rho(0, 1)));
}

inline double werner_curve(double p) {
    const double x = 12.0 * p - 3.0;
    if (x <= 0.0) return 0.0;
    return std::max(0.0, (std::sqrt(x) - 1.0) / 2.0);
}

// Single-qubit depolarization of a pure state with initial concurrence c0.
inline double werner_curve_c0(double p, double c0) {
    const double arg = 1.0 - 4.0 * (1.0 - p) / (2.0 + c0 * c0);
    if (arg <= 0.0) return 0.0;
    return c0 * std::max(0.0, 1.5 * std::sqrt(arg) - 0.5);
}

// Both qubits depolarized at similar rates.
inline double werner_curve_both(double p, double c0) {
    const double k = 1.0 + c0 * c0;
    const cplx root = std::sqrt(cplx(1.0 - k * (3.0 - 6.0 * p - c0 * c0), 0.0));
    const double v = (c0 - 1.0) / 3.0 + (1.0 + 2.0 * c0) / 3.0 * ((-1.0 + root) / k).real();
    return std::max(0.0, v);
}

struct CPPoint {
    double concurrence = 0.0;
    double purity = 0.0;
    std::size_t count = 0;
    bool outside = false;  // beyond the admissible two-qubit region by more than numerical slack
};

struct CPCurve {
    std::vector<CPPoint> points;  // purity strictly decreasing
    double bin_width = 0.005;
};

// Accumulates (C, P) samples into purity bins of fixed width.
class CPBinner {
public:
    explicit CPBinner(double width = 0.005) : width_(width) {
        if (width <= 0) throw InvalidArgument("CP bin width must be > 0");
    }

    void add(double c, double p) {
        const auto k = static_cast<long>(std::floor(std::max(0.0, 1.0 - p) / width_));
        auto& b = bins_[k];
        b.c += c;
        b.p += p;
        ++b.n;
    }

    void merge(const CPBinner& o) {
        for (const auto& [k, b] : o.bins_) {
            auto& t = bins_[k];
            t.c += b.c;
            t.p += b.p;
            t.n += b.n;
        }
    }

    CPCurve curve() const {
        CPCurve out;
        out.bin_width = width_;
        for (const auto& [k, b] : bins_) {
            CPPoint pt{b.c / double(b.n), b.p / double(b.n), b.n, false};
            pt.outside = pt.concurrence > 1.0 + 1e-9 || pt.purity > 1.0 + 1e-9 || pt.purity < 0.25 - 1e-9;
            out.points.push_back(pt);
        }
        return out;
    }

private:
    struct Bin {
        double c = 0.0, p = 0.0;
        std::size_t n = 0;
    };
    double width_;
    std::map<long, Bin> bins_;
};

inline double cp_distance(const CPCurve& curve, const std::function<double(double)>& reference) {
    if (curve.points.empty()) throw InvalidArgument("cp_distance: empty curve");
    double d = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        const double fa = std::abs(a.concurrence - reference(a.purity));
        const double fb = std::abs(b.concurrence - reference(b.purity));
        d += 0.5 * (fa + fb) * std::abs(a.purity - b.purity);
    }
    return d;
}

inline constexpr double unital_area = 1.0 / 18.0;

// Empirical Werner-deviation law at Delta = 1.
inline double werner_deviation_law(double lambda, double n_env) {
    return 1.0 / (std::pow(2.0, 3.5) * n_env) + std::pow(2.0, -(5.0 + 50.0 * lambda));
}

}  // namespace qdeco
