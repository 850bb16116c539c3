#pragma once

#include "core.hpp"

#include <lapacke.h>

#include <algorithm>
#include <string>
#include <vector>

namespace qdeco {

struct Eigh {
    RVec values;  // ascending
    CMat vectors;
};

namespace detail {
inline lapack_complex_double* lp(CMat& m) { return reinterpret_cast<lapack_complex_double*>(m.data()); }
inline lapack_complex_double* lp(CVec& v) { return reinterpret_cast<lapack_complex_double*>(v.data()); }
inline void check_info(lapack_int info, const char* who) {
    if (info != 0) throw Error(std::string(who) + " failed, info=" + std::to_string(info));
}
}  // namespace detail

inline double hermiticity_defect(const CMat& h) { return (h - h.adjoint()).cwiseAbs().maxCoeff(); }

// Dense Hermitian eigendecomposition (divide and conquer LAPACK driver).
inline Eigh eigh(CMat h) {
    const auto n = static_cast<lapack_int>(h.rows());
    RVec w(n);
    detail::check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, detail::lp(h), n, w.data()), "zheevd");
    return {std::move(w), std::move(h)};
}

inline Eigh eigh(RMat h) {
    const auto n = static_cast<lapack_int>(h.rows());
    RVec w(n);
    detail::check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, h.data(), n, w.data()), "dsyevd");
    return {std::move(w), h.cast<cplx>()};
}

inline RVec eigvalsh(CMat h) {
    const auto n = static_cast<lapack_int>(h.rows());
    RVec w(n);
    detail::check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, detail::lp(h), n, w.data()), "zheevd");
    return w;
}

inline RVec eigvalsh(RMat h) {
    const auto n = static_cast<lapack_int>(h.rows());
    RVec w(n);
    detail::check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, h.data(), n, w.data()), "dsyevd");
    return w;
}

// General complex eigenvalues (no vectors).
inline CVec eigvals(CMat a) {
    const auto n = static_cast<lapack_int>(a.rows());
    CVec w(n);
    detail::check_info(LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, detail::lp(a), n, detail::lp(w), nullptr, 1,
                                     nullptr, 1),
                       "zgeev");
    return w;
}

// Eigenphases of a unitary in (-pi, pi], sorted.
// The Cayley map H = i (1 + U)^{-1} (1 - U) is Hermitian with eigenvalues tan(theta/2),
// which lets the Hermitian solver do the work.
inline RVec unitary_eigenphases(const CMat& u) {
    const auto n = static_cast<lapack_int>(u.rows());
    CMat a = CMat::Identity(n, n) + u;
    CMat b = CMat::Identity(n, n) - u;
    std::vector<lapack_int> piv(n);
    detail::check_info(LAPACKE_zgesv(LAPACK_COL_MAJOR, n, n, detail::lp(a), n, piv.data(), detail::lp(b), n),
                       "zgesv");
    CMat h = I * b;
    h = (0.5 * (h + h.adjoint())).eval();
    RVec x = eigvalsh(std::move(h));
    RVec theta(n);
    for (lapack_int k = 0; k < n; ++k) theta(k) = 2.0 * std::atan(x(k));
    std::sort(theta.data(), theta.data() + n);
    return theta;
}

// Orthogonality residual of the eigenvectors of a fixed 160 x 160 Hermitian matrix.
// Some optimized BLAS kernels miscompute under virtualized CPUs; this catches it early.
inline double lapack_self_check_residual() {
    const Eigen::Index n = 160;
    CMat h(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const cplx z(std::sin(1.0 + 3.0 * double(i) + 7.0 * double(j)), i == j ? 0.0 : std::cos(2.0 * double(i * j)));
            h(i, j) = z;
            h(j, i) = std::conj(z);
        }
    const Eigh e = eigh(h);
    return (e.vectors.adjoint() * e.vectors - CMat::Identity(n, n)).cwiseAbs().maxCoeff();
}

inline void lapack_self_check() {
    if (lapack_self_check_residual() > 1e-10)
        throw Error("LAPACK eigensolver returned non-orthogonal vectors; with OpenBLAS try OPENBLAS_CORETYPE=Haswell");
}

}  // namespace qdeco
