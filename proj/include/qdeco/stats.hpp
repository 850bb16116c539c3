#pragma once

#include "core.hpp"

#include <vector>

namespace qdeco {

// Streaming mean/variance per series element, mergeable (Chan et al. pairwise update).
class WelfordSeries {
public:
    WelfordSeries() = default;
    explicit WelfordSeries(std::size_t n) : mean_(n, 0.0), m2_(n, 0.0) {}

    void add(const std::vector<double>& x) {
        if (mean_.empty() && count_ == 0) mean_.assign(x.size(), 0.0), m2_.assign(x.size(), 0.0);
        if (x.size() != mean_.size()) throw InvalidArgument("WelfordSeries: length mismatch");
        ++count_;
        const double n = static_cast<double>(count_);
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double d = x[k] - mean_[k];
            mean_[k] += d / n;
            m2_[k] += d * (x[k] - mean_[k]);
        }
    }

    void merge(const WelfordSeries& o) {
        if (o.count_ == 0) return;
        if (count_ == 0) {
            *this = o;
            return;
        }
        if (o.mean_.size() != mean_.size()) throw InvalidArgument("WelfordSeries: length mismatch");
        const double na = static_cast<double>(count_), nb = static_cast<double>(o.count_), n = na + nb;
        for (std::size_t k = 0; k < mean_.size(); ++k) {
            const double d = o.mean_[k] - mean_[k];
            mean_[k] += d * nb / n;
            m2_[k] += o.m2_[k] + d * d * na * nb / n;
        }
        count_ += o.count_;
    }

    std::size_t count() const { return count_; }
    const std::vector<double>& mean() const { return mean_; }

    // Sample standard deviation (n - 1); zero for fewer than two samples.
    std::vector<double> stddev() const {
        std::vector<double> s(mean_.size(), 0.0);
        if (count_ < 2) return s;
        for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::sqrt(std::max(0.0, m2_[k] / double(count_ - 1)));
        return s;
    }

private:
    std::size_t count_ = 0;
    std::vector<double> mean_, m2_;
};

struct LinearFit {
    std::vector<double> coefficients;
    double chi2 = 0.0;  // residual sum of squares (weighted if weights given)
};

// Least squares y ~ sum_j c_j basis_j(x).
template <class... F>
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y, F&&... basis) {
    constexpr int m = sizeof...(F);
    if (x.size() != y.size() || x.size() < static_cast<std::size_t>(m))
        throw InvalidArgument("least_squares: need at least as many points as basis functions");
    RMat a(static_cast<Eigen::Index>(x.size()), m);
    RVec b(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        int j = 0;
        ((a(static_cast<Eigen::Index>(i), j++) = basis(x[i])), ...);
        b(static_cast<Eigen::Index>(i)) = y[i];
    }
    const RVec c = a.colPivHouseholderQr().solve(b);
    LinearFit f;
    f.coefficients.assign(c.data(), c.data() + m);
    f.chi2 = (a * c - b).squaredNorm();
    return f;
}

// Slope and intercept of y = a + b x.
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    return least_squares(x, y, [](double) { return 1.0; }, [](double t) { return t; });
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw InvalidArgument("mean_of: empty");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace qdeco
