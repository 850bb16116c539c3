#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace qdeco {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments: masks, dimensions, parameter ranges.
struct InvalidArgument : Error {
    using Error::Error;
};

// A closed form was asked for outside the regime it was derived in.
struct RegimeMismatch : Error {
    using Error::Error;
};

// Request exceeds the desk-scale memory/time caps.
struct ResourceRefusal : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

// Seeded Mersenne twister with independent substreams.
// Every stochastic routine takes one of these by reference; there is no global generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          0x9e3779b9u};
        eng_.seed(seq);
    }

    // Child generator for work unit k; depends only on (seed, stream, k).
    Rng substream(std::uint64_t k) const { return Rng(seed_, mix(stream_ * 0x100000001b3ull + k + 1)); }

    // Uniform on [0,1), 53 random bits; spelled out so results do not depend on the standard library.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 eng_;
};

// z = sigma * exp(2 pi i v) * sqrt(-2 log u) + x0, u on (0,1].
inline cplx complex_gaussian(Rng& rng, double sigma = 1.0, cplx x0 = 0.0) {
    const double u = 1.0 - rng.uniform();
    const double v = rng.uniform();
    const double r = sigma * std::sqrt(-2.0 * std::log(u));
    return std::polar(r, 2.0 * pi * v) + x0;
}

}  // namespace qdeco
