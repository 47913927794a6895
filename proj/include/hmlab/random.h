#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "hmlab/geometry.h"

namespace hmlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for (master seed, stream index). Streams are keyed
/// by value, so any walk can be replayed without running the others.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do u1 = uniform();
        while (u1 == 0.0);
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return rad * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform direction on the unit sphere of R^d.
    void direction(Point& out) {
        if (out.size() == 2) {
            const double t = 2.0 * std::numbers::pi * uniform();
            out[0] = std::cos(t);
            out[1] = std::sin(t);
            return;
        }
        double s = 0.0;
        do {
            s = 0.0;
            for (double& v : out) {
                v = normal();
                s += v * v;
            }
        } while (s == 0.0);
        s = std::sqrt(s);
        for (double& v : out) v /= s;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Additive recurrence x_i = frac(offset + i α) with α built from the
/// generalized golden ratio of the dimension; the offset comes from the
/// seed so different seeds give shifted point sets.
class QuasiSequence {
public:
    QuasiSequence(int dim, std::uint64_t seed) : alpha_(static_cast<std::size_t>(dim)),
                                                 offset_(static_cast<std::size_t>(dim)) {
        double phi = 2.0;
        for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
        for (int k = 0; k < dim; ++k) {
            alpha_[k] = std::fmod(1.0 / std::pow(phi, k + 1), 1.0);
            offset_[k] = static_cast<double>(splitmix64(seed + static_cast<std::uint64_t>(k)) >> 11) *
                         0x1.0p-53;
        }
    }

    /// i-th point of the unit cube.
    std::vector<double> at(std::uint64_t i) const {
        std::vector<double> u(alpha_.size());
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double v = offset_[k] + static_cast<double>(i) * alpha_[k];
            u[k] = v - std::floor(v);
        }
        return u;
    }

private:
    std::vector<double> alpha_;
    std::vector<double> offset_;
};

/// Quasi-uniform points on the sphere S(center, radius) in R^2 or R^3.
std::vector<Point> quasi_sphere(const Point& center, double radius, std::size_t count,
                                std::uint64_t seed);

/// Quasi-uniform points in the closed ball B(center, radius) (d = 2 or 3).
std::vector<Point> quasi_ball(const Point& center, double radius, std::size_t count,
                              std::uint64_t seed);

}  // namespace hmlab
