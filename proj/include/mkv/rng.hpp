#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

// Counter-based random streams (Philox4x32-10, Salmon et al. 2011). Every
// Gaussian increment is a pure function of (seed, replica, particle, step),
// so any single value can be regenerated without materializing a grid and
// parallel runs cannot perturb the stream.

namespace mkv {

namespace rng {

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
               static_cast<std::uint32_t>(p0)};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// Maps 64 random bits to the open interval (0, 1).
inline double to_unit_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

/// Inverse standard normal CDF, Wichura's algorithm AS 241 (PPND16),
/// accurate to ~1e-16 relative over (0, 1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: p must lie in (0, 1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                             1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                             4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        const double num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                                 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                               3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                             4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                                 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                               6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                             2.05319162663775882187e0) * r + 1.0);
        value = num / den;
    } else {
        r -= 5.0;
        const double num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                                 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                               2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                             5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                                 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                               1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                             5.99832206555887937690e-1) * r + 1.0);
        value = num / den;
    }
    return (q < 0.0) ? -value : value;
}

// Stream tags keep independent uses of the same seed apart (counter word 3).
constexpr std::uint32_t kStreamNoise = 0x6E6F6973u;
constexpr std::uint32_t kStreamInitial = 0x696E6974u;

/// One uniform in (0,1) from a fully specified counter position.
inline double uniform_at(std::uint64_t seed, std::uint32_t stream, std::uint32_t c0,
                         std::uint32_t c1, std::uint32_t c2) {
    const auto words = philox4x32({c0, c1, c2, stream},
                                  {static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)});
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(words[0]) << 32) | static_cast<std::uint64_t>(words[1]);
    return to_unit_open(bits);
}

} // namespace rng

/// Brownian increments for one replica of an N-particle, L-step grid.
/// Increment (i, k) has variance h and is addressable without the grid.
class NoiseGrid {
public:
    NoiseGrid(std::uint64_t seed, std::uint32_t replica, std::size_t n_particles,
              std::size_t n_steps, double step_size)
        : seed_(seed),
          replica_(replica),
          n_particles_(n_particles),
          n_steps_(n_steps),
          step_size_(step_size),
          increments_(n_particles * n_steps) {
        if (n_particles == 0 || n_steps == 0 || !(step_size > 0.0))
            throw std::invalid_argument("NoiseGrid: empty grid or non-positive step size");
        for (std::size_t k = 0; k < n_steps_; ++k)
            for (std::size_t i = 0; i < n_particles_; ++i)
                increments_[k * n_particles_ + i] = increment(seed_, replica_, i, k, step_size_);
    }

    /// Stateless regeneration of a single increment.
    static double increment(std::uint64_t seed, std::uint32_t replica, std::size_t particle,
                            std::size_t step, double step_size) {
        const double u = rng::uniform_at(seed, rng::kStreamNoise,
                                         static_cast<std::uint32_t>(step),
                                         static_cast<std::uint32_t>(particle), replica);
        return std::sqrt(step_size) * rng::normal_quantile(u);
    }

    double at(std::size_t particle, std::size_t step) const {
        return increments_[step * n_particles_ + particle];
    }

    /// Increments of one step, contiguous over particles.
    std::span<const double> step_row(std::size_t step) const {
        return {increments_.data() + step * n_particles_, n_particles_};
    }

    /// Increment sequence of one particle (strided storage, copied out).
    std::vector<double> particle_row(std::size_t particle) const {
        std::vector<double> row(n_steps_);
        for (std::size_t k = 0; k < n_steps_; ++k) row[k] = at(particle, k);
        return row;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint32_t replica() const { return replica_; }
    std::size_t n_particles() const { return n_particles_; }
    std::size_t n_steps() const { return n_steps_; }
    double step_size() const { return step_size_; }

private:
    std::uint64_t seed_;
    std::uint32_t replica_;
    std::size_t n_particles_;
    std::size_t n_steps_;
    double step_size_;
    std::vector<double> increments_; // step-major: [k * N + i]
};

} // namespace mkv
