#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace entroflow {

/// Seeded truncated Wiener increments on a uniform time grid, one column
/// per mode, each entry ~ N(0, dt). Generation is counter-based and keyed
/// by (seed, mode, step, level), so identical keys give bitwise-identical
/// paths regardless of evaluation order; coupling two runs means sharing
/// one NoisePath object. Paths are never serialized, only regenerated.
class NoisePath {
public:
    static NoisePath sample(std::uint64_t seed, int modes, double dt, int steps);

    /// Brownian-bridge refinement: dt/2, 2x steps, consecutive pair sums
    /// reproduce the parent increments bitwise.
    NoisePath refine() const;

    double increment(int step, int mode) const { return inc_(step, mode); }
    const Eigen::MatrixXd& increments() const { return inc_; }

    std::uint64_t seed() const { return seed_; }
    int modes() const { return static_cast<int>(inc_.cols()); }
    int steps() const { return static_cast<int>(inc_.rows()); }
    double dt() const { return dt_; }
    int level() const { return level_; }
    double t_final() const { return dt_ * steps(); }

private:
    NoisePath() = default;

    std::uint64_t seed_ = 0;
    double dt_ = 1.0;
    int level_ = 0;
    Eigen::MatrixXd inc_;  // steps x modes
};

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t key_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(seed ^ 0x6A09E667F3BCC909ull);
    h = splitmix64(h ^ splitmix64(a + 0xBB67AE8584CAA73Bull));
    h = splitmix64(h ^ splitmix64(b + 0x3C6EF372FE94F82Bull));
    h = splitmix64(h ^ splitmix64(c + 0xA54FF53A5F1D36F1ull));
    return h;
}

/// uniform in (0, 1)
inline double u01(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

/// standard normal from one 64-bit key (Box-Muller)
inline double std_normal(std::uint64_t key) {
    const double u1 = u01(key);
    const double u2 = u01(splitmix64(key ^ 0xD6E8FEB86659FD93ull));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace rng

}  // namespace entroflow
