#include "entroflow/noise.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace entroflow {

namespace {

/// Rounds onto the value's own binade lattice, keeping 11 spare low bits.
/// The relative perturbation is at most 2^-42; the spare bits are what
/// lets a refined pair reproduce its parent exactly in floating point.
double quantize_lattice(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    int e = 0;
    std::frexp(v, &e);
    const double lat = std::ldexp(1.0, e - 42);
    if (lat == 0.0) return v;
    return std::nearbyint(v / lat) * lat;
}

/// Conditional-midpoint split with exact floating-point pair sum:
/// c1 = parent/2 + z snapped to a lattice commensurable with the parent,
/// c2 = parent - c1 (exact by the spare-bit headroom). The offset is
/// capped at ~2^8 parent scales; beyond that an exact split cannot exist
/// and the offset is dropped (a vanishing-probability tail).
void split_exact(double parent, double z, double& c1, double& c2) {
    if (parent == 0.0) {
        c1 = quantize_lattice(z);
        c2 = -c1;
        return;
    }
    int e = 0;
    std::frexp(parent, &e);
    const double cap = std::ldexp(1.0, e + 8);
    const double zc = std::min(std::max(z, -cap), cap);
    c1 = quantize_lattice(0.5 * parent + zc);
    c2 = parent - c1;
    if (c1 + c2 != parent || !std::isfinite(c2)) {
        c1 = 0.5 * parent;  // exact halving, exact sum
        c2 = parent - c1;
    }
}

}  // namespace

NoisePath NoisePath::sample(std::uint64_t seed, int modes, double dt, int steps) {
    if (dt <= 0.0) throw std::invalid_argument("NoisePath: dt must be positive");
    if (steps < 1) throw std::invalid_argument("NoisePath: need at least one step");
    if (modes < 0) throw std::invalid_argument("NoisePath: negative mode count");
    const std::int64_t cells = static_cast<std::int64_t>(steps) * std::max(modes, 1);
    if (cells > (std::int64_t(1) << 33))
        throw std::invalid_argument("NoisePath: increment array too large");

    NoisePath p;
    p.seed_ = seed;
    p.dt_ = dt;
    p.level_ = 0;
    p.inc_.resize(steps, modes);
    const double scale = std::sqrt(dt);
    for (int k = 0; k < modes; ++k)
        for (int s = 0; s < steps; ++s)
            p.inc_(s, k) = quantize_lattice(
                scale * rng::std_normal(rng::key_hash(seed, static_cast<std::uint64_t>(k),
                                                      static_cast<std::uint64_t>(s), 0)));
    return p;
}

NoisePath NoisePath::refine() const {
    NoisePath p;
    p.seed_ = seed_;
    p.dt_ = 0.5 * dt_;
    p.level_ = level_ + 1;
    p.inc_.resize(2 * steps(), modes());
    const double z_scale = 0.5 * std::sqrt(dt_);  // conditional midpoint std dev
    for (int k = 0; k < modes(); ++k)
        for (int s = 0; s < steps(); ++s) {
            const double z =
                z_scale * rng::std_normal(rng::key_hash(seed_, static_cast<std::uint64_t>(k),
                                                        static_cast<std::uint64_t>(s),
                                                        static_cast<std::uint64_t>(level_ + 1)));
            double c1, c2;
            split_exact(inc_(s, k), z, c1, c2);
            p.inc_(2 * s, k) = c1;
            p.inc_(2 * s + 1, k) = c2;
        }
    return p;
}

}  // namespace entroflow
