#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace entroflow {

using Vec2 = Eigen::Vector2d;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// One separable axis factor cos(2*pi*freq*x + phase). freq = 0, phase = 0
/// gives the constant factor 1. Derivatives of every order stay in the
/// family (phase shift by k*pi/2), which is what makes the coefficient
/// derivative bookkeeping exact.
struct AxisWave {
    double freq = 0.0;
    double phase = 0.0;

    double deriv(double x, int order) const {
        const double w = kTwoPi * freq;
        double scale = 1.0;
        for (int k = 0; k < order; ++k) scale *= w;
        return scale * std::cos(w * x + phase + 0.5 * M_PI * order);
    }
    double value(double x) const { return std::cos(kTwoPi * freq * x + phase); }
};

inline AxisWave wave_const() { return {0.0, 0.0}; }
inline AxisWave wave_cos(double k) { return {k, 0.0}; }
inline AxisWave wave_sin(double k) { return {k, -0.5 * M_PI}; }

/// Product profile amp * w0(x) * w1(y) on the torus. In 1D the second
/// axis stays the constant factor.
struct SpatialProfile {
    double amp = 1.0;
    std::array<AxisWave, 2> axes{};

    double value(const Vec2& x) const {
        return amp * axes[0].value(x[0]) * axes[1].value(x[1]);
    }

    /// d/dx_l
    double deriv(const Vec2& x, int l) const {
        return amp * axes[0].deriv(x[0], l == 0 ? 1 : 0) * axes[1].deriv(x[1], l == 1 ? 1 : 0);
    }

    /// d^2/dx_l dx_m
    double deriv2(const Vec2& x, int l, int m) const {
        const int o0 = (l == 0) + (m == 0);
        const int o1 = (l == 1) + (m == 1);
        return amp * axes[0].deriv(x[0], o0) * axes[1].deriv(x[1], o1);
    }

    /// d^3/dx_l dx_m dx_q
    double deriv3(const Vec2& x, int l, int m, int q) const {
        const int o0 = (l == 0) + (m == 0) + (q == 0);
        const int o1 = (l == 1) + (m == 1) + (q == 1);
        return amp * axes[0].deriv(x[0], o0) * axes[1].deriv(x[1], o1);
    }
};

inline SpatialProfile profile_const(double amp) { return {amp, {wave_const(), wave_const()}}; }
inline SpatialProfile profile_cos_x(double amp, double k) { return {amp, {wave_cos(k), wave_const()}}; }
inline SpatialProfile profile_sin_x(double amp, double k) { return {amp, {wave_sin(k), wave_const()}}; }
inline SpatialProfile profile_zero() { return {0.0, {wave_const(), wave_const()}}; }

/// Radial factor g(r), analytic derivatives included.
enum class RadialKind {
    One,            // g = 1
    Linear,         // g = r
    SqrtOnePlusSq,  // g = sqrt(1 + r^2)
    Square,         // g = r^2
};

struct RadialProfile {
    RadialKind kind = RadialKind::One;
    double scale = 1.0;

    double value(double r) const {
        switch (kind) {
            case RadialKind::One: return scale;
            case RadialKind::Linear: return scale * r;
            case RadialKind::SqrtOnePlusSq: return scale * std::sqrt(1.0 + r * r);
            case RadialKind::Square: return scale * r * r;
        }
        return 0.0;
    }

    double deriv(double r) const {
        switch (kind) {
            case RadialKind::One: return 0.0;
            case RadialKind::Linear: return scale;
            case RadialKind::SqrtOnePlusSq: return scale * r / std::sqrt(1.0 + r * r);
            case RadialKind::Square: return 2.0 * scale * r;
        }
        return 0.0;
    }

    double deriv2(double r) const {
        switch (kind) {
            case RadialKind::One: return 0.0;
            case RadialKind::Linear: return 0.0;
            case RadialKind::SqrtOnePlusSq: {
                const double s = 1.0 + r * r;
                return scale / (s * std::sqrt(s));
            }
            case RadialKind::Square: return 2.0 * scale;
        }
        return 0.0;
    }

    /// sup over |r| <= R of |g'|; used by the CFL budget.
    double deriv_sup(double R) const {
        switch (kind) {
            case RadialKind::One: return 0.0;
            case RadialKind::Linear: return std::abs(scale);
            case RadialKind::SqrtOnePlusSq: return std::abs(scale) * R / std::sqrt(1.0 + R * R);
            case RadialKind::Square: return 2.0 * std::abs(scale) * R;
        }
        return 0.0;
    }
};

inline RadialKind radial_kind_from_name(const std::string& name) {
    if (name == "one" || name == "const") return RadialKind::One;
    if (name == "linear" || name == "r") return RadialKind::Linear;
    if (name == "sqrt1pr2") return RadialKind::SqrtOnePlusSq;
    if (name == "square" || name == "r2") return RadialKind::Square;
    throw std::invalid_argument("unknown radial profile: " + name);
}

}  // namespace entroflow
