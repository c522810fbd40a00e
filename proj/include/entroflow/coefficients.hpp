#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entroflow/checks.hpp"
#include "entroflow/profiles.hpp"

namespace entroflow {

/// Thrown when a coefficient or one of its derivatives evaluates non-finite.
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One noise mode: spatial factors per component, sigma^{ik}(x,r) = h[i](x) g(r)
/// with the radial factor g shared across the set.
struct NoiseMode {
    std::array<SpatialProfile, 2> h{profile_zero(), profile_zero()};
};

/// One term of the deterministic flux G^i(x,r) = w(x) q(r).
struct FluxTerm {
    SpatialProfile w = profile_zero();
    RadialProfile q{};
};

struct CoefficientBounds {
    double N0 = 1.0;
    double N1 = 1.0;
    double kappa_bar = 1.0;   // in ((m ^ 2)^-1, 1]
    double beta = 1.0;        // in ((2 kappa_bar)^-1, 1]
    double beta_tilde = 0.5;  // in (0,1)
};

/// Noise/drift data sigma^{ik}, G^i with analytic partial derivatives, plus
/// the derived Ito-form coefficients a^{ij}, b^i, f^i. All sigma modes share
/// one radial factor; every mixed partial needed downstream is closed-form.
class CoefficientSet {
public:
    CoefficientSet() = default;
    CoefficientSet(int dim, RadialProfile radial, std::vector<NoiseMode> modes,
                   std::array<std::vector<FluxTerm>, 2> flux = {},
                   CoefficientBounds bounds = {})
        : dim_(dim), g_(radial), modes_(std::move(modes)), flux_(std::move(flux)), bounds_(bounds) {
        if (dim < 1 || dim > 2) throw std::invalid_argument("CoefficientSet: dim must be 1 or 2");
    }

    int dim() const { return dim_; }
    int modes() const { return static_cast<int>(modes_.size()); }
    const CoefficientBounds& bounds() const { return bounds_; }
    const RadialProfile& radial() const { return g_; }
    const std::vector<NoiseMode>& noise_modes() const { return modes_; }
    const std::array<std::vector<FluxTerm>, 2>& flux_terms() const { return flux_; }

    // --- sigma^{ik} and partials ---------------------------------------
    double sigma(int i, int k, const Vec2& x, double r) const { return H(i, k, x) * g_.value(r); }
    double sigma_r(int i, int k, const Vec2& x, double r) const { return H(i, k, x) * g_.deriv(r); }
    double sigma_rr(int i, int k, const Vec2& x, double r) const { return H(i, k, x) * g_.deriv2(r); }
    double sigma_x(int i, int k, const Vec2& x, double r, int l) const { return Hx(i, k, x, l) * g_.value(r); }
    double sigma_rx(int i, int k, const Vec2& x, double r, int l) const { return Hx(i, k, x, l) * g_.deriv(r); }
    double sigma_rrx(int i, int k, const Vec2& x, double r, int l) const { return Hx(i, k, x, l) * g_.deriv2(r); }
    double sigma_xx(int i, int k, const Vec2& x, double r, int l, int mq) const { return Hxx(i, k, x, l, mq) * g_.value(r); }
    double sigma_rxx(int i, int k, const Vec2& x, double r, int l, int mq) const { return Hxx(i, k, x, l, mq) * g_.deriv(r); }

    /// sum_i d/dx_i sigma^{ik}(x,r)
    double sigma_div(int k, const Vec2& x, double r) const { return divH(k, x) * g_.value(r); }
    double sigma_div_r(int k, const Vec2& x, double r) const { return divH(k, x) * g_.deriv(r); }
    double sigma_div_x(int k, const Vec2& x, double r, int l) const { return divHx(k, x, l) * g_.value(r); }

    // --- G^i and partials -----------------------------------------------
    double G(int i, const Vec2& x, double r) const {
        double s = 0.0;
        for (const auto& t : flux_[i]) s += t.w.value(x) * t.q.value(r);
        return s;
    }
    double G_r(int i, const Vec2& x, double r) const {
        double s = 0.0;
        for (const auto& t : flux_[i]) s += t.w.value(x) * t.q.deriv(r);
        return s;
    }
    double G_x(int i, const Vec2& x, double r, int l) const {
        double s = 0.0;
        for (const auto& t : flux_[i]) s += t.w.deriv(x, l) * t.q.value(r);
        return s;
    }
    double G_rx(int i, const Vec2& x, double r, int l) const {
        double s = 0.0;
        for (const auto& t : flux_[i]) s += t.w.deriv(x, l) * t.q.deriv(r);
        return s;
    }
    double G_rr(int i, const Vec2& x, double r) const {
        double s = 0.0;
        for (const auto& t : flux_[i]) s += t.w.value(x) * t.q.deriv2(r);
        return s;
    }

    // --- Ito coefficients -------------------------------------------------
    // a^{ij} = 1/2 sum_k sigma^{ik}_r sigma^{jk}_r
    double a(int i, int j, const Vec2& x, double r) const {
        const double gp = g_.deriv(r);
        return 0.5 * gp * gp * sumHH(i, j, x);
    }
    // d/dx_l a^{ij}
    double a_x(int i, int j, const Vec2& x, double r, int l) const {
        const double gp = g_.deriv(r);
        return 0.5 * gp * gp * sumHH_x(i, j, x, l);
    }
    // b^i = sum_k sigma^{ik}_r sum_j sigma^{jk}_{x_j}
    double b(int i, const Vec2& x, double r) const { return g_.deriv(r) * g_.value(r) * sumHdiv(i, x); }
    double b_r(int i, const Vec2& x, double r) const {
        const double gp = g_.deriv(r);
        return (g_.deriv2(r) * g_.value(r) + gp * gp) * sumHdiv(i, x);
    }
    double b_x(int i, const Vec2& x, double r, int l) const {
        return g_.deriv(r) * g_.value(r) * sumHdiv_x(i, x, l);
    }
    double b_rx(int i, const Vec2& x, double r, int l) const {
        const double gp = g_.deriv(r);
        return (g_.deriv2(r) * g_.value(r) + gp * gp) * sumHdiv_x(i, x, l);
    }
    // f^i = G^i - b^i/2
    double f(int i, const Vec2& x, double r) const { return G(i, x, r) - 0.5 * b(i, x, r); }
    double f_r(int i, const Vec2& x, double r) const { return G_r(i, x, r) - 0.5 * b_r(i, x, r); }
    double f_x(int i, const Vec2& x, double r, int l) const { return G_x(i, x, r, l) - 0.5 * b_x(i, x, r, l); }
    double f_rx(int i, const Vec2& x, double r, int l) const { return G_rx(i, x, r, l) - 0.5 * b_rx(i, x, r, l); }

    // spatial aggregates used by the solver's per-grid compilation
    double H(int i, int k, const Vec2& x) const { return modes_[k].h[i].value(x); }
    double Hx(int i, int k, const Vec2& x, int l) const { return modes_[k].h[i].deriv(x, l); }
    double Hxx(int i, int k, const Vec2& x, int l, int mq) const { return modes_[k].h[i].deriv2(x, l, mq); }
    double divH(int k, const Vec2& x) const {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += modes_[k].h[i].deriv(x, i);
        return s;
    }
    double divHx(int k, const Vec2& x, int l) const {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += modes_[k].h[i].deriv2(x, i, l);
        return s;
    }

    /// sup over the grid and |r| <= R of the matrix norm of a(x,r);
    /// feeds the CFL budget.
    double sup_a_norm(double R, int x_samples = 64) const;

    // spatial aggregates of the separable structure: a^{ij} = gram * g'(r)^2,
    // b^i = drift * g'(r) g(r), sum_k |div sigma_k|^2 = div_sq * g(r)^2
    double gram_spatial(int i, int j, const Vec2& x) const { return 0.5 * sumHH(i, j, x); }
    double gram_spatial_x(int i, int j, const Vec2& x, int l) const { return 0.5 * sumHH_x(i, j, x, l); }
    double drift_spatial(int i, const Vec2& x) const { return sumHdiv(i, x); }
    double drift_spatial_x(int i, const Vec2& x, int l) const { return sumHdiv_x(i, x, l); }
    double div_sq_spatial(const Vec2& x) const {
        double s = 0.0;
        for (int k = 0; k < modes(); ++k) {
            const double v = divH(k, x);
            s += v * v;
        }
        return s;
    }

private:
    double sumHH(int i, int j, const Vec2& x) const {
        double s = 0.0;
        for (const auto& mk : modes_) s += mk.h[i].value(x) * mk.h[j].value(x);
        return s;
    }
    double sumHH_x(int i, int j, const Vec2& x, int l) const {
        double s = 0.0;
        for (const auto& mk : modes_)
            s += mk.h[i].deriv(x, l) * mk.h[j].value(x) + mk.h[i].value(x) * mk.h[j].deriv(x, l);
        return s;
    }
    double sumHdiv(int i, const Vec2& x) const {
        double s = 0.0;
        for (int k = 0; k < modes(); ++k) s += H(i, k, x) * divH(k, x);
        return s;
    }
    double sumHdiv_x(int i, const Vec2& x, int l) const {
        double s = 0.0;
        for (int k = 0; k < modes(); ++k) s += Hx(i, k, x, l) * divH(k, x) + H(i, k, x) * divHx(k, x, l);
        return s;
    }

    int dim_ = 1;
    RadialProfile g_{};
    std::vector<NoiseMode> modes_;
    std::array<std::vector<FluxTerm>, 2> flux_{};
    CoefficientBounds bounds_{};
};

/// Ito-form coefficient view over a CoefficientSet, the (a^{ij}, b^i, f^i)
/// triple plus the derivatives the entropy inequality consumes.
class ItoCoefficients {
public:
    explicit ItoCoefficients(const CoefficientSet& src) : src_(&src) {}

    double a(int i, int j, const Vec2& x, double r) const { return src_->a(i, j, x, r); }
    double a_x(int i, int j, const Vec2& x, double r, int l) const { return src_->a_x(i, j, x, r, l); }
    double b(int i, const Vec2& x, double r) const { return src_->b(i, x, r); }
    double f(int i, const Vec2& x, double r) const { return src_->f(i, x, r); }
    double f_r(int i, const Vec2& x, double r) const { return src_->f_r(i, x, r); }
    double f_rx(int i, const Vec2& x, double r, int l) const { return src_->f_rx(i, x, r, l); }

private:
    const CoefficientSet* src_;
};

/// a(x,r) as a dense d x d matrix; throws EvalError on non-finite entries.
Eigen::MatrixXd compute_a(const CoefficientSet& coeffs, const Vec2& x, double r);
/// b(x,r) as a dense d-vector; throws EvalError on non-finite entries.
Eigen::VectorXd compute_b(const CoefficientSet& coeffs, const Vec2& x, double r);
/// f(x,r) = G(x,r) - b(x,r)/2; throws EvalError on non-finite entries.
Eigen::VectorXd compute_f(const CoefficientSet& coeffs, const Vec2& x, double r);

struct SampleGrid {
    double r_range = 5.0;  // r sampled on [-R, R]
    int x_points = 33;     // per axis
    int r_points = 65;
};

/// Evaluates the declared sigma/G regularity bounds on a sample grid and
/// reports observed suprema against N0 (structure bounds) and N1 (growth
/// bounds). Reporting only; never throws on a violation.
AssumptionReport check_assumption_sigma(const CoefficientSet& coeffs, const SampleGrid& grid);

// Convenience builders for the families used throughout the experiments.

/// sigma^{1k}(x,r) = amp * h_k(x) * sqrt(1+r^2) with the given spatial modes (d=1).
CoefficientSet make_sqrt_noise_1d(std::vector<SpatialProfile> modes, double amp,
                                  CoefficientBounds bounds = {});
/// Zero-noise set (deterministic PDE), d in {1,2}.
CoefficientSet make_zero_coefficients(int dim, CoefficientBounds bounds = {});

}  // namespace entroflow
