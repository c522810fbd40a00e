#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "entroflow/checks.hpp"

namespace entroflow {

using Eigen::ArrayXd;

/// Signed antiderivative integral_0^r g(s) ds by adaptive Simpson with
/// absolute tolerance abs_tol. Throws if the tolerance cannot be met.
double bracket(const std::function<double(double)>& g, double r, double abs_tol = 1e-10);

/// Parity of a scalar function of r, used to build half-line lookup tables
/// whose odd/even extension is exact by construction.
enum class Parity { Even, Odd };

/// Uniform-grid cubic interpolation table on [0, R] with parity-aware
/// extension to r < 0 and linear extension beyond R.
class HalfLineTable {
public:
    HalfLineTable() = default;
    HalfLineTable(Parity parity, double dx, ArrayXd values, double right_slope)
        : parity_(parity), dx_(dx), v_(std::move(values)), right_slope_(right_slope) {}

    double operator()(double r) const {
        const double y = std::abs(r);
        const double s = eval_abs(y);
        return (parity_ == Parity::Odd && r < 0) ? -s : s;
    }

    double range() const { return dx_ * static_cast<double>(v_.size() - 1); }
    double max_value() const { return v_.maxCoeff(); }
    double min_value() const { return v_.minCoeff(); }
    bool empty() const { return v_.size() == 0; }

private:
    double eval_abs(double y) const {
        const Eigen::Index nseg = v_.size() - 1;
        const double R = dx_ * static_cast<double>(nseg);
        if (y >= R) return v_[nseg] + right_slope_ * (y - R);
        const double p = y / dx_;
        Eigen::Index i = static_cast<Eigen::Index>(p);
        if (i >= nseg) i = nseg - 1;
        const double t = p - static_cast<double>(i);
        // Catmull-Rom slopes; the virtual node at -dx is v[1] (even) or -v[1] (odd)
        const double vm = (i == 0) ? (parity_ == Parity::Even ? v_[1] : -v_[1]) : v_[i - 1];
        const double vp = (i + 2 <= nseg) ? v_[i + 2] : v_[nseg] + right_slope_ * dx_;
        const double m0 = 0.5 * (v_[i + 1] - vm);
        const double m1 = 0.5 * (vp - v_[i]);
        const double d = v_[i + 1] - v_[i];
        // Hermite form: v0 + t*m0 + t^2*(3d - 2m0 - m1) + t^3*(m0 + m1 - 2d)
        return v_[i] + t * (m0 + t * ((3.0 * d - 2.0 * m0 - m1) + t * (m0 + m1 - 2.0 * d)));
    }

    Parity parity_ = Parity::Even;
    double dx_ = 1.0;
    ArrayXd v_;
    double right_slope_ = 0.0;
};

/// Builds the lookup table of integral_0^r g over [0, R]; g_parity is the
/// parity of g itself (the antiderivative gets the opposite one).
HalfLineTable cached_antiderivative(const std::function<double(double)>& g, Parity g_parity,
                                    double R, double step = 1e-3);

/// Diffusion nonlinearity Phi with a = sqrt(Phi'), structure constants
/// (m, K), and global envelope data for the regularization fast path.
struct NonlinearityFamily {
    double m = 2.0;
    double K = 1.0;
    std::function<double(double)> phi;
    std::function<double(double)> a_frak;        // sqrt(Phi')
    std::function<double(double)> a_frak_prime;  // defined away from 0
    std::function<double(double)> a_bracket;     // [a](r) = integral_0^r a, closed form
    double a_inf_global = 0.0;                   // inf_R a_frak
    double a_sup_global = std::numeric_limits<double>::infinity();
    std::string name = "custom";
};

/// Phi(r) = |r|^{m-1} r for m > 1 (slow diffusion); rejects m <= 1.
NonlinearityFamily make_power_law(double m, double K);
/// Phi = arctan, a = (1+r^2)^{-1/2}; the mean-curvature limit family.
NonlinearityFamily make_arctan(double K = 1.0);
/// Phi = id (heat equation), a = 1.
NonlinearityFamily make_linear(double K = 1.0);
NonlinearityFamily family_from_name(const std::string& name, double m, double K);

/// Sampled verification of the structure predicates on Phi/a: bounds on
/// a(0) and a', the lower bound K a >= 1 for |r| >= 1, and the two-regime
/// bracket separation. Reporting only.
AssumptionReport check_assumption_A(const NonlinearityFamily& fam, double R, int points = 257);

/// Smooth nondegenerate stand-in (Phi_n, a_n) for a nonlinearity family:
/// a_n >= 2/n away from the construction floor, Phi_n' bounded, and
/// sup_{|r|<=n} |a - a_n| <= 4/n. Also carries the closed-form
/// mean-curvature truncation (see mcf_regularize).
class RegularizedNonlinearity {
public:
    enum class Mode { Identity, Tabulated, McfTruncation };

    int index() const { return n_; }
    double a_floor() const { return a_floor_; }
    double phi_prime_sup() const { return phi_prime_sup_; }
    Mode mode() const { return mode_; }
    const NonlinearityFamily& base() const { return base_; }

    double a_n(double r) const {
        switch (mode_) {
            case Mode::Identity: return base_.a_frak(r);
            case Mode::Tabulated: return a_tab_(r);
            case Mode::McfTruncation: return mcf_a(std::abs(r));
        }
        return 0.0;
    }

    double phi_n(double r) const {
        switch (mode_) {
            case Mode::Identity: return base_.phi(r);
            case Mode::Tabulated: return phi_tab_(r);
            case Mode::McfTruncation: {
                const double v = mcf_phi(std::abs(r));
                return r < 0 ? -v : v;
            }
        }
        return 0.0;
    }

    /// [a_n](r) = integral_0^r a_n
    double a_n_bracket(double r) const {
        switch (mode_) {
            case Mode::Identity: return abr_tab_(r);
            case Mode::Tabulated: return abr_tab_(r);
            case Mode::McfTruncation: {
                const double v = mcf_abr(std::abs(r));
                return r < 0 ? -v : v;
            }
        }
        return 0.0;
    }

    friend RegularizedNonlinearity regularize(const NonlinearityFamily& fam, int n);
    friend RegularizedNonlinearity mcf_regularize(int n);

private:
    Mode mode_ = Mode::Identity;
    int n_ = 1;
    double a_floor_ = 0.0;
    double phi_prime_sup_ = 1.0;
    NonlinearityFamily base_;
    HalfLineTable a_tab_, phi_tab_, abr_tab_;

    // mean-curvature truncation parameters
    double mcf_cn_ = 0.0, mcf_A_ = 0.0, mcf_beta0_ = 0.0, mcf_L_ = 0.0, mcf_ac_ = 0.0;
    double mcf_abr_n_ = 0.0, mcf_phi_n_ = 0.0;   // values at |r| = n
    double mcf_abr_c_ = 0.0, mcf_phi_c_ = 0.0;   // values at |r| = c_n

    double mcf_a(double y) const;
    double mcf_abr(double y) const;
    double mcf_phi(double y) const;
};

/// Mollified-clamp regularization: a_n = smooth version of
/// max(a(clamp(r, -n, n)), 2/n), Phi_n = integral of a_n^2. Post-checks
/// gate the construction (floor 2/n, the 4/n approximation bound on
/// [-n, n], structure predicates at 3K) and throw on violation.
RegularizedNonlinearity regularize(const NonlinearityFamily& fam, int n);

/// One-dimensional mean curvature truncation: b_n continuous and odd,
/// b_n(r) = -r(1+r^2)^{-3/2} on [0,n], linear on [n,c_n] with
/// c_n = n + (1+n^2)/n, zero beyond; a_n = 1 + integral_0^r b_n and
/// Phi_n = integral_0^r a_n^2, all in closed form.
RegularizedNonlinearity mcf_regularize(int n);

/// The slope function b_n above, exposed for quadrature cross-checks.
double mcf_bn(int n, double r);
inline double mcf_cutoff(int n) { return n + (1.0 + static_cast<double>(n) * n) / n; }

}  // namespace entroflow
