#include "entroflow/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace entroflow {

namespace {

double simpson(const std::function<double(double)>& g, double a, double b) {
    return (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
}

double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double whole,
                        double tol, int depth, double& achieved) {
    const double c = 0.5 * (a + b);
    const double left = simpson(g, a, c);
    const double right = simpson(g, c, b);
    const double err = left + right - whole;
    if (std::abs(err) <= 15.0 * tol || depth <= 0) {
        achieved = std::max(achieved, std::abs(err) / 15.0);
        return left + right + err / 15.0;
    }
    return adaptive_simpson(g, a, c, left, 0.5 * tol, depth - 1, achieved) +
           adaptive_simpson(g, c, b, right, 0.5 * tol, depth - 1, achieved);
}

}  // namespace

double bracket(const std::function<double(double)>& g, double r, double abs_tol) {
    if (r == 0.0) return 0.0;
    const double a = std::min(0.0, r);
    const double b = std::max(0.0, r);
    double achieved = 0.0;
    const double value = adaptive_simpson(g, a, b, simpson(g, a, b), abs_tol, 48, achieved);
    if (achieved > abs_tol) {
        std::ostringstream os;
        os << "bracket: quadrature did not converge, achieved tolerance " << achieved;
        throw std::runtime_error(os.str());
    }
    return r > 0 ? value : -value;
}

HalfLineTable cached_antiderivative(const std::function<double(double)>& g, Parity g_parity,
                                    double R, double step) {
    const Eigen::Index n = static_cast<Eigen::Index>(std::ceil(R / step)) + 1;
    ArrayXd v(n);
    v[0] = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double a = step * static_cast<double>(i);
        v[i + 1] = v[i] + simpson(g, a, a + step);
    }
    const Parity anti = (g_parity == Parity::Even) ? Parity::Odd : Parity::Even;
    return HalfLineTable(anti, step, std::move(v), g(step * static_cast<double>(n - 1)));
}

NonlinearityFamily make_power_law(double m, double K) {
    if (m <= 1.0) throw std::invalid_argument("make_power_law: exponent must exceed 1");
    if (K < 1.0) throw std::invalid_argument("make_power_law: structure constant must be >= 1");
    NonlinearityFamily fam;
    fam.m = m;
    fam.K = K;
    fam.phi = [m](double r) { return std::copysign(std::pow(std::abs(r), m), r); };
    const double sm = std::sqrt(m);
    fam.a_frak = [m, sm](double r) { return sm * std::pow(std::abs(r), 0.5 * (m - 1.0)); };
    fam.a_frak_prime = [m, sm](double r) {
        return std::copysign(sm * 0.5 * (m - 1.0) * std::pow(std::abs(r), 0.5 * (m - 3.0)), r);
    };
    fam.a_bracket = [m, sm](double r) {
        return std::copysign(sm * 2.0 / (m + 1.0) * std::pow(std::abs(r), 0.5 * (m + 1.0)), r);
    };
    fam.a_inf_global = 0.0;
    fam.a_sup_global = std::numeric_limits<double>::infinity();
    fam.name = "power_law";
    return fam;
}

NonlinearityFamily make_arctan(double K) {
    NonlinearityFamily fam;
    fam.m = 1.0;
    fam.K = K;
    fam.phi = [](double r) { return std::atan(r); };
    fam.a_frak = [](double r) { return 1.0 / std::sqrt(1.0 + r * r); };
    fam.a_frak_prime = [](double r) { return -r * std::pow(1.0 + r * r, -1.5); };
    fam.a_bracket = [](double r) { return std::asinh(r); };
    fam.a_inf_global = 0.0;
    fam.a_sup_global = 1.0;
    fam.name = "arctan";
    return fam;
}

NonlinearityFamily make_linear(double K) {
    NonlinearityFamily fam;
    fam.m = 1.0;
    fam.K = K;
    fam.phi = [](double r) { return r; };
    fam.a_frak = [](double) { return 1.0; };
    fam.a_frak_prime = [](double) { return 0.0; };
    fam.a_bracket = [](double r) { return r; };
    fam.a_inf_global = 1.0;
    fam.a_sup_global = 1.0;
    fam.name = "linear";
    return fam;
}

NonlinearityFamily family_from_name(const std::string& name, double m, double K) {
    if (name == "power_law") return make_power_law(m, K);
    if (name == "arctan") return make_arctan(K);
    if (name == "linear") return make_linear(K);
    throw std::invalid_argument("unknown nonlinearity family: " + name);
}

AssumptionReport check_assumption_A(const NonlinearityFamily& fam, double R, int points) {
    AssumptionReport rep;
    const double K = fam.K;
    const double m = fam.m;
    if (points % 2 == 0) ++points;  // keep 0 on the grid

    std::vector<double> rs(points);
    for (int i = 0; i < points; ++i) rs[i] = -R + 2.0 * R * i / (points - 1);

    rep.add("|a(0)|", std::abs(fam.a_frak(0.0)), K);

    double worst_ap = 0.0;
    for (double r : rs) {
        if (std::abs(r) < 1e-9) continue;
        worst_ap = std::max(worst_ap,
                            std::abs(fam.a_frak_prime(r)) / std::pow(std::abs(r), 0.5 * (m - 3.0)));
    }
    // also probe near +-1 where the two regimes meet
    for (double r : {0.999, 1.001, -0.999, -1.001})
        worst_ap = std::max(worst_ap,
                            std::abs(fam.a_frak_prime(r)) / std::pow(std::abs(r), 0.5 * (m - 3.0)));
    rep.add("sup |a'(r)| / |r|^{(m-3)/2}", worst_ap, K);

    double worst_lower = -std::numeric_limits<double>::infinity();
    for (double r : rs)
        if (std::abs(r) >= 1.0) worst_lower = std::max(worst_lower, 1.0 - K * fam.a_frak(r));
    rep.add("max over |r|>=1 of (1 - K a(r))", worst_lower, 0.0);

    // cumulative [a] on the sample grid (Simpson per interval)
    std::vector<double> abr(points, 0.0);
    for (int i = 0; i + 1 < points; ++i)
        abr[i + 1] = abr[i] + simpson(fam.a_frak, rs[i], rs[i + 1]);
    const double at0 = abr[(points - 1) / 2];
    for (double& v : abr) v -= at0;

    double worst_pair = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < points; ++i)
        for (int j = i + 1; j < points; ++j) {
            const double gap = std::abs(rs[i] - rs[j]);
            const double target = (std::max(std::abs(rs[i]), std::abs(rs[j])) >= 1.0)
                                      ? gap
                                      : std::pow(gap, 0.5 * (m + 1.0));
            worst_pair = std::max(worst_pair, target - K * std::abs(abr[i] - abr[j]));
        }
    rep.add("max of lower-bound defect K|[a](r)-[a](z)| vs |r-z| regimes", worst_pair, 0.0);

    return rep;
}

namespace {

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

struct MollifierKernel {
    std::vector<double> node;
    std::vector<double> weight;

    MollifierKernel() {
        gauss_legendre(32, node, weight);
        auto psi = [](double t) { return std::exp(-1.0 / (1.0 - t * t)); };
        double total = 0.0;
        for (size_t i = 0; i < node.size(); ++i) {
            weight[i] *= psi(node[i]);
            total += weight[i];
        }
        for (auto& w : weight) w /= total;
    }
};

const MollifierKernel& mollifier() {
    static const MollifierKernel k;
    return k;
}

}  // namespace

RegularizedNonlinearity regularize(const NonlinearityFamily& fam, int n) {
    if (n < 1) throw std::invalid_argument("regularize: index must be >= 1");
    RegularizedNonlinearity out;
    out.n_ = n;
    out.base_ = fam;
    const double floor = 2.0 / n;

    if (fam.a_inf_global >= floor && std::isfinite(fam.a_sup_global)) {
        // a already nondegenerate and bounded; the clamp is inactive
        out.mode_ = RegularizedNonlinearity::Mode::Identity;
        out.a_floor_ = fam.a_inf_global;
        out.phi_prime_sup_ = fam.a_sup_global * fam.a_sup_global;
        out.abr_tab_ = cached_antiderivative(fam.a_frak, Parity::Even, std::max(32.0, n + 2.0));
        return out;
    }

    out.mode_ = RegularizedNonlinearity::Mode::Tabulated;
    const double w = 1.0 / (static_cast<double>(n) * n);
    const double floor_c = floor * (1.0 + 1e-3);  // head room for interpolation wiggle
    const double clamp = static_cast<double>(n);

    auto raw = [&](double y) {
        return std::max(fam.a_frak(std::min(std::abs(y), clamp)), floor_c);
    };
    const auto& ker = mollifier();
    auto a_smooth = [&](double y) {
        double s = 0.0;
        for (size_t i = 0; i < ker.node.size(); ++i) s += ker.weight[i] * raw(y - w * ker.node[i]);
        return s;
    };

    const double step = 1e-3;
    const double R_tab = clamp + 2.0 * w + 0.5;
    const Eigen::Index count = static_cast<Eigen::Index>(std::ceil(R_tab / step)) + 1;
    ArrayXd av(count);
    for (Eigen::Index i = 0; i < count; ++i) av[i] = a_smooth(step * static_cast<double>(i));
    out.a_tab_ = HalfLineTable(Parity::Even, step, av, 0.0);

    ArrayXd phiv(count), abrv(count);
    phiv[0] = 0.0;
    abrv[0] = 0.0;
    for (Eigen::Index i = 0; i + 1 < count; ++i) {
        const double y0 = step * static_cast<double>(i);
        const double a0 = out.a_tab_(y0);
        const double am = out.a_tab_(y0 + 0.5 * step);
        const double a1 = out.a_tab_(y0 + step);
        phiv[i + 1] = phiv[i] + step / 6.0 * (a0 * a0 + 4.0 * am * am + a1 * a1);
        abrv[i + 1] = abrv[i] + step / 6.0 * (a0 + 4.0 * am + a1);
    }
    const double a_end = av[count - 1];
    out.phi_tab_ = HalfLineTable(Parity::Odd, step, phiv, a_end * a_end);
    out.abr_tab_ = HalfLineTable(Parity::Odd, step, abrv, a_end);
    out.a_floor_ = floor;
    out.phi_prime_sup_ = av.maxCoeff() * av.maxCoeff();

    // construction gates
    double min_a = std::numeric_limits<double>::infinity();
    double worst_gap = 0.0;
    const int probes = 4 * static_cast<int>(count);
    for (int i = 0; i <= probes; ++i) {
        const double y = R_tab * i / probes;
        const double any = out.a_n(y);
        min_a = std::min(min_a, any);
        if (y <= clamp) worst_gap = std::max(worst_gap, std::abs(fam.a_frak(y) - any));
    }
    if (min_a < floor) {
        std::ostringstream os;
        os << "regularize: floor bound violated, min a_n = " << min_a << " < 2/n = " << floor;
        throw std::runtime_error(os.str());
    }
    if (worst_gap > 4.0 / n) {
        std::ostringstream os;
        os << "regularize: approximation bound violated, sup |a - a_n| = " << worst_gap
           << " > 4/n = " << 4.0 / n;
        throw std::runtime_error(os.str());
    }

    NonlinearityFamily reg_view;
    reg_view.m = fam.m;
    reg_view.K = 3.0 * fam.K;
    reg_view.phi = [out](double r) { return out.phi_n(r); };
    reg_view.a_frak = [out](double r) { return out.a_n(r); };
    const double fd = 2.0 * step;
    reg_view.a_frak_prime = [out, fd](double r) {
        return (out.a_n(r + fd) - out.a_n(r - fd)) / (2.0 * fd);
    };
    const auto structure = check_assumption_A(reg_view, clamp + 1.0, 129);
    if (!structure.all_ok) {
        for (const auto& item : structure.items)
            if (!item.ok)
                throw std::runtime_error("regularize: structure predicate failed at 3K: " + item.name);
    }
    return out;
}

double mcf_bn(int n, double r) {
    const double y = std::abs(r);
    const double cn = mcf_cutoff(n);
    double v;
    if (y <= n) {
        v = -y * std::pow(1.0 + y * y, -1.5);
    } else if (y < cn) {
        const double beta0 = -n * std::pow(1.0 + static_cast<double>(n) * n, -1.5);
        v = beta0 * (cn - y) / (cn - n);
    } else {
        v = 0.0;
    }
    return r < 0 ? -v : v;
}

double RegularizedNonlinearity::mcf_a(double y) const {
    const double nd = static_cast<double>(n_);
    if (y <= nd) return 1.0 / std::sqrt(1.0 + y * y);
    if (y >= mcf_cn_) return mcf_ac_;
    const double s = y - nd;
    return mcf_A_ + mcf_beta0_ * (s - s * s / (2.0 * mcf_L_));
}

double RegularizedNonlinearity::mcf_abr(double y) const {
    const double nd = static_cast<double>(n_);
    if (y <= nd) return std::asinh(y);
    if (y >= mcf_cn_) return mcf_abr_c_ + mcf_ac_ * (y - mcf_cn_);
    const double s = y - nd;
    return mcf_abr_n_ + mcf_A_ * s + mcf_beta0_ * (s * s / 2.0 - s * s * s / (6.0 * mcf_L_));
}

double RegularizedNonlinearity::mcf_phi(double y) const {
    const double nd = static_cast<double>(n_);
    if (y <= nd) return std::atan(y);
    if (y >= mcf_cn_) return mcf_phi_c_ + mcf_ac_ * mcf_ac_ * (y - mcf_cn_);
    const double s = y - nd;
    const double p = mcf_beta0_;
    const double q = -mcf_beta0_ / (2.0 * mcf_L_);
    const double A = mcf_A_;
    return mcf_phi_n_ +
           s * (A * A + s * (A * p + s * ((p * p + 2.0 * A * q) / 3.0 + s * (p * q / 2.0 + s * q * q / 5.0))));
}

RegularizedNonlinearity mcf_regularize(int n) {
    if (n < 1) throw std::invalid_argument("mcf_regularize: index must be >= 1");
    RegularizedNonlinearity out;
    out.mode_ = RegularizedNonlinearity::Mode::McfTruncation;
    out.n_ = n;
    out.base_ = make_arctan();

    const double nd = static_cast<double>(n);
    out.mcf_cn_ = mcf_cutoff(n);
    out.mcf_L_ = out.mcf_cn_ - nd;                        // (1 + n^2)/n
    out.mcf_A_ = 1.0 / std::sqrt(1.0 + nd * nd);          // a at the matching point
    out.mcf_beta0_ = -nd * std::pow(1.0 + nd * nd, -1.5);
    out.mcf_ac_ = 0.5 * out.mcf_A_;                       // constant tail value
    out.mcf_abr_n_ = std::asinh(nd);
    out.mcf_phi_n_ = std::atan(nd);
    out.a_floor_ = out.mcf_ac_;
    out.phi_prime_sup_ = 1.0;

    {
        const double s = out.mcf_L_;
        const double p = out.mcf_beta0_;
        const double q = -out.mcf_beta0_ / (2.0 * out.mcf_L_);
        const double A = out.mcf_A_;
        out.mcf_abr_c_ = out.mcf_abr_n_ + A * s + p * (s * s / 2.0 - s * s * s / (6.0 * out.mcf_L_));
        out.mcf_phi_c_ = out.mcf_phi_n_ +
                         s * (A * A + s * (A * p + s * ((p * p + 2.0 * A * q) / 3.0 +
                                                        s * (p * q / 2.0 + s * q * q / 5.0))));
    }
    return out;
}

}  // namespace entroflow
