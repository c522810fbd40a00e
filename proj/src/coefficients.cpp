#include "entroflow/coefficients.hpp"

#include <cmath>
#include <sstream>

namespace entroflow {

namespace {

std::string point_str(const Vec2& x, double r) {
    std::ostringstream os;
    os << "x=(" << x[0] << "," << x[1] << "), r=" << r;
    return os.str();
}

void require_finite(double v, const char* what, int i, int k, const Vec2& x, double r) {
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite " << what << " at i=" << i << ", k=" << k << ", " << point_str(x, r);
        throw EvalError(os.str());
    }
}

/// torus distance between scalar coordinates in [0,1)
double torus_dist_1(double a, double bq) {
    double d = std::abs(a - bq);
    return std::min(d, 1.0 - d);
}

double torus_dist(const Vec2& a, const Vec2& bq, int dim) {
    if (dim == 1) return torus_dist_1(a[0], bq[0]);
    const double dx = torus_dist_1(a[0], bq[0]);
    const double dy = torus_dist_1(a[1], bq[1]);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Eigen::MatrixXd compute_a(const CoefficientSet& coeffs, const Vec2& x, double r) {
    const int d = coeffs.dim();
    Eigen::MatrixXd out(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            for (int k = 0; k < coeffs.modes(); ++k)
                require_finite(coeffs.sigma_r(i, k, x, r), "sigma_r", i, k, x, r);
            out(i, j) = coeffs.a(i, j, x, r);
        }
    return out;
}

Eigen::VectorXd compute_b(const CoefficientSet& coeffs, const Vec2& x, double r) {
    const int d = coeffs.dim();
    Eigen::VectorXd out(d);
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < coeffs.modes(); ++k) {
            require_finite(coeffs.sigma_r(i, k, x, r), "sigma_r", i, k, x, r);
            for (int l = 0; l < d; ++l)
                require_finite(coeffs.sigma_x(l, k, x, r, l), "sigma_x", l, k, x, r);
        }
        out[i] = coeffs.b(i, x, r);
    }
    return out;
}

Eigen::VectorXd compute_f(const CoefficientSet& coeffs, const Vec2& x, double r) {
    const int d = coeffs.dim();
    Eigen::VectorXd out = -0.5 * compute_b(coeffs, x, r);
    for (int i = 0; i < d; ++i) {
        const double gi = coeffs.G(i, x, r);
        require_finite(gi, "G", i, 0, x, r);
        out[i] += gi;
    }
    return out;
}

double CoefficientSet::sup_a_norm(double R, int x_samples) const {
    double worst = 0.0;
    const double gp = g_.deriv_sup(R);
    for (int iy = 0; iy < (dim_ == 2 ? x_samples : 1); ++iy) {
        for (int ix = 0; ix < x_samples; ++ix) {
            Vec2 x(static_cast<double>(ix) / x_samples, static_cast<double>(iy) / x_samples);
            // row-sum bound on the spectral norm of the spatial Gram part
            for (int i = 0; i < dim_; ++i) {
                double row = 0.0;
                for (int j = 0; j < dim_; ++j) row += std::abs(0.5 * sumHH(i, j, x));
                worst = std::max(worst, row);
            }
        }
    }
    return worst * gp * gp;
}

AssumptionReport check_assumption_sigma(const CoefficientSet& coeffs, const SampleGrid& grid) {
    AssumptionReport rep;
    const int d = coeffs.dim();
    const int K = coeffs.modes();
    const auto& bounds = coeffs.bounds();

    std::vector<Vec2> xs;
    const int nx = grid.x_points;
    if (d == 1) {
        for (int i = 0; i < nx; ++i) xs.emplace_back(static_cast<double>(i) / nx, 0.0);
    } else {
        for (int iy = 0; iy < nx; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                xs.emplace_back(static_cast<double>(ix) / nx, static_cast<double>(iy) / nx);
    }
    std::vector<double> rs;
    for (int i = 0; i < grid.r_points; ++i)
        rs.push_back(-grid.r_range + 2.0 * grid.r_range * i / (grid.r_points - 1));

    auto l2_over_k = [&](auto&& per_mode) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) {
            const double v = per_mode(k);
            s += v * v;
        }
        return std::sqrt(s);
    };

    // W^2_inf(T^d; l2) norm of sigma^i_r(., r), sup over i and sampled r
    double w2 = 0.0;
    for (double r : rs)
        for (const auto& x : xs)
            for (int i = 0; i < d; ++i) {
                w2 = std::max(w2, l2_over_k([&](int k) { return coeffs.sigma_r(i, k, x, r); }));
                for (int l = 0; l < d; ++l) {
                    w2 = std::max(w2, l2_over_k([&](int k) { return coeffs.sigma_rx(i, k, x, r, l); }));
                    for (int mq = 0; mq < d; ++mq)
                        w2 = std::max(w2, l2_over_k([&](int k) { return coeffs.sigma_rxx(i, k, x, r, l, mq); }));
                }
            }
    // Hoelder seminorm of x -> (sum_j sigma^{jk}_{x_j})(x, 0) in l2
    double hold_div0 = 0.0;
    for (size_t p = 0; p < xs.size(); ++p)
        for (size_t q = p + 1; q < xs.size(); ++q) {
            const double dist = torus_dist(xs[p], xs[q], d);
            if (dist < 1e-12) continue;
            const double diff = l2_over_k(
                [&](int k) { return coeffs.sigma_div(k, xs[p], 0.0) - coeffs.sigma_div(k, xs[q], 0.0); });
            hold_div0 = std::max(hold_div0, diff / std::pow(dist, bounds.kappa_bar));
        }
    rep.add("sup_r |sigma_r|_{W2oo,l2} + [div sigma(.,0)]_{C^kbar}", w2 + hold_div0, bounds.N0);

    // sup_x ( [sigma_r(x,.)]_{C^beta,l2} + |sigma_rx(x,.)|_{W1oo,l2} )
    double reg2 = 0.0;
    for (const auto& x : xs) {
        double hold_r = 0.0;
        for (size_t p = 0; p < rs.size(); ++p)
            for (size_t q = p + 1; q < rs.size(); ++q) {
                const double dr = std::abs(rs[p] - rs[q]);
                if (dr < 1e-12) continue;
                double s = 0.0;
                for (int i = 0; i < d; ++i) {
                    const double di = l2_over_k(
                        [&](int k) { return coeffs.sigma_r(i, k, x, rs[p]) - coeffs.sigma_r(i, k, x, rs[q]); });
                    s += di * di;
                }
                hold_r = std::max(hold_r, std::sqrt(s) / std::pow(dr, bounds.beta));
            }
        double w1 = 0.0;
        for (double r : rs)
            for (int i = 0; i < d; ++i)
                for (int l = 0; l < d; ++l) {
                    w1 = std::max(w1, l2_over_k([&](int k) { return coeffs.sigma_rx(i, k, x, r, l); }));
                    w1 = std::max(w1, l2_over_k([&](int k) { return coeffs.sigma_rrx(i, k, x, r, l); }));
                }
        reg2 = std::max(reg2, hold_r + w1);
    }
    rep.add("sup_x ([sigma_r]_{C^beta} + |sigma_rx|_{W1oo})", reg2, bounds.N0);

    // |d_r( sum_{j,k} sigma^{jk}_{x_j} sigma^{ik}_{rx_l} )|_oo
    double mix = 0.0;
    for (const auto& x : xs)
        for (double r : rs)
            for (int i = 0; i < d; ++i)
                for (int l = 0; l < d; ++l) {
                    double v = 0.0;
                    for (int k = 0; k < K; ++k)
                        v += coeffs.sigma_div_r(k, x, r) * coeffs.sigma_rx(i, k, x, r, l) +
                             coeffs.sigma_div(k, x, r) * coeffs.sigma_rrx(i, k, x, r, l);
                    mix = std::max(mix, std::abs(v));
                }
    rep.add("|d_r(sigma_x sigma_rx)|_oo", mix, bounds.N0);

    // sup_x |G_r(x,.)|_{C^beta} + sup_x |b_r(x,.)|_{C^beta}
    double holder_b = 0.0;
    for (const auto& x : xs)
        for (int i = 0; i < d; ++i) {
            double supG = 0.0, supB = 0.0, semG = 0.0, semB = 0.0;
            for (double r : rs) {
                supG = std::max(supG, std::abs(coeffs.G_r(i, x, r)));
                supB = std::max(supB, std::abs(coeffs.b_r(i, x, r)));
            }
            for (size_t p = 0; p < rs.size(); ++p)
                for (size_t q = p + 1; q < rs.size(); ++q) {
                    const double dr = std::abs(rs[p] - rs[q]);
                    if (dr < 1e-12) continue;
                    semG = std::max(semG, std::abs(coeffs.G_r(i, x, rs[p]) - coeffs.G_r(i, x, rs[q])) /
                                              std::pow(dr, bounds.beta));
                    semB = std::max(semB, std::abs(coeffs.b_r(i, x, rs[p]) - coeffs.b_r(i, x, rs[q])) /
                                              std::pow(dr, bounds.beta));
                }
            holder_b = std::max(holder_b, supG + semG + supB + semB);
        }
    rep.add("sup_x |G_r|_{C^beta} + |b_r|_{C^beta}", holder_b, bounds.N0);

    // growth-normalized spatial Hoelder seminorms of G_x and b_x
    double hx = 0.0;
    for (double r : rs) {
        double sem = 0.0;
        for (size_t p = 0; p < xs.size(); ++p)
            for (size_t q = p + 1; q < xs.size(); ++q) {
                const double dist = torus_dist(xs[p], xs[q], d);
                if (dist < 1e-12) continue;
                for (int i = 0; i < d; ++i)
                    for (int l = 0; l < d; ++l) {
                        const double dG = std::abs(coeffs.G_x(i, xs[p], r, l) - coeffs.G_x(i, xs[q], r, l));
                        const double dB = std::abs(coeffs.b_x(i, xs[p], r, l) - coeffs.b_x(i, xs[q], r, l));
                        sem = std::max(sem, (dG + dB) / std::pow(dist, bounds.beta_tilde));
                    }
            }
        hx = std::max(hx, sem / (1.0 + std::abs(r)));
    }
    rep.add("([G_x]_{C^btilde} + [b_x]_{C^btilde})/(1+|r|)", hx, bounds.N0);

    // |d_x d_r b^i|_oo + |G_{x r}|_oo
    double lip = 0.0;
    for (const auto& x : xs)
        for (double r : rs)
            for (int i = 0; i < d; ++i)
                for (int l = 0; l < d; ++l)
                    lip = std::max(lip, std::abs(coeffs.b_rx(i, x, r, l)) + std::abs(coeffs.G_rx(i, x, r, l)));
    rep.add("|b_rx|_oo + |G_rx|_oo", lip, bounds.N0);

    // linear-growth bounds, checked against N1
    double growth_bf = 0.0, growth_bx = 0.0, growth_div = 0.0, growth_div_hold = 0.0;
    for (double r : rs) {
        const double w = 1.0 + std::abs(r);
        for (const auto& x : xs) {
            for (int i = 0; i < d; ++i) {
                growth_bf = std::max(growth_bf, (std::abs(coeffs.G(i, x, r)) + std::abs(coeffs.b(i, x, r))) / w);
                for (int l = 0; l < d; ++l)
                    growth_bx = std::max(growth_bx,
                                         (std::abs(coeffs.b_x(i, x, r, l)) + std::abs(coeffs.G_x(i, x, r, l))) / w);
            }
            growth_div = std::max(growth_div, l2_over_k([&](int k) { return coeffs.sigma_div(k, x, r); }) / w);
        }
        double sem = 0.0;
        for (size_t p = 0; p < xs.size(); ++p)
            for (size_t q = p + 1; q < xs.size(); ++q) {
                const double dist = torus_dist(xs[p], xs[q], d);
                if (dist < 1e-12) continue;
                const double diff = l2_over_k(
                    [&](int k) { return coeffs.sigma_div(k, xs[p], r) - coeffs.sigma_div(k, xs[q], r); });
                sem = std::max(sem, diff / std::pow(dist, bounds.kappa_bar));
            }
        growth_div_hold = std::max(growth_div_hold, sem / w);
    }
    rep.add("(|G| + |b|)/(1+|r|)", growth_bf, bounds.N1);
    rep.add("(|b_x| + |G_x|)/(1+|r|)", growth_bx, bounds.N1);
    rep.add("|div sigma|_{l2}/(1+|r|)", growth_div, bounds.N1);
    rep.add("[div sigma]_{C^kbar}/(1+|r|)", growth_div_hold, bounds.N1);

    return rep;
}

CoefficientSet make_sqrt_noise_1d(std::vector<SpatialProfile> modes, double amp, CoefficientBounds bounds) {
    std::vector<NoiseMode> nm;
    for (auto& p : modes) {
        NoiseMode mode;
        p.amp *= amp;
        mode.h[0] = p;
        nm.push_back(mode);
    }
    return CoefficientSet(1, RadialProfile{RadialKind::SqrtOnePlusSq, 1.0}, std::move(nm), {}, bounds);
}

CoefficientSet make_zero_coefficients(int dim, CoefficientBounds bounds) {
    return CoefficientSet(dim, RadialProfile{RadialKind::One, 0.0}, {}, {}, bounds);
}

}  // namespace entroflow
